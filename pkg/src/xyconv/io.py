"""Config parsing and the on-disk formats (CSV grids and curves, JSON manifests and fits)."""

from __future__ import annotations

import ast
import csv
import hashlib
import json
import math
import operator
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

GRID_COLUMNS = ("gamma", "h", "locc", "elocc", "degenerate", "gap", "S1", "lambda1", "lambda2", "lambda3", "lambda4")


class ConfigError(ValueError):
    pass


def fmt(x: float) -> str:
    """17 significant digits: round-trips every double exactly."""
    return "%.17g" % float(x)


_OPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos,
}


def parse_number(text: str) -> float:
    """A float, or a small arithmetic expression such as ``sqrt(3)/2``."""
    text = str(text).strip()
    try:
        return float(text)
    except ValueError:
        pass

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt" and len(node.args) == 1:
            return math.sqrt(ev(node.args[0]))
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        raise ConfigError(f"cannot parse number {text!r}")

    try:
        return ev(ast.parse(text, mode="eval"))
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse number {text!r}") from exc


def parse_number_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [parse_number(t) for t in text]
    return [parse_number(t) for t in str(text).replace(";", ",").split(",") if t.strip()]


def normalize_key(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_")


def read_config(path: str | Path) -> dict[str, Any]:
    """Flat ``key = value`` file (``#`` comments), or a ``manifest.json`` from a previous run."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return dict(doc.get("config", doc))
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        elif value.startswith("[") and value.endswith("]"):
            value = value[1:-1]
        out[normalize_key(key)] = value
    return out


def run_id(command: str, config: Mapping[str, Any], version: str) -> str:
    blob = json.dumps({"command": command, "config": config, "version": version}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_manifest(path: Path, manifest: Mapping[str, Any]) -> None:
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, rid: str, header: Iterable[str], rows: Iterable[Iterable[str]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# run_id={rid}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def grid_rows(grid) -> list[list[str]]:
    rows = []
    for c in grid.cells:
        lam = list(c.lambdas[:4]) + [0.0] * max(0, 4 - len(c.lambdas))
        rows.append([
            fmt(c.gamma), fmt(c.h),
            c.locc.value if c.ok else "fail",
            c.elocc.value if c.ok else "fail",
            "1" if c.degenerate else "0",
            fmt(c.gap), fmt(c.S1), *(fmt(x) for x in lam),
        ])
    return rows


def write_grid_csv(path: Path, grid, rid: str) -> None:
    _write_csv(path, rid, GRID_COLUMNS, grid_rows(grid))


def read_grid_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def write_sign_map_csv(path: Path, smap, rid: str) -> None:
    labels = smap.labels()
    rows = []
    for i, h in enumerate(smap.h):
        for label, s in zip(labels, smap.signs[i]):
            rows.append([fmt(smap.gamma), fmt(h), label, "fail" if smap.failed[i] else str(int(s))])
    _write_csv(path, rid, ("gamma", "h", "alpha", "sign"), rows)


def write_curve_csv(path: Path, curve, rid: str) -> None:
    rows = [[label, fmt(s)] for label, s in zip(curve.labels(), curve.entropies)]
    _write_csv(path, rid, ("alpha", "S"), rows)


def write_partial_sums_csv(path: Path, lower: np.ndarray, upper: np.ndarray, rid: str) -> None:
    rows = [[str(l + 1), fmt(a), fmt(b)] for l, (a, b) in enumerate(zip(lower, upper))]
    _write_csv(path, rid, ("l", "f_l_h", "f_l_h_plus_delta"), rows)


def scaling_document(result, kind: str, gamma: float, rid: str) -> dict[str, Any]:
    return {
        "run_id": rid,
        "gamma": gamma,
        "kind": kind,
        "samples": [{"L": L, "h_c": h} for L, h in result.samples],
        "excluded": [{"L": L, "reason": r} for L, r in result.excluded],
        "fit": {"model": "h_c(L) = h_inf + a*exp(-b*L)", "h_inf": result.h_inf, "a": result.amplitude, "b": result.rate},
        "residual_rms": result.residual,
    }


def write_json(path: Path, doc: Mapping[str, Any]) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
