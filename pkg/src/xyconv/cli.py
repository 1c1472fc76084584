"""
Batch front end.

    xyconv scan        convertibility phase diagram -> grid.csv, manifest.json
    xyconv sign-map    sign of dS_alpha/dh for one gamma -> sign_map.csv
    xyconv renyi       Renyi curves at one or more fields -> renyi_h<h>.csv
    xyconv majorization  partial sums and LOCC verdict for a pair (or two given spectra)
    xyconv scaling     finite-size extrapolation of an ELOCC boundary -> scaling.json

Settings come from ``--config`` (flat ``key = value`` file or a previous
manifest.json) overridden by flags. Worker count: ``--workers`` or $XYCONV_WORKERS.

Exit codes: 0 ok, 2 invalid configuration, 3 solver failures above budget, 4 fit failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .convertibility import (
    block_spectrum,
    locc_verdict,
    majorization_compare,
    solve_state,
)
from .entanglement import AlphaGrid, BlockSpec, SchmidtSpectrum, renyi_curve
from .io import (
    ConfigError,
    parse_number,
    parse_number_list,
    read_config,
    run_id,
    scaling_document,
    write_curve_csv,
    write_grid_csv,
    write_json,
    write_manifest,
    write_partial_sums_csv,
    write_sign_map_csv,
)
from .model import ModelParams
from .scaling import MIN_SAMPLES, FitError, boundary_samples, scaling_fit
from .sweep import WORKERS_ENV, SweepConfig, run_phase_diagram, run_sign_sweep, uniform_grid

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_FIT = 0, 2, 3, 4
FAILURE_BUDGET = 0.01
SCALING_SIZES = tuple(range(8, 17))

DEFAULTS: dict[str, Any] = {
    "h_min": 0.0,
    "h_max": 1.5,
    "h_step": 0.005,
    "gamma_min": 0.0,
    "gamma_max": 1.0,
    "gamma_step": 0.01,
    "block": "0,1",
    "alpha_min": 0.01,
    "alpha_max": 100.0,
    "alpha_count": 60,
    "policy": "lowest",
    "method": "auto",
    "kind": "second_order",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file or a manifest.json to re-run")
    p.add_argument("--out", default=None, help="output directory (default: current directory)")
    p.add_argument("--workers", type=int, default=None, help=f"worker processes (overrides ${WORKERS_ENV})")
    p.add_argument("--block", default=None, help="contiguous block sites, e.g. 0,1")
    p.add_argument("--alpha-min", default=None)
    p.add_argument("--alpha-max", default=None)
    p.add_argument("--alpha-count", default=None)
    p.add_argument("--policy", choices=["lowest", "min_entanglement"], default=None)
    p.add_argument("--method", choices=["dense", "iterative", "auto"], default=None)


def _add_h_range(p: argparse.ArgumentParser) -> None:
    p.add_argument("--h-min", default=None)
    p.add_argument("--h-max", default=None)
    p.add_argument("--h-step", default=None)
    p.add_argument("--delta", default=None, help="pair spacing (default: h-step)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xyconv", description="Local convertibility of XY-chain ground states.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="LOCC/ELOCC phase diagram over (gamma, h)")
    _add_common(scan)
    _add_h_range(scan)
    scan.add_argument("--L", default=None)
    scan.add_argument("--gamma", nargs="+", default=None, help="explicit gamma values (expressions like sqrt(3)/2 allowed)")
    scan.add_argument("--gamma-min", default=None)
    scan.add_argument("--gamma-max", default=None)
    scan.add_argument("--gamma-step", default=None)

    sign = sub.add_parser("sign-map", help="sign of dS_alpha/dh over (h, alpha) for one gamma")
    _add_common(sign)
    _add_h_range(sign)
    sign.add_argument("--L", default=None)
    sign.add_argument("--gamma", default=None)

    renyi = sub.add_parser("renyi", help="Renyi entropy curves versus alpha")
    _add_common(renyi)
    renyi.add_argument("--L", default=None)
    renyi.add_argument("--gamma", default=None)
    renyi.add_argument("--h", nargs="+", default=None)

    maj = sub.add_parser("majorization", help="partial sums and LOCC verdict")
    _add_common(maj)
    maj.add_argument("--L", default=None)
    maj.add_argument("--gamma", default=None)
    maj.add_argument("--h", default=None)
    maj.add_argument("--delta", default=None)
    maj.add_argument("--a", default=None, help="first spectrum, comma separated (skips the solver)")
    maj.add_argument("--b", default=None, help="second spectrum, comma separated")

    scal = sub.add_parser("scaling", help="extrapolate an ELOCC boundary to infinite size")
    _add_common(scal)
    _add_h_range(scal)
    scal.add_argument("--gamma", default=None)
    scal.add_argument("--L", nargs="+", default=None, help="chain lengths, at least 4 (default 8..16)")
    scal.add_argument("--kind", default=None, help="second_order (default) or first_order")
    return parser


def _merged(args: argparse.Namespace) -> dict[str, Any]:
    values = dict(DEFAULTS)
    if args.config:
        values.update(read_config(args.config))
    for key, value in vars(args).items():
        if key in ("config", "command", "out", "workers") or value is None:
            continue
        values[key] = value
    return values


def _int(values, key) -> int:
    v = values.get(key)
    if v is None:
        raise ConfigError(f"missing required setting '{key}'")
    if isinstance(v, (list, tuple)):
        raise ConfigError(f"setting '{key}' takes a single value")
    x = parse_number(v)
    if x != int(x):
        raise ConfigError(f"setting '{key}' must be an integer, got {v}")
    return int(x)


def _num(values, key) -> float:
    v = values.get(key)
    if v is None:
        raise ConfigError(f"missing required setting '{key}'")
    if isinstance(v, (list, tuple)):
        if len(v) != 1:
            raise ConfigError(f"setting '{key}' takes a single value")
        v = v[0]
    return parse_number(v)


def _chain_length(values) -> int:
    L = _int(values, "L")
    ModelParams(L, 0.0, 0.0)  # validates the size range
    return L


def _block(values, L: int) -> BlockSpec:
    return BlockSpec(tuple(int(s) for s in parse_number_list(values["block"])), L)


def _alpha_grid(values) -> AlphaGrid:
    return AlphaGrid.logspace(_num(values, "alpha_min"), _num(values, "alpha_max"), _int(values, "alpha_count"))


def _h_range(values) -> dict[str, Any]:
    out = {"h_min": _num(values, "h_min"), "h_max": _num(values, "h_max"), "h_step": _num(values, "h_step")}
    out["delta"] = _num(values, "delta") if values.get("delta") is not None else out["h_step"]
    return out


def _common_resolved(values, L: int) -> dict[str, Any]:
    return {
        "block": list(_block(values, L).sites),
        "alpha_min": _num(values, "alpha_min"),
        "alpha_max": _num(values, "alpha_max"),
        "alpha_count": _int(values, "alpha_count"),
        "policy": values["policy"],
        "method": values["method"],
    }


def _sweep_config(resolved: dict[str, Any]) -> SweepConfig:
    L = resolved["L"]
    return SweepConfig(
        L=L,
        gamma_grid=tuple(resolved["gamma"]),
        h_min=resolved["h_min"],
        h_max=resolved["h_max"],
        h_step=resolved["h_step"],
        delta=resolved["delta"],
        block=BlockSpec(tuple(resolved["block"]), L),
        alpha_grid=AlphaGrid.logspace(resolved["alpha_min"], resolved["alpha_max"], resolved["alpha_count"]),
        policy=resolved["policy"],
        method=resolved["method"],
    )


def _manifest(command: str, resolved: dict[str, Any], started: float, failures: int, outputs: list[str]) -> dict:
    rid = run_id(command, resolved, __version__)
    return {
        "run_id": rid,
        "tool": "xyconv",
        "version": __version__,
        "command": command,
        "config": resolved,
        "outputs": outputs,
        "failures": failures,
        "wall_clock_seconds": round(time.perf_counter() - started, 3),
    }


def _out_dir(args) -> Path:
    out = Path(args.out) if args.out else Path.cwd()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(args, command, resolved, started, failures, outputs, total) -> int:
    out = _out_dir(args)
    write_manifest(out / "manifest.json", _manifest(command, resolved, started, failures, outputs))
    if total and failures > FAILURE_BUDGET * total:
        print(f"error: {failures} of {total} cells failed to converge (budget {FAILURE_BUDGET:.0%})", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_scan(args, values) -> int:
    L = _chain_length(values)
    if values.get("gamma") is not None:
        gammas = parse_number_list(values["gamma"])
    else:
        gammas = uniform_grid(_num(values, "gamma_min"), _num(values, "gamma_max"), _num(values, "gamma_step"))
    resolved = {"L": L, "gamma": [float(g) for g in gammas], **_h_range(values), **_common_resolved(values, L)}
    config = _sweep_config(resolved)
    started = time.perf_counter()
    grid = run_phase_diagram(config, args.workers)
    rid = run_id("scan", resolved, __version__)
    write_grid_csv(_out_dir(args) / "grid.csv", grid, rid)
    return _finish(args, "scan", resolved, started, grid.failures, ["grid.csv"], len(grid.cells))


def cmd_sign_map(args, values) -> int:
    L = _chain_length(values)
    gamma = _num(values, "gamma")
    resolved = {"L": L, "gamma": [gamma], **_h_range(values), **_common_resolved(values, L)}
    config = _sweep_config(resolved)
    started = time.perf_counter()
    smap = run_sign_sweep(config, gamma, args.workers)
    rid = run_id("sign-map", resolved, __version__)
    write_sign_map_csv(_out_dir(args) / "sign_map.csv", smap, rid)
    return _finish(args, "sign-map", resolved, started, int(smap.failed.sum()), ["sign_map.csv"], len(smap.h))


def cmd_renyi(args, values) -> int:
    L = _chain_length(values)
    gamma = _num(values, "gamma")
    if values.get("h") is None:
        raise ConfigError("missing required setting 'h'")
    hs = parse_number_list(values["h"])
    resolved = {"L": L, "gamma": gamma, "h": hs, **_common_resolved(values, L)}
    block = BlockSpec(tuple(resolved["block"]), L)
    grid = _alpha_grid(values)
    params = [ModelParams(L, gamma, h) for h in hs]
    started = time.perf_counter()
    rid = run_id("renyi", resolved, __version__)
    outputs = []
    for p in params:
        g = solve_state(p, block, resolved["policy"], resolved["method"])
        name = f"renyi_h{p.h!r}.csv"
        write_curve_csv(_out_dir(args) / name, renyi_curve(block_spectrum(g.state, block), grid), rid)
        outputs.append(name)
    return _finish(args, "renyi", resolved, started, 0, outputs, 0)


def cmd_majorization(args, values) -> int:
    if values.get("a") is not None or values.get("b") is not None:
        if values.get("a") is None or values.get("b") is None:
            raise ConfigError("--a and --b must be given together")
        a = SchmidtSpectrum.from_probabilities(parse_number_list(values["a"]))
        b = SchmidtSpectrum.from_probabilities(parse_number_list(values["b"]))
        print(majorization_compare(a, b).name)
        return EXIT_OK
    L = _chain_length(values)
    gamma, h = _num(values, "gamma"), _num(values, "h")
    delta = _num(values, "delta") if values.get("delta") is not None else 1e-3
    resolved = {"L": L, "gamma": gamma, "h": h, "delta": delta, **_common_resolved(values, L)}
    block = BlockSpec(tuple(resolved["block"]), L)
    started = time.perf_counter()
    lo = block_spectrum(solve_state(ModelParams(L, gamma, h), block, resolved["policy"], resolved["method"]).state, block)
    up = block_spectrum(solve_state(ModelParams(L, gamma, h + delta), block, resolved["policy"], resolved["method"]).state, block)
    rid = run_id("majorization", resolved, __version__)
    write_partial_sums_csv(_out_dir(args) / "majorization.csv", lo.partial_sums(), up.partial_sums(), rid)
    print(locc_verdict(up, lo).value)
    return _finish(args, "majorization", resolved, started, 0, ["majorization.csv"], 0)


def cmd_scaling(args, values) -> int:
    gamma = _num(values, "gamma")
    if values.get("L") is None:
        values["L"] = list(SCALING_SIZES)
    Ls = sorted({int(x) for x in parse_number_list(values["L"])})
    if len(Ls) < MIN_SAMPLES:
        raise ConfigError(f"scaling needs at least {MIN_SAMPLES} distinct L values, got {len(Ls)}")
    kind = str(values["kind"]).replace("-", "_")
    kind = {"first": "first_order", "second": "second_order"}.get(kind, kind)
    if kind not in ("first_order", "second_order"):
        raise ConfigError(f"kind must be first_order or second_order, got {values['kind']!r}")
    resolved = {"gamma": gamma, "L": Ls, "kind": kind, **_h_range(values),
                **_common_resolved(values, min(Ls))}
    for L in Ls:
        ModelParams(L, gamma, resolved["h_min"])
    started = time.perf_counter()
    samples, excluded = boundary_samples(
        gamma, Ls, kind, h_min=resolved["h_min"], h_max=resolved["h_max"], h_step=resolved["h_step"],
        delta=resolved["delta"], alpha_grid=_alpha_grid(values), method=resolved["method"], workers=args.workers,
    )
    rid = run_id("scaling", resolved, __version__)
    try:
        result = scaling_fit(samples)
    except (FitError, ValueError) as exc:
        print(f"error: scaling fit failed: {exc}; samples={samples}, excluded={excluded}", file=sys.stderr)
        return EXIT_FIT
    result = dataclasses.replace(result, excluded=excluded)
    write_json(_out_dir(args) / "scaling.json", scaling_document(result, kind, gamma, rid))
    print(f"h_inf = {result.h_inf:.6f}  (a = {result.amplitude:.4g}, b = {result.rate:.4g}, rms = {result.residual:.3g})")
    return _finish(args, "scaling", resolved, started, 0, ["scaling.json"], 0)


COMMANDS = {
    "scan": cmd_scan,
    "sign-map": cmd_sign_map,
    "renyi": cmd_renyi,
    "majorization": cmd_majorization,
    "scaling": cmd_scaling,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is not None:
        os.environ[WORKERS_ENV] = str(args.workers)
    try:
        values = _merged(args)
        return COMMANDS[args.command](args, values)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
