"""
Grid sweeps over (gamma, h): sign maps of dS_alpha/dh, convertibility phase
diagrams and boundary detection along fixed-gamma rows.

Every distinct field value is solved exactly once per row and cells are assembled
afterwards, so results do not depend on worker count, completion order or on how
the h range is chunked.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .convertibility import (
    Conversion,
    block_spectrum,
    elocc_verdict_from_entropies,
    locc_verdict,
    sign_from_difference,
    solve_state,
)
from .eigensolver import ConvergenceError, Method, Policy
from .entanglement import AlphaGrid, BlockSpec, RenyiLimit, SchmidtSpectrum, alpha_label, renyi_entropies
from .model import ModelParams

WORKERS_ENV = "XYCONV_WORKERS"
_KEY_DIGITS = 12


def field_key(h: float) -> float:
    """Canonical float for a field value so that grid arithmetic lands on shared solves."""
    return round(float(h), _KEY_DIGITS) + 0.0


def uniform_grid(lo: float, hi: float, step: float) -> list[float]:
    n = int(round((hi - lo) / step)) + 1
    return [field_key(lo + i * step) for i in range(n)]


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV, "").strip()
    return max(1, int(value)) if value else 1


@dataclass(frozen=True)
class SweepConfig:
    L: int
    gamma_grid: tuple[float, ...]
    h_min: float = 0.0
    h_max: float = 1.5
    h_step: float = 0.005
    delta: Optional[float] = None
    block: Optional[BlockSpec] = None
    alpha_grid: AlphaGrid = field(default_factory=AlphaGrid)
    policy: Policy = "lowest"
    method: Method = "auto"

    def __post_init__(self):
        object.__setattr__(self, "gamma_grid", tuple(float(g) for g in self.gamma_grid))
        if not self.gamma_grid:
            raise ValueError("gamma grid is empty")
        for g in self.gamma_grid:
            ModelParams(self.L, g, self.h_min)
        if not self.h_min >= 0:
            raise ValueError(f"h_min must be >= 0, got {self.h_min}")
        if not self.h_step > 0:
            raise ValueError(f"h_step must be > 0, got {self.h_step}")
        if not self.h_max >= self.h_min:
            raise ValueError(f"h_max must be >= h_min, got [{self.h_min}, {self.h_max}]")
        if self.delta is None:
            object.__setattr__(self, "delta", self.h_step)
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.block is None:
            object.__setattr__(self, "block", BlockSpec.first(self.L))
        elif self.block.L != self.L:
            raise ValueError("block was built for a different chain length")
        if self.policy not in ("lowest", "min_entanglement"):
            raise ValueError(f"unknown degeneracy policy {self.policy!r}")
        if self.method not in ("dense", "iterative", "auto"):
            raise ValueError(f"unknown solver method {self.method!r}")

    @property
    def h_grid(self) -> list[float]:
        return uniform_grid(self.h_min, self.h_max, self.h_step)

    def with_h_range(self, h_min: float, h_max: float) -> "SweepConfig":
        return replace(self, h_min=h_min, h_max=h_max)


@dataclass(frozen=True, eq=False)
class PointResult:
    gamma: float
    h: float
    spectrum: Optional[SchmidtSpectrum] = None
    entropies: Optional[np.ndarray] = None
    gap: float = float("nan")
    degenerate: bool = False
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _solve_point(task) -> PointResult:
    L, gamma, h, block, policy, method, orders = task
    try:
        g = solve_state(ModelParams(L, gamma, h), block, policy, method)
        spec = block_spectrum(g.state, block)
        return PointResult(gamma, h, spec, renyi_entropies(spec, orders), g.gap, g.degenerate)
    except (ConvergenceError, ValueError) as exc:
        return PointResult(gamma, h, error=f"{type(exc).__name__}: {exc}")


def solve_points(
    config: SweepConfig, points: Iterable[tuple[float, float]], workers: Optional[int] = None
) -> dict[tuple[float, float], PointResult]:
    """Solve each distinct ``(gamma, h)`` once; the result is keyed by that pair."""
    keys = sorted({(g, field_key(h)) for g, h in points})
    orders = config.alpha_grid.orders()
    tasks = [(config.L, g, h, config.block, config.policy, config.method, orders) for g, h in keys]
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_solve_point, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_solve_point(t) for t in tasks]
    return dict(zip(keys, results))


@dataclass(frozen=True, eq=False)
class PhaseCell:
    """Verdict for the pair ``(h, h + delta)`` plus observables of the ``h`` state."""

    gamma: float
    h: float
    locc: Optional[Conversion]
    elocc: Optional[Conversion]
    degenerate: bool
    gap: float
    S1: float
    lambdas: np.ndarray
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def verdict(self, which: str = "elocc") -> Optional[Conversion]:
        return self.elocc if which == "elocc" else self.locc


@dataclass(frozen=True, eq=False)
class PhaseDiagramGrid:
    config: SweepConfig
    cells: list[PhaseCell]

    @property
    def failures(self) -> int:
        return sum(not c.ok for c in self.cells)

    def row(self, gamma: float) -> list[PhaseCell]:
        return [c for c in self.cells if c.gamma == float(gamma)]

    def invariant_violations(self) -> list[PhaseCell]:
        """Cells where LOCC convertibility is not accompanied by ELOCC in the same direction."""
        out = []
        for c in self.cells:
            if c.ok and c.locc.convertible and c.elocc not in (c.locc, Conversion.EQUAL):
                out.append(c)
        return out


def _one_index(orders) -> int:
    return orders.index(RenyiLimit.ONE)


def _make_cell(gamma: float, h: float, lo: PointResult, up: PointResult, one: int) -> PhaseCell:
    if not (lo.ok and up.ok):
        return PhaseCell(gamma, h, None, None, lo.degenerate or up.degenerate, lo.gap,
                         float("nan"), np.full(4, np.nan), error=lo.error or up.error)
    return PhaseCell(
        gamma=gamma,
        h=h,
        locc=locc_verdict(up.spectrum, lo.spectrum),
        elocc=elocc_verdict_from_entropies(up.entropies, lo.entropies),
        degenerate=lo.degenerate or up.degenerate,
        gap=lo.gap,
        S1=float(lo.entropies[one]),
        lambdas=lo.spectrum.values,
    )


def run_phase_diagram(config: SweepConfig, workers: Optional[int] = None) -> PhaseDiagramGrid:
    """Classify every ``(gamma, h)`` cell of the config; cells come out in (gamma, h) order."""
    hs = config.h_grid
    needed = [(g, h) for g in config.gamma_grid for h in hs]
    needed += [(g, h + config.delta) for g in config.gamma_grid for h in hs]
    solved = solve_points(config, needed, workers)
    one = _one_index(config.alpha_grid.orders())
    cells = []
    for g in sorted(config.gamma_grid):
        for h in hs:
            cells.append(_make_cell(g, h, solved[(g, h)], solved[(g, field_key(h + config.delta))], one))
    return PhaseDiagramGrid(config, cells)


def merge_grids(parts: Sequence[PhaseDiagramGrid], config: SweepConfig) -> PhaseDiagramGrid:
    cells = {(c.gamma, c.h): c for part in parts for c in part.cells}
    return PhaseDiagramGrid(config, [cells[k] for k in sorted(cells)])


@dataclass(frozen=True, eq=False)
class SignMap:
    """Sign of dS_alpha/dh on an (h, alpha) grid; rows of ``signs`` follow ``h``."""

    L: int
    gamma: float
    h: np.ndarray
    alphas: list
    signs: np.ndarray
    failed: np.ndarray

    def labels(self) -> list[str]:
        return [alpha_label(a) for a in self.alphas]


def run_sign_sweep(config: SweepConfig, gamma: float, workers: Optional[int] = None) -> SignMap:
    """Central-difference sign of dS_alpha/dh at every grid field and Renyi order.

    A failed solve on either side marks the whole h row as failed (signs set to 0).
    """
    gamma = float(gamma)
    if gamma not in config.gamma_grid:
        raise ValueError(f"gamma={gamma} is not in the sweep's gamma grid")
    hs = config.h_grid
    d = config.delta
    # S_alpha is even in h (global spin flip), so h - delta < 0 reuses |h - delta|
    solved = solve_points(config, [(gamma, h + d) for h in hs] + [(gamma, abs(h - d)) for h in hs], workers)
    orders = config.alpha_grid.orders()
    signs = np.zeros((len(hs), len(orders)), dtype=np.int8)
    failed = np.zeros(len(hs), dtype=bool)
    for i, h in enumerate(hs):
        up, lo = solved[(gamma, field_key(h + d))], solved[(gamma, field_key(abs(h - d)))]
        if not (up.ok and lo.ok):
            failed[i] = True
            continue
        signs[i] = [sign_from_difference(x, d) for x in up.entropies - lo.entropies]
    return SignMap(config.L, gamma, np.asarray(hs), orders, signs, failed)


@dataclass(frozen=True)
class Boundary:
    h: float
    left: Conversion
    right: Conversion
    kind: str
    """``first_order``, ``second_order``, ``crossing`` (level-crossing artifact) or ``other``."""
    artifact: bool


def factorization_field(gamma: float) -> float:
    return float(np.sqrt(max(0.0, 1.0 - gamma * gamma)))


def detect_boundaries(row: Sequence[PhaseCell], which: str = "elocc") -> list[Boundary]:
    """Verdict changes between adjacent cells of a fixed-gamma row, scanning up in h.

    A boundary between two degenerate-flagged cells is a level-crossing artifact,
    unless its shared grid point sits within one step of the factorization field
    sqrt(1 - gamma^2), where the exact product doublet is a feature of the model.
    Among the remaining boundaries the highest incomparable-to-convertible change is
    ``second_order`` and the highest convertible-to-incomparable change below it is
    ``first_order``.
    """
    cells = sorted((c for c in row if c.ok), key=lambda c: c.h)
    raw = []
    for left, right in zip(cells, cells[1:]):
        a, b = left.verdict(which), right.verdict(which)
        if a == b:
            continue
        step = right.h - left.h
        on_circle = abs(factorization_field(left.gamma) - right.h) <= step + 1e-12
        artifact = left.degenerate and right.degenerate and not on_circle
        raw.append([0.5 * (left.h + right.h), a, b, artifact])

    second = None
    for i, (h, a, b, art) in enumerate(raw):
        if not art and a == Conversion.INCOMPARABLE and b.convertible:
            second = i
    first = None
    for i, (h, a, b, art) in enumerate(raw):
        if second is not None and i >= second:
            break
        if not art and a.convertible and b == Conversion.INCOMPARABLE:
            first = i

    out = []
    for i, (h, a, b, art) in enumerate(raw):
        if i == second:
            kind = "second_order"
        elif i == first:
            kind = "first_order"
        else:
            kind = "crossing" if art else "other"
        out.append(Boundary(h, a, b, kind, art))
    return out
