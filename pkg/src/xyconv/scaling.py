"""Finite-size extrapolation of pseudo-critical fields, h_c(L) = h_inf + a exp(-b L)."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .entanglement import AlphaGrid
from .sweep import SweepConfig, detect_boundaries, run_phase_diagram

AMPLITUDE_STARTS = (-1.0, -0.2, 0.2, 1.0)
RATE_STARTS = (0.05, 0.1, 0.3, 0.6, 1.2)
MIN_SAMPLES = 4


class FitError(RuntimeError):
    def __init__(self, message: str, diagnostics: Optional[list] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


@dataclass(frozen=True)
class ScalingResult:
    samples: list[tuple[int, float]]
    h_inf: float
    amplitude: float
    rate: float
    residual: float
    """Root-mean-square misfit of the fitted curve over the samples."""
    excluded: list[tuple[int, str]] = field(default_factory=list)

    def predict(self, L) -> np.ndarray:
        return self.h_inf + self.amplitude * np.exp(-self.rate * np.asarray(L, dtype=float))


def _model(p, L):
    return p[0] + p[1] * np.exp(-p[2] * L)


def scaling_fit(samples: Sequence[tuple[int, float]]) -> ScalingResult:
    """Least-squares fit of ``h_inf + a exp(-b L)`` with ``b > 0``.

    Deterministic multi-start: the 4 x 5 grid of (a, b) starts from
    ``AMPLITUDE_STARTS`` x ``RATE_STARTS`` with ``h_inf`` started at the largest-L sample;
    the converged run with the smallest residual wins.
    """
    pts = sorted((int(L), float(hc)) for L, hc in samples)
    Ls = np.array([p[0] for p in pts], dtype=float)
    hc = np.array([p[1] for p in pts])
    if len(pts) < MIN_SAMPLES:
        raise ValueError(f"scaling fit needs at least {MIN_SAMPLES} samples, got {len(pts)}")
    if len(set(Ls)) != len(Ls):
        raise ValueError("scaling samples must have distinct L")
    if not np.all(np.isfinite(hc)):
        raise ValueError("scaling samples contain non-finite critical fields")

    best = None
    diagnostics = []
    for a0, b0 in itertools.product(AMPLITUDE_STARTS, RATE_STARTS):
        try:
            fit = least_squares(
                lambda p: _model(p, Ls) - hc,
                x0=[hc[-1], a0, b0],
                bounds=([-np.inf, -np.inf, 1e-9], [np.inf, np.inf, 50.0]),
                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000,
            )
        except (ValueError, FloatingPointError) as exc:
            diagnostics.append((a0, b0, f"{type(exc).__name__}: {exc}"))
            continue
        rms = float(np.sqrt(np.mean(fit.fun**2)))
        diagnostics.append((a0, b0, fit.status, rms))
        if fit.status <= 0 or not np.all(np.isfinite(fit.x)):
            continue
        if best is None or rms < best[1]:
            best = (fit.x, rms)
    if best is None:
        raise FitError("no start converged for the exponential scaling fit", diagnostics)
    (h_inf, a, b), rms = best
    return ScalingResult([(int(L), float(h)) for L, h in pts], float(h_inf), float(a), float(b), rms)


def boundary_samples(
    gamma: float,
    Ls: Sequence[int],
    kind: str = "second_order",
    *,
    h_min: float = 0.0,
    h_max: float = 1.5,
    h_step: float = 0.005,
    delta: Optional[float] = None,
    alpha_grid: Optional[AlphaGrid] = None,
    method: str = "auto",
    workers: Optional[int] = None,
) -> tuple[list[tuple[int, float]], list[tuple[int, str]]]:
    """Sweep one gamma row per L and collect the ELOCC boundary of the requested kind.

    Returns ``(samples, excluded)``; an L lands in ``excluded`` when no non-artifact
    boundary of that kind was found in the h window.
    """
    if kind not in ("first_order", "second_order"):
        raise ValueError(f"boundary kind must be 'first_order' or 'second_order', got {kind!r}")
    samples, excluded = [], []
    for L in Ls:
        config = SweepConfig(
            L=L, gamma_grid=(gamma,), h_min=h_min, h_max=h_max, h_step=h_step, delta=delta,
            alpha_grid=alpha_grid or AlphaGrid(), method=method,
        )
        grid = run_phase_diagram(config, workers)
        hits = [b for b in detect_boundaries(grid.row(gamma)) if b.kind == kind]
        if hits:
            samples.append((int(L), hits[-1].h))
        else:
            excluded.append((int(L), f"no {kind} boundary in [{h_min}, {h_max}]"))
    return samples, excluded
