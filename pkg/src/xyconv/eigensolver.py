"""
Ground states and low-lying spectra of the XY chain.

The total spin-flip parity prod_i Z_i commutes with H and splits the basis into
even and odd popcount sectors. Both solver routes work sector by sector and merge,
so ground states are parity eigenstates and the two quasi-degenerate ferromagnetic
levels are always resolved, however small their splitting. Within a sector the
off-diagonal couplings are non-positive, so the sector ground state is unique
(for gamma > 0) and has positive overlap with the all-ones vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from .entanglement import BlockSpec, block_matrix
from .lanczos import ConvergenceError, lanczos_lowest
from .model import DENSE_L_MAX, ModelParams, apply_hamiltonian, build_dense_hamiltonian, parity_mask

__all__ = [
    "ConvergenceError",
    "GroundStateResult",
    "LowSpectrum",
    "degeneracy_threshold",
    "ground_state",
    "low_spectrum",
    "select_in_degenerate_subspace",
]

Method = Literal["dense", "iterative", "auto"]
Policy = Literal["lowest", "min_entanglement"]

AUTO_DENSE_L_MAX = 12
ITERATIVE_TOL = 1e-10
MAX_APPLICATIONS = 5000
ANGLE_GRID = 720


def degeneracy_threshold(e0: float) -> float:
    return 1e-8 * max(1.0, abs(e0))


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Flip the sign so the entry of largest magnitude is positive."""
    return -v if v[np.argmax(np.abs(v))] < 0 else v


@dataclass(frozen=True, eq=False)
class GroundStateResult:
    params: ModelParams
    energy: float
    state: np.ndarray
    gap: float
    degenerate: bool
    parity: int = 0
    """+1 / -1 for an even / odd parity eigenstate, 0 for a mixture."""


@dataclass(frozen=True, eq=False)
class LowSpectrum:
    """The ``k`` lowest eigenpairs; ``states[i]`` belongs to ``energies[i]``."""

    params: ModelParams
    energies: np.ndarray
    states: np.ndarray
    parities: np.ndarray

    @property
    def gap(self) -> float:
        if len(self.energies) < 2:
            return float("inf")
        return max(0.0, float(self.energies[1] - self.energies[0]))

    @property
    def degenerate(self) -> bool:
        return self.gap < degeneracy_threshold(float(self.energies[0]))

    def ground(self) -> GroundStateResult:
        return GroundStateResult(
            params=self.params,
            energy=float(self.energies[0]),
            state=self.states[0],
            gap=self.gap,
            degenerate=self.degenerate,
            parity=int(self.parities[0]),
        )


def _resolve_method(params: ModelParams, method: Method) -> str:
    if method == "auto":
        return "dense" if params.L <= AUTO_DENSE_L_MAX else "iterative"
    if method == "dense":
        if params.L > DENSE_L_MAX:
            raise ValueError(f"method='dense' requires L <= {DENSE_L_MAX}, got L={params.L}")
        return method
    if method == "iterative":
        return method
    raise ValueError(f"unknown method {method!r}")


def _dense_sectors(params: ModelParams, k: int):
    H = build_dense_hamiltonian(params).matrix
    for odd in (False, True):
        sector = np.flatnonzero(parity_mask(params.L, odd))
        count = min(k, sector.size)
        w, v = scipy.linalg.eigh(H[np.ix_(sector, sector)], subset_by_index=[0, count - 1])
        vecs = np.zeros((count, params.dim))
        vecs[:, sector] = v.T
        yield odd, w, vecs


def _start_vector(params: ModelParams, odd: bool, rng: np.random.Generator) -> np.ndarray:
    # all-ones plus a fixed pseudo-random admixture so every symmetry sector inside the
    # parity block is reachable
    v0 = 1.0 + 0.1 * rng.standard_normal(params.dim)
    return np.where(parity_mask(params.L, odd), v0, 0.0)


def _iterative_sectors(params: ModelParams, k: int, exhaustive: bool):
    def matvec(v):
        return apply_hamiltonian(params, v)

    for odd in (False, True):
        rng = np.random.default_rng([params.L, int(odd)])
        sector_dim = params.dim // 2
        nev = min(k, sector_dim)
        w, vecs, _, _ = lanczos_lowest(
            matvec, _start_vector(params, odd, rng), nev,
            tol=ITERATIVE_TOL, max_applications=MAX_APPLICATIONS, rng=rng,
        )
        if exhaustive:
            # a single Krylov space holds one vector per degenerate eigenspace: hunt for missed partners
            found_w, found_v = list(w), list(vecs)
            while len(found_v) < sector_dim:
                extra_w, extra_v, _, _ = lanczos_lowest(
                    matvec, _start_vector(params, odd, rng), 1, locked=np.asarray(found_v),
                    tol=ITERATIVE_TOL, max_applications=MAX_APPLICATIONS, rng=rng,
                )
                limit = sorted(found_w)[min(k, len(found_w)) - 1]
                if extra_w[0] > limit + degeneracy_threshold(limit):
                    break
                found_w.append(extra_w[0])
                found_v.append(extra_v[0])
            order = np.argsort(found_w, kind="stable")[:k]
            w = np.asarray(found_w)[order]
            vecs = np.asarray(found_v)[order]
        yield odd, w, vecs


def low_spectrum(params: ModelParams, k: int = 2, method: Method = "auto", *, exhaustive: bool = True) -> LowSpectrum:
    """The ``k`` lowest eigenvalues (``1 <= k <= 8``) with orthonormal eigenvectors.

    ``exhaustive`` (iterative route only) re-runs the Krylov search against the found
    vectors to pick up exact degeneracies within a parity sector.
    """
    if not 1 <= k <= 8:
        raise ValueError(f"k must satisfy 1 <= k <= 8, got {k}")
    route = _resolve_method(params, method)
    if route == "dense":
        parts = list(_dense_sectors(params, k))
    else:
        parts = list(_iterative_sectors(params, k, exhaustive))

    energies = np.concatenate([w for _, w, _ in parts])
    states = np.concatenate([v for _, _, v in parts])
    parities = np.concatenate([np.full(len(w), -1 if odd else 1) for odd, w, _ in parts])
    order = list(np.argsort(energies, kind="stable"))
    # inside a degenerate doublet the even-sector state goes first, whichever route rounded lower
    for i in range(len(order) - 1):
        a, b = order[i], order[i + 1]
        if parities[a] < parities[b] and energies[b] - energies[a] < degeneracy_threshold(energies[a]):
            order[i], order[i + 1] = b, a
    order = order[:k]
    states = np.array([fix_phase(states[i]) for i in order])
    return LowSpectrum(params, energies[order], states, parities[order])


def ground_state(params: ModelParams, method: Method = "auto") -> GroundStateResult:
    """Lowest eigenpair together with the gap to the next level."""
    k = 2 if params.dim > 1 else 1
    return low_spectrum(params, k, method, exhaustive=False).ground()


def _purity_curve(A, B, C, theta):
    c, s = np.cos(theta), np.sin(theta)
    # Tr rho^2 for rho = c^2 A + s^2 B + c s (C + C^T), expanded to keep it vectorised
    X = C + C.T
    aa, bb, xx = np.sum(A * A), np.sum(B * B), np.sum(X * X)
    ab, ax, bx = np.sum(A * B), np.sum(A * X), np.sum(B * X)
    return (c**4 * aa + s**4 * bb + c**2 * s**2 * (xx + 2 * ab)
            + 2 * c**3 * s * ax + 2 * c * s**3 * bx)


def select_in_degenerate_subspace(
    result: LowSpectrum, block: BlockSpec, policy: Policy = "lowest"
) -> GroundStateResult:
    """Pick a ground state inside a degenerate lowest doublet.

    ``min_entanglement`` returns the real combination ``cos t v1 + sin t v2``
    minimising the block's second Renyi entropy: a 720-point scan of ``t`` over
    ``[0, pi)``, polished by a bounded scalar search around the best grid angle.
    Non-degenerate input, or ``policy='lowest'``, returns the first eigenvector.
    """
    if policy not in ("lowest", "min_entanglement"):
        raise ValueError(f"unknown degeneracy policy {policy!r}")
    ground = result.ground()
    if policy == "lowest" or len(result.energies) < 2 or not ground.degenerate:
        return ground

    v1, v2 = result.states[0], result.states[1]
    M1 = block_matrix(v1, block)
    M2 = block_matrix(v2, block)
    A, B, C = M1 @ M1.T, M2 @ M2.T, M1 @ M2.T
    step = np.pi / ANGLE_GRID
    grid = step * np.arange(ANGLE_GRID)
    best = grid[np.argmax(_purity_curve(A, B, C, grid))]
    polish = minimize_scalar(
        lambda t: -_purity_curve(A, B, C, t),
        bounds=(best - step, best + step),
        method="bounded",
        options={"xatol": 1e-12},
    )
    t = polish.x if -polish.fun >= _purity_curve(A, B, C, best) else best
    state = fix_phase(np.cos(t) * v1 + np.sin(t) * v2)
    state = state / np.linalg.norm(state)
    energy = np.cos(t) ** 2 * result.energies[0] + np.sin(t) ** 2 * result.energies[1]
    return GroundStateResult(
        params=result.params,
        energy=float(energy),
        state=state,
        gap=result.gap,
        degenerate=True,
        parity=int(result.parities[0]) if result.parities[0] == result.parities[1] else 0,
    )
