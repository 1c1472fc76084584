"""
Block reduced density matrices, Schmidt spectra and Renyi entropies (in bits).

Block-local basis index: ``sites[k]`` is bit ``k``, mirroring the chain convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Union

import numpy as np

RANK_CUTOFF = 1e-12
CLAMP_FLOOR = -1e-8
ONE_WINDOW = 1e-9


class RenyiLimit(str, Enum):
    ZERO = "0+"
    ONE = "1"
    INF = "inf"

    @property
    def position(self) -> float:
        return {"0+": 0.0, "1": 1.0, "inf": np.inf}[self.value]


Alpha = Union[float, RenyiLimit]


@dataclass(frozen=True)
class BlockSpec:
    sites: tuple[int, ...]
    L: int

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        object.__setattr__(self, "sites", sites)
        n = len(sites)
        if not 1 <= n <= self.L // 2:
            raise ValueError(f"block size must satisfy 1 <= |sites| <= L/2, got {n} sites for L={self.L}")
        if any(not 0 <= s < self.L for s in sites):
            raise ValueError(f"block sites {sites} out of range for L={self.L}")
        if any((sites[0] + k) % self.L != s for k, s in enumerate(sites)):
            raise ValueError(f"block sites {sites} are not contiguous (mod L={self.L})")

    @classmethod
    def first(cls, L: int, size: int = 2) -> "BlockSpec":
        return cls(tuple(range(size)), L)

    @property
    def dim(self) -> int:
        return 1 << len(self.sites)


def block_matrix(state: np.ndarray, block: BlockSpec) -> np.ndarray:
    """Reshape a pure state into the ``d x 2**(L-|block|)`` matrix of its bipartition."""
    L = block.L
    state = np.asarray(state, dtype=np.float64)
    if state.shape != (1 << L,):
        raise ValueError(f"state must have shape ({1 << L},) for L={L}, got {state.shape}")
    # tensor axis a carries bit L-1-a; C-order flattening makes the first axis most significant
    block_axes = [L - 1 - s for s in reversed(block.sites)]
    rest_axes = [a for a in range(L) if a not in block_axes]
    t = state.reshape((2,) * L).transpose(block_axes + rest_axes)
    return t.reshape(block.dim, -1)


def reduced_density_matrix(state: np.ndarray, block: BlockSpec) -> np.ndarray:
    M = block_matrix(state, block)
    rho = M @ M.T
    return 0.5 * (rho + rho.T)


@dataclass(frozen=True, eq=False)
class SchmidtSpectrum:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("spectrum must be a non-empty 1-d array")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_probabilities(cls, p: Sequence[float]) -> "SchmidtSpectrum":
        """Sort descending and validate a probability vector given directly."""
        p = np.sort(np.asarray(p, dtype=np.float64))[::-1]
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise ValueError("spectrum must be non-negative and sum to one")
        return cls(p)

    @property
    def d(self) -> int:
        return self.values.size

    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.values)

    def __len__(self) -> int:
        return self.values.size


def schmidt_spectrum(rho: np.ndarray) -> SchmidtSpectrum:
    """Descending eigenvalues of ``rho`` clamped at zero and renormalised to sum one."""
    rho = np.asarray(rho, dtype=np.float64)
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.T))[::-1]
    if lam[-1] < CLAMP_FLOOR:
        raise ValueError(f"density matrix has eigenvalue {lam[-1]:.3e} < {CLAMP_FLOOR:g}")
    lam = np.clip(lam, 0.0, None)
    return SchmidtSpectrum(lam / lam.sum())


def _support(spectrum: SchmidtSpectrum) -> np.ndarray:
    lam = spectrum.values
    return lam[lam > RANK_CUTOFF]


def renyi_entropy(spectrum: SchmidtSpectrum, alpha: Alpha) -> float:
    """Renyi entropy in bits.

    Eigenvalues at or below the rank cutoff are dropped for every order, so that
    finite ``alpha`` approaches the ``0+`` limit ``log2(rank)`` continuously.
    """
    lam = _support(spectrum)
    if isinstance(alpha, RenyiLimit):
        if alpha is RenyiLimit.ZERO:
            return float(np.log2(lam.size))
        if alpha is RenyiLimit.INF:
            return float(-np.log2(lam[0]))
        return float(-np.sum(lam * np.log2(lam)))
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError(f"Renyi order must be positive, got {alpha}")
    if abs(alpha - 1.0) < ONE_WINDOW:
        return float(-np.sum(lam * np.log2(lam)))
    if np.isinf(alpha):
        return float(-np.log2(lam[0]))
    # factor out the largest eigenvalue so large orders do not underflow
    log_top = np.log2(lam[0])
    s = np.sum((lam / lam[0]) ** alpha)
    return float((alpha * log_top + np.log2(s)) / (1.0 - alpha))


@dataclass(frozen=True)
class AlphaGrid:
    """Finite Renyi orders; the ``0+``, ``1`` and ``inf`` limits are always added."""

    points: tuple[float, ...] = field(default_factory=lambda: tuple(np.logspace(-2, 2, 60)))

    def __post_init__(self):
        pts = tuple(float(a) for a in self.points)
        if any(not (a > 0 and np.isfinite(a)) for a in pts):
            raise ValueError("alpha grid points must be positive and finite")
        object.__setattr__(self, "points", pts)

    @classmethod
    def logspace(cls, lo: float = 1e-2, hi: float = 1e2, count: int = 60) -> "AlphaGrid":
        return cls(tuple(np.logspace(np.log10(lo), np.log10(hi), count)))

    def orders(self) -> list[Alpha]:
        """All orders ascending, limits included."""
        mids: list[Alpha] = sorted(
            [a for a in self.points if abs(a - 1.0) >= ONE_WINDOW] + [RenyiLimit.ONE],
            key=lambda a: a.position if isinstance(a, RenyiLimit) else a,
        )
        return [RenyiLimit.ZERO, *mids, RenyiLimit.INF]


def alpha_label(alpha: Alpha) -> str:
    return alpha.value if isinstance(alpha, RenyiLimit) else repr(float(alpha))


@dataclass(frozen=True, eq=False)
class RenyiCurve:
    alphas: list
    entropies: np.ndarray

    def labels(self) -> list[str]:
        return [alpha_label(a) for a in self.alphas]


def renyi_entropies(spectrum: SchmidtSpectrum, orders: Sequence[Alpha]) -> np.ndarray:
    return np.array([renyi_entropy(spectrum, a) for a in orders])


def renyi_curve(spectrum: SchmidtSpectrum, grid: AlphaGrid | None = None) -> RenyiCurve:
    grid = AlphaGrid() if grid is None else grid
    orders = grid.orders()
    if len(orders) == 0:
        raise ValueError("alpha grid is empty")
    return RenyiCurve(orders, renyi_entropies(spectrum, orders))
