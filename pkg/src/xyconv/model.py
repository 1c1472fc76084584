"""
Periodic XY chain in a transverse field,

    H = -sum_i [ (1+g)/2 X_i X_{i+1} + (1-g)/2 Y_i Y_{i+1} + h Z_i ],   site L == site 0,

written in the sigma^z product basis. Site i is bit i of the basis index and a
set bit is spin up (Z = +1). In this basis H is real:

    XX + YY pair flips between antiparallel spins carry -1,
    XX - YY pair flips between parallel spins carry -g,
    the diagonal is -h * (2 * popcount - L).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

L_MAX = 24
DENSE_L_MAX = 14


class DimensionError(ValueError):
    """Requested a dense representation above the dense ceiling."""


@dataclass(frozen=True)
class ModelParams:
    L: int
    gamma: float
    h: float

    def __post_init__(self):
        if isinstance(self.L, bool) or int(self.L) != self.L:
            raise ValueError(f"L must be an integer, got {self.L!r}")
        if not 2 <= self.L <= L_MAX:
            raise ValueError(f"chain length must satisfy 2 <= L <= {L_MAX}, got L={self.L}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"anisotropy must satisfy 0 <= gamma <= 1, got gamma={self.gamma}")
        if not self.h >= 0.0:
            raise ValueError(f"field must satisfy h >= 0, got h={self.h}")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "h", float(self.h))

    @property
    def dim(self) -> int:
        return 1 << self.L

    def with_h(self, h: float) -> "ModelParams":
        return ModelParams(self.L, self.gamma, h)


@lru_cache(maxsize=8)
def _popcount(L: int) -> np.ndarray:
    idx = np.arange(1 << L, dtype=np.int64)
    out = np.bitwise_count(idx).astype(np.int64)
    out.setflags(write=False)
    return out


def parity_mask(L: int, odd: bool) -> np.ndarray:
    """Boolean mask of basis states with odd (or even) number of up spins."""
    return (_popcount(L) & 1) == int(odd)


def field_diagonal(params: ModelParams) -> np.ndarray:
    return -params.h * (2 * _popcount(params.L) - params.L).astype(np.float64)


def bonds(L: int) -> list[tuple[int, int]]:
    # L=2 keeps both (0,1) and (1,0): the literal periodic sum doubles that bond.
    return [(i, (i + 1) % L) for i in range(L)]


def _bond_couplings(gamma: float) -> np.ndarray:
    # indexed [bit_i, bit_j] of the row state
    return np.array([[-gamma, -1.0], [-1.0, -gamma]])


def build_dense_hamiltonian(params: ModelParams) -> "HamiltonianOperator":
    """Explicit ``2**L x 2**L`` real symmetric matrix of the chain (``L <= 14``)."""
    if params.L > DENSE_L_MAX:
        raise DimensionError(
            f"dense Hamiltonian limited to L <= {DENSE_L_MAX} (got L={params.L}); use the matrix-free apply"
        )
    N = params.dim
    idx = np.arange(N, dtype=np.int64)
    M = np.zeros((N, N))
    M[idx, idx] = field_diagonal(params)
    coupling = _bond_couplings(params.gamma)
    for i, j in bonds(params.L):
        bi = (idx >> i) & 1
        bj = (idx >> j) & 1
        M[idx, idx ^ ((1 << i) | (1 << j))] += coupling[bi, bj]
    return HamiltonianOperator(params, M)


def apply_hamiltonian(params: ModelParams, v: np.ndarray) -> np.ndarray:
    """Matrix-free ``H @ v``.

    The state is viewed as an ``(2,)*L`` tensor; a pair flip on bond (i, j) is a
    reversal of the two corresponding axes, weighted by a 2x2 coupling pattern.
    """
    v = np.asarray(v, dtype=np.float64)
    L = params.L
    if v.shape != (params.dim,):
        raise ValueError(f"state vector must have shape ({params.dim},), got {v.shape}")
    out = field_diagonal(params) * v
    t = v.reshape((2,) * L)
    acc = out.reshape((2,) * L)
    coupling = _bond_couplings(params.gamma)
    for i, j in bonds(L):
        ai, aj = L - 1 - i, L - 1 - j
        shape = [1] * L
        shape[ai] = shape[aj] = 2
        pattern = coupling if ai < aj else coupling.T
        acc += pattern.reshape(shape) * np.flip(t, axis=(ai, aj))
    return out


@dataclass(frozen=True, eq=False)
class HamiltonianOperator:
    """The chain Hamiltonian, either as a dense matrix or as the matrix-free kernel."""

    params: ModelParams
    matrix: Optional[np.ndarray] = None

    @property
    def is_dense(self) -> bool:
        return self.matrix is not None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.params.dim, self.params.dim)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            v = np.asarray(v, dtype=np.float64)
            if v.shape != (self.params.dim,):
                raise ValueError(f"state vector must have shape ({self.params.dim},), got {v.shape}")
            return self.matrix @ v
        return apply_hamiltonian(self.params, v)

    __matmul__ = matvec


def matrix_free(params: ModelParams) -> HamiltonianOperator:
    return HamiltonianOperator(params)


def cyclic_shift_permutation(L: int) -> np.ndarray:
    """``perm[x]`` is the basis index of ``x`` with every site moved one step right."""
    idx = np.arange(1 << L, dtype=np.int64)
    return ((idx << 1) | (idx >> (L - 1))) & ((1 << L) - 1)
