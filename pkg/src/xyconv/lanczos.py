"""
Thick-restart Lanczos for the lowest eigenpairs of a real symmetric operator.

Every new Krylov vector is orthogonalised twice (classical Gram-Schmidt) against
the whole basis and against any locked vectors, so the projected matrix is
recomputed exactly as ``V A V^T`` instead of trusting the three-term recurrence.
On restart the basis collapses onto the ``keep`` lowest Ritz vectors and the
expansion continues from the last residual direction.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np


class ConvergenceError(RuntimeError):
    """Iterative eigensolver exhausted its budget of operator applications."""

    def __init__(self, message: str, residual: float, applications: int):
        super().__init__(f"{message} (last residual {residual:.3e} after {applications} applications)")
        self.residual = residual
        self.applications = applications


def _orthogonalize(w: np.ndarray, basis: np.ndarray, locked: np.ndarray) -> np.ndarray:
    for _ in range(2):
        if basis.size:
            w = w - basis.T @ (basis @ w)
        if locked.size:
            w = w - locked.T @ (locked @ w)
    return w


def lanczos_lowest(
    matvec: Callable[[np.ndarray], np.ndarray],
    v0: np.ndarray,
    nev: int = 1,
    *,
    locked: Optional[np.ndarray] = None,
    tol: float = 1e-10,
    max_applications: int = 5000,
    ncv: int = 32,
    rng: Optional[np.random.Generator] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Lowest ``nev`` eigenpairs of ``matvec`` restricted to the complement of ``locked``.

    ``v0`` must be nonzero after projection; it also fixes the invariant subspace
    searched (e.g. a parity sector). Returns ``(values, vectors, residuals, applications)``
    with eigenvectors as rows. Fewer than ``nev`` pairs are returned only when the
    reachable invariant subspace is smaller than ``nev``.
    """
    n = v0.shape[0]
    locked = np.zeros((0, n)) if locked is None else np.atleast_2d(locked)
    rng = np.random.default_rng(0) if rng is None else rng
    support = v0 != 0

    q = _orthogonalize(np.asarray(v0, dtype=np.float64), np.zeros((0, n)), locked)
    norm = np.linalg.norm(q)
    if norm == 0.0:
        raise ValueError("start vector vanishes after projection onto the search space")
    q /= norm

    ncv = max(ncv, nev + 8)
    keep = max(nev + 4, ncv // 2)
    V = np.empty((ncv, n))
    W = np.empty((ncv, n))
    size = 0
    applications = 0
    exhausted = False

    while True:
        while size < ncv and not exhausted:
            V[size] = q
            w = matvec(q)
            applications += 1
            if locked.size:
                w = w - locked.T @ (locked @ w)
            W[size] = w
            size += 1
            r = _orthogonalize(w, V[:size], locked)
            beta = np.linalg.norm(r)
            if beta <= 1e-12 * max(np.linalg.norm(w), 1.0):
                # invariant subspace reached: continue from a fresh direction inside the same support
                r = _orthogonalize(np.where(support, rng.standard_normal(n), 0.0), V[:size], locked)
                beta = np.linalg.norm(r)
                if beta <= 1e-8 * np.sqrt(np.count_nonzero(support)):
                    exhausted = True
                    break
            q = r / beta

        T = V[:size] @ W[:size].T
        T = 0.5 * (T + T.T)
        theta, S = np.linalg.eigh(T)
        m = min(nev, size)
        X = S[:, :m]
        Y = X.T @ V[:size]
        AY = X.T @ W[:size]
        residuals = np.linalg.norm(AY - theta[:m, None] * Y, axis=1)
        worst = float(residuals.max())

        if worst < tol or exhausted:
            norms = np.linalg.norm(Y, axis=1)
            return theta[:m].copy(), Y / norms[:, None], residuals, applications
        if applications >= max_applications:
            raise ConvergenceError("Lanczos did not converge", worst, applications)

        k = min(keep, size - 1)
        Xk = S[:, :k]
        V[:k] = Xk.T @ V[:size]
        W[:k] = Xk.T @ W[:size]
        size = k
