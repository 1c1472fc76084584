"""
LOCC and ELOCC convertibility between neighbouring ground states.

For a pair of Schmidt spectra the LOCC question is decided by majorization of
the descending partial sums (Nielsen: a state converts to another iff its
spectrum is majorized by the target's), the ELOCC question by dominance of the
whole Renyi family. Verdicts refer to the ordered pair ``(h, h + delta)``:
``DOWN`` means the ``h + delta`` ground state converts to the ``h`` one, ``UP``
the reverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np

from .eigensolver import GroundStateResult, Method, Policy, low_spectrum, select_in_degenerate_subspace
from .entanglement import (
    RANK_CUTOFF,
    Alpha,
    AlphaGrid,
    BlockSpec,
    SchmidtSpectrum,
    reduced_density_matrix,
    renyi_entropies,
    renyi_entropy,
    schmidt_spectrum,
)
from .model import ModelParams

COMPARE_TOL = 1e-10
DERIVATIVE_TOL = 1e-8


class Majorization(str, Enum):
    A_MAJORIZES_B = "a>b"
    B_MAJORIZES_A = "b>a"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"


class Dominance(str, Enum):
    A_DOMINATES_B = "a>b"
    B_DOMINATES_A = "b>a"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"


class Conversion(str, Enum):
    DOWN = "down"
    UP = "up"
    INCOMPARABLE = "incomp"
    EQUAL = "equal"

    @property
    def convertible(self) -> bool:
        return self in (Conversion.DOWN, Conversion.UP)


@dataclass(frozen=True)
class ConvertibilityVerdict:
    locc: Conversion
    elocc: Conversion
    degenerate_flag: bool = False

    def consistent(self) -> bool:
        """LOCC convertibility in a direction implies ELOCC convertibility that way."""
        if self.locc.convertible:
            return self.elocc in (self.locc, Conversion.EQUAL)
        return True


@dataclass(frozen=True, eq=False)
class MajorizationProfile:
    partial_sums: np.ndarray

    @classmethod
    def of(cls, spectrum: SchmidtSpectrum) -> "MajorizationProfile":
        return cls(spectrum.partial_sums())


def _check_dims(a: SchmidtSpectrum, b: SchmidtSpectrum) -> None:
    if a.d != b.d:
        raise ValueError(f"spectra have different dimensions: {a.d} vs {b.d}")


def _order(diff: np.ndarray, tol: float):
    a_ge = bool(np.all(diff >= -tol))
    b_ge = bool(np.all(diff <= tol))
    return a_ge, b_ge


def tail_sums(spectrum: SchmidtSpectrum) -> np.ndarray:
    """``1 - f_l`` for ``l = 1..d``, summed from the small end; eigenvalues at or below
    the rank cutoff count as zero, as they do for the Renyi entropies."""
    lam = np.where(spectrum.values > RANK_CUTOFF, spectrum.values, 0.0)
    return np.append(np.cumsum(lam[::-1])[::-1][1:], 0.0)


def majorization_compare(a: SchmidtSpectrum, b: SchmidtSpectrum, tol: float = COMPARE_TOL) -> Majorization:
    """``A_MAJORIZES_B`` iff every partial sum of ``a`` is at least that of ``b``.

    Partial sums are compared through their complements (tails), with ``tol`` taken
    relative to the larger tail: an absolute tolerance would wave through differences
    in eigenvalues of order 1e-11 that still move small-order Renyi entropies at O(1).
    """
    _check_dims(a, b)
    ta, tb = tail_sums(a), tail_sums(b)
    a_ge, b_ge = _order(tb - ta, tol * np.maximum(ta, tb))
    if a_ge and b_ge:
        return Majorization.EQUAL
    if a_ge:
        return Majorization.A_MAJORIZES_B
    if b_ge:
        return Majorization.B_MAJORIZES_A
    return Majorization.INCOMPARABLE


def elocc_compare(
    a: SchmidtSpectrum, b: SchmidtSpectrum, grid: AlphaGrid | None = None, tol: float = COMPARE_TOL
) -> Dominance:
    """``A_DOMINATES_B`` iff ``S_alpha(a) >= S_alpha(b)`` at every order, limits included."""
    _check_dims(a, b)
    orders = (AlphaGrid() if grid is None else grid).orders()
    return _dominance(renyi_entropies(a, orders) - renyi_entropies(b, orders), tol)


def _dominance(diff: np.ndarray, tol: float = COMPARE_TOL) -> Dominance:
    a_ge, b_ge = _order(diff, tol)
    if a_ge and b_ge:
        return Dominance.EQUAL
    if a_ge:
        return Dominance.A_DOMINATES_B
    if b_ge:
        return Dominance.B_DOMINATES_A
    return Dominance.INCOMPARABLE


def locc_verdict(upper: SchmidtSpectrum, lower: SchmidtSpectrum, tol: float = COMPARE_TOL) -> Conversion:
    """Direction of deterministic LOCC conversion; ``upper`` is the spectrum at ``h + delta``."""
    rel = majorization_compare(upper, lower, tol)
    # the more entangled (majorized) state is the one that can be converted
    return {
        Majorization.B_MAJORIZES_A: Conversion.DOWN,
        Majorization.A_MAJORIZES_B: Conversion.UP,
        Majorization.EQUAL: Conversion.EQUAL,
        Majorization.INCOMPARABLE: Conversion.INCOMPARABLE,
    }[rel]


def elocc_verdict_from_entropies(upper: np.ndarray, lower: np.ndarray, tol: float = COMPARE_TOL) -> Conversion:
    rel = _dominance(np.asarray(upper) - np.asarray(lower), tol)
    return {
        Dominance.A_DOMINATES_B: Conversion.DOWN,
        Dominance.B_DOMINATES_A: Conversion.UP,
        Dominance.EQUAL: Conversion.EQUAL,
        Dominance.INCOMPARABLE: Conversion.INCOMPARABLE,
    }[rel]


def elocc_verdict(
    upper: SchmidtSpectrum, lower: SchmidtSpectrum, grid: AlphaGrid | None = None, tol: float = COMPARE_TOL
) -> Conversion:
    orders = (AlphaGrid() if grid is None else grid).orders()
    return elocc_verdict_from_entropies(renyi_entropies(upper, orders), renyi_entropies(lower, orders), tol)


def solve_state(params: ModelParams, block: BlockSpec, policy: Policy = "lowest", method: Method = "auto") -> GroundStateResult:
    spec = low_spectrum(params, 2, method, exhaustive=False)
    return select_in_degenerate_subspace(spec, block, policy)


def block_spectrum(state: np.ndarray, block: BlockSpec) -> SchmidtSpectrum:
    return schmidt_spectrum(reduced_density_matrix(state, block))


def classify_pair(
    lower: ModelParams,
    upper: ModelParams,
    block: BlockSpec | None = None,
    *,
    grid: AlphaGrid | None = None,
    policy: Policy = "lowest",
    method: Method = "auto",
) -> ConvertibilityVerdict:
    """Solve both ground states and classify the pair under LOCC and ELOCC."""
    if (lower.L, lower.gamma) != (upper.L, upper.gamma):
        raise ValueError("pair must share L and gamma")
    if not upper.h > lower.h:
        raise ValueError("the upper field must exceed the lower one (delta > 0)")
    block = BlockSpec.first(lower.L) if block is None else block
    g_lo = solve_state(lower, block, policy, method)
    g_up = solve_state(upper, block, policy, method)
    s_lo, s_up = block_spectrum(g_lo.state, block), block_spectrum(g_up.state, block)
    return ConvertibilityVerdict(
        locc=locc_verdict(s_up, s_lo),
        elocc=elocc_verdict(s_up, s_lo, grid),
        degenerate_flag=g_lo.degenerate or g_up.degenerate,
    )


Sign = Literal[-1, 0, 1]


def sign_from_difference(diff: float, delta: float, tol: float = DERIVATIVE_TOL) -> Sign:
    d = diff / (2.0 * delta)
    if abs(d) < tol:
        return 0
    return 1 if d > 0 else -1


def sign_of_dS(
    params: ModelParams,
    block: BlockSpec,
    alpha: Alpha,
    delta: float,
    *,
    policy: Policy = "lowest",
    method: Method = "auto",
) -> Sign:
    """Sign of the central difference ``[S(h+delta) - S(h-delta)] / (2 delta)``.

    Returns -1, +1, or 0 when the difference quotient is below the derivative tolerance.
    H(-h) is H(h) conjugated by a global spin flip, so ``S(-x) = S(x)`` covers ``h < delta``.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    s = []
    for h in (params.h + delta, abs(params.h - delta)):
        g = solve_state(params.with_h(h), block, policy, method)
        s.append(renyi_entropy(block_spectrum(g.state, block), alpha))
    return sign_from_difference(s[0] - s[1], delta)
