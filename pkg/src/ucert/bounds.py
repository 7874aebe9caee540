"""Closed-form bounds for the certification query-complexity proofs.

Evaluators for the total-variation-distance budget that rules out fast
incoherent certification (g, F1..F4, the N <= 1e-8 d/s^2 threshold), the
coherent trace-distance budget 3 s N / sqrt(d), the average-case constants,
and the Haar-moment machinery (moment operators, the overlap statistic X and
the partial-trace ratio f) whose inequalities the test suite probes by Monte
Carlo.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from itertools import permutations
from typing import NamedTuple

import numpy as np

from .linalg import as_complex_matrix, assert_state, partial_trace_system

TVD_TARGET = 1.0 / 3.0


@dataclass(frozen=True)
class BoundParams:
    """Free parameters of the good-set TVD bound, with proof defaults.

    alpha enters only the bound's hypotheses (it defaults to 100*d at the
    point of use and is carried for documentation); beta must exceed
    4 s^2 / d for the bound to apply.
    """

    beta: float = 0.1
    gamma: float = 0.0003
    eta: float = 0.3
    alpha: float | None = None

    def __post_init__(self):
        if self.beta <= 0 or self.gamma <= 0 or self.eta <= 0:
            raise ValueError("beta, gamma and eta must be positive")

    def validate_for(self, s: float, d: int) -> None:
        if self.beta <= 4.0 * s**2 / d:
            raise ValueError(
                f"infeasible parameters: beta = {self.beta} <= 4 s^2/d = {4.0 * s**2 / d:.3e}"
            )


@dataclass(frozen=True)
class BoundReport:
    s: float
    d: int
    N: float
    g: float
    F1: float
    F2: float
    F3: float
    F4: float
    tvd_upper: float
    feasible: bool

    def __post_init__(self):
        if abs(self.tvd_upper - (self.F1 + self.F2 + self.F3 + self.F4)) > 1e-12:
            raise ValueError("tvd_upper must equal F1+F2+F3+F4")

    def to_json(self) -> str:
        keys = ["s", "d", "N", "g", "F1", "F2", "F3", "F4", "tvd_upper", "feasible"]
        return json.dumps({k: getattr(self, k) for k in keys})


def s_of_eps(epsilon: float) -> float:
    """Arc length s = 2 arcsin(eps/2) of an eps-perturbed channel's spectrum."""
    if not 0.0 <= epsilon <= 2.0:
        raise ValueError(f"epsilon must lie in [0, 2], got {epsilon}")
    return 2.0 * math.asin(epsilon / 2.0)


def g_bound(s: float, d: int, N) -> float:
    """Second-moment budget 606 s^2 N / d + 720072 s^4 N^2 / d^2.

    N may be fractional (the threshold value 1e-8 d / s^2 is); a warning is
    emitted for s >= 1, where the derivation's hypotheses fail.
    """
    if s >= 1.0:
        warnings.warn("g_bound derived under s < 1; value returned as-is", stacklevel=2)
    return 606.0 * s**2 * N / d + 720072.0 * s**4 * N**2 / d**2


def tvd_upper(s: float, d: int, N, params: BoundParams | None = None) -> BoundReport:
    """Total-variation budget F1+F2+F3+F4 of the incoherent lower bound."""
    p = params or BoundParams()
    p.validate_for(s, d)
    g = g_bound(s, d, N)
    F1 = 0.01 + 20.0 * g / p.beta**2
    F2 = 0.01 + g / p.gamma
    F3 = 1.0 - math.exp(-(1.0 + 1.0 / p.beta) * p.gamma - p.eta)
    F4 = math.exp(-p.eta**2 / (4.0 * p.gamma + 2.0 * p.beta * p.eta / 3.0))
    total = F1 + F2 + F3 + F4
    return BoundReport(
        s=s, d=d, N=N, g=g, F1=F1, F2=F2, F3=F3, F4=F4,
        tvd_upper=total, feasible=total < TVD_TARGET,
    )


def incoherent_threshold(d: int, epsilon: float) -> int:
    """Query count floor(1e-8 d / s^2) below which the TVD stays under 1/3."""
    if not 0.0 < epsilon < 0.5:
        raise ValueError("threshold derived for epsilon in (0, 1/2)")
    if d <= 50.0 * epsilon**2:
        raise ValueError("threshold derived for d > 50 epsilon^2")
    s = s_of_eps(epsilon)
    return int(math.floor(1e-8 * d / s**2))


def coherent_bounds(s: float, d: int, N) -> tuple[float, float]:
    """Trace-distance budget min(2, 3sN/sqrt(d)) and the threshold floor(sqrt(d)/(6s))."""
    trace_bound = min(2.0, 3.0 * s * N / math.sqrt(d))
    threshold = math.floor(math.sqrt(d) / (6.0 * s)) if s > 0 else math.inf
    return trace_bound, threshold


class AverageCaseConstants(NamedTuple):
    fraction_bound: float
    n_sufficient: float
    vacuous: bool


def average_case_constants(d: int, epsilon: float) -> AverageCaseConstants:
    """Constants of the average-case result.

    fraction_bound = exp(-(d-2)/18) + 2 exp(-d^2/(50(d-2))) bounds the
    fraction of arc-confined CUE channels that the random-state test cannot
    certify with n_sufficient = 217 e^24 ln(3) / s^2 queries.  The fraction
    may exceed 1 at small d; it is reported raw with the vacuous flag set.
    """
    if d < 4:
        raise ValueError("average-case constants require d >= 4")
    if not 0.0 < epsilon < 0.5:
        raise ValueError("average-case constants require epsilon in (0, 1/2)")
    fraction = math.exp(-(d - 2) / 18.0) + 2.0 * math.exp(-(d**2) / (50.0 * (d - 2)))
    s = s_of_eps(epsilon)
    n_sufficient = 217.0 * math.exp(24.0) * math.log(3.0) / s**2
    return AverageCaseConstants(fraction, n_sufficient, fraction >= 1.0)


def overlap_tail_bound(d: int, epsilon: float, delta: float) -> float:
    """Pr_psi[|<psi|U^dag|psi>| > 1 - delta] <= 8 d delta / eps^2, clamped to [0, 1]."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    return min(1.0, 8.0 * d * delta / epsilon**2)


def x_first_moment_floor(s: float, d: int) -> float:
    """Lower bound -s^2/d on the Haar average of the overlap statistic X."""
    return -(s**2) / d


def x_second_moment_bound(s: float, d: int, f: float, quartic: bool = False) -> float:
    """Upper bound on the Haar average of X^2.

    6 s^2 (f+1)/d^2 + 72 s^k (f^2+1)/d^4 with k = 3 by default; the cubic
    variant dominates the quartic one for s < 1, so tests against it hold
    under either reading of the exponent.
    """
    k = 4 if quartic else 3
    return 6.0 * s**2 * (f + 1.0) / d**2 + 72.0 * s**k * (f**2 + 1.0) / d**4


# ---------------------------------------------------------------------------
# Haar moments and the overlap statistic


def haar_moment_operator(d: int, n: int) -> np.ndarray:
    """E(|psi><psi|^{(x) n}) = sum_sigma F_sigma / (d (d+1) ... (d+n-1)).

    F_sigma permutes the n tensor factors; the result is the projector onto
    the symmetric subspace scaled to trace one.
    """
    if n < 1 or n > 4:
        raise ValueError("moment order limited to 1 <= n <= 4")
    dim = d**n
    if dim > 4096:
        raise ValueError(f"tensor dimension {dim} exceeds the 4096 cap")
    total = np.zeros((dim, dim))
    idx = np.arange(dim)
    digits = np.empty((n, dim), dtype=np.int64)
    rem = idx.copy()
    for k in range(n - 1, -1, -1):
        digits[k] = rem % d
        rem //= d
    for sigma in permutations(range(n)):
        # F_sigma |i_1 ... i_n> = |i_{sigma^-1(1)} ... i_{sigma^-1(n)}>
        target = np.zeros(dim, dtype=np.int64)
        for out_slot in range(n):
            target = target * d + digits[sigma[out_slot]]
        total[target, idx] += 1.0
    norm = 1.0
    for k in range(n):
        norm *= d + k
    return total / norm


def f_ratio(E, rho, d: int, d_anc: int) -> float:
    """tr(tr_S(E) tr_S(rho)) / tr(E rho) for operators on system (x) ancilla."""
    Em = as_complex_matrix(E)
    Rm = as_complex_matrix(rho)
    denom = np.trace(Em @ Rm).real
    if abs(denom) < 1e-300:
        raise ValueError("tr(E rho) = 0: ratio undefined")
    num = np.trace(partial_trace_system(Em, d, d_anc) @ partial_trace_system(Rm, d, d_anc)).real
    return float(num / denom)


def _x_statistic_terms(E, rho, d: int, d_anc: int):
    """Precompute the psi-independent pieces of the overlap statistic."""
    Em = as_complex_matrix(E)
    Rm = as_complex_matrix(rho)
    denom = np.trace(Em @ Rm).real
    if abs(denom) < 1e-300:
        raise ValueError("tr(E rho) = 0: statistic undefined")
    ER = (Em @ Rm).reshape(d, d_anc, d, d_anc)
    RE = (Rm @ Em).reshape(d, d_anc, d, d_anc)
    K1 = np.einsum("ikjk->ij", ER)  # tr_anc(E rho)
    K2 = np.einsum("ikjk->ij", RE)  # tr_anc(rho E)
    return Em.reshape(d, d_anc, d, d_anc), Rm.reshape(d, d_anc, d, d_anc), K1, K2, denom


def x_statistic(E, rho, psi, s: float, d: int, d_anc: int) -> float:
    """Relative response of one measurement round to a single-basis rotation.

    X = tr(E (U_psi (x) I) rho (U_psi (x) I)^dag) / tr(E rho) - 1 with
    U_psi = I + (e^{is} - 1)|psi><psi|; always >= -1.
    """
    return float(x_statistic_batch(E, rho, np.asarray(psi, dtype=complex)[None, :], s, d, d_anc)[0])


def x_statistic_batch(E, rho, psis, s: float, d: int, d_anc: int) -> np.ndarray:
    """Vectorized x_statistic over rows of psis (shape (m, d))."""
    E4, R4, K1, K2, denom = _x_statistic_terms(E, rho, d, d_anc)
    psis = np.asarray(psis, dtype=complex)
    phase = np.exp(1j * s)
    # tr(E rho I_psi) = <psi| tr_anc(E rho) |psi>, likewise for rho E
    t1 = np.einsum("mi,ij,mj->m", psis.conj(), K1, psis)
    t2 = np.einsum("mi,ij,mj->m", psis.conj(), K2, psis)
    # tr(E I_psi rho I_psi) = tr(E_psi rho_psi) over the ancilla factor
    E_psi = np.einsum("mi,ikjl,mj->mkl", psis.conj(), E4, psis)
    R_psi = np.einsum("mi,ikjl,mj->mkl", psis.conj(), R4, psis)
    t3 = np.einsum("mkl,mlk->m", E_psi, R_psi)
    num = (phase.conjugate() - 1.0) * t1 + (phase - 1.0) * t2 + (2.0 - 2.0 * math.cos(s)) * t3
    return (num.real) / denom
