"""Identity-testing of unitary channels with incoherent strategies.

The core primitive measures a channel's output against the Haar-random input
state that produced it: a single round passes (outcome 0) with probability
|<psi|U|psi>|^2, so the identity channel never fails a round, and for any
other channel the chance of passing all N rounds decays geometrically with
per-round pass probability p = (d + |tr U|^2) / (d (d+1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ensembles import PerturbationParams, haar_state
from .linalg import assert_state, assert_unitary, eigenangles, shortest_covering_arc

H0_IDENTITY = "H0_identity"
H1_FAR = "H1_far"


class UnreachableTargetError(ValueError):
    """The error curve never drops to the target (per-round pass probability 1)."""


@dataclass(frozen=True)
class Decision:
    verdict: str
    queries_used: int
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in (H0_IDENTITY, H1_FAR):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.queries_used < 0:
            raise ValueError("queries_used must be >= 0")


@dataclass(frozen=True)
class ErrorCurve:
    """Closed-form miss probability of the random-state test for one channel."""

    d: int
    epsilon: float
    trace_abs: float
    pass_prob: float
    points: np.ndarray  # (k, 2) array of (N, p_error)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if not 0.0 <= self.pass_prob <= 1.0:
            raise ValueError("pass_prob must be a probability")
        expected = self.pass_prob ** pts[:, 0]
        if np.any(np.abs(pts[:, 1] - expected) > 1e-12):
            raise ValueError("stored p_error values disagree with pass_prob^N")
        if np.any(np.diff(pts[:, 1]) > 1e-15):
            raise ValueError("p_error must be non-increasing in N")
        object.__setattr__(self, "points", pts)


def diamond_distance_to_identity(U) -> float:
    """Diamond distance D(E_U, E_I) = 2 sin(arc/2) from the eigenangle arc.

    arc is the shortest circular interval covering all eigenangles.  For
    arc > pi the channel holds an antipodal-or-worse eigenvalue pair and the
    distance saturates at 2.
    """
    arc = shortest_covering_arc(eigenangles(U))
    if arc >= np.pi:
        return 2.0
    return 2.0 * math.sin(arc / 2.0)


def per_query_pass_probability(U) -> float:
    """Probability (d + |tr U|^2)/(d(d+1)) that one random-state round passes."""
    A = assert_unitary(U)
    d = A.shape[0]
    return (d + abs(np.trace(A)) ** 2) / (d * (d + 1))


def pass_probability_from_angles(angles, d: int) -> float:
    """Same as per_query_pass_probability but from eigenangles only."""
    tr = np.abs(np.exp(1j * np.asarray(angles)).sum())
    return float((d + tr**2) / (d * (d + 1)))


def error_curve(U, Ns, eps: float) -> ErrorCurve:
    """Evaluate p_error(N) = p^N on the given query counts."""
    A = assert_unitary(U)
    p = per_query_pass_probability(A)
    Ns = np.asarray(Ns, dtype=float)
    # exp(N log p) avoids pow underflow warnings on huge N
    with np.errstate(divide="ignore"):
        perr = np.exp(Ns * np.log(p)) if p > 0 else np.where(Ns > 0, 0.0, 1.0)
    return ErrorCurve(
        d=A.shape[0],
        epsilon=eps,
        trace_abs=float(abs(np.trace(A))),
        pass_prob=p,
        points=np.column_stack([Ns, perr]),
    )


def queries_to_target(U, target: float) -> int:
    """Smallest N with p^N <= target, i.e. ceil(ln target / ln p)."""
    if not 0.0 < target < 1.0:
        raise ValueError("target must lie in (0, 1)")
    p = per_query_pass_probability(U)
    if p >= 1.0 - 1e-15:
        raise UnreachableTargetError(
            "per-query pass probability is 1; the miss probability never decays"
        )
    return max(1, math.ceil(math.log(target) / math.log(p)))


def simulate_incoherent(U, N: int, rng=None) -> Decision:
    """Monte-Carlo run of the random-state test.

    Each round draws a fresh Haar state psi and an outcome that is 0 with the
    exact conditional probability |<psi|U|psi>|^2 (statistically identical to
    simulating the projective measurement).  Stops at the first 1.
    """
    A = assert_unitary(U)
    if N < 1:
        raise ValueError("need N >= 1")
    g = np.random.default_rng(rng)
    d = A.shape[0]
    for k in range(1, N + 1):
        psi = haar_state(d, g)
        pr_pass = abs(psi.conj() @ (A @ psi)) ** 2
        if g.random() >= pr_pass:
            return Decision(H1_FAR, queries_used=k, detail={"first_rejection": k})
    return Decision(H0_IDENTITY, queries_used=N, detail={"rounds": N})


def hadamard_test_certify(U, psi, N: int, eps: float, rng=None) -> Decision:
    """Known-basis certifier from N ancilla measurements of the Hadamard test.

    Each shot returns 0 with probability (1 + Re<psi|U|psi>)/2.  The decision
    threshold sits halfway between the identity value 1 and cos(s), the
    on-basis value of an eps-perturbed single-basis rotation.
    """
    A = assert_unitary(U)
    v = assert_state(psi)
    if N < 1:
        raise ValueError("need N >= 1")
    g = np.random.default_rng(rng)
    re = (v.conj() @ (A @ v)).real
    zeros = int(np.count_nonzero(g.random(N) < (1.0 + re) / 2.0))
    estimate = 2.0 * zeros / N - 1.0
    s = PerturbationParams(eps).s
    threshold = (1.0 + math.cos(s)) / 2.0
    verdict = H0_IDENTITY if estimate > threshold else H1_FAR
    return Decision(verdict, queries_used=N, detail={"re_estimate": estimate, "threshold": threshold})
