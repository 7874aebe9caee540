"""Dense complex linear algebra for small unitary channels.

States are 1-d complex arrays, operators are square complex arrays.  All
composite-system operations use the convention system (x) ancilla, i.e. the
system index is the slow (outer) index of the flattened tensor product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

UNITARY_ATOL = 1e-10
STATE_ATOL = 1e-10


def as_complex_matrix(M) -> np.ndarray:
    """Coerce to a 2-d complex array, rejecting non-finite entries."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains NaN or Inf entries")
    return A


def assert_unitary(U, atol: float = UNITARY_ATOL) -> np.ndarray:
    """Validate ||U^dag U - I||_max <= atol and return U as a complex array."""
    A = as_complex_matrix(U)
    n, m = A.shape
    if n != m:
        raise ValueError(f"unitary must be square, got shape {A.shape}")
    defect = np.max(np.abs(A.conj().T @ A - np.eye(n)))
    if defect > atol:
        raise ValueError(f"matrix is not unitary: ||U^dag U - I||_max = {defect:.3e} > {atol:.1e}")
    return A


def assert_state(v, atol: float = STATE_ATOL) -> np.ndarray:
    """Validate that v is a normalized state vector and return it as complex."""
    a = np.asarray(v, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise ValueError("state vector contains NaN or Inf entries")
    nrm = np.linalg.norm(a)
    if abs(nrm - 1.0) > atol:
        raise ValueError(f"state vector is not normalized: ||v|| = {nrm!r}")
    return a


def wrap_angle(theta):
    """Wrap angles to (-pi, pi]."""
    t = np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi) - np.pi
    # mod maps pi -> -pi; put the branch point back on +pi
    return np.where(t == -np.pi, np.pi, t)


@dataclass(frozen=True)
class EigenangleSet:
    """Multiset of eigenangles theta in (-pi, pi] of a d-dimensional unitary."""

    angles: np.ndarray = field()

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float).reshape(-1)
        if a.size == 0:
            raise ValueError("eigenangle set must be non-empty")
        if not np.all(np.isfinite(a)):
            raise ValueError("eigenangles contain NaN or Inf")
        if np.any(a <= -np.pi) or np.any(a > np.pi):
            raise ValueError("eigenangles must lie in (-pi, pi]")
        object.__setattr__(self, "angles", a)

    @property
    def dim(self) -> int:
        return self.angles.size

    def sorted(self) -> np.ndarray:
        return np.sort(self.angles, kind="stable")


def _angles_of(angles) -> np.ndarray:
    if isinstance(angles, EigenangleSet):
        return angles.angles
    # plain arrays are wrapped into (-pi, pi]; circular quantities don't care
    return EigenangleSet(wrap_angle(angles)).angles


def eigen_decomposition(U, atol: float = UNITARY_ATOL) -> tuple[EigenangleSet, np.ndarray]:
    """Eigenangles of a unitary together with an orthonormal eigenbasis.

    Uses the complex Schur form: for a normal matrix the Schur factor is
    diagonal up to roundoff and the Schur basis is exactly orthonormal, which
    keeps the spectrum/basis pair usable up to d ~ 512 even with clustered
    eigenvalues.  Returns (angles, V) with U ~ V diag(e^{i theta}) V^dag.
    """
    A = assert_unitary(U, atol)
    T, Z = scipy.linalg.schur(A, output="complex")
    theta = np.angle(np.diagonal(T))
    return EigenangleSet(wrap_angle(theta)), Z


def eigenangles(U, atol: float = UNITARY_ATOL) -> EigenangleSet:
    """Arguments of the eigenvalues of a unitary, multiplicities preserved."""
    angles, _ = eigen_decomposition(U, atol)
    return angles


def unitary_from_spectrum(angles, basis) -> np.ndarray:
    """Build V diag(e^{i theta}) V^dag from eigenangles and a unitary basis."""
    a = _angles_of(angles)
    V = assert_unitary(basis)
    if a.size != V.shape[0]:
        raise ValueError(f"got {a.size} angles for a basis of dimension {V.shape[0]}")
    return (V * np.exp(1j * a)) @ V.conj().T


def shortest_covering_arc(angles) -> float:
    """Length of the shortest circular arc containing all angles.

    Equals 2*pi minus the largest gap between circularly consecutive sorted
    angles; lies in [0, 2*pi).
    """
    a = np.sort(_angles_of(angles))
    if a.size == 1:
        return 0.0
    gaps = np.diff(a)
    wrap = 2 * np.pi - (a[-1] - a[0])
    return float(2 * np.pi - max(gaps.max(initial=0.0), wrap))


def tensor(A, B) -> np.ndarray:
    """Kronecker product, system-major: (A (x) B)[ik, jl] = A[i,j] B[k,l]."""
    return np.kron(as_complex_matrix(A), as_complex_matrix(B))


def partial_trace_system(M, d: int, d_anc: int) -> np.ndarray:
    """Trace out the system factor of an operator on system (x) ancilla."""
    A = as_complex_matrix(M)
    if A.shape != (d * d_anc, d * d_anc):
        raise ValueError(f"operator of shape {A.shape} does not factor as ({d}*{d_anc})^2")
    return np.einsum("ikil->kl", A.reshape(d, d_anc, d, d_anc))
