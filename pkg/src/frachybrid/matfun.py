"""Dense linear-algebra kernels used by the stability tests.

Eigendecomposition, principal fractional matrix powers, the transform
``-(-A)**(1/(2-alpha))``, complex determinants, continuous phase tracking
and dense Lyapunov solves.  All functions are pure.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

COND_THRESHOLD = 1e8
BRANCH_TOL = 1e-8
LYAPUNOV_MAX_DIM = 64


class MatrixFunctionError(ValueError):
    """Base class for matrix-function failures."""


class DefectiveMatrixError(MatrixFunctionError):
    pass


class BranchCutError(MatrixFunctionError):
    pass


class EigenDecompositionError(MatrixFunctionError):
    pass


class GridTooCoarseError(ValueError):
    """Consecutive phase increments too large to unwrap reliably.

    ``indices`` lists k such that the step from sample k-1 to k exceeded
    the allowed increment.
    """

    def __init__(self, indices, max_step):
        self.indices = list(indices)
        self.max_step = max_step
        super().__init__(
            f"phase increment above {max_step:.4g} rad at {len(self.indices)} "
            f"sample(s); refine the grid")


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray
    vector_condition: float


def _square(A, name="matrix"):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"{name} must be square and non-empty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def complex_eigendecomposition(A):
    """Right eigenpairs of a square matrix with a residual check.

    Raises
    ------
    EigenDecompositionError
        If LAPACK fails or any pair has relative residual >= 1e-8.
    """
    A = _square(A)
    try:
        w, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise EigenDecompositionError(str(exc)) from exc
    w = w.astype(complex)
    V = V.astype(complex)
    scale = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
    resid = np.linalg.norm(A @ V - V * w, axis=0) / scale
    if np.any(resid >= 1e-8):
        raise EigenDecompositionError(
            f"eigenpair residual {resid.max():.3g} exceeds 1e-8")
    cond = float(np.linalg.cond(V))
    return EigenDecomposition(w, V, cond)


def principal_matrix_power(A, p, cond_threshold=COND_THRESHOLD, branch_tol=BRANCH_TOL):
    """``V diag(lambda_i**p) V^-1`` on the principal branch Arg in (-pi, pi).

    Only diagonalizable matrices are accepted; eigenvalues within
    ``branch_tol`` radians of the negative real axis are rejected because
    the principal power is discontinuous there.
    """
    A = _square(A)
    eig = complex_eigendecomposition(A)
    if not np.isfinite(eig.vector_condition) or eig.vector_condition > cond_threshold:
        raise DefectiveMatrixError(
            f"eigenvector condition {eig.vector_condition:.3g} exceeds {cond_threshold:.3g}")
    lam = eig.eigenvalues
    nonzero = np.abs(lam) > 0
    if np.any(nonzero & (np.pi - np.abs(np.angle(lam)) < branch_tol)):
        raise BranchCutError("eigenvalue on the negative real axis branch cut")
    if p < 0 and not np.all(nonzero):
        raise MatrixFunctionError("negative power of a singular matrix")
    powered = np.zeros_like(lam)
    powered[nonzero] = np.exp(p * (np.log(np.abs(lam[nonzero])) + 1j * np.angle(lam[nonzero])))
    if p == 0:
        powered[:] = 1.0
    V = eig.right_eigenvectors
    return (V * powered) @ np.linalg.inv(V)


def calA_transform(A, alpha):
    """``-(-A)**(1/(2-alpha))`` as a real matrix.

    For real A the spectrum is conjugate-symmetric so the result is real up
    to rounding; imaginary residue above ``1e-8 * ||A||`` is an error.
    """
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    A = _square(np.asarray(A, dtype=float))
    M = principal_matrix_power(-A, 1.0 / (2.0 - alpha))
    residue = np.abs(M.imag).max()
    if residue >= 1e-8 * max(np.linalg.norm(A, 2), 1.0):
        raise MatrixFunctionError(f"imaginary residue {residue:.3g} in transform")
    return -M.real


def complex_logdet(M):
    """(unit phase, log|det M|); the phase is 0 for singular M."""
    M = _square(M)
    return kernels.complex_logdet(M)


def complex_determinant(M):
    unit, logabs = complex_logdet(M)
    if unit == 0:
        return 0j
    return unit * np.exp(logabs)


def unwrapped_phase(values, max_step=np.pi / 2):
    """Continuous argument of a sampled complex curve.

    ``out[k] = out[k-1] + Arg(values[k] / values[k-1])``, starting from the
    principal argument of ``values[0]``.  Increments of magnitude above
    ``max_step`` raise ``GridTooCoarseError``; pass ``max_step=None`` to
    accept them.
    """
    z = np.asarray(values, dtype=complex)
    if z.ndim != 1 or z.size == 0:
        raise ValueError("need a non-empty 1-D sequence")
    if np.any(z == 0):
        raise ZeroDivisionError("zero value in phase sequence")
    steps = np.angle(z[1:] / z[:-1])
    if max_step is not None:
        bad = np.nonzero(np.abs(steps) > max_step)[0]
        if bad.size:
            raise GridTooCoarseError(bad + 1, max_step)
    out = np.empty(z.size)
    out[0] = np.angle(z[0])
    np.cumsum(steps, out=out[1:])
    out[1:] += out[0]
    return out


def is_positive_definite(P):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        return False
    norm = np.linalg.norm(P)
    if norm == 0 or np.linalg.norm(P - P.T) >= 1e-9 * norm:
        return False
    return bool(np.linalg.eigvalsh((P + P.T) / 2).min() > 0)


def solve_lyapunov(A, Q):
    """Solve ``A^T P + P A = -Q`` through the stacked Kronecker system.

    Capped at n = 64; A must be Hurwitz.
    """
    A = _square(np.asarray(A, dtype=float), "A")
    Q = _square(np.asarray(Q, dtype=float), "Q")
    n = A.shape[0]
    if Q.shape != A.shape:
        raise ValueError("A and Q must have the same shape")
    if n > LYAPUNOV_MAX_DIM:
        raise ValueError(f"dimension {n} exceeds cap {LYAPUNOV_MAX_DIM}")
    if np.linalg.eigvals(A).real.max() >= 0:
        raise MatrixFunctionError("A is not Hurwitz")
    eye = np.eye(n)
    # row-major vec: vec(A^T P) = (A^T kron I) vec P, vec(P A) = (I kron A^T) vec P
    K = np.kron(A.T, eye) + np.kron(eye, A.T)
    P = np.linalg.solve(K, -Q.reshape(-1)).reshape(n, n)
    return (P + P.T) / 2
