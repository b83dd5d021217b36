"""Dense complex linear algebra for small operator matrices.

All matrices are numpy ``complex128`` arrays in row-major layout. The
Hermitian eigensolver is a cyclic Jacobi iteration: dimensions in this
package never exceed a few dozen, and Jacobi converges unconditionally for
Hermitian input, which keeps the concurrence and positivity checks free of
library-specific behavior. Eigenvalues are always returned in descending
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NumericsError(ValueError):
    """Raised on dimension mismatches, non-Hermitian or non-PSD input."""


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise NumericsError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def kron(a, b) -> np.ndarray:
    """Kronecker product of two matrices."""
    return np.kron(as_matrix(a), as_matrix(b))


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition with eigenvalues sorted in descending order.

    ``eigenvectors`` holds the orthonormal eigenvectors as columns, so
    ``eigenvectors @ diag(eigenvalues) @ eigenvectors.conj().T``
    reconstructs the input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def eigh(m, tol: float = 1e-12, max_sweeps: int = 60) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    The input is symmetrized as (M + M†)/2 before iterating; an input whose
    asymmetry exceeds ``1e-10`` relative to its magnitude is rejected.
    Iteration stops once the off-diagonal Frobenius norm falls below
    ``tol`` times the Frobenius norm of the input.
    """
    a = as_matrix(m)
    n, nc = a.shape
    if n != nc:
        raise NumericsError(f"eigh needs a square matrix, got {n}x{nc}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale > 0.0:
        asym = float(np.max(np.abs(a - dagger(a))))
        if asym > 1e-10 * max(1.0, scale):
            raise NumericsError(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    a = hermitize(a)
    v = np.eye(n, dtype=np.complex128)
    norm = float(np.linalg.norm(a))
    if norm == 0.0 or n == 1:
        w = np.real(np.diag(a)).copy()
        order = np.argsort(-w)
        return HermitianEig(w[order], v[:, order])

    target = tol * norm
    for _ in range(max_sweeps):
        if _off_norm(a) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (app - aqq) / (2.0 * mag)
                t = (1.0 if tau >= 0.0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # Unitary U: U[p,p]=U[q,q]=c, U[p,q]=-s*phase, U[q,p]=s*conj(phase)
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p + s * np.conj(phase) * col_q
                a[:, q] = -s * phase * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p + s * phase * row_q
                a[q, :] = -s * np.conj(phase) * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vcol_p = v[:, p].copy()
                vcol_q = v[:, q].copy()
                v[:, p] = c * vcol_p + s * np.conj(phase) * vcol_q
                v[:, q] = -s * phase * vcol_p + c * vcol_q
    else:
        raise NumericsError("Jacobi iteration failed to converge")

    w = np.real(np.diag(a)).copy()
    order = np.argsort(-w, kind="stable")
    return HermitianEig(w[order], v[:, order])


def eigh_values(m, tol: float = 1e-12) -> np.ndarray:
    """Descending eigenvalues of a Hermitian matrix."""
    return eigh(m, tol=tol).eigenvalues


def sqrtm_psd(m, reject: float = -1e-6, rank_floor: float = 0.0) -> np.ndarray:
    """Hermitian PSD square root via eigendecomposition.

    Eigenvalues in [``reject``, 0) are treated as integrator round-off and
    clamped to zero; anything below ``reject`` raises, since the input is
    then genuinely not positive semi-definite. ``rank_floor`` additionally
    zeroes eigenvalues below ``rank_floor * max(eigenvalue)``: near
    rank-deficient input, square-rooting a spurious 1e-13 eigenvalue would
    otherwise inject 3e-7 of phantom rank into the result.
    """
    dec = eigh(m)
    w = dec.eigenvalues
    if w.size and float(w.min()) < reject:
        raise NumericsError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    w = np.where(w < 0.0, 0.0, w)
    if rank_floor > 0.0 and w.size and float(w.max()) > 0.0:
        w = np.where(w < rank_floor * float(w.max()), 0.0, w)
    root = (dec.eigenvectors * np.sqrt(w)) @ dagger(dec.eigenvectors)
    return hermitize(root)
