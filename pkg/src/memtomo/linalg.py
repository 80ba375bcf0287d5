"""Dense Hermitian matrix primitives for 2x2 states and 4x4 process matrices.

Everything here is a pure function of its inputs; returned arrays are fresh
allocations that callers may mutate freely.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimMismatchError, NoConvergenceError, NotHermitianError, NotPSDError

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-9

# Row-major slots of the lower-triangular factor T used by param_to_psd:
# four real diagonal entries first, then complex sub-diagonals by descending
# distance from the diagonal (the usual T†T positivity parametrization).
_TRIL_ROWS = np.array([1, 2, 3, 2, 3, 3])
_TRIL_COLS = np.array([0, 1, 2, 0, 1, 0])


class EigenDecomposition(NamedTuple):
    """Eigenvalues (ascending) and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest entrywise deviation of ``m`` from its conjugate transpose."""
    m = np.asarray(m, dtype=complex)
    return float(np.max(np.abs(m - m.conj().T)))


def require_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimMismatchError(f"expected a square matrix, got shape {m.shape}")
    defect = hermiticity_defect(m)
    if defect > tol:
        raise NotHermitianError(f"Hermiticity defect {defect:.3e} exceeds tolerance {tol:.1e}")
    return m


def hermitian_eig(m: np.ndarray, tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues sorted ascending.

    Satisfies V diag(w) V† = m and V†V = I to 1e-10 for well-scaled inputs.

    Raises:
        NotHermitianError: Hermiticity defect above ``tol``.
        NoConvergenceError: the underlying iterative solver failed.
    """
    m = require_hermitian(m, tol)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure is rare
        raise NoConvergenceError(f"eigenvalue iteration failed: {exc}") from exc
    return EigenDecomposition(eigenvalues=w, eigenvectors=v)


def psd_sqrt(m: np.ndarray, tol_psd: float = PSD_TOL) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix.

    Eigenvalues in [-tol_psd, 0) are treated as round-off and clamped to zero.

    Raises:
        NotPSDError: an eigenvalue lies below ``-tol_psd``.
    """
    w, v = hermitian_eig(m)
    if w[0] < -tol_psd:
        raise NotPSDError(f"minimum eigenvalue {w[0]:.3e} below -{tol_psd:.1e}")
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    return 0.5 * (root + root.conj().T)


def frobenius_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius norm of a - b."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def param_to_psd(t: np.ndarray) -> np.ndarray:
    """Map 16 real parameters to a 4x4 Hermitian PSD matrix T†T.

    T is lower triangular with real diagonal t[0:4] and complex off-diagonal
    entries built from t[4:16] pairwise; the map is surjective onto PSD
    matrices, which makes it the natural search space for likelihood fits.
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (16,):
        raise DimMismatchError(f"expected 16 parameters, got shape {t.shape}")
    tri = np.zeros((4, 4), dtype=complex)
    tri[np.diag_indices(4)] = t[:4]
    tri[_TRIL_ROWS, _TRIL_COLS] = t[4::2] + 1j * t[5::2]
    return tri.conj().T @ tri


def params_from_psd(m: np.ndarray, tol_psd: float = PSD_TOL) -> np.ndarray:
    """Invert param_to_psd: 16 real parameters t with param_to_psd(t) ≈ m.

    Eigenvalues in [-tol_psd, 0) are clamped to zero before factoring, so a
    slightly unphysical matrix (e.g. a noisy linear-inversion estimate after
    projection) still yields a usable parameter vector.
    """
    w, v = hermitian_eig(m)
    if w[0] < -tol_psd:
        raise NotPSDError(f"minimum eigenvalue {w[0]:.3e} below -{tol_psd:.1e}")
    clamped = (v * np.clip(w, 0.0, None)) @ v.conj().T
    # Factor as T†T with T lower triangular: flip-permute, Cholesky, flip back.
    flip = np.arange(3, -1, -1)
    jitter = max(1e-14, 1e-14 * float(np.abs(np.trace(clamped))))
    flipped = clamped[np.ix_(flip, flip)]
    for _ in range(40):
        try:
            low = np.linalg.cholesky(flipped + jitter * np.eye(4))
            break
        except np.linalg.LinAlgError:
            jitter *= 10.0
    else:  # pragma: no cover - jitter escalation always terminates in practice
        raise NotPSDError("could not factor matrix as T†T")
    tri = low[np.ix_(flip, flip)].conj().T  # lower triangular, real positive diagonal
    t = np.empty(16)
    t[:4] = tri[np.diag_indices(4)].real
    off = tri[_TRIL_ROWS, _TRIL_COLS]
    t[4::2] = off.real
    t[5::2] = off.imag
    return t
