"""Dense complex helpers shared by the algebra and module layers.

All functions accept zero-sized arrays; numpy's LAPACK wrappers already do,
but the spectral norm of an empty matrix has to be special-cased.
"""

from __future__ import annotations

import numpy as np

EPS = np.finfo(float).eps
# band, in decades, around a cutoff inside which a decision is reported marginal
MARGINAL_DECADES = 2.0


def as_matrix(data, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    a = np.asarray(data, dtype=complex)
    if a.ndim != 2:
        if a.size == 0 and rows is not None and cols is not None:
            return np.zeros((rows, cols), dtype=complex)
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    return a


def frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def spectral_norm(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.linalg.svd(a, compute_uv=False)[0])


def hermitian_defect(a: np.ndarray) -> float:
    return spectral_norm(a - a.conj().T)


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def column_basis(a: np.ndarray, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the column space keeping singular values > cutoff.

    Returns the basis and the full list of singular values.
    """
    rows = a.shape[0]
    if a.size == 0:
        return np.zeros((rows, 0), dtype=complex), np.zeros(0)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    r = int(np.sum(s > cutoff))
    return u[:, :r].copy(), s


def null_basis(a: np.ndarray, cutoff: float) -> np.ndarray:
    """Orthonormal basis of the (numerical) kernel of ``a``."""
    cols = a.shape[1]
    if a.shape[0] == 0 or cols == 0:
        return np.eye(cols, dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    r = int(np.sum(s > cutoff))
    return vh[r:].conj().T.copy()


def complement_basis(basis: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(basis)."""
    q, r = basis.shape
    if r == 0:
        return np.eye(q, dtype=complex)
    if q == 0:
        return np.zeros((0, 0), dtype=complex)
    u, _, _ = np.linalg.svd(basis, full_matrices=True)
    return u[:, r:].copy()


def pinv(a: np.ndarray, cutoff: float) -> np.ndarray:
    """Moore-Penrose inverse with singular values <= cutoff treated as zero."""
    m, n = a.shape
    if a.size == 0:
        return np.zeros((n, m), dtype=complex)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    keep = s > cutoff
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * inv) @ u.conj().T


def projector(basis: np.ndarray) -> np.ndarray:
    return basis @ basis.conj().T


def eigh_sym(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of the Hermitian part of ``a`` (ascending)."""
    return np.linalg.eigh(hermitian_part(a))


def is_marginal(value: float, threshold: float) -> bool:
    """True when ``value`` lies within MARGINAL_DECADES of ``threshold``."""
    if value <= 0 or threshold <= 0:
        return False
    return abs(np.log10(value) - np.log10(threshold)) < MARGINAL_DECADES


def numerical_floor(dim: int, scale: float) -> float:
    """Backward-error floor of a dense Hermitian eigensolve of size ``dim``."""
    return 64.0 * max(dim, 1) * EPS * scale
