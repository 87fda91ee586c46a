"""Independent oracles used to freeze expected values.

Nothing here calls into douglaskit; each oracle recomputes its quantity by a
route that does not share code with the path under test.
"""

from __future__ import annotations

import math

import numpy as np


def mul2(a, b):
    """Schoolbook 2x2 product."""
    return [[a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]]]


def eig2_sym(a, b, d):
    """Eigenvalues of [[a, b], [b, d]] from the characteristic polynomial."""
    tr, det = a + d, a * d - b * b
    disc = math.sqrt(tr * tr / 4 - det)
    return tr / 2 + disc, tr / 2 - disc


def top_eigvec2_sym(a, b, d):
    lam = eig2_sym(a, b, d)[0]
    v = np.array([b, lam - a]) if b != 0 else (np.array([1.0, 0.0]) if a >= d else np.array([0.0, 1.0]))
    return lam, v / np.linalg.norm(v)


def singular_values_via_gram(m):
    """sqrt of eigenvalues of m^H m by the power-free characteristic route."""
    g = np.asarray(m).conj().T @ np.asarray(m)
    return np.sqrt(np.clip(np.sort(np.linalg.eigvals(g).real)[::-1], 0, None))


def gram_schmidt(cols, tol=1e-12):
    basis = []
    for c in np.asarray(cols, dtype=complex).T:
        v = c.copy()
        for b in basis:
            v = v - (b.conj() @ v) * b
        nv = np.linalg.norm(v)
        if nv > tol:
            basis.append(v / nv)
    return np.array(basis).T if basis else np.zeros((np.asarray(cols).shape[0], 0))


def lstsq_residual(a, b):
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    return float(np.linalg.norm(a @ x - b))


def psd_by_cholesky(m, shift):
    """PSD test of a Hermitian matrix via Cholesky of m + shift*I."""
    try:
        np.linalg.cholesky(m + shift * np.eye(m.shape[0]))
        return True
    except np.linalg.LinAlgError:
        return False


def lambda_grid(c, b, lo, hi, steps):
    """Smallest grid lambda with lambda*b - c PSD (Cholesky-based test)."""
    for lam in np.linspace(lo, hi, steps):
        if psd_by_cholesky(lam * b - c, 1e-14):
            return lam
    return None
