"""Dense real linear algebra shared by every module.

Symmetric eigendecompositions run through the cyclic-Jacobi kernel (compiled
or pure backend); singular values are obtained from the eigendecomposition
of A^T A with negative clamping, which is adequate at the problem sizes this
package targets.
"""

import numpy as np

from romaq import backend

NORM_KINDS = ("frobenius", "l1", "linf", "spectral", "nuclear")

_DUAL = {
    "frobenius": "frobenius",
    "l1": "linf",
    "linf": "l1",
    "nuclear": "spectral",
    "spectral": "nuclear",
}


class DimensionError(ValueError):
    """Inconsistent matrix/vector dimensions."""


def check_symmetric(a, tol=1e-12):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError("expected a square matrix, got shape %s" % (a.shape,))
    if not np.allclose(a, a.T, atol=tol * max(1.0, np.abs(a).max())):
        raise DimensionError("matrix is not symmetric")
    return 0.5 * (a + a.T)


def svec(a):
    """Vectorize a symmetric matrix with sqrt(2)-scaled off-diagonals.

    The scaling makes trace inner products plain dot products:
    <A, B> = svec(A)^T svec(B).
    """
    a = check_symmetric(a)
    return backend.svec_batch(a)


def smat(v):
    """Inverse of :func:`svec`."""
    v = np.asarray(v, dtype=float).ravel()
    p = round_side(v.size)
    return backend.smat_batch(v, p)[0]


def round_side(d):
    p = int((np.sqrt(8 * d + 1) - 1) / 2 + 0.5)
    if p * (p + 1) // 2 != d:
        raise DimensionError("length %d is not a triangular number" % d)
    return p


def svec_length(p):
    return backend.svec_len(p)


def dual_norm_kind(kind):
    if kind not in _DUAL:
        raise ValueError("unknown norm kind %r" % (kind,))
    return _DUAL[kind]


def singular_values(a):
    """Descending singular values via eigen_sym of the Gram matrix."""
    a = np.asarray(a, dtype=float)
    g = a.T @ a if a.shape[0] >= a.shape[1] else a @ a.T
    w, _ = backend.jacobi_eigh(0.5 * (g + g.T))
    return np.sqrt(np.clip(w, 0.0, None))


def mat_norm(a, kind):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if kind == "frobenius":
        return float(np.linalg.norm(a))
    if kind == "l1":
        return float(np.abs(a).sum())
    if kind == "linf":
        return float(np.abs(a).max()) if a.size else 0.0
    if kind == "spectral":
        s = singular_values(a)
        return float(s[0]) if s.size else 0.0
    if kind == "nuclear":
        return float(singular_values(a).sum())
    raise ValueError("unknown norm kind %r" % (kind,))


def eigen_sym(a):
    """Eigenvalues (descending) and eigenvector columns of a symmetric matrix."""
    return backend.jacobi_eigh(check_symmetric(a))


def min_eig(a):
    w, _ = eigen_sym(a)
    return float(w[-1])


def cholesky(a):
    """Upper-triangular R with R^T R = A for positive definite A."""
    return backend.chol_upper(check_symmetric(a))


def pseudo_inverse(a, rank_tol=1e-10):
    """Moore-Penrose inverse of a symmetric matrix with rank reporting.

    Eigenvalues of magnitude below ``rank_tol`` times the largest are
    treated as zero.
    """
    a = check_symmetric(a)
    w, v = backend.jacobi_eigh(a)
    scale = np.abs(w).max() if w.size else 0.0
    if scale == 0.0:
        return np.zeros_like(a), 0
    keep = np.abs(w) > rank_tol * scale
    winv = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)
    pinv = (v * winv) @ v.T
    return 0.5 * (pinv + pinv.T), int(keep.sum())


def psd_factor(a, rank_tol=1e-10):
    """F with F^T F = A for symmetric PSD A (eigen based, rank revealing)."""
    a = check_symmetric(a)
    w, v = backend.jacobi_eigh(a)
    scale = max(np.abs(w).max(), 1.0) if w.size else 1.0
    if np.any(w < -1e-8 * scale):
        raise np.linalg.LinAlgError("matrix is not positive semidefinite")
    w = np.clip(w, 0.0, None)
    keep = w > rank_tol * scale
    f = (np.sqrt(w[keep])[:, None] * v[:, keep].T)
    return f


def sym_sqrt(a):
    """Symmetric square root of a symmetric PSD matrix."""
    a = check_symmetric(a)
    w, v = backend.jacobi_eigh(a)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T
