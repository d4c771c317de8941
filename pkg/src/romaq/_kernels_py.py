"""Pure-NumPy implementations of the numerical kernels.

These are the fallback versions of the routines in ``romaq._core``; the
compiled extension implements the same contracts with tight C loops.
Dispatch happens in :mod:`romaq.backend`.
"""

import numpy as np

_SQRT2 = np.sqrt(2.0)

# cache of (iu, ju, scale) index triples per matrix side
_SVEC_CACHE = {}


def svec_indices(p):
    """Row-major upper-triangle indices and svec scaling for side ``p``."""
    try:
        return _SVEC_CACHE[p]
    except KeyError:
        iu, ju = np.triu_indices(p)
        scale = np.where(iu == ju, 1.0, _SQRT2)
        _SVEC_CACHE[p] = (iu, ju, scale)
        return _SVEC_CACHE[p]


def svec_len(p):
    return p * (p + 1) // 2


def smat_batch(cols, p):
    """Map svec columns (d, k) to a stack of symmetric matrices (k, p, p)."""
    cols = np.ascontiguousarray(cols, dtype=float)
    if cols.ndim == 1:
        cols = cols[:, None]
    iu, ju, scale = svec_indices(p)
    k = cols.shape[1]
    vals = cols.T / scale
    out = np.zeros((k, p, p))
    out[:, iu, ju] = vals
    out[:, ju, iu] = vals
    return out


def svec_batch(mats):
    """Map a stack of symmetric matrices (k, p, p) to svec columns (d, k)."""
    mats = np.asarray(mats, dtype=float)
    squeeze = mats.ndim == 2
    if squeeze:
        mats = mats[None]
    p = mats.shape[-1]
    iu, ju, scale = svec_indices(p)
    cols = (mats[:, iu, ju] * scale).T
    return cols[:, 0] if squeeze else cols


def jacobi_eigh(a, tol=1e-13, max_sweeps=60):
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and the matching eigenvector
    columns.  Deterministic: fixed sweep order, no pivot search.
    """
    a = np.array(a, dtype=float)
    p = a.shape[0]
    v = np.eye(p)
    if p == 1:
        return a.ravel().copy(), v
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros(p), v
    thresh = tol * norm
    for _ in range(max_sweeps):
        off = np.sqrt(max(0.0, np.sum(a * a) - np.sum(np.diag(a) ** 2)))
        if off <= thresh:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i, j]
                if abs(aij) <= 0.25 * thresh / p:
                    continue
                theta = 0.5 * (a[j, j] - a[i, i]) / aij
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                col_i = a[:, i].copy()
                col_j = a[:, j].copy()
                a[:, i] = c * col_i - s * col_j
                a[:, j] = s * col_i + c * col_j
                row_i = a[i, :].copy()
                row_j = a[j, :].copy()
                a[i, :] = c * row_i - s * row_j
                a[j, :] = s * row_i + c * row_j
                a[i, j] = 0.0
                a[j, i] = 0.0
                vc_i = v[:, i].copy()
                vc_j = v[:, j].copy()
                v[:, i] = c * vc_i - s * vc_j
                v[:, j] = s * vc_i + c * vc_j
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def chol_upper(a):
    """Upper-triangular R with R^T R = A; raises LinAlgError if not PD."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    r = np.zeros((n, n))
    for j in range(n):
        d = a[j, j] - r[:j, j] @ r[:j, j]
        if d <= 0.0 or not np.isfinite(d):
            raise np.linalg.LinAlgError(
                "matrix is not positive definite (pivot %d)" % j
            )
        r[j, j] = np.sqrt(d)
        if j + 1 < n:
            r[j, j + 1 :] = (a[j, j + 1 :] - r[:j, j] @ r[:j, j + 1 :]) / r[j, j]
    return r


def conj_svec_op(m):
    """Dense matrix K with K svec(U) = svec(M^T U M) for symmetric U."""
    m = np.asarray(m, dtype=float)
    p = m.shape[0]
    d = svec_len(p)
    iu, ju, scale = svec_indices(p)
    rows = np.arange(d)
    if p <= 64:
        lift = np.zeros((p * p, d))
        lift[iu * p + ju, rows] = 1.0 / scale
        lift[ju * p + iu, rows] = 1.0 / scale
        picker = np.zeros((d, p * p))
        picker[rows, iu * p + ju] = scale
        return picker @ np.kron(m.T, m.T) @ lift
    return conj_svec_apply(m, np.eye(d))


def conj_svec_apply(m, cols):
    """Apply svec(U) -> svec(M^T U M) columnwise; cols has shape (d, k)."""
    m = np.asarray(m, dtype=float)
    p = m.shape[0]
    single = np.asarray(cols).ndim == 1
    mats = smat_batch(cols, p)
    out = np.matmul(np.matmul(m.T, mats), m)
    res = svec_batch(out)
    return res[:, 0] if single else res
