# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels: Jacobi eigendecomposition, Cholesky,
and svec-space conjugation operators used by the cone scalings."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, hypot, sqrt

cnp.import_array()


def jacobi_eigh(a_in, double tol=1e-13, int max_sweeps=60):
    a = np.array(a_in, dtype=np.float64, order="C")
    cdef double[:, ::1] A = a
    cdef Py_ssize_t p = A.shape[0]
    v = np.eye(p)
    cdef double[:, ::1] V = v
    cdef Py_ssize_t i, j, k, sweep
    cdef double norm2 = 0.0, diag2, off, thresh, aij, theta, t, c, s
    cdef double tmp_i, tmp_j
    if p == 1:
        return a.ravel().copy(), v
    for i in range(p):
        for j in range(p):
            norm2 += A[i, j] * A[i, j]
    if norm2 == 0.0:
        return np.zeros(p), v
    thresh = tol * sqrt(norm2)
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(p):
            for j in range(p):
                if i != j:
                    off += A[i, j] * A[i, j]
        if sqrt(off) <= thresh:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = A[i, j]
                if fabs(aij) <= 0.25 * thresh / p:
                    continue
                theta = 0.5 * (A[j, j] - A[i, i]) / aij
                if theta == 0.0:
                    t = 1.0
                elif theta > 0.0:
                    t = 1.0 / (theta + hypot(theta, 1.0))
                else:
                    t = -1.0 / (-theta + hypot(theta, 1.0))
                c = 1.0 / hypot(t, 1.0)
                s = t * c
                for k in range(p):
                    tmp_i = A[k, i]
                    tmp_j = A[k, j]
                    A[k, i] = c * tmp_i - s * tmp_j
                    A[k, j] = s * tmp_i + c * tmp_j
                for k in range(p):
                    tmp_i = A[i, k]
                    tmp_j = A[j, k]
                    A[i, k] = c * tmp_i - s * tmp_j
                    A[j, k] = s * tmp_i + c * tmp_j
                A[i, j] = 0.0
                A[j, i] = 0.0
                for k in range(p):
                    tmp_i = V[k, i]
                    tmp_j = V[k, j]
                    V[k, i] = c * tmp_i - s * tmp_j
                    V[k, j] = s * tmp_i + c * tmp_j
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def chol_upper(a_in):
    a = np.array(a_in, dtype=np.float64, order="C")
    cdef double[:, ::1] A = a
    cdef Py_ssize_t n = A.shape[0]
    r = np.zeros((n, n))
    cdef double[:, ::1] R = r
    cdef Py_ssize_t i, j, k
    cdef double d, acc
    for j in range(n):
        d = A[j, j]
        for k in range(j):
            d -= R[k, j] * R[k, j]
        if d <= 0.0 or d != d:
            raise np.linalg.LinAlgError(
                "matrix is not positive definite (pivot %d)" % j
            )
        R[j, j] = sqrt(d)
        for i in range(j + 1, n):
            acc = A[j, i]
            for k in range(j):
                acc -= R[k, j] * R[k, i]
            R[j, i] = acc / R[j, j]
    return r


def conj_svec_op(m_in):
    """K with K svec(U) = svec(M^T U M); entries computed directly."""
    m = np.ascontiguousarray(m_in, dtype=np.float64)
    cdef double[:, ::1] M = m
    cdef Py_ssize_t p = M.shape[0]
    cdef Py_ssize_t d = p * (p + 1) // 2
    out = np.empty((d, d))
    cdef double[:, ::1] K = out
    cdef double SQ2 = sqrt(2.0)
    cdef Py_ssize_t i, j, k, l, row, col
    cdef double so, si, val
    row = 0
    for i in range(p):
        for j in range(i, p):
            so = 1.0 if i == j else SQ2
            col = 0
            for k in range(p):
                for l in range(k, p):
                    if k == l:
                        val = M[k, i] * M[k, j]
                    else:
                        val = (M[k, i] * M[l, j] + M[l, i] * M[k, j]) / SQ2
                    K[row, col] = so * val
                    col += 1
            row += 1
    return out


def conj_svec_apply(m_in, cols_in):
    """Apply svec(U) -> svec(M^T U M) to each column of cols (d, k)."""
    m = np.ascontiguousarray(m_in, dtype=np.float64)
    cols = np.asarray(cols_in, dtype=np.float64)
    single = cols.ndim == 1
    if single:
        cols = cols[:, None]
    cols = np.ascontiguousarray(cols)
    cdef double[:, ::1] M = m
    cdef double[:, ::1] C = cols
    cdef Py_ssize_t p = M.shape[0]
    cdef Py_ssize_t d = p * (p + 1) // 2
    cdef Py_ssize_t nc = C.shape[1]
    out = np.empty((d, nc))
    cdef double[:, ::1] O = out
    u = np.empty((p, p))
    t = np.empty((p, p))
    cdef double[:, ::1] U = u
    cdef double[:, ::1] T = t
    cdef double SQ2 = sqrt(2.0)
    cdef Py_ssize_t col, i, j, k, idx
    cdef double acc
    for col in range(nc):
        idx = 0
        for i in range(p):
            for j in range(i, p):
                if i == j:
                    U[i, i] = C[idx, col]
                else:
                    U[i, j] = C[idx, col] / SQ2
                    U[j, i] = U[i, j]
                idx += 1
        # T = M^T U
        for i in range(p):
            for j in range(p):
                acc = 0.0
                for k in range(p):
                    acc += M[k, i] * U[k, j]
                T[i, j] = acc
        idx = 0
        for i in range(p):
            for j in range(i, p):
                acc = 0.0
                for k in range(p):
                    acc += T[i, k] * M[k, j]
                O[idx, col] = acc if i == j else SQ2 * acc
                idx += 1
    return out[:, 0] if single else out
