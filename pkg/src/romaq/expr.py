"""Sparse affine expressions over conic-program variables.

A :class:`LinExpr` is a constant plus a sparse linear form in variable
indices.  Matrix-valued affine expressions (the arguments of support
functions) are kept as object arrays of LinExpr; the helpers below cover the
matrix algebra the reformulations need.
"""

import numpy as np


class LinExpr:
    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0.0):
        self.terms = dict(terms) if terms else {}
        self.const = float(const)

    @staticmethod
    def var(idx, coef=1.0):
        return LinExpr({int(idx): float(coef)})

    @staticmethod
    def constant(value):
        return LinExpr(None, value)

    def copy(self):
        return LinExpr(self.terms, self.const)

    def __add__(self, other):
        out = self.copy()
        out += other
        return out

    __radd__ = __add__

    def __iadd__(self, other):
        if isinstance(other, LinExpr):
            for k, v in other.terms.items():
                self.terms[k] = self.terms.get(k, 0.0) + v
            self.const += other.const
        else:
            self.const += float(other)
        return self

    def __sub__(self, other):
        return self + (-1.0) * _as_expr(other)

    def __rsub__(self, other):
        return _as_expr(other) + (-1.0) * self

    def __mul__(self, scalar):
        s = float(scalar)
        return LinExpr({k: v * s for k, v in self.terms.items()}, self.const * s)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def value(self, x):
        acc = self.const
        for k, v in self.terms.items():
            acc += v * x[k]
        return acc

    def is_constant(self, tol=0.0):
        return all(abs(v) <= tol for v in self.terms.values())

    def __repr__(self):
        parts = ["%+.6g*x%d" % (v, k) for k, v in sorted(self.terms.items())]
        return "LinExpr(%s%+.6g)" % (" ".join(parts), self.const)


def _as_expr(v):
    return v if isinstance(v, LinExpr) else LinExpr.constant(v)


def const_mat(a):
    a = np.asarray(a, dtype=float)
    out = np.empty(a.shape, dtype=object)
    for idx in np.ndindex(*a.shape):
        out[idx] = LinExpr.constant(a[idx])
    return out


def zeros_mat(shape):
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        out[idx] = LinExpr()
    return out


def var_vec(indices):
    return np.array([LinExpr.var(i) for i in indices], dtype=object)


def add_mat(a, b):
    out = np.empty(a.shape, dtype=object)
    for idx in np.ndindex(*a.shape):
        out[idx] = a[idx] + b[idx]
    return out


def scale_mat(a, s):
    out = np.empty(a.shape, dtype=object)
    for idx in np.ndindex(*a.shape):
        out[idx] = a[idx] * s
    return out


def transpose_mat(a):
    return a.T.copy()


def lmul(const, a):
    """Constant-matrix times expression-matrix."""
    const = np.asarray(const, dtype=float)
    m, k = const.shape
    k2, n = a.shape
    if k != k2:
        raise ValueError("shape mismatch in lmul")
    out = np.empty((m, n), dtype=object)
    for i in range(m):
        for j in range(n):
            e = LinExpr()
            for t in range(k):
                c = const[i, t]
                if c != 0.0:
                    e += a[t, j] * c
            out[i, j] = e
    return out


def rmul(a, const):
    """Expression-matrix times constant-matrix."""
    const = np.asarray(const, dtype=float)
    m, k = a.shape
    k2, n = const.shape
    if k != k2:
        raise ValueError("shape mismatch in rmul")
    out = np.empty((m, n), dtype=object)
    for i in range(m):
        for j in range(n):
            e = LinExpr()
            for t in range(k):
                c = const[t, j]
                if c != 0.0:
                    e += a[i, t] * c
            out[i, j] = e
    return out


def hadamard_scale(a, w):
    """Entrywise scaling of an expression matrix by a constant matrix."""
    w = np.asarray(w, dtype=float)
    out = np.empty(a.shape, dtype=object)
    for idx in np.ndindex(*a.shape):
        out[idx] = a[idx] * w[idx]
    return out


def trace_pair(const, a):
    """<C, U> = sum_ij C_ij U_ij as a LinExpr."""
    const = np.asarray(const, dtype=float)
    e = LinExpr()
    for idx in np.ndindex(*a.shape):
        c = const[idx]
        if c != 0.0:
            e += a[idx] * c
    return e


def dot(const_vec, exprs):
    const_vec = np.asarray(const_vec, dtype=float).ravel()
    e = LinExpr()
    for c, ex in zip(const_vec, np.ravel(exprs)):
        if c != 0.0:
            e += ex * c
    return e


def vec_mat(a):
    """Row-major vectorization of an expression matrix."""
    return np.ravel(a).copy()


def svec_mat(a, check=True):
    """svec of a symmetric expression matrix (sqrt(2) off-diagonals)."""
    n = a.shape[0]
    if check and a.shape[0] != a.shape[1]:
        raise ValueError("svec_mat needs a square matrix")
    sq2 = np.sqrt(2.0)
    out = []
    for i in range(n):
        for j in range(i, n):
            out.append(a[i, j].copy() if i == j else (a[i, j] + a[j, i]) * (sq2 / 2.0))
    return np.array(out, dtype=object)


def symmetrize(a):
    return scale_mat(add_mat(a, a.T.copy()), 0.5)


def value_mat(a, x):
    out = np.empty(a.shape, dtype=float)
    for idx in np.ndindex(*a.shape):
        out[idx] = a[idx].value(x)
    return out
