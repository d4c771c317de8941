"""Compositional uncertainty-set algebra.

A matrix uncertainty set is an AST of leaf sets (norm balls, matrix
intervals, vectorized sets, scenario spans, moment cones, ...) and
combinators (linear images, Hadamard masks, Minkowski sums, intersections,
Cartesian products, convex hulls).  Every node knows how to compile the
support function  delta*(U) = sup_{D in Z} <D, U>  into conic epigraph
constraints over an affine matrix argument U, exactly (under the Slater
conditions the combinators require).

All inner products are Frobenius: <A, B> = sum_ij A_ij B_ij.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from romaq import expr as ex
from romaq import linalg
from romaq.conic.program import Cone, ConicProgram
from romaq.conic.solver import OPTIMAL, DUAL_INFEASIBLE, solve

_MARGIN = 1e-8


class SupportInfiniteError(ValueError):
    """The support function is provably +infinity for this argument."""


class UnsupportedOperation(NotImplementedError):
    pass


# ---------------------------------------------------------------------------
# vector sets


@dataclass(frozen=True)
class Ball:
    p: object  # 1, 2, or "inf"
    radius: float
    dim: int

    def __post_init__(self):
        if self.p not in (1, 2, "inf"):
            raise ValueError("Ball order must be 1, 2 or 'inf'")
        if self.radius <= 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class Box:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box bounds inconsistent")

    @property
    def dim(self):
        return len(self.lower)


@dataclass(frozen=True)
class Polyhedron:
    """{z : C z <= d}; must be nonempty and bounded (checked on build)."""

    c_mat: tuple
    d_vec: tuple
    _ranges: tuple = field(default=None, compare=False)

    @property
    def dim(self):
        return np.asarray(self.c_mat).shape[1]


@dataclass(frozen=True)
class AffineImage:
    """{B nu : nu in inner}."""

    b_mat: tuple
    inner: object

    @property
    def dim(self):
        return np.asarray(self.b_mat).shape[0]


@dataclass(frozen=True)
class NonnegOrthantCap:
    """inner intersected with the nonnegative orthant."""

    inner: object
    interior_point: tuple = None

    @property
    def dim(self):
        return self.inner.dim


def make_polyhedron(c_mat, d_vec):
    """Build a Polyhedron leaf, verifying nonemptiness and boundedness."""
    c_mat = np.asarray(c_mat, float)
    d_vec = np.asarray(d_vec, float)
    dim = c_mat.shape[1]
    ranges = []
    for j in range(dim):
        lohi = []
        for sign in (-1.0, 1.0):
            prog = ConicProgram()
            zz = prog.var_vector(dim)
            prog.add_nonneg([d_vec[i] - ex.dot(c_mat[i], zz) for i in range(len(d_vec))])
            prog.set_objective(zz[j] * sign)
            sol = solve(prog)
            if sol.status == DUAL_INFEASIBLE:
                raise ValueError("polyhedron is unbounded in coordinate %d" % j)
            if sol.status != OPTIMAL:
                raise ValueError(
                    "polyhedron nonemptiness/boundedness check failed (%s)" % sol.status
                )
            lohi.append(sign * sol.objective)
        ranges.append((min(lohi), max(lohi)))
    return Polyhedron(
        tuple(map(tuple, c_mat)), tuple(d_vec), tuple(map(tuple, ranges))
    )


def _vec_support(vset, u, prog):
    """Epigraph of the vector-set support function at expression vector u."""
    if isinstance(vset, Ball):
        if len(u) != vset.dim:
            raise ValueError("support argument has wrong dimension")
        if vset.p == 2:
            t = ex.LinExpr.var(prog.new_var("soc_t"))
            prog.add_soc([t, *u])
            return t * vset.radius
        if vset.p == 1:  # dual is sup-norm
            t = ex.LinExpr.var(prog.new_var("linf_t"))
            rows = []
            for e in u:
                rows.append(t - e)
                rows.append(t + e)
            prog.add_nonneg(rows)
            return t * vset.radius
        # p == inf: dual is the 1-norm
        total = ex.LinExpr()
        rows = []
        for e in u:
            t = ex.LinExpr.var(prog.new_var("abs"))
            rows.append(t - e)
            rows.append(t + e)
            total += t
        prog.add_nonneg(rows)
        return total * vset.radius
    if isinstance(vset, Box):
        lo = np.asarray(vset.lower, float)
        hi = np.asarray(vset.upper, float)
        total = ex.LinExpr()
        rows = []
        for i, e in enumerate(u):
            if lo[i] == hi[i]:
                total += e * lo[i]
                continue
            t = ex.LinExpr.var(prog.new_var("boxmax"))
            rows.append(t - e * hi[i])
            rows.append(t - e * lo[i])
            total += t
        if rows:
            prog.add_nonneg(rows)
        return total
    if isinstance(vset, Polyhedron):
        c_mat = np.asarray(vset.c_mat, float)
        d_vec = np.asarray(vset.d_vec, float)
        n_ineq = c_mat.shape[0]
        w = prog.var_vector(n_ineq, "polydual")
        prog.add_nonneg(list(w))
        for j in range(len(u)):
            prog.add_equality([ex.dot(c_mat[:, j], w) - u[j]])
        return ex.dot(d_vec, w)
    if isinstance(vset, AffineImage):
        b_mat = np.asarray(vset.b_mat, float)
        inner_arg = [ex.dot(b_mat[:, j], u) for j in range(b_mat.shape[1])]
        return _vec_support(vset.inner, np.array(inner_arg, dtype=object), prog)
    if isinstance(vset, NonnegOrthantCap):
        # split v = v1 + v2 with v2 <= 0 supported by the orthant: the
        # inner child sees v1 >= v componentwise
        v1 = ex.var_vec(prog.new_vars(len(u), "capsplit"))
        prog.add_nonneg([v1[i] - u[i] for i in range(len(u))])
        return _vec_support(vset.inner, v1, prog)
    raise UnsupportedOperation("unknown vector set %r" % (vset,))


def _vec_contains(vset, z, tol):
    z = np.asarray(z, float)
    if isinstance(vset, Ball):
        if vset.p == 2:
            return np.linalg.norm(z) <= vset.radius + tol
        if vset.p == 1:
            return np.abs(z).sum() <= vset.radius + tol
        return np.abs(z).max() <= vset.radius + tol
    if isinstance(vset, Box):
        return bool(
            np.all(z >= np.asarray(vset.lower) - tol)
            and np.all(z <= np.asarray(vset.upper) + tol)
        )
    if isinstance(vset, Polyhedron):
        return bool(np.all(np.asarray(vset.c_mat) @ z <= np.asarray(vset.d_vec) + tol))
    if isinstance(vset, AffineImage):
        b_mat = np.asarray(vset.b_mat, float)
        nu, *_ = np.linalg.lstsq(b_mat, z, rcond=None)
        if np.linalg.norm(b_mat @ nu - z) > tol * (1.0 + np.linalg.norm(z)):
            return False
        return _vec_contains(vset.inner, nu, tol)
    if isinstance(vset, NonnegOrthantCap):
        return bool(np.all(z >= -tol)) and _vec_contains(vset.inner, z, tol)
    raise UnsupportedOperation("unknown vector set %r" % (vset,))


def _vec_slater(vset, z):
    z = np.asarray(z, float)
    if isinstance(vset, Ball):
        if vset.p == 2:
            return vset.radius - np.linalg.norm(z)
        if vset.p == 1:
            return vset.radius - np.abs(z).sum()
        return vset.radius - np.abs(z).max()
    if isinstance(vset, Box):
        lo = np.asarray(vset.lower)
        hi = np.asarray(vset.upper)
        margins = [math.inf]
        for i in range(len(z)):
            if lo[i] == hi[i]:
                if abs(z[i] - lo[i]) > 1e-12:
                    return -abs(z[i] - lo[i])
                continue
            margins.append(min(z[i] - lo[i], hi[i] - z[i]))
        return min(margins)
    if isinstance(vset, Polyhedron):
        return float(np.min(np.asarray(vset.d_vec) - np.asarray(vset.c_mat) @ z))
    if isinstance(vset, AffineImage):
        b_mat = np.asarray(vset.b_mat, float)
        nu, *_ = np.linalg.lstsq(b_mat, z, rcond=None)
        if np.linalg.norm(b_mat @ nu - z) > 1e-9 * (1.0 + np.linalg.norm(z)):
            return -math.inf
        return _vec_slater(vset.inner, nu)
    if isinstance(vset, NonnegOrthantCap):
        return min(float(z.min()), _vec_slater(vset.inner, z))
    raise UnsupportedOperation("unknown vector set %r" % (vset,))


def _vec_sample(vset, rng):
    if isinstance(vset, Ball):
        d = vset.dim
        if vset.p == 2:
            g = rng.standard_normal(d)
            g /= max(np.linalg.norm(g), 1e-300)
            return vset.radius * g * rng.uniform() ** (1.0 / d)
        if vset.p == 1:
            w = rng.dirichlet(np.ones(d)) * rng.choice([-1.0, 1.0], d)
            return vset.radius * w * rng.uniform() ** (1.0 / d)
        return rng.uniform(-vset.radius, vset.radius, d)
    if isinstance(vset, Box):
        return rng.uniform(np.asarray(vset.lower), np.asarray(vset.upper))
    if isinstance(vset, Polyhedron):
        ranges = np.asarray(vset._ranges)
        c_mat = np.asarray(vset.c_mat)
        d_vec = np.asarray(vset.d_vec)
        for _ in range(2000):
            z = rng.uniform(ranges[:, 0], ranges[:, 1])
            if np.all(c_mat @ z <= d_vec + 1e-12):
                return z
        raise RuntimeError("rejection sampling failed for polyhedron")
    if isinstance(vset, AffineImage):
        return np.asarray(vset.b_mat) @ _vec_sample(vset.inner, rng)
    if isinstance(vset, NonnegOrthantCap):
        for _ in range(2000):
            z = _vec_sample(vset.inner, rng)
            if np.all(z >= 0.0):
                return z
        if vset.interior_point is not None:
            base = np.asarray(vset.interior_point, float)
            z = _vec_sample(vset.inner, rng)
            for t in np.linspace(1.0, 0.0, 30):
                cand = base + t * (z - base)
                if np.all(cand >= 0.0) and _vec_contains(vset.inner, cand, 1e-12):
                    return cand
        raise RuntimeError("rejection sampling failed for orthant cap")
    raise UnsupportedOperation("unknown vector set %r" % (vset,))


# ---------------------------------------------------------------------------
# matrix sets


@dataclass(frozen=True)
class NormBall:
    kind: str
    radius: float
    rows: int
    cols: int

    def __post_init__(self):
        if self.kind not in linalg.NORM_KINDS:
            raise ValueError("unknown norm kind %r" % (self.kind,))
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def shape(self):
        return (self.rows, self.cols)


@dataclass(frozen=True)
class PsdInterval:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = np.asarray(self.lower, float)
        hi = np.asarray(self.upper, float)
        if lo.shape != hi.shape or lo.shape[0] != lo.shape[1]:
            raise ValueError("interval bounds must be square and consistent")
        if linalg.min_eig(hi - lo) <= 0:
            raise ValueError("upper bound must exceed lower bound strictly (PSD order)")

    @property
    def shape(self):
        n = len(self.lower)
        return (n, n)


@dataclass(frozen=True)
class VecSet:
    rows: int
    cols: int
    vset: object

    def __post_init__(self):
        if self.rows * self.cols != self.vset.dim:
            raise ValueError("vector set dimension must equal rows*cols")

    @property
    def shape(self):
        return (self.rows, self.cols)


@dataclass(frozen=True)
class ScenarioSpan:
    """{sum_i zeta_i D_i : zeta in vset}."""

    scenarios: tuple
    vset: object

    @property
    def shape(self):
        return np.asarray(self.scenarios[0]).shape


@dataclass(frozen=True)
class MomentCone:
    """Symmetric (side+1) x (side+1) PSD matrices with unit top-left corner."""

    side: int

    @property
    def shape(self):
        return (self.side + 1, self.side + 1)


@dataclass(frozen=True)
class LinearTransform:
    """{L D R : D in inner}."""

    left: tuple
    right: tuple
    inner: object

    @property
    def shape(self):
        return (np.asarray(self.left).shape[0], np.asarray(self.right).shape[1])


@dataclass(frozen=True)
class HadamardMask:
    """{D : mask o D in inner}; entries at zero mask positions are free."""

    mask: tuple
    inner: object

    @property
    def shape(self):
        return np.asarray(self.mask).shape


@dataclass(frozen=True)
class MinkowskiSum:
    parts: tuple

    @property
    def shape(self):
        return self.parts[0].shape


@dataclass(frozen=True)
class Intersection:
    parts: tuple
    slater_point: tuple

    @property
    def shape(self):
        return self.parts[0].shape


@dataclass(frozen=True)
class CartesianProduct:
    """Tuples embedded as block-diagonal matrices."""

    parts: tuple

    @property
    def shape(self):
        return (
            sum(p.shape[0] for p in self.parts),
            sum(p.shape[1] for p in self.parts),
        )


@dataclass(frozen=True)
class ConvexHull:
    parts: tuple

    @property
    def shape(self):
        return self.parts[0].shape


@dataclass(frozen=True)
class FunctionalBand:
    """{D : |<D, M>| <= radius}; unbounded alone, useful inside intersections."""

    functional: tuple
    radius: float

    @property
    def shape(self):
        return np.asarray(self.functional).shape


@dataclass(frozen=True)
class PsdSliceVec:
    """Column vectors (mean block free, svec tail a PSD matrix)."""

    n_mean: int
    side: int

    @property
    def shape(self):
        return (self.n_mean + self.side * (self.side + 1) // 2, 1)


def intersection(parts, slater_point):
    """Build an Intersection node, verifying the common Slater point."""
    parts = tuple(parts)
    point = np.asarray(slater_point, float)
    for p in parts:
        if p.shape != parts[0].shape:
            raise ValueError("intersection parts must share a shape")
        m = slater_check(p, point)
        if m < _MARGIN:
            raise ValueError(
                "Slater point is not strictly inside every part (margin %.3g)" % m
            )
    return Intersection(parts, tuple(map(tuple, point)))


def support_pattern(zset):
    """Boolean matrix marking argument positions the set can interact with.

    Positions marked False force the support argument to zero anyway, so
    intersection splits need no auxiliary variables there.
    """
    m, n = zset.shape
    if isinstance(zset, HadamardMask):
        return np.asarray(zset.mask) != 0
    if isinstance(zset, FunctionalBand):
        return np.asarray(zset.functional) != 0
    if isinstance(zset, PsdSliceVec):
        pat = np.ones((zset.shape[0], 1), dtype=bool)
        pat[: zset.n_mean] = False
        return pat
    if isinstance(zset, CartesianProduct):
        pat = np.zeros(zset.shape, dtype=bool)
        r = c = 0
        for p in zset.parts:
            pr, pc = p.shape
            pat[r : r + pr, c : c + pc] = support_pattern(p)
            r += pr
            c += pc
        return pat
    return np.ones((m, n), dtype=bool)


def support_epigraph(zset, u, prog):
    """Compile the support-function epigraph of ``zset`` at argument ``u``.

    Adds auxiliary variables and constraints to ``prog`` and returns a
    scalar affine expression s with min-over-auxiliaries s = delta*(u).
    """
    u = np.asarray(u, dtype=object)
    if u.shape != tuple(zset.shape):
        raise ValueError(
            "support argument shape %s does not match set shape %s"
            % (u.shape, zset.shape)
        )

    if isinstance(zset, NormBall):
        return _norm_ball_epigraph(zset, u, prog)

    if isinstance(zset, PsdInterval):
        n = zset.shape[0]
        lam1, _ = prog.new_symmetric(n, "lam1")
        lam2, _ = prog.new_symmetric(n, "lam2")
        prog.add_psd(lam1)
        prog.add_psd(lam2)
        usym = ex.symmetrize(u)
        rows = []
        for i in range(n):
            for j in range(i, n):
                rows.append(lam2[i, j] - lam1[i, j] - usym[i, j])
        prog.add_equality(rows)
        return ex.trace_pair(np.asarray(zset.upper), lam2) - ex.trace_pair(
            np.asarray(zset.lower), lam1
        )

    if isinstance(zset, VecSet):
        return _vec_support(zset.vset, ex.vec_mat(u), prog)

    if isinstance(zset, ScenarioSpan):
        coords = np.array(
            [ex.trace_pair(np.asarray(d), u) for d in zset.scenarios], dtype=object
        )
        return _vec_support(zset.vset, coords, prog)

    if isinstance(zset, MomentCone):
        p = zset.side
        gamma = ex.LinExpr.var(prog.new_var("gamma"))
        usym = ex.symmetrize(u)
        block = ex.scale_mat(usym, -1.0)
        block[0, 0] = block[0, 0] + gamma
        prog.add_psd(block)
        return gamma

    if isinstance(zset, LinearTransform):
        inner_arg = ex.rmul(ex.lmul(np.asarray(zset.left).T, u), np.asarray(zset.right).T)
        return support_epigraph(zset.inner, inner_arg, prog)

    if isinstance(zset, HadamardMask):
        mask = np.asarray(zset.mask, float)
        dagger = np.where(mask != 0.0, 1.0 / np.where(mask != 0.0, mask, 1.0), 0.0)
        zero_rows = []
        for idx in np.ndindex(*mask.shape):
            if mask[idx] == 0.0:
                e = u[idx]
                if e.is_constant():
                    if abs(e.const) > 1e-12:
                        raise SupportInfiniteError(
                            "argument is nonzero at a free (masked-out) entry %s" % (idx,)
                        )
                else:
                    zero_rows.append(e)
        if zero_rows:
            prog.add_equality(zero_rows)
        return support_epigraph(zset.inner, ex.hadamard_scale(u, dagger), prog)

    if isinstance(zset, MinkowskiSum):
        total = ex.LinExpr()
        for p in zset.parts:
            total += support_epigraph(p, u, prog)
        return total

    if isinstance(zset, Intersection):
        parts = list(zset.parts)
        sizes = [int(support_pattern(p).sum()) for p in parts]
        residual_idx = int(np.argmax(sizes))
        residual = parts.pop(residual_idx)
        m, n = zset.shape
        remaining = u
        total = ex.LinExpr()
        for p in parts:
            pat = support_pattern(p)
            split = ex.zeros_mat((m, n))
            for idx in np.ndindex(m, n):
                if pat[idx]:
                    split[idx] = ex.LinExpr.var(prog.new_var("split"))
            total += support_epigraph(p, split, prog)
            remaining = ex.add_mat(remaining, ex.scale_mat(split, -1.0))
        total += support_epigraph(residual, remaining, prog)
        return total

    if isinstance(zset, CartesianProduct):
        total = ex.LinExpr()
        r = c = 0
        for p in zset.parts:
            pr, pc = p.shape
            total += support_epigraph(p, u[r : r + pr, c : c + pc], prog)
            r += pr
            c += pc
        return total

    if isinstance(zset, ConvexHull):
        s = ex.LinExpr.var(prog.new_var("hull"))
        rows = []
        for p in zset.parts:
            rows.append(s - support_epigraph(p, u, prog))
        prog.add_nonneg(rows)
        return s

    if isinstance(zset, FunctionalBand):
        func = np.asarray(zset.functional, float)
        mu = ex.LinExpr.var(prog.new_var("bandmu"))
        rows = []
        for idx in np.ndindex(*func.shape):
            e = u[idx] - mu * func[idx]
            if e.is_constant() and e.const == 0.0:
                continue
            rows.append(e)
        if rows:
            prog.add_equality(rows)
        t = ex.LinExpr.var(prog.new_var("bandabs"))
        prog.add_nonneg([t - mu, t + mu])
        return t * zset.radius

    if isinstance(zset, PsdSliceVec):
        mean_rows = [u[i, 0] for i in range(zset.n_mean) if not (u[i, 0].is_constant() and u[i, 0].const == 0.0)]
        for e in mean_rows:
            if e.is_constant() and abs(e.const) > 1e-12:
                raise SupportInfiniteError("argument has mass on the free mean block")
        if mean_rows:
            prog.add_equality(mean_rows)
        tail = [u[i, 0] * -1.0 for i in range(zset.n_mean, zset.shape[0])]
        prog.add_cone_membership(tail, Cone("psd", zset.side))
        return ex.LinExpr()

    raise UnsupportedOperation("unknown matrix set %r" % (zset,))


def _norm_ball_epigraph(zset, u, prog):
    m, n = zset.shape
    dual = linalg.dual_norm_kind(zset.kind)
    if dual == "frobenius":
        t = ex.LinExpr.var(prog.new_var("fro_t"))
        prog.add_soc([t, *ex.vec_mat(u)])
        return t * zset.radius
    if dual == "linf":
        t = ex.LinExpr.var(prog.new_var("linf_t"))
        rows = []
        for e in ex.vec_mat(u):
            rows.append(t - e)
            rows.append(t + e)
        prog.add_nonneg(rows)
        return t * zset.radius
    if dual == "l1":
        total = ex.LinExpr()
        rows = []
        for e in ex.vec_mat(u):
            t = ex.LinExpr.var(prog.new_var("abs"))
            rows.append(t - e)
            rows.append(t + e)
            total += t
        prog.add_nonneg(rows)
        return total * zset.radius
    if dual == "nuclear":
        y_mat, _ = prog.new_symmetric(m, "nucY")
        z_mat, _ = prog.new_symmetric(n, "nucZ")
        prog.add_psd(_stack_symmetric(y_mat, u, z_mat))
        tr = ex.LinExpr()
        for i in range(m):
            tr += y_mat[i, i]
        for j in range(n):
            tr += z_mat[j, j]
        return tr * (0.5 * zset.radius)
    # dual == "spectral"
    t = ex.LinExpr.var(prog.new_var("spec_t"))
    diag_m = ex.zeros_mat((m, m))
    diag_n = ex.zeros_mat((n, n))
    for i in range(m):
        diag_m[i, i] = t.copy()
    for j in range(n):
        diag_n[j, j] = t.copy()
    prog.add_psd(_stack_symmetric(diag_m, u, diag_n))
    return t * zset.radius


def _stack_symmetric(top_left, top_right, bottom_right):
    m = top_left.shape[0]
    n = bottom_right.shape[0]
    big = ex.zeros_mat((m + n, m + n))
    for i in range(m):
        for j in range(m):
            big[i, j] = top_left[i, j]
    for i in range(n):
        for j in range(n):
            big[m + i, m + j] = bottom_right[i, j]
    for i in range(m):
        for j in range(n):
            big[i, m + j] = top_right[i, j].copy()
            big[m + j, i] = top_right[i, j].copy()
    return big


def sdp_norm_epigraph(kind, u, bound, prog):
    """Nuclear/spectral norm bound constraints on an affine matrix.

    ``bound`` may be a number (fixed radius) or a LinExpr.  The nuclear
    bound uses the trace-pair LMI, the fixed-radius spectral bound the
    squared-radius LMI; a variable spectral bound uses the symmetric form.
    """
    u = np.asarray(u, dtype=object)
    m, n = u.shape
    if kind == "nuclear":
        y_mat, _ = prog.new_symmetric(m, "nY")
        z_mat, _ = prog.new_symmetric(n, "nZ")
        prog.add_psd(_stack_symmetric(y_mat, u, z_mat))
        tr = ex.LinExpr()
        for i in range(m):
            tr += y_mat[i, i]
        for j in range(n):
            tr += z_mat[j, j]
        tgt = bound if isinstance(bound, ex.LinExpr) else ex.LinExpr.constant(bound)
        prog.add_nonneg([tgt * 2.0 - tr])
        return
    if kind != "spectral":
        raise ValueError("sdp_norm_epigraph supports 'nuclear' and 'spectral'")
    big = ex.zeros_mat((m + n, m + n))
    if isinstance(bound, ex.LinExpr):
        for i in range(m):
            big[i, i] = bound.copy()
        for j in range(n):
            big[m + j, m + j] = bound.copy()
    else:
        for i in range(m):
            big[i, i] = ex.LinExpr.constant(bound * bound)
        for j in range(n):
            big[m + j, m + j] = ex.LinExpr.constant(1.0)
    for i in range(m):
        for j in range(n):
            big[i, m + j] = u[i, j].copy()
            big[m + j, i] = u[i, j].copy()
    prog.add_psd(big)


def support_value(zset, u_mat, tol=1e-8):
    """Numeric support-function value at a constant argument."""
    prog = ConicProgram()
    try:
        s = support_epigraph(zset, ex.const_mat(u_mat), prog)
    except SupportInfiniteError:
        return math.inf
    prog.set_objective(s)
    sol = solve(prog, tol=tol)
    if sol.status == OPTIMAL:
        return sol.objective
    if sol.status == DUAL_INFEASIBLE:
        return math.inf
    if sol.status in ("max_iter", "numerical_error") and sol.residuals[
        "primal_residual"
    ] < 1e-6 and sol.residuals["gap"] < 1e-6:
        return sol.objective
    raise RuntimeError("support evaluation failed: %s" % sol.status)


def contains(zset, delta, tol=1e-9):
    """Membership test; exact for leaves, conservative for lifted images."""
    delta = np.asarray(delta, float)
    if delta.shape != tuple(zset.shape):
        raise ValueError("candidate has wrong shape")
    if isinstance(zset, NormBall):
        return linalg.mat_norm(delta, zset.kind) <= zset.radius + tol
    if isinstance(zset, PsdInterval):
        lo = np.asarray(zset.lower)
        hi = np.asarray(zset.upper)
        return (
            linalg.min_eig(delta - lo) >= -tol and linalg.min_eig(hi - delta) >= -tol
        )
    if isinstance(zset, VecSet):
        return _vec_contains(zset.vset, delta.ravel(), tol)
    if isinstance(zset, ScenarioSpan):
        basis = np.column_stack([np.asarray(d, float).ravel() for d in zset.scenarios])
        zeta, *_ = np.linalg.lstsq(basis, delta.ravel(), rcond=None)
        if np.linalg.norm(basis @ zeta - delta.ravel()) > tol * (
            1.0 + np.linalg.norm(delta)
        ):
            return False
        return _vec_contains(zset.vset, zeta, tol)
    if isinstance(zset, MomentCone):
        if abs(delta[0, 0] - 1.0) > tol:
            return False
        return linalg.min_eig(0.5 * (delta + delta.T)) >= -tol
    if isinstance(zset, LinearTransform):
        left = np.asarray(zset.left, float)
        right = np.asarray(zset.right, float)
        lp = np.linalg.pinv(left)
        rp = np.linalg.pinv(right)
        cand = lp @ delta @ rp
        if np.linalg.norm(left @ cand @ right - delta) > tol * (1.0 + np.linalg.norm(delta)):
            return False
        return contains(zset.inner, cand, tol)
    if isinstance(zset, HadamardMask):
        return contains(zset.inner, np.asarray(zset.mask) * delta, tol)
    if isinstance(zset, Intersection):
        return all(contains(p, delta, tol) for p in zset.parts)
    if isinstance(zset, CartesianProduct):
        r = c = 0
        mask = np.ones(delta.shape, dtype=bool)
        for p in zset.parts:
            pr, pc = p.shape
            if not contains(p, delta[r : r + pr, c : c + pc], tol):
                return False
            mask[r : r + pr, c : c + pc] = False
            r += pr
            c += pc
        return bool(np.abs(delta[mask]).max(initial=0.0) <= tol)
    if isinstance(zset, FunctionalBand):
        return abs(float(np.sum(np.asarray(zset.functional) * delta))) <= zset.radius + tol
    if isinstance(zset, PsdSliceVec):
        tail = delta[zset.n_mean :, 0]
        return linalg.min_eig(linalg.smat(tail)) >= -tol
    raise UnsupportedOperation(
        "membership test not implemented for %s" % type(zset).__name__
    )


def slater_check(zset, point):
    """Strictness margin of a candidate interior point (equalities exempt)."""
    point = np.asarray(point, float)
    if isinstance(zset, NormBall):
        return zset.radius - linalg.mat_norm(point, zset.kind)
    if isinstance(zset, PsdInterval):
        lo = np.asarray(zset.lower)
        hi = np.asarray(zset.upper)
        return min(linalg.min_eig(point - lo), linalg.min_eig(hi - point))
    if isinstance(zset, VecSet):
        return _vec_slater(zset.vset, point.ravel())
    if isinstance(zset, ScenarioSpan):
        basis = np.column_stack([np.asarray(d, float).ravel() for d in zset.scenarios])
        zeta, *_ = np.linalg.lstsq(basis, point.ravel(), rcond=None)
        if np.linalg.norm(basis @ zeta - point.ravel()) > 1e-9 * (1 + np.linalg.norm(point)):
            return -math.inf
        return _vec_slater(zset.vset, zeta)
    if isinstance(zset, MomentCone):
        if abs(point[0, 0] - 1.0) > 1e-9:
            return -math.inf
        return linalg.min_eig(0.5 * (point + point.T))
    if isinstance(zset, LinearTransform):
        left = np.asarray(zset.left, float)
        right = np.asarray(zset.right, float)
        cand = np.linalg.pinv(left) @ point @ np.linalg.pinv(right)
        if np.linalg.norm(left @ cand @ right - point) > 1e-9 * (1 + np.linalg.norm(point)):
            return -math.inf
        return slater_check(zset.inner, cand)
    if isinstance(zset, HadamardMask):
        return slater_check(zset.inner, np.asarray(zset.mask) * point)
    if isinstance(zset, MinkowskiSum):
        return math.inf  # no Slater requirement for sums
    if isinstance(zset, Intersection):
        return min(slater_check(p, point) for p in zset.parts)
    if isinstance(zset, CartesianProduct):
        r = c = 0
        m = math.inf
        for p in zset.parts:
            pr, pc = p.shape
            m = min(m, slater_check(p, point[r : r + pr, c : c + pc]))
            r += pr
            c += pc
        return m
    if isinstance(zset, ConvexHull):
        return max(slater_check(p, point) for p in zset.parts)
    if isinstance(zset, FunctionalBand):
        return zset.radius - abs(float(np.sum(np.asarray(zset.functional) * point)))
    if isinstance(zset, PsdSliceVec):
        return linalg.min_eig(linalg.smat(point[zset.n_mean :, 0]))
    raise UnsupportedOperation("slater check not implemented for %s" % type(zset).__name__)


def sample(zset, rng):
    """Draw one member of the set (used by falsifiers and test oracles)."""
    if isinstance(zset, NormBall):
        g = rng.standard_normal(zset.shape)
        nrm = linalg.mat_norm(g, zset.kind)
        if nrm == 0.0:
            return np.zeros(zset.shape)
        k = zset.rows * zset.cols
        return g * (zset.radius * rng.uniform() ** (1.0 / k) / nrm)
    if isinstance(zset, PsdInterval):
        lo = np.asarray(zset.lower, float)
        hi = np.asarray(zset.upper, float)
        n = lo.shape[0]
        f = linalg.sym_sqrt(hi - lo)
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        w = (q * rng.uniform(size=n)) @ q.T
        return lo + f @ (0.5 * (w + w.T)) @ f
    if isinstance(zset, VecSet):
        return _vec_sample(zset.vset, rng).reshape(zset.shape)
    if isinstance(zset, ScenarioSpan):
        zeta = _vec_sample(zset.vset, rng)
        out = np.zeros(zset.shape)
        for zi, d in zip(zeta, zset.scenarios):
            out += zi * np.asarray(d, float)
        return out
    if isinstance(zset, MomentCone):
        p = zset.side
        zeta = 0.5 * rng.standard_normal(p)
        g = rng.standard_normal((p, p)) * 0.4
        block = zeta[:, None] * zeta[None, :] + g @ g.T
        out = np.zeros((p + 1, p + 1))
        out[0, 0] = 1.0
        out[0, 1:] = zeta
        out[1:, 0] = zeta
        out[1:, 1:] = block
        return out
    if isinstance(zset, LinearTransform):
        return np.asarray(zset.left) @ sample(zset.inner, rng) @ np.asarray(zset.right)
    if isinstance(zset, HadamardMask):
        mask = np.asarray(zset.mask, float)
        for _ in range(200):
            inner = sample(zset.inner, rng) * (mask != 0.0)
            if contains(zset.inner, inner, 1e-9):
                dagger = np.where(mask != 0.0, 1.0 / np.where(mask != 0.0, mask, 1.0), 0.0)
                return inner * dagger
        raise RuntimeError("could not sample a masked member")
    if isinstance(zset, MinkowskiSum):
        return sum(sample(p, rng) for p in zset.parts)
    if isinstance(zset, Intersection):
        for _ in range(2000):
            cand = sample(zset.parts[0], rng)
            if all(contains(p, cand, 1e-12) for p in zset.parts[1:]):
                return cand
        base = np.asarray(zset.slater_point, float)
        cand = sample(zset.parts[0], rng)
        lo_t, hi_t = 0.0, 1.0
        for _ in range(40):
            mid = 0.5 * (lo_t + hi_t)
            point = base + mid * (cand - base)
            if all(contains(p, point, 1e-12) for p in zset.parts):
                lo_t = mid
            else:
                hi_t = mid
        return base + lo_t * (cand - base)
    if isinstance(zset, CartesianProduct):
        out = np.zeros(zset.shape)
        r = c = 0
        for p in zset.parts:
            pr, pc = p.shape
            out[r : r + pr, c : c + pc] = sample(p, rng)
            r += pr
            c += pc
        return out
    if isinstance(zset, ConvexHull):
        w = rng.dirichlet(np.ones(len(zset.parts)))
        return sum(wi * sample(p, rng) for wi, p in zip(w, zset.parts))
    if isinstance(zset, FunctionalBand):
        func = np.asarray(zset.functional, float)
        g = rng.standard_normal(func.shape)
        cur = float(np.sum(func * g))
        target = rng.uniform(-zset.radius, zset.radius)
        return g + (target - cur) * func / float(np.sum(func * func))
    if isinstance(zset, PsdSliceVec):
        mean = rng.standard_normal(zset.n_mean)
        g = rng.standard_normal((zset.side, zset.side))
        tail = linalg.svec(g @ g.T)
        return np.concatenate([mean, tail])[:, None]
    raise UnsupportedOperation("sampling not implemented for %s" % type(zset).__name__)


# ---------------------------------------------------------------------------
# JSON schema


def to_json_dict(zset):
    if isinstance(zset, NormBall):
        return {
            "kind": "norm_ball",
            "norm": zset.kind,
            "radius": zset.radius,
            "rows": zset.rows,
            "cols": zset.cols,
        }
    if isinstance(zset, PsdInterval):
        return {
            "kind": "psd_interval",
            "lower": [list(r) for r in zset.lower],
            "upper": [list(r) for r in zset.upper],
        }
    if isinstance(zset, VecSet):
        return {
            "kind": "vec_set",
            "rows": zset.rows,
            "cols": zset.cols,
            "vset": _vset_to_json(zset.vset),
        }
    if isinstance(zset, ScenarioSpan):
        return {
            "kind": "scenario_span",
            "scenarios": [np.asarray(d).tolist() for d in zset.scenarios],
            "vset": _vset_to_json(zset.vset),
        }
    if isinstance(zset, MomentCone):
        return {"kind": "moment_cone", "side": zset.side}
    if isinstance(zset, LinearTransform):
        return {
            "kind": "linear_transform",
            "left": np.asarray(zset.left).tolist(),
            "right": np.asarray(zset.right).tolist(),
            "inner": to_json_dict(zset.inner),
        }
    if isinstance(zset, HadamardMask):
        return {
            "kind": "hadamard_mask",
            "mask": np.asarray(zset.mask).tolist(),
            "inner": to_json_dict(zset.inner),
        }
    if isinstance(zset, MinkowskiSum):
        return {"kind": "minkowski_sum", "parts": [to_json_dict(p) for p in zset.parts]}
    if isinstance(zset, Intersection):
        return {
            "kind": "intersection",
            "parts": [to_json_dict(p) for p in zset.parts],
            "slater_point": np.asarray(zset.slater_point).tolist(),
        }
    if isinstance(zset, CartesianProduct):
        return {"kind": "cartesian_product", "parts": [to_json_dict(p) for p in zset.parts]}
    if isinstance(zset, ConvexHull):
        return {"kind": "convex_hull", "parts": [to_json_dict(p) for p in zset.parts]}
    if isinstance(zset, FunctionalBand):
        return {
            "kind": "functional_band",
            "functional": np.asarray(zset.functional).tolist(),
            "radius": zset.radius,
        }
    if isinstance(zset, PsdSliceVec):
        return {"kind": "psd_slice_vec", "n_mean": zset.n_mean, "side": zset.side}
    raise UnsupportedOperation("no JSON form for %s" % type(zset).__name__)


def _vset_to_json(vset):
    if isinstance(vset, Ball):
        return {"kind": "ball", "p": vset.p, "radius": vset.radius, "dim": vset.dim}
    if isinstance(vset, Box):
        return {"kind": "box", "lower": list(vset.lower), "upper": list(vset.upper)}
    if isinstance(vset, Polyhedron):
        return {
            "kind": "polyhedron",
            "c": [list(r) for r in vset.c_mat],
            "d": list(vset.d_vec),
        }
    if isinstance(vset, AffineImage):
        return {
            "kind": "affine_image",
            "b": np.asarray(vset.b_mat).tolist(),
            "inner": _vset_to_json(vset.inner),
        }
    if isinstance(vset, NonnegOrthantCap):
        out = {"kind": "orthant_cap", "inner": _vset_to_json(vset.inner)}
        if vset.interior_point is not None:
            out["interior_point"] = list(vset.interior_point)
        return out
    raise UnsupportedOperation("no JSON form for %s" % type(vset).__name__)


def _vset_from_json(d):
    kind = d["kind"]
    if kind == "ball":
        return Ball(d["p"], float(d["radius"]), int(d["dim"]))
    if kind == "box":
        return Box(tuple(d["lower"]), tuple(d["upper"]))
    if kind == "polyhedron":
        return make_polyhedron(d["c"], d["d"])
    if kind == "affine_image":
        return AffineImage(tuple(map(tuple, d["b"])), _vset_from_json(d["inner"]))
    if kind == "orthant_cap":
        pt = d.get("interior_point")
        return NonnegOrthantCap(
            _vset_from_json(d["inner"]), tuple(pt) if pt is not None else None
        )
    raise ValueError("unknown vector-set kind %r" % kind)


def from_json_dict(d):
    kind = d["kind"]
    if kind == "norm_ball":
        return NormBall(d["norm"], float(d["radius"]), int(d["rows"]), int(d["cols"]))
    if kind == "psd_interval":
        return PsdInterval(tuple(map(tuple, d["lower"])), tuple(map(tuple, d["upper"])))
    if kind == "vec_set":
        return VecSet(int(d["rows"]), int(d["cols"]), _vset_from_json(d["vset"]))
    if kind == "scenario_span":
        return ScenarioSpan(
            tuple(tuple(map(tuple, s)) for s in d["scenarios"]),
            _vset_from_json(d["vset"]),
        )
    if kind == "moment_cone":
        return MomentCone(int(d["side"]))
    if kind == "linear_transform":
        return LinearTransform(
            tuple(map(tuple, d["left"])),
            tuple(map(tuple, d["right"])),
            from_json_dict(d["inner"]),
        )
    if kind == "hadamard_mask":
        return HadamardMask(tuple(map(tuple, d["mask"])), from_json_dict(d["inner"]))
    if kind == "minkowski_sum":
        return MinkowskiSum(tuple(from_json_dict(p) for p in d["parts"]))
    if kind == "intersection":
        return intersection(
            [from_json_dict(p) for p in d["parts"]], np.asarray(d["slater_point"])
        )
    if kind == "cartesian_product":
        return CartesianProduct(tuple(from_json_dict(p) for p in d["parts"]))
    if kind == "convex_hull":
        return ConvexHull(tuple(from_json_dict(p) for p in d["parts"]))
    if kind == "functional_band":
        return FunctionalBand(tuple(map(tuple, d["functional"])), float(d["radius"]))
    if kind == "psd_slice_vec":
        return PsdSliceVec(int(d["n_mean"]), int(d["side"]))
    raise ValueError("unknown matrix-set kind %r" % kind)


def load_json(path):
    with open(path) as fp:
        return from_json_dict(json.load(fp))


def dump_json(zset, path):
    with open(path, "w") as fp:
        json.dump(to_json_dict(zset), fp, indent=1)
