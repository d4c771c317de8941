"""Robust-counterpart builders.

Turns one uncertain (conic-)quadratic constraint over a matrix uncertainty
set into conic constraints:

* exact reformulation when the constraint is concave in the uncertainty
  (the uncertain matrix enters linearly and stays PSD),
* inner (safe) and outer (relaxed) approximations when it is convex in the
  uncertainty (Gram-matrix form), bracketing the true robust optimum,
* special builders for vector-uncertain quadratics and for ellipsoidal
  statistical sets,
* a deterministic vertex-enumeration construction used as ground truth on
  small instances.
"""

from dataclasses import dataclass, field

import numpy as np

from romaq import expr as ex
from romaq import linalg, uset
from romaq.conic.program import ConicProgram

QUADRATIC = "quadratic"
CONIC = "conic_quadratic"
CONCAVE = "concave"
CONVEX = "convex"


@dataclass
class RobustSpec:
    """One uncertain constraint.

    concave mode:  y^T (Abar + D) y + (bbar + D a)^T y + c <= 0  for all D
                   (Abar square, m = n, A(D) PSD on the set);
    convex mode:   ||(Abar + D) y||^2 (or its sqrt) + (bbar + Dmat D a)^T y
                   + c <= 0 for all D.
    """

    abar: np.ndarray
    bbar: np.ndarray
    avec: np.ndarray
    c: float
    zset: object
    form: str = QUADRATIC
    mode: str = CONCAVE
    dmat: np.ndarray = None

    def __post_init__(self):
        self.abar = np.asarray(self.abar, float)
        self.bbar = np.asarray(self.bbar, float)
        self.avec = np.asarray(self.avec, float)
        m, n = self.abar.shape
        if self.form not in (QUADRATIC, CONIC):
            raise ValueError("form must be quadratic or conic_quadratic")
        if self.mode not in (CONCAVE, CONVEX):
            raise ValueError("mode must be concave or convex")
        if self.mode == CONCAVE and m != n:
            raise ValueError("concave mode needs a square matrix")
        if self.bbar.shape != (n,) or self.avec.shape != (n,):
            raise ValueError("vector dimensions inconsistent with the matrix")
        if tuple(self.zset.shape) != (m, n):
            raise ValueError("uncertainty set shape %s does not match (%d, %d)"
                             % (self.zset.shape, m, n))
        if self.dmat is None:
            self.dmat = np.eye(n, m)
        else:
            self.dmat = np.asarray(self.dmat, float)
            if self.dmat.shape != (n, m):
                raise ValueError("D must be n x m")
        if self.mode == CONVEX:
            sv = linalg.singular_values(self.abar)
            if sv[-1] <= 1e-10 * max(1.0, sv[0]):
                raise ValueError("convex mode requires a full column-rank matrix")

    @property
    def dims(self):
        return self.abar.shape


@dataclass
class ReformulationResult:
    kind: str  # exact | inner | outer
    y: np.ndarray  # expression vector
    w: np.ndarray  # expression matrix (symmetric block)
    tau: object = None  # LinExpr for the conic corner, if any
    flags: list = field(default_factory=list)


def _corner_lmi(prog, w_mat, y, corner):
    n = len(y)
    big = ex.zeros_mat((n + 1, n + 1))
    for i in range(n):
        for j in range(n):
            big[i, j] = w_mat[i, j]
        big[i, n] = y[i].copy()
        big[n, i] = y[i].copy()
    big[n, n] = corner
    prog.add_psd(big)


def _rank_one(y, avec):
    n = len(y)
    out = ex.zeros_mat((n, len(avec)))
    for i in range(n):
        for j in range(len(avec)):
            if avec[j] != 0.0:
                out[i, j] = y[i] * avec[j]
    return out


def build_exact(spec: RobustSpec, prog: ConicProgram, y=None):
    """Exact reformulation of a concave-uncertainty constraint."""
    if spec.mode != CONCAVE:
        raise ValueError("build_exact needs a concave-mode spec")
    n = spec.abar.shape[0]
    if y is None:
        y = prog.var_vector(n, "y")
    w_mat, _ = prog.new_symmetric(n, "W")
    flags = []
    status, _ = check_concave_psd(spec.zset, spec.abar)
    if status == "fails":
        raise ValueError("A(D) is not PSD over the set; exact form is invalid")
    if status == "unknown":
        flags.append("psd_over_set_unverified")

    arg = ex.add_mat(w_mat, _rank_one(y, spec.avec))
    support = uset.support_epigraph(spec.zset, arg, prog)
    scalar = (
        ex.trace_pair(spec.abar, w_mat)
        + ex.dot(spec.bbar, y)
        + support
        + spec.c
    )
    tau = None
    if spec.form == CONIC:
        tau = ex.LinExpr.var(prog.new_var("tau"))
        scalar += tau * 0.25
        _corner_lmi(prog, w_mat, y, tau.copy())
    else:
        _corner_lmi(prog, w_mat, y, ex.LinExpr.constant(1.0))
    prog.add_nonneg([scalar * -1.0])
    return ReformulationResult("exact", y, w_mat, tau, flags)


def _gram_builder(spec: RobustSpec, prog, y, omega_sq):
    m, n = spec.abar.shape
    if y is None:
        y = prog.var_vector(n, "y")
    w_mat, _ = prog.new_symmetric(n, "W")
    gram = spec.abar.T @ spec.abar + omega_sq * np.eye(n)
    arg = ex.add_mat(
        ex.lmul(2.0 * spec.abar, w_mat),
        _rank_one(ex.lmul(spec.dmat.T, np.array(y, dtype=object).reshape(-1, 1))[:, 0], spec.avec)
        if np.any(spec.dmat) and np.any(spec.avec)
        else ex.zeros_mat((m, n)),
    )
    support = uset.support_epigraph(spec.zset, arg, prog)
    scalar = ex.trace_pair(gram, w_mat) + ex.dot(spec.bbar, y) + support + spec.c
    tau = None
    if spec.form == CONIC:
        tau = ex.LinExpr.var(prog.new_var("tau"))
        scalar += tau * 0.25
        _corner_lmi(prog, w_mat, y, tau.copy())
    else:
        _corner_lmi(prog, w_mat, y, ex.LinExpr.constant(1.0))
    prog.add_nonneg([scalar * -1.0])
    return y, w_mat, tau


def build_inner(spec: RobustSpec, omega: float, prog: ConicProgram, y=None):
    """Safe (inner) approximation for convex-uncertainty constraints.

    ``omega`` must upper-bound the spectral norm over the set (see
    :mod:`romaq.assumptions`).
    """
    if spec.mode != CONVEX:
        raise ValueError("build_inner needs a convex-mode spec")
    if omega <= 0:
        raise ValueError("omega must be positive")
    y, w_mat, tau = _gram_builder(spec, prog, y, omega**2)
    return ReformulationResult("inner", y, w_mat, tau)


def build_outer(spec: RobustSpec, prog: ConicProgram, y=None, b_status="unknown"):
    """Relaxed (outer) approximation for convex-uncertainty constraints.

    Valid as a relaxation when the Gram matrix stays PSD over the set
    (checked separately); otherwise the result is only a heuristic and the
    flag records it.
    """
    if spec.mode != CONVEX:
        raise ValueError("build_outer needs a convex-mode spec")
    y, w_mat, tau = _gram_builder(spec, prog, y, 0.0)
    res = ReformulationResult("outer", y, w_mat, tau)
    if b_status != "certified":
        res.flags.append("heuristic_lower_bound_unverified")
    return res


def violation_bound(y, omega, form):
    """Worst-case constraint violation of an outer-feasible point."""
    nrm = float(np.linalg.norm(np.asarray(y, float)))
    if form == QUADRATIC:
        return omega**2 * nrm**2
    if form == CONIC:
        return omega * nrm
    raise ValueError("unknown form %r" % (form,))


def _quad_upper_soc(prog, f_mat, y, upper):
    """Constraint ||f_mat y||^2 <= upper via a rotated second-order cone."""
    fy = ex.lmul(np.asarray(f_mat, float), np.array(y, dtype=object).reshape(-1, 1))[:, 0]
    prog.add_soc([upper + 1.0, *[e * 2.0 for e in fy], upper - 1.0])


def build_vector_uncertain(abar, mats, bvecs, c, vset, prog, method="soc", y=None):
    """Reformulate  y^T (Abar + sum_i z_i A_i) y + (bbar...) uncertainty in a
    vector z; ``mats`` lists the A_i, ``bvecs`` the matching b^i offsets.

    method='soc' needs every A_i (and Abar) PSD and a set in the
    nonnegative orthant; the quadratics then ride second-order cones.
    method='lmi' is the general trace form with the corner-1 LMI.
    """
    abar = np.asarray(abar, float)
    n = abar.shape[0]
    t = len(mats)
    bvecs = [np.zeros(n) if b is None else np.asarray(b, float) for b in bvecs] if bvecs else [np.zeros(n)] * t
    if y is None:
        y = prog.var_vector(n, "y")
    if method == "soc":
        for a_i in mats:
            if linalg.min_eig(np.asarray(a_i, float)) < -1e-9:
                raise ValueError("soc variant requires PSD coefficient matrices")
        if linalg.min_eig(abar) < -1e-9:
            raise ValueError("soc variant requires a PSD base matrix")
        v = ex.var_vec(prog.new_vars(t, "v"))
        for i, (a_i, b_i) in enumerate(zip(mats, bvecs)):
            f_i = linalg.psd_factor(np.asarray(a_i, float))
            _quad_upper_soc(prog, f_i, y, v[i] - ex.dot(b_i, y))
        t0 = ex.LinExpr.var(prog.new_var("t0"))
        f0 = linalg.psd_factor(abar)
        _quad_upper_soc(prog, f0, y, t0.copy())
        support = uset._vec_support(vset, v, prog)
        prog.add_nonneg([(t0 + support + c) * -1.0])
        return {"y": y, "v": v}
    if method == "lmi":
        w_mat, _ = prog.new_symmetric(n, "W")
        _corner_lmi(prog, w_mat, y, ex.LinExpr.constant(1.0))
        coords = np.array(
            [ex.trace_pair(np.asarray(a_i, float), w_mat) + ex.dot(b_i, y)
             for a_i, b_i in zip(mats, bvecs)],
            dtype=object,
        )
        support = uset._vec_support(vset, coords, prog)
        scalar = ex.trace_pair(abar, w_mat) + support + c
        prog.add_nonneg([scalar * -1.0])
        return {"y": y, "w": w_mat}
    raise ValueError("method must be 'soc' or 'lmi'")


def build_statistical(b_mat, rho, c, prog, mu=None, sigma=None, y=None):
    """Ellipsoidal statistical set around (mean, svec covariance).

    Emits  mu^T y + <sigma, W> + rho ||B^T (y; svec W1)|| + c <= 0  with the
    split W1 >= W and the corner-1 LMI; mu/sigma default to zero.
    """
    b_mat = np.asarray(b_mat, float)
    d = b_mat.shape[0]
    # d = n + n(n+1)/2
    n = int((np.sqrt(9 + 8 * d) - 3) / 2 + 0.5)
    if n + n * (n + 1) // 2 != d:
        raise ValueError("B dimension is not n + n(n+1)/2 for any n")
    mu = np.zeros(n) if mu is None else np.asarray(mu, float)
    sigma = np.zeros((n, n)) if sigma is None else np.asarray(sigma, float)
    if y is None:
        y = prog.var_vector(n, "y")
    w_mat, _ = prog.new_symmetric(n, "W")
    w1_mat, _ = prog.new_symmetric(n, "W1")
    _corner_lmi(prog, w_mat, y, ex.LinExpr.constant(1.0))
    prog.add_psd(ex.add_mat(w1_mat, ex.scale_mat(w_mat, -1.0)))
    stacked = np.concatenate([np.array(y, dtype=object), ex.svec_mat(w1_mat)])
    arg = [ex.dot(b_mat[:, j], stacked) for j in range(b_mat.shape[1])]
    t = ex.LinExpr.var(prog.new_var("stat_t"))
    prog.add_soc([t, *arg])
    scalar = ex.dot(mu, y) + ex.trace_pair(sigma, w_mat) + t * rho + c
    prog.add_nonneg([scalar * -1.0])
    return {"y": y, "w": w_mat, "w1": w1_mat}


def exact_convex_by_vertices(spec: RobustSpec, vertices, prog: ConicProgram, y=None):
    """One deterministic constraint per vertex: ground truth on small sets."""
    if spec.mode != CONVEX:
        raise ValueError("vertex enumeration applies to convex-mode specs")
    m, n = spec.abar.shape
    if y is None:
        y = prog.var_vector(n, "y")
    for vert in vertices:
        vert = np.asarray(vert, float)
        a_v = spec.abar + vert
        b_v = spec.bbar + spec.dmat @ vert @ spec.avec
        rhs = ex.dot(-b_v, y) - spec.c
        if spec.form == QUADRATIC:
            _quad_upper_soc(prog, a_v, y, rhs)
        else:
            ay = ex.lmul(a_v, np.array(y, dtype=object).reshape(-1, 1))[:, 0]
            prog.add_soc([rhs, *ay])
    return {"y": y}


def l1_ball_vertices(rho, m, n):
    """The 2mn extreme points of an l1 ball."""
    verts = []
    for i in range(m):
        for j in range(n):
            for s in (1.0, -1.0):
                v = np.zeros((m, n))
                v[i, j] = s * rho
                verts.append(v)
    return verts


def box_vertices(rho, m, n):
    """All sign patterns of an entrywise box (guarded to mn <= 16)."""
    if m * n > 16:
        raise ValueError("box vertex enumeration limited to mn <= 16")
    verts = []
    for bits in range(2 ** (m * n)):
        v = np.empty(m * n)
        for k in range(m * n):
            v[k] = rho if (bits >> k) & 1 else -rho
        verts.append(v.reshape(m, n))
    return verts


def check_concave_psd(zset, abar):
    """Is Abar + D PSD for every D in the set?

    Returns (status, witness) with status in {'holds', 'fails', 'unknown'};
    a 'fails' witness is a set member with a negative eigenvalue direction.
    Decides exactly for spectral/Frobenius balls, matrix intervals, l1 and
    small boxes; otherwise samples and reports 'unknown' when clean.
    """
    abar = np.asarray(abar, float)
    sym = 0.5 * (abar + abar.T)
    if isinstance(zset, uset.NormBall) and zset.kind in ("spectral", "frobenius"):
        # worst perturbation is -radius v v^T at the minimal eigenvector
        lo = linalg.min_eig(sym)
        if lo >= zset.radius:
            return "holds", None
        w, v = linalg.eigen_sym(sym)
        vec = v[:, -1]
        return "fails", -zset.radius * np.outer(vec, vec)
    if isinstance(zset, uset.PsdInterval):
        lo = linalg.min_eig(sym + np.asarray(zset.lower))
        if lo >= -1e-12:
            return "holds", None
        return "fails", np.asarray(zset.lower, float)
    if isinstance(zset, uset.NormBall) and zset.kind == "l1":
        n = zset.rows
        for vert in l1_ball_vertices(zset.radius, n, zset.cols):
            if linalg.min_eig(sym + 0.5 * (vert + vert.T)) < -1e-12:
                return "fails", vert
        return "holds", None
    if isinstance(zset, uset.NormBall) and zset.kind == "linf" and zset.rows * zset.cols <= 16:
        for vert in box_vertices(zset.radius, zset.rows, zset.cols):
            if linalg.min_eig(sym + 0.5 * (vert + vert.T)) < -1e-12:
                return "fails", vert
        return "holds", None
    if isinstance(zset, uset.ScenarioSpan):
        nonneg = isinstance(zset.vset, uset.NonnegOrthantCap) or (
            isinstance(zset.vset, uset.Box) and np.all(np.asarray(zset.vset.lower) >= 0.0)
        )
        if nonneg and linalg.min_eig(sym) >= -1e-12 and all(
            linalg.min_eig(0.5 * (np.asarray(d) + np.asarray(d).T)) >= -1e-12
            for d in zset.scenarios
        ):
            return "holds", None
    rng = np.random.default_rng(20240)
    for _ in range(2000):
        member = uset.sample(zset, rng)
        if linalg.min_eig(sym + 0.5 * (member + member.T)) < -1e-9:
            return "fails", member
    return "unknown", None
