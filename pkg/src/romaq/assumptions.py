"""Spectral-norm bounds over uncertainty sets and certification of the
Gram-matrix condition the outer approximation relies on.

The bound omega satisfies ||D||_2,2 <= omega for every member D; the Gram
condition asks Abar^T Abar + 2 D^T Abar to stay PSD over the set.  Exact
global checking is NP-hard in general, so the module offers: a closed-form
test for spectral balls, a sufficient eigenvalue test from omega, a convex
relaxation for boxes, and a seeded sampling falsifier.  Three-valued
results throughout: certified / refuted / unknown.
"""

import math
from dataclasses import dataclass

import numpy as np

from romaq import expr as ex
from romaq import linalg, uset
from romaq.conic.program import ConicProgram
from romaq.conic.solver import OPTIMAL, solve

CERTIFIED = "certified"
REFUTED = "refuted"
UNKNOWN = "unknown"


@dataclass
class AssumptionReport:
    omega: float = None
    b_status: str = UNKNOWN
    b_method: str = ""
    b_witness: tuple = None
    margins: dict = None

    def to_json_dict(self):
        out = {
            "omega": self.omega,
            "b_status": self.b_status,
            "b_method": self.b_method,
            "margins": self.margins or {},
        }
        if self.b_witness is not None:
            out["b_witness"] = {
                "y": np.asarray(self.b_witness[0]).tolist(),
                "delta": np.asarray(self.b_witness[1]).tolist(),
            }
        return out


def omega_bound(zset):
    """A valid upper bound on the spectral norm over the set.

    Exact for boxes (entrywise bounds), spectral/Frobenius/l1/nuclear
    balls, matrix intervals; compositional rules for images, sums,
    intersections, hulls; raises for nodes without a rule.
    """
    if isinstance(zset, uset.NormBall):
        if zset.kind == "linf":
            return zset.radius * math.sqrt(zset.rows * zset.cols)
        # spectral <= frobenius <= l1 and spectral <= nuclear: radius works
        return zset.radius
    if isinstance(zset, uset.PsdInterval):
        hi = linalg.eigen_sym(np.asarray(zset.upper))[0][0]
        lo = linalg.eigen_sym(np.asarray(zset.lower))[0][-1]
        return max(abs(hi), abs(lo), hi, -lo)
    if isinstance(zset, uset.VecSet):
        v = zset.vset
        if isinstance(v, uset.Box):
            lo = np.asarray(v.lower)
            hi = np.asarray(v.upper)
            return float(np.sqrt(np.sum(np.maximum(lo**2, hi**2))))
        if isinstance(v, uset.Ball):
            if v.p == 2:
                return v.radius  # frobenius bound
            if v.p == 1:
                return v.radius
            return v.radius * math.sqrt(zset.rows * zset.cols)
        raise ValueError("no omega rule for this vectorized set")
    if isinstance(zset, uset.ScenarioSpan):
        spectra = [linalg.mat_norm(np.asarray(d), "spectral") for d in zset.scenarios]
        bounds = _coordinate_bounds(zset.vset)
        return float(sum(s * max(abs(lo), abs(hi)) for s, (lo, hi) in zip(spectra, bounds)))
    if isinstance(zset, uset.LinearTransform):
        return (
            linalg.mat_norm(np.asarray(zset.left), "spectral")
            * linalg.mat_norm(np.asarray(zset.right), "spectral")
            * omega_bound(zset.inner)
        )
    if isinstance(zset, uset.MinkowskiSum):
        return float(sum(omega_bound(p) for p in zset.parts))
    if isinstance(zset, uset.Intersection):
        best = math.inf
        for p in zset.parts:
            try:
                best = min(best, omega_bound(p))
            except ValueError:
                continue
        if math.isinf(best):
            raise ValueError("no omega rule applies to any intersection member")
        return best
    if isinstance(zset, uset.ConvexHull):
        return float(max(omega_bound(p) for p in zset.parts))
    if isinstance(zset, uset.CartesianProduct):
        return float(max(omega_bound(p) for p in zset.parts))
    raise ValueError("no omega rule for %s" % type(zset).__name__)


def _coordinate_bounds(vset):
    if isinstance(vset, uset.Box):
        return list(zip(vset.lower, vset.upper))
    if isinstance(vset, uset.Ball):
        r = vset.radius
        return [(-r, r)] * vset.dim
    if isinstance(vset, uset.Polyhedron):
        return list(vset._ranges)
    if isinstance(vset, uset.NonnegOrthantCap):
        return [(max(lo, 0.0), max(hi, 0.0)) for lo, hi in _coordinate_bounds(vset.inner)]
    raise ValueError("no coordinate bounds for %s" % type(vset).__name__)


def check_b_ellipsoid(abar, rho):
    """Exact test for spectral balls: smallest Gram eigenvalue vs 4 rho^2."""
    abar = np.asarray(abar, float)
    gram = abar.T @ abar
    return linalg.min_eig(gram) >= 4.0 * rho**2


def check_b_general(abar, omega):
    """Sufficient eigenvalue test from a spectral-norm bound; never refutes."""
    abar = np.asarray(abar, float)
    if linalg.min_eig(abar.T @ abar) >= 4.0 * omega**2:
        return CERTIFIED
    return UNKNOWN


def check_b_box_qp(abar, rho, return_value=False):
    """Convex certification heuristic for entrywise boxes.

    Minimizes  y^T A^T A y - 2 rho 1^T A y  over the normalized slice
    {A y >= 0, 1^T y = 1} of the sign-restricted directions; a nonnegative
    optimum certifies the Gram condition under the sign-symmetry argument.
    (The unnormalized ball version is strictly negative for every
    invertible matrix and rho > 0, so it can never certify.)
    """
    abar = np.asarray(abar, float)
    m, n = abar.shape
    if rho == 0.0:
        return (CERTIFIED, 0.0) if return_value else CERTIFIED
    prog = ConicProgram()
    y = prog.var_vector(n, "y")
    ay = ex.lmul(abar, y.reshape(-1, 1))[:, 0]
    prog.add_nonneg(list(ay))
    total = ex.LinExpr()
    for i in range(n):
        total += y[i]
    prog.add_equality([total - 1.0])
    t = ex.LinExpr.var(prog.new_var("t"))
    prog.add_soc([t + 1.0, *[e * 2.0 for e in ay], t - 1.0])
    ones = np.ones(m)
    prog.set_objective(t - ex.dot(2.0 * rho * ones, ay))
    sol = solve(prog)
    if sol.status == "primal_infeasible":
        # no sign-restricted direction at all: nothing to certify against
        status, value = CERTIFIED, 0.0
    elif sol.status != OPTIMAL:
        status, value = UNKNOWN, math.nan
    else:
        value = sol.objective
        status = CERTIFIED if value >= -1e-9 else UNKNOWN
    return (status, value) if return_value else status


def falsify_b_sampling(abar, zset, samples=10000, seed=0):
    """Search for a witness pair violating the Gram-PSD condition.

    Draws unit directions y and set members D; any y^T (A^T A + 2 D^T A) y
    below -1e-8 refutes with the witness.  Deterministic under the seed.
    """
    abar = np.asarray(abar, float)
    gram = abar.T @ abar
    n = abar.shape[1]
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        y = rng.standard_normal(n)
        y /= max(np.linalg.norm(y), 1e-300)
        member = uset.sample(zset, rng)
        val = y @ gram @ y + 2.0 * (y @ member.T @ abar @ y)
        if val < -1e-8:
            return REFUTED, (y, member)
    return "none_found", None


def report(abar, zset, samples=2000, seed=0):
    """Aggregate assumption report for a constraint's data."""
    rep = AssumptionReport(margins={})
    try:
        rep.omega = omega_bound(zset)
    except ValueError:
        rep.omega = None
    abar = np.asarray(abar, float)
    if isinstance(zset, uset.NormBall) and zset.kind == "spectral":
        ok = check_b_ellipsoid(abar, zset.radius)
        rep.b_status = CERTIFIED if ok else UNKNOWN
        rep.b_method = "spectral_ball_eigenvalue"
        rep.margins["gram_min_eig"] = linalg.min_eig(abar.T @ abar)
        if ok:
            return rep
    if rep.b_status != CERTIFIED and isinstance(zset, uset.NormBall) and zset.kind == "linf":
        status = check_b_box_qp(abar, zset.radius)
        if status == CERTIFIED:
            rep.b_status = CERTIFIED
            rep.b_method = "box_qp_relaxation"
            return rep
    if rep.b_status != CERTIFIED and rep.omega is not None:
        status = check_b_general(abar, rep.omega)
        if status == CERTIFIED:
            rep.b_status = CERTIFIED
            rep.b_method = "omega_eigenvalue"
            return rep
    status, witness = falsify_b_sampling(abar, zset, samples=samples, seed=seed)
    if status == REFUTED:
        rep.b_status = REFUTED
        rep.b_method = "sampling"
        rep.b_witness = witness
    return rep
