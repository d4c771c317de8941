"""Robust linear regression under column-bounded data inaccuracy.

The design matrix is [X, response, 1]; the coefficient on the response
column is pinned to -1 so the residual is X c + b - Y.  Uncertainty:
entrywise bounds rho_j per column (the constant column exact), plus an
aggregate band on the total perturbation of designated columns.
"""

import math
from dataclasses import dataclass

import numpy as np

from romaq import expr as ex
from romaq import uset
from romaq.conic.program import ConicProgram
from romaq.conic.solver import OPTIMAL, solve


@dataclass
class RegressionInstance:
    x_mat: np.ndarray            # m x n independent variables
    response: np.ndarray         # m
    agg_cols: tuple              # column indices sharing the aggregate band
    rho_agg: float
    rho_cols: np.ndarray         # n+1 per-column entry bounds (incl. response)

    def __post_init__(self):
        self.x_mat = np.asarray(self.x_mat, float)
        self.response = np.asarray(self.response, float)
        self.rho_cols = np.asarray(self.rho_cols, float)
        m, n = self.x_mat.shape
        if self.response.shape != (m,):
            raise ValueError("response length must match the observation count")
        if self.rho_cols.shape != (n + 1,):
            raise ValueError("need one entry bound per data column (incl. response)")
        if any(not 0 <= j <= n for j in self.agg_cols):
            raise ValueError("aggregate column index out of range")

    @property
    def design(self):
        m = self.x_mat.shape[0]
        return np.column_stack([self.x_mat, self.response, np.ones(m)])

    @property
    def dims(self):
        m, n = self.x_mat.shape
        return m, n


def from_fractions(x_mat, response, agg_cols, agg_frac=0.001, col_frac=0.01):
    """Bounds from the data scale: per-column 1%-style maxima and an
    aggregate fraction of the designated columns' total magnitude."""
    x_mat = np.asarray(x_mat, float)
    response = np.asarray(response, float)
    design = np.column_stack([x_mat, response])
    rho_cols = col_frac * np.abs(design).max(axis=0)
    rho_agg = agg_frac * sum(np.abs(design[:, j]).sum() for j in agg_cols)
    return RegressionInstance(x_mat, response, tuple(agg_cols), rho_agg, rho_cols)


def uncertainty_set(inst: RegressionInstance):
    """Box with per-column bounds (constant column pinned) cap a band on
    the aggregate perturbation of the designated columns."""
    m, n = inst.dims
    cols = n + 2
    lo = np.zeros((m, cols))
    hi = np.zeros((m, cols))
    for j in range(n + 1):
        lo[:, j] = -inst.rho_cols[j]
        hi[:, j] = inst.rho_cols[j]
    box = uset.VecSet(m, cols, uset.Box(tuple(lo.ravel()), tuple(hi.ravel())))
    func = np.zeros((m, cols))
    for j in inst.agg_cols:
        func[:, j] = 1.0
    band = uset.FunctionalBand(tuple(map(tuple, func)), inst.rho_agg)
    return uset.intersection([box, band], np.zeros((m, cols)))


def regression_omega(inst: RegressionInstance):
    """sqrt(m) times the Euclidean norm of the per-column bounds."""
    m, _ = inst.dims
    return math.sqrt(m) * float(np.linalg.norm(inst.rho_cols))


def solve_nominal(inst: RegressionInstance):
    """min ||design y|| with the response coefficient pinned to -1."""
    m, n = inst.dims
    design = inst.design
    prog = ConicProgram()
    y = prog.var_vector(n + 2, "y")
    prog.add_equality([y[n] + 1.0])
    t = ex.LinExpr.var(prog.new_var("t"))
    resid = ex.lmul(design, np.array(y, dtype=object).reshape(-1, 1))[:, 0]
    prog.add_soc([t, *resid])
    prog.set_objective(t)
    sol = solve(prog)
    if sol.status != OPTIMAL:
        raise RuntimeError("nominal regression failed: %s" % sol.status)
    return np.array([e.value(sol.x) for e in y]), sol.objective


def solve_inner(inst: RegressionInstance, omega=None):
    """Safe approximation of the worst-case residual norm."""
    m, n = inst.dims
    cols = n + 2
    design = inst.design
    if omega is None:
        omega = regression_omega(inst)
    zset = uncertainty_set(inst)
    prog = ConicProgram()
    y = prog.var_vector(cols, "y")
    prog.add_equality([y[n] + 1.0])
    w_mat, _ = prog.new_symmetric(cols, "W")
    tau = ex.LinExpr.var(prog.new_var("tau"))
    big = ex.zeros_mat((cols + 1, cols + 1))
    for i in range(cols):
        for j in range(cols):
            big[i, j] = w_mat[i, j]
        big[i, cols] = y[i].copy()
        big[cols, i] = y[i].copy()
    big[cols, cols] = tau.copy()
    prog.add_psd(big)
    arg = ex.lmul(2.0 * design, w_mat)
    support = uset.support_epigraph(zset, arg, prog)
    gram = design.T @ design + omega**2 * np.eye(cols)
    prog.set_objective(ex.trace_pair(gram, w_mat) + support + tau * 0.25)
    sol = solve(prog)
    if sol.status != OPTIMAL:
        raise RuntimeError("robust regression failed: %s" % sol.status)
    return np.array([e.value(sol.x) for e in y]), sol.objective


def worst_case_heuristic(inst: RegressionInstance, y):
    """Greedy feasible scenario for the regression set.

    Box-extreme signs per entry with per-column radii; the aggregate band
    is respected by clipping each added entry to the remaining budget.
    """
    y = np.asarray(y, float)
    m, n = inst.dims
    cols = n + 2
    design = inst.design
    resid = design @ y
    agg = set(inst.agg_cols)
    delta = np.zeros((m, cols))
    agg_total = 0.0
    order = sorted(range(n + 1), key=lambda j: (-abs(y[j]), j))
    for j in order:
        for i in range(m):
            val = np.sign(resid[i]) * np.sign(y[j]) * inst.rho_cols[j]
            if val == 0.0:
                continue
            if j in agg:
                room_lo = -inst.rho_agg - agg_total
                room_hi = inst.rho_agg - agg_total
                val = min(max(val, room_lo), room_hi)
                if val == 0.0:
                    continue
                agg_total += val
            delta[i, j] = val
    return delta


def worst_case_residual(inst: RegressionInstance, y):
    delta = worst_case_heuristic(inst, y)
    return float(np.linalg.norm((inst.design + delta) @ y)), delta


def gen_synthetic(seed, m=40, n=3, collinear=0.995, noise=0.05):
    """Nearly collinear design with a planted linear model."""
    rng = np.random.default_rng(seed)
    base = rng.standard_normal(m)
    x_mat = np.empty((m, n))
    for j in range(n):
        x_mat[:, j] = collinear * base + (1.0 - collinear) * rng.standard_normal(m)
    coef = rng.uniform(0.5, 1.5, n)
    response = x_mat @ coef + 0.3 + noise * rng.standard_normal(m)
    return x_mat, response
