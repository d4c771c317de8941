"""Mean-variance portfolio drivers: nominal, robust, and chance variants,
plus exact worst-case scenario evaluation over the confidence set.

Returns are monthly decimals; reports annualize as 12x the mean and
sqrt(12)x the standard deviation.
"""

import math
from dataclasses import dataclass

import numpy as np

from romaq import expr as ex
from romaq import datadriven as dd
from romaq import linalg
from romaq.conic.program import ConicProgram
from romaq.conic.solver import OPTIMAL, solve


@dataclass
class PortfolioProblem:
    returns: np.ndarray  # n_obs x n_assets, monthly decimals
    lam: float = 3.0
    alpha: float = 0.05

    def __post_init__(self):
        self.returns = np.asarray(self.returns, float)
        if self.lam <= 0:
            raise ValueError("risk aversion must be positive")


def simulate_returns(n_assets, n_obs, seed, mean_scale=0.008, vol_scale=0.04):
    """Synthetic monthly returns from a two-factor covariance model."""
    rng = np.random.default_rng(seed)
    mu = mean_scale * (1.0 + 0.5 * rng.standard_normal(n_assets))
    load = rng.uniform(0.3, 1.0, (n_assets, 2))
    fac = rng.standard_normal((n_obs, 2)) * vol_scale
    idio = rng.standard_normal((n_obs, n_assets)) * vol_scale * 0.5
    return mu + fac @ load.T + idio


def _simplex(prog, omega):
    total = ex.LinExpr()
    for w in omega:
        total += w
    prog.add_equality([total - 1.0])
    prog.add_nonneg(list(omega))


def _solve_or_raise(prog, what):
    sol = solve(prog)
    if sol.status != OPTIMAL:
        raise RuntimeError("%s solve failed with status %s" % (what, sol.status))
    return sol


def portfolio_nominal(est, lam):
    """max  mu' w - lam w' Sigma w  over the simplex."""
    n = est.dim
    prog = ConicProgram()
    omega = prog.var_vector(n, "w")
    _simplex(prog, omega)
    t = ex.LinExpr.var(prog.new_var("risk"))
    f = linalg.psd_factor(est.sigma)
    if f.size:
        fy = ex.lmul(f, np.array(omega, dtype=object).reshape(-1, 1))[:, 0]
        prog.add_soc([t + 1.0, *[e * 2.0 for e in fy], t - 1.0])
    else:
        prog.add_nonneg([t.copy()])
    prog.set_objective(ex.dot(est.mu, omega) - t * lam, sense="max")
    sol = _solve_or_raise(prog, "nominal portfolio")
    w = np.array([e.value(sol.x) for e in omega])
    return w, -sol.objective


def portfolio_robust(cs: dd.ConfidenceSet, lam):
    """max  mu' w - lam w' Sigma w  for all (mu, Sigma) in the set."""
    n = cs.dim
    prog = ConicProgram()
    omega = prog.var_vector(n, "w")
    _simplex(prog, omega)
    w_mat, _ = prog.new_symmetric(n, "W")
    big = ex.zeros_mat((n + 1, n + 1))
    for i in range(n):
        for j in range(n):
            big[i, j] = w_mat[i, j]
        big[i, n] = omega[i].copy()
        big[n, i] = omega[i].copy()
    big[n, n] = ex.LinExpr.constant(1.0)
    prog.add_psd(big)
    stacked = np.concatenate(
        [np.array([o * -1.0 for o in omega], dtype=object),
         np.array([e * lam for e in ex.svec_mat(w_mat)], dtype=object)]
    )
    b_mat = cs.b_mat
    arg = [ex.dot(b_mat[:, j], stacked) for j in range(b_mat.shape[1])]
    t = ex.LinExpr.var(prog.new_var("supp"))
    prog.add_soc([t, *arg])
    prog.set_objective(
        ex.dot(cs.mu, omega) - ex.trace_pair(lam * cs.sigma, w_mat) - t * cs.rho,
        sense="max",
    )
    sol = _solve_or_raise(prog, "robust portfolio")
    w = np.array([e.value(sol.x) for e in omega])
    return w, -sol.objective


def portfolio_chance(cs: dd.ConfidenceSet, lam, alpha=None):
    """Normal-approximation chance variant at confidence 1 - alpha."""
    alpha = cs.alpha if alpha is None else alpha
    n = cs.dim
    prog = ConicProgram()
    omega = prog.var_vector(n, "w")
    _simplex(prog, omega)
    w_mat, _ = prog.new_symmetric(n, "W")
    big = ex.zeros_mat((n + 1, n + 1))
    for i in range(n):
        for j in range(n):
            big[i, j] = w_mat[i, j]
        big[i, n] = omega[i].copy()
        big[n, i] = omega[i].copy()
    big[n, n] = ex.LinExpr.constant(1.0)
    prog.add_psd(big)
    stacked = np.concatenate(
        [np.array(omega, dtype=object),
         np.array([e * -lam for e in ex.svec_mat(w_mat)], dtype=object)]
    )
    b_mat = cs.b_mat
    arg = [ex.dot(b_mat[:, j], stacked) for j in range(b_mat.shape[1])]
    t = ex.LinExpr.var(prog.new_var("chance_t"))
    prog.add_soc([t, *arg])
    q = ex.LinExpr.var(prog.new_var("risk"))
    f = linalg.psd_factor(cs.sigma)
    if f.size:
        fy = ex.lmul(f, np.array(omega, dtype=object).reshape(-1, 1))[:, 0]
        prog.add_soc([q + 1.0, *[e * 2.0 for e in fy], q - 1.0])
    else:
        prog.add_nonneg([q.copy()])
    z_val = max(dd.normal_quantile(1.0 - alpha), 0.0)
    prog.set_objective(
        ex.dot(cs.mu, omega) - q * lam - t * (z_val / math.sqrt(cs.n_obs)),
        sense="max",
    )
    sol = _solve_or_raise(prog, "chance portfolio")
    w = np.array([e.value(sol.x) for e in omega])
    return w, -sol.objective


def worst_case_scenario(omega, cs: dd.ConfidenceSet, lam):
    """Exact minimizer of the portfolio objective over the confidence set.

    The objective is linear in (mu, svec Sigma), so the worst case is a
    support-function evaluation; solved directly in primal form, returning
    the attaining (mu*, Sigma*).
    """
    omega = np.asarray(omega, float)
    n = cs.dim
    d = cs.theta_dim
    b_mat = cs.b_mat
    rank = b_mat.shape[1]
    prog = ConicProgram()
    gamma = prog.var_vector(d, "gamma")
    nu = prog.var_vector(rank, "nu")
    center = cs.center
    for i in range(d):
        prog.add_equality([gamma[i] - ex.dot(b_mat[i], nu) - center[i]])
    prog.add_soc([ex.LinExpr.constant(cs.rho), *nu])
    tail = ex.zeros_mat((n, n))
    iu, ju = np.triu_indices(n)
    sq2 = math.sqrt(2.0)
    k = 0
    for i, j in zip(iu, ju):
        e = gamma[n + k]
        if i == j:
            tail[i, j] = e.copy()
        else:
            tail[i, j] = e * (1.0 / sq2)
            tail[j, i] = e * (1.0 / sq2)
        k += 1
    prog.add_psd(tail)
    u = np.concatenate([-omega, lam * linalg.svec(np.outer(omega, omega))])
    prog.set_objective(ex.dot(u, gamma), sense="max")
    sol = _solve_or_raise(prog, "worst-case scenario")
    gvals = np.array([e.value(sol.x) for e in gamma])
    mu_star = gvals[:n]
    sigma_star = linalg.smat(gvals[n:])
    return mu_star, sigma_star, -sol.objective


def evaluate(omega, mu, sigma, lam):
    """Objective, annualized risk, annualized return of a weight vector."""
    omega = np.asarray(omega, float)
    mu = np.asarray(mu, float)
    sigma = np.asarray(sigma, float)
    var = float(omega @ sigma @ omega)
    return {
        "objective": float(mu @ omega - lam * var),
        "ann_risk": math.sqrt(12.0) * math.sqrt(max(var, 0.0)),
        "ann_return": 12.0 * float(mu @ omega),
    }


def run_comparison(returns, lam=3.0, alpha=0.05, alpha_small=0.98):
    """Solve nominal/robust/robust-small/chance and evaluate each solution
    under the nominal scenario and both worst-case scenarios (Table-1
    layout).  ``alpha_small`` is the low-confidence companion set."""
    est = dd.estimate(returns)
    cs_hi = dd.build_confidence_set(est, alpha)
    cs_lo = dd.build_confidence_set(est, alpha_small)
    solutions = {
        "nominal": portfolio_nominal(est, lam)[0],
        "robust": portfolio_robust(cs_hi, lam)[0],
        "robust_small": portfolio_robust(cs_lo, lam)[0],
        "chance": portfolio_chance(cs_hi, lam)[0],
    }
    rows = {}
    for name, w in solutions.items():
        per = {"nominal": evaluate(w, est.mu, est.sigma, lam)}
        for scen_name, cset in (("worst_hi", cs_hi), ("worst_lo", cs_lo)):
            mu_s, sig_s, _ = worst_case_scenario(w, cset, lam)
            per[scen_name] = evaluate(w, mu_s, sig_s, lam)
        rows[name] = per
    return solutions, rows, est, cs_hi, cs_lo
