"""Data-driven confidence sets for (mean, covariance) and their robust and
chance-constraint counterparts.

From an i.i.d. sample the module estimates the stacked parameter
theta = (mean; upper-triangle covariance), the asymptotic covariance Vhat of
sqrt(n)(theta_hat - theta) via the influence-function estimator, and builds
the ellipsoidal confidence region intersected with the PSD slice.  The
radius is sqrt(chi2_quantile(rank Vhat, 1 - alpha) / n).
"""

import math
from dataclasses import dataclass

import numpy as np

from romaq import expr as ex
from romaq import linalg, statfun, uset
from romaq.backend import svec_len
from romaq.conic.program import ConicProgram

chi2_quantile = statfun.chi2_quantile
normal_quantile = statfun.normal_quantile


@dataclass
class MomentEstimates:
    mu: np.ndarray
    sigma: np.ndarray
    theta: np.ndarray       # (mu; upper-triangle sigma entries, row-major)
    vhat: np.ndarray
    rank: int
    n_obs: int

    @property
    def dim(self):
        return self.mu.size


@dataclass
class ConfidenceSet:
    mu: np.ndarray
    sigma: np.ndarray
    psi: np.ndarray         # theta coords -> (mu; svec sigma) coords
    r_factor: np.ndarray    # rank x d with R^T R = pinv(Vhat)
    rho: float
    rank: int
    n_obs: int
    alpha: float

    @property
    def dim(self):
        return self.mu.size

    @property
    def theta_dim(self):
        return self.psi.shape[0]

    @property
    def b_mat(self):
        """Ellipsoid shape matrix in (mu; svec sigma) coordinates."""
        r_pinv = np.linalg.pinv(self.r_factor)
        return self.psi @ r_pinv

    @property
    def center(self):
        return np.concatenate([self.mu, linalg.svec(self.sigma)])


def theta_indices(dim):
    """Row-major upper-triangle order used for the covariance block."""
    pairs = []
    for i in range(dim):
        for j in range(i, dim):
            pairs.append((i, j))
    return pairs


def psi_matrix(dim):
    """Diagonal map from theta coordinates to (mu; svec sigma) coordinates."""
    d = dim + svec_len(dim)
    psi = np.zeros((d, d))
    for i in range(dim):
        psi[i, i] = 1.0
    for k, (i, j) in enumerate(theta_indices(dim)):
        psi[dim + k, dim + k] = 1.0 if i == j else math.sqrt(2.0)
    return psi


def estimate(samples):
    """Sample moments (1/n normalization) and the influence-function Vhat."""
    samples = np.asarray(samples, float)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise ValueError("need a 2-D sample with at least two observations")
    n, dim = samples.shape
    mu = samples.mean(axis=0)
    centered = samples - mu
    sigma = centered.T @ centered / n
    pairs = theta_indices(dim)
    theta = np.concatenate([mu, [sigma[i, j] for i, j in pairs]])
    g = np.empty((n, dim + len(pairs)))
    g[:, :dim] = centered
    for k, (i, j) in enumerate(pairs):
        g[:, dim + k] = centered[:, i] * centered[:, j] - sigma[i, j]
    vhat = g.T @ g / n
    vhat = 0.5 * (vhat + vhat.T)
    _, rank = linalg.pseudo_inverse(vhat)
    return MomentEstimates(mu, sigma, theta, vhat, rank, n)


def v_matrix_2d(moments):
    """Closed-form 5x5 asymptotic covariance for the 2-D case.

    ``moments[(k, l)]`` are the central moments up to k + l = 4; test
    oracle for the influence-function estimator.
    """
    m = lambda k, l: float(moments.get((k, l), 0.0))
    v = np.array(
        [
            [m(2, 0), m(1, 1), m(3, 0), m(2, 1), m(1, 2)],
            [m(1, 1), m(0, 2), m(2, 1), m(1, 2), m(0, 3)],
            [m(3, 0), m(2, 1), m(4, 0) - m(2, 0) ** 2,
             m(3, 1) - m(1, 1) * m(2, 0), m(2, 2) - m(2, 0) * m(0, 2)],
            [m(2, 1), m(1, 2), m(3, 1) - m(1, 1) * m(2, 0),
             m(2, 2) - m(1, 1) ** 2, m(1, 3) - m(1, 1) * m(0, 2)],
            [m(1, 2), m(0, 3), m(2, 2) - m(2, 0) * m(0, 2),
             m(1, 3) - m(1, 1) * m(0, 2), m(0, 4) - m(0, 2) ** 2],
        ]
    )
    return v


def build_confidence_set(est: MomentEstimates, alpha, rank_tol=1e-10):
    """Ellipsoid around theta_hat with chi-square radius, PSD-sliced."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    vinv, rank = linalg.pseudo_inverse(est.vhat, rank_tol)
    if rank == 0:
        raise ValueError("degenerate sample: Vhat has rank zero")
    w, vecs = linalg.eigen_sym(vinv)
    keep = w > rank_tol * max(w.max(), 1e-300)
    r_factor = (np.sqrt(w[keep])[:, None] * vecs[:, keep].T)
    rho = math.sqrt(chi2_quantile(rank, 1.0 - alpha) / est.n_obs)
    return ConfidenceSet(
        est.mu, est.sigma, psi_matrix(est.dim), r_factor, rho, rank, est.n_obs, alpha
    )


def membership(cs: ConfidenceSet, mu, sigma, tol=1e-9):
    """Is (mu, sigma) inside the confidence region (ellipsoid and PSD)?"""
    mu = np.asarray(mu, float)
    sigma = np.asarray(sigma, float)
    pairs = theta_indices(cs.dim)
    theta = np.concatenate([mu, [sigma[i, j] for i, j in pairs]])
    est_theta = np.concatenate([cs.mu, [cs.sigma[i, j] for i, j in pairs]])
    diff = theta - est_theta
    vinv = cs.r_factor.T @ cs.r_factor
    quad = cs.n_obs * diff @ vinv @ diff
    chi2 = cs.rho**2 * cs.n_obs
    # range condition for the rank-deficient case
    vhat_pinv_range = cs.r_factor @ diff
    recon = np.linalg.pinv(cs.r_factor) @ vhat_pinv_range
    in_range = np.linalg.norm(recon - diff) <= 1e-7 * (1.0 + np.linalg.norm(diff))
    psd_ok = linalg.min_eig(sigma) >= -tol
    return bool(quad <= chi2 + tol) and in_range and psd_ok


def to_matrix_set(cs: ConfidenceSet, eps=1e-6):
    """Uncertainty-set AST over column vectors (mu; svec sigma)."""
    d = cs.theta_dim
    b_mat = cs.b_mat
    ellipsoid = uset.VecSet(
        d, 1, uset.AffineImage(tuple(map(tuple, b_mat)), uset.Ball(2, cs.rho, cs.rank))
    )
    center = uset.ScenarioSpan(
        (tuple(map(tuple, cs.center.reshape(-1, 1))),), uset.Box((1.0,), (1.0,))
    )
    shifted = uset.MinkowskiSum((center, ellipsoid))
    slice_set = uset.PsdSliceVec(cs.dim, cs.dim)
    point = _slater_candidate(cs, eps)
    return uset.intersection([shifted, slice_set], point)


def _slater_candidate(cs: ConfidenceSet, eps):
    """Strictly feasible point: center with a small PSD bump if needed."""
    sig = cs.sigma
    bump = 0.0
    lo = linalg.min_eig(sig)
    if lo <= eps:
        bump = eps - lo
    cand = np.concatenate([cs.mu, linalg.svec(sig + bump * np.eye(cs.dim))])
    return cand.reshape(-1, 1)


def _stacked_arg(cs: ConfidenceSet, y, w_mat):
    stacked = np.concatenate([np.array(y, dtype=object), ex.svec_mat(w_mat)])
    b_mat = cs.b_mat
    return [ex.dot(b_mat[:, j], stacked) for j in range(b_mat.shape[1])]


def build_robust_quadratic(cs: ConfidenceSet, c, prog: ConicProgram, y=None):
    """Robust counterpart of  y' Sigma y + mu' y + c <= 0  over the set.

    Emits  mu_hat' y + <Sigma_hat, W> + rho ||B' (y; svec W)|| + c <= 0 with
    the corner-1 LMI.
    """
    n = cs.dim
    if y is None:
        y = prog.var_vector(n, "y")
    w_mat, _ = prog.new_symmetric(n, "W")
    big = ex.zeros_mat((n + 1, n + 1))
    for i in range(n):
        for j in range(n):
            big[i, j] = w_mat[i, j]
        big[i, n] = y[i].copy()
        big[n, i] = y[i].copy()
    big[n, n] = ex.LinExpr.constant(1.0)
    prog.add_psd(big)
    arg = _stacked_arg(cs, y, w_mat)
    t = ex.LinExpr.var(prog.new_var("rob_t"))
    prog.add_soc([t, *arg])
    scalar = ex.dot(cs.mu, y) + ex.trace_pair(cs.sigma, w_mat) + t * cs.rho + c
    prog.add_nonneg([scalar * -1.0])
    return {"y": y, "w": w_mat, "support": t * cs.rho}


def build_chance_relaxation(cs: ConfidenceSet, alpha, c, prog: ConicProgram, y=None):
    """Relaxed normal-approximation chance constraint at level 1 - alpha.

    Emits  (z_{1-alpha}/sqrt(n)) ||B' (y; svec W)|| + mu_hat' y
           + y' Sigma_hat y + c <= 0  with the corner-1 LMI.
    """
    n = cs.dim
    if y is None:
        y = prog.var_vector(n, "y")
    w_mat, _ = prog.new_symmetric(n, "W")
    big = ex.zeros_mat((n + 1, n + 1))
    for i in range(n):
        for j in range(n):
            big[i, j] = w_mat[i, j]
        big[i, n] = y[i].copy()
        big[n, i] = y[i].copy()
    big[n, n] = ex.LinExpr.constant(1.0)
    prog.add_psd(big)
    arg = _stacked_arg(cs, y, w_mat)
    t = ex.LinExpr.var(prog.new_var("chance_t"))
    prog.add_soc([t, *arg])
    z_val = max(normal_quantile(1.0 - alpha), 0.0)
    coef = z_val / math.sqrt(cs.n_obs)
    # quadratic term y' Sigma_hat y via a rotated cone epigraph
    q = ex.LinExpr.var(prog.new_var("quad"))
    f = linalg.psd_factor(cs.sigma) if linalg.min_eig(cs.sigma) > -1e-12 else None
    if f is None:
        raise ValueError("estimated covariance must be PSD")
    if f.size:
        fy = ex.lmul(f, np.array(y, dtype=object).reshape(-1, 1))[:, 0]
        prog.add_soc([q + 1.0, *[e * 2.0 for e in fy], q - 1.0])
    else:
        prog.add_nonneg([q.copy()])
    scalar = ex.dot(cs.mu, y) + q + t * coef + c
    prog.add_nonneg([scalar * -1.0])
    return {"y": y, "w": w_mat}


def chance_feasible(cs: ConfidenceSet, alpha, c, y, w_mat, tol=1e-7):
    """Direct numeric check of the relaxed chance constraint at (y, W)."""
    y = np.asarray(y, float)
    w_mat = np.asarray(w_mat, float)
    stacked = np.concatenate([y, linalg.svec(w_mat)])
    z_val = max(normal_quantile(1.0 - alpha), 0.0)
    val = (
        z_val / math.sqrt(cs.n_obs) * np.linalg.norm(cs.b_mat.T @ stacked)
        + cs.mu @ y
        + y @ cs.sigma @ y
        + c
    )
    lmi_ok = linalg.min_eig(w_mat - np.outer(y, y)) >= -1e-6
    return val <= tol, val, lmi_ok


def robust_feasible(cs: ConfidenceSet, c, y, w_mat, tol=1e-7):
    """Direct numeric check of the robust counterpart at (y, W)."""
    y = np.asarray(y, float)
    w_mat = np.asarray(w_mat, float)
    stacked = np.concatenate([y, linalg.svec(w_mat)])
    val = (
        cs.rho * np.linalg.norm(cs.b_mat.T @ stacked)
        + cs.mu @ y
        + float(np.sum(cs.sigma * w_mat))
        + c
    )
    lmi_ok = linalg.min_eig(w_mat - np.outer(y, y)) >= -1e-6
    return val <= tol, val, lmi_ok


def objective_probability(est: MomentEstimates, weights, lam, target):
    """Asymptotic probability that mu' w - lam w' Sigma w >= target.

    Delta-method normal approximation from the estimated moments; the
    statistic is linear in theta with gradient (w; -lam * uptri(w w')).
    """
    w = np.asarray(weights, float)
    pairs = theta_indices(est.dim)
    outer = np.outer(w, w)
    grad = np.concatenate(
        [w, [-lam * (outer[i, j] * (2.0 if i != j else 1.0)) for i, j in pairs]]
    )
    value = est.mu @ w - lam * w @ est.sigma @ w
    var = grad @ est.vhat @ grad / est.n_obs
    if var <= 0.0:
        return 1.0 if value >= target else 0.0
    zscore = (value - target) / math.sqrt(var)
    return statfun.normal_cdf(zscore)


def load_returns_csv(path, percent=False):
    """Returns CSV: header row of names, date column + one column per asset."""
    import csv

    with open(path) as fp:
        reader = csv.reader(fp)
        header = next(reader)
        rows = []
        for line in reader:
            if not line or not any(field.strip() for field in line):
                continue
            rows.append([float(v) for v in line[1:]])
    data = np.asarray(rows, float)
    if percent:
        data = data / 100.0
    return header[1:], data
