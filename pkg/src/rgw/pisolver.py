"""Coupling subproblems solved by Sinkhorn-type scaling.

Each outer iteration linearizes the quadratic distortion at the current
plan and minimizes

    <cost, pi> + tau1*KL(pi_1, alpha) + tau2*KL(pi_2, beta) + (1/t)*KL(pi, pi_prev)

over pi >= 0. The first-order conditions give pi = diag(u) K diag(v) with
kernel K = pi_prev * exp(-t*cost) and the damped scaling updates

    u <- (alpha / (K v))^(tau1*t / (tau1*t + 1))
    v <- (beta / (K^T u))^(tau2*t / (tau2*t + 1))

Derivation sketch: stationarity in pi_ij reads
log(pi_ij / K_ij) + tau1*t*log((pi_1)_i / alpha_i) + tau2*t*log((pi_2)_j / beta_j) = 0,
so pi = diag(u) K diag(v) with u_i = ((alpha / pi_1)_i)^(tau1*t). Writing
pi_1 = u * (K v) and solving for u yields the damped exponent above; the
balanced projection is the same fixed point with both exponents at 1.

The balanced variant replaces the soft penalties with hard marginals and
is used by the baseline. Supports never grow: zero entries of pi_prev
have zero kernel weight and stay zero.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, InnerDiverged, InvalidParams
from .measures import kl_divergence

# Beyond this the multiplicative kernel exp(-t*cost) underflows too widely
# to be trusted; go straight to the log domain.
LOG_SWITCH_THRESHOLD = 80.0
SCALING_CAP = 1e300
BALANCED_MARGINAL_TOL = 1e-8


@dataclass
class SinkhornSettings:
    """Inner-loop knobs.

    inner_tolerance is the sup-norm change of the log-scalings between
    sweeps. debug enables the per-sweep objective monitor (numpy path,
    slow; intended for tests).
    """

    max_inner_iterations: int = 2000
    inner_tolerance: float = 1e-8
    log_domain: bool = False
    debug: bool = False

    def validate(self):
        if self.max_inner_iterations < 1:
            raise InvalidParams("max_inner_iterations must be >= 1")
        if self.inner_tolerance <= 0:
            raise InvalidParams("inner_tolerance must be > 0")
        return self


def linearized_step_objective(cost, pi, pi_prev, alpha, beta, tau1, tau2, t):
    """Objective of the proximal linearized step at a candidate plan."""
    pi = np.asarray(pi, dtype=np.float64)
    val = float(np.sum(cost * pi))
    val += tau1 * kl_divergence(pi.sum(axis=1), alpha)
    val += tau2 * kl_divergence(pi.sum(axis=0), beta)
    val += (1.0 / t) * kl_divergence(pi.ravel(), np.asarray(pi_prev, dtype=np.float64).ravel())
    return val


def _check_inputs(cost, pi_prev, t):
    cost = np.asarray(cost, dtype=np.float64)
    pi_prev = np.asarray(pi_prev, dtype=np.float64)
    if cost.shape != pi_prev.shape or cost.ndim != 2:
        raise DimensionMismatch("cost %s vs pi_prev %s" % (cost.shape, pi_prev.shape))
    if not np.all(np.isfinite(cost)):
        raise InvalidParams("cost entries must be finite")
    if np.any(pi_prev < 0):
        raise InvalidParams("pi_prev must be nonnegative")
    if t <= 0:
        raise InvalidParams("step t must be > 0")
    return cost, pi_prev


def _log_kernel(cost, pi_prev, t):
    logK = np.full(cost.shape, _kernels.NEG)
    pos = pi_prev > 0
    logK[pos] = np.log(pi_prev[pos]) - t * cost[pos]
    return logK


def _log_weights(w):
    w = np.asarray(w, dtype=np.float64)
    out = np.full(w.shape, _kernels.NEG)
    pos = w > 0
    out[pos] = np.log(w[pos])
    return out


def _assemble(logK, lu, lv):
    pi = np.exp(lu[:, None] + logK + lv[None, :])
    if not np.all(np.isfinite(pi)):
        raise InnerDiverged("log-domain scalings produced non-finite plan entries")
    return pi


def _mult_scaling(K, alpha, beta, f1, f2, tol, maxit, u0=None, v0=None):
    """Multiplicative sweeps; raises InnerDiverged on overflow."""
    u = np.ones(K.shape[0]) if u0 is None else u0
    v = np.ones(K.shape[1]) if v0 is None else v0
    row_live = alpha > 0
    col_live = beta > 0
    sweeps = 0
    delta = np.inf
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(maxit):
            new_u = np.where(row_live, (alpha / (K @ v)) ** f1, 0.0)
            bad = new_u[row_live]
            if not np.all(np.isfinite(bad)) or (bad.size and bad.max() > SCALING_CAP):
                raise InnerDiverged("row scalings overflowed")
            d_u = 0.0
            if row_live.any():
                d_u = float(np.abs(np.log(new_u[row_live] / u[row_live])).max())
            u = new_u

            new_v = np.where(col_live, (beta / (K.T @ u)) ** f2, 0.0)
            bad = new_v[col_live]
            if not np.all(np.isfinite(bad)) or (bad.size and bad.max() > SCALING_CAP):
                raise InnerDiverged("column scalings overflowed")
            d_v = 0.0
            if col_live.any():
                d_v = float(np.abs(np.log(new_v[col_live] / v[col_live])).max())
            v = new_v

            sweeps += 1
            delta = max(d_u, d_v)
            if delta < tol:
                break
    return u, v, sweeps, delta


def _debug_log_loop(cost, pi_prev, logK, la, lb, alpha, beta, f1, f2, tau1, tau2, t, tol, maxit):
    """One sweep at a time, asserting the step objective never increases."""
    lu = np.zeros(cost.shape[0])
    lv = np.zeros(cost.shape[1])
    prev_obj = math.inf
    sweeps = 0
    delta = np.inf
    for _ in range(maxit):
        lu, lv, _, delta = _kernels.scaling_sweeps(logK, la, lb, f1, f2, lu, lv, 0.0, 1)
        sweeps += 1
        obj = linearized_step_objective(cost, _assemble(logK, lu, lv), pi_prev, alpha, beta, tau1, tau2, t)
        assert obj <= prev_obj + 1e-9, (
            "inner objective increased by %.3e at sweep %d" % (obj - prev_obj, sweeps)
        )
        prev_obj = obj
        if delta < tol:
            break
    return lu, lv, sweeps, delta


def solve_pi_subproblem(cost, pi_prev, alpha, beta, tau1, tau2, t, settings=None, log=False):
    """Minimize the proximal linearized step objective over plans >= 0.

    Parameters
    ----------
    cost : ndarray, shape (n, m)
        Linearization of the distortion at pi_prev.
    pi_prev : ndarray, shape (n, m)
        Proximal center; its zero entries stay zero in the output.
    alpha, beta : ndarray
        Current relaxed marginals.
    tau1, tau2 : float
        Marginal penalty weights, > 0.
    t : float
        Proximal step, > 0. Large values sharpen the kernel exp(-t*cost).
    settings : SinkhornSettings, optional
    log : bool
        When True also return a dict with sweep count, convergence flag,
        final sup-norm log-scaling change, and the mode used.

    Returns
    -------
    pi : ndarray, shape (n, m)
        Or (pi, info) when log=True.
    """
    settings = (settings or SinkhornSettings()).validate()
    cost, pi_prev = _check_inputs(cost, pi_prev, t)
    if tau1 <= 0 or tau2 <= 0:
        raise InvalidParams("tau1 and tau2 must be > 0")
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if alpha.shape != (cost.shape[0],) or beta.shape != (cost.shape[1],):
        raise DimensionMismatch("marginal lengths do not match the cost shape")

    f1 = tau1 * t / (tau1 * t + 1.0)
    f2 = tau2 * t / (tau2 * t + 1.0)
    tol = settings.inner_tolerance
    maxit = settings.max_inner_iterations
    use_log = settings.log_domain or settings.debug or t * np.abs(cost).max(initial=0.0) > LOG_SWITCH_THRESHOLD

    if use_log:
        logK = _log_kernel(cost, pi_prev, t)
        la, lb = _log_weights(alpha), _log_weights(beta)
        if settings.debug:
            lu, lv, sweeps, delta = _debug_log_loop(
                cost, pi_prev, logK, la, lb, alpha, beta, f1, f2, tau1, tau2, t, tol, maxit
            )
        else:
            lu, lv, sweeps, delta = _kernels.scaling_sweeps(
                logK, la, lb, f1, f2, np.zeros(cost.shape[0]), np.zeros(cost.shape[1]), tol, maxit
            )
        pi = _assemble(logK, lu, lv)
        mode = "log"
    else:
        K = pi_prev * np.exp(-t * cost)
        u, v, sweeps, delta = _mult_scaling(K, alpha, beta, f1, f2, tol, maxit)
        pi = u[:, None] * K * v[None, :]
        mode = "mult"

    if log:
        return pi, {"sweeps": sweeps, "converged": delta < tol, "delta": delta, "mode": mode}
    return pi


def _balanced_log_loop(logK, mu, nu, settings):
    """Exponent-1 scalings on a log kernel, retried with tighter scaling
    tolerance until the marginal residual meets BALANCED_MARGINAL_TOL or
    the sweep budget runs out. Returns (pi, log_pi, info).

    The log plan is returned alongside the materialized one so callers
    that chain projections can keep entries whose exp underflows; a plan
    rebuilt from the materialized zeros would lose that support for good.
    """
    la, lb = _log_weights(mu), _log_weights(nu)
    tol = settings.inner_tolerance
    budget = settings.max_inner_iterations
    lu = np.zeros(logK.shape[0])
    lv = np.zeros(logK.shape[1])
    used = 0
    while True:
        lu, lv, sweeps, delta = _kernels.scaling_sweeps(
            logK, la, lb, 1.0, 1.0, lu, lv, tol, budget - used
        )
        used += sweeps
        pi = _assemble(logK, lu, lv)
        res = max(
            float(np.abs(pi.sum(axis=1) - mu).max()),
            float(np.abs(pi.sum(axis=0) - nu).max()),
        )
        if res <= BALANCED_MARGINAL_TOL or used >= budget:
            break
        # Converged in scaling change but not in marginals; tighten.
        tol = max(tol / 10.0, 1e-15)
    info = {
        "sweeps": used,
        "converged": res <= BALANCED_MARGINAL_TOL,
        "delta": delta,
        "residual": res,
        "mode": "log",
    }
    return pi, lu[:, None] + logK + lv[None, :], info


def solve_balanced_projection(cost, pi_prev, mu, nu, t, settings=None, log=False):
    """Minimize <cost, pi> + (1/t)*KL(pi, pi_prev) over plans with exact
    marginals (mu, nu); both must be strictly positive.

    The scaling updates are the exponent-1 case of the penalized solver.
    Output marginals land within sup-norm 1e-8 of (mu, nu) on convergence;
    hitting the sweep budget first is reported through the log dict.
    """
    settings = (settings or SinkhornSettings()).validate()
    cost, pi_prev = _check_inputs(cost, pi_prev, t)
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if mu.shape != (cost.shape[0],) or nu.shape != (cost.shape[1],):
        raise DimensionMismatch("marginal lengths do not match the cost shape")
    if np.any(mu <= 0) or np.any(nu <= 0):
        raise InvalidParams("balanced projection needs strictly positive marginals")

    use_log = settings.log_domain or t * np.abs(cost).max(initial=0.0) > LOG_SWITCH_THRESHOLD

    if use_log:
        pi, _, info = _balanced_log_loop(_log_kernel(cost, pi_prev, t), mu, nu, settings)
    else:
        tol = settings.inner_tolerance
        budget = settings.max_inner_iterations
        K = pi_prev * np.exp(-t * cost)
        u = np.ones(cost.shape[0])
        v = np.ones(cost.shape[1])
        used = 0
        while True:
            u, v, sweeps, delta = _mult_scaling(K, mu, nu, 1.0, 1.0, tol, budget - used, u, v)
            used += sweeps
            pi = u[:, None] * K * v[None, :]
            res = max(
                float(np.abs(pi.sum(axis=1) - mu).max()),
                float(np.abs(pi.sum(axis=0) - nu).max()),
            )
            if res <= BALANCED_MARGINAL_TOL or used >= budget:
                break
            tol = max(tol / 10.0, 1e-15)
        info = {
            "sweeps": used,
            "converged": res <= BALANCED_MARGINAL_TOL,
            "delta": delta,
            "residual": res,
            "mode": "mult",
        }

    if log:
        return pi, info
    return pi
