"""Outer alternating loop: plan step, then the two relaxed-marginal steps.

Step-size semantics
-------------------
The three step knobs (t, c, r) are read according to step_mode.

* practical (default): t, c, r are proximal weights. The plan subproblem
  runs with inner step 1/t, i.e. its kernel is pi_prev * exp(-cost/t), so
  the default t = 0.01 yields a sharp kernel that drives the plan toward
  low-cost supports quickly. Likewise the marginal subproblems run with
  prox step 1/c and 1/r, putting weight c (resp. r) on the inertia term.
  There is no descent guarantee in this mode; increases of the objective
  are detected and surfaced as report warnings.
* theoretical: the plan step is derived from the gradient Lipschitz
  constant of the quadratic term as theoretical_step_bound(D, Dbar) / 2,
  which guarantees a monotone objective trace; c and r are used directly
  as the marginal prox steps (any positive value preserves descent there
  because those blocks are minimized exactly).

The linearization uses the tensor application itself as the plan cost,
not twice it: the gradient of <T(pi), pi> is 2*T(pi) for symmetric
inputs, and the factor 2 is deliberately absorbed into the step scale.
This convention is fixed here and relied on by the step defaults.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import DivergenceInfinite, InfeasibleInit, InnerDiverged, InvalidParams, ZeroLipschitz
from .gwkernel import apply_tensor, cost_matrix, lipschitz_constant
from .marginals import solve_marginal_subproblem
from .measures import kl_divergence, prob_vector
from .pisolver import SinkhornSettings, _balanced_log_loop, solve_pi_subproblem

PRACTICAL_DESCENT_TOL = 1e-8
THEORETICAL_DESCENT_TOL = 1e-9
COMPACTNESS_CAP = 1.0 + 1e-9


@dataclass
class RgwParams:
    """Solver parameters; defaults follow the benchmarked configuration."""

    rho1: float = 0.2
    rho2: float = 0.2
    tau1: float = 0.1
    tau2: float = 0.1
    t: float = 0.01
    c: float = 0.1
    r: float = 0.1
    max_outer_iterations: int = 2000
    outer_tolerance: float = 1e-6
    step_mode: str = "practical"
    sinkhorn: SinkhornSettings = field(default_factory=SinkhornSettings)

    def validate(self):
        if self.rho1 < 0 or self.rho2 < 0:
            raise InvalidParams("rho1 and rho2 must be >= 0")
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise InvalidParams("tau1 and tau2 must be > 0")
        if self.t <= 0 or self.c <= 0 or self.r <= 0:
            raise InvalidParams("steps t, c, r must be > 0")
        if not math.isfinite(self.t) or not math.isfinite(self.c) or not math.isfinite(self.r):
            raise InvalidParams("steps t, c, r must be finite")
        if self.max_outer_iterations < 1:
            raise InvalidParams("max_outer_iterations must be >= 1")
        if self.outer_tolerance <= 0:
            raise InvalidParams("outer_tolerance must be > 0")
        if self.step_mode not in ("practical", "theoretical"):
            raise InvalidParams("step_mode must be 'practical' or 'theoretical'")
        self.sinkhorn.validate()
        return self


@dataclass
class SolveReport:
    """Per-solve diagnostics.

    objective_trace[k] is the objective after k outer iterations (entry 0
    is the initial point). iterate_diffs[k] holds
    (|dpi|_F, |dalpha|_2, |dbeta|_2) of iteration k+1. The trace is
    monitored for monotonicity; violations beyond the mode tolerance land
    in warnings rather than raising.
    """

    objective_trace: list
    iterate_diffs: list
    stationarity_measure: float
    final_kl_mu_alpha: float
    final_kl_nu_beta: float
    iterations: int
    converged: bool
    wall_time: float
    warnings: list
    inner_tolerance: float
    step_t_effective: float


def theoretical_step_bound(D, Dbar):
    """Largest plan step with guaranteed descent, 1 / lipschitz_constant."""
    lf = lipschitz_constant(D, Dbar)
    if lf == 0.0:
        raise ZeroLipschitz("both matrices are zero; no finite step bound")
    return 1.0 / lf


def stationarity_measure(report, K):
    """Min over the first K iterations of the iterate-difference sum."""
    if not 1 <= K <= len(report.iterate_diffs):
        raise InvalidParams("K=%d outside [1, %d]" % (K, len(report.iterate_diffs)))
    return min(sum(d) for d in report.iterate_diffs[:K])


def _resolve_steps(params, D, Dbar):
    if params.step_mode == "theoretical":
        return 0.5 * theoretical_step_bound(D, Dbar), params.c, params.r
    return 1.0 / params.t, 1.0 / params.c, 1.0 / params.r


def _default_init(n, m):
    return np.full((n, m), 1.0 / (n * m))


def _check_init(init_pi, n, m):
    if init_pi is None:
        return _default_init(n, m)
    pi = np.asarray(init_pi, dtype=np.float64)
    if pi.shape != (n, m):
        raise InfeasibleInit("init coupling shape %s, expected (%d, %d)" % (pi.shape, n, m))
    if not np.all(np.isfinite(pi)) or np.any(pi < 0) or np.any(pi > 1):
        raise InfeasibleInit("init coupling entries must lie in [0, 1]")
    return pi


def _safe_objective(quad, pi, alpha, beta, tau1, tau2, warnings):
    try:
        pen1 = kl_divergence(pi.sum(axis=1), alpha)
        pen2 = kl_divergence(pi.sum(axis=0), beta)
    except DivergenceInfinite:
        if not any(w.startswith("objective is infinite") for w in warnings):
            warnings.append("objective is infinite at the current marginals")
        return math.inf
    return quad + tau1 * pen1 + tau2 * pen2


def solve_rgw(D, Dbar, mu, nu, init_pi=None, params=None):
    """Run the alternating solver on one instance.

    Parameters
    ----------
    D, Dbar : ndarray
        Symmetric intra-space distance matrices.
    mu, nu : ndarray
        Reference marginals (probability vectors).
    init_pi : ndarray, optional
        Initial plan with entries in [0, 1]; defaults to 1/(n*m).
    params : RgwParams, optional

    Returns
    -------
    (pi, alpha, beta, report)
        Final plan, relaxed marginals, and a SolveReport. On return alpha
        and beta satisfy their KL-ball constraints within 1e-8; when a
        radius is zero the variable is pinned to its reference and its
        subproblem is skipped.
    """
    params = (params or RgwParams()).validate()
    D = cost_matrix(D)
    Dbar = cost_matrix(Dbar)
    mu = prob_vector(mu)
    nu = prob_vector(nu)
    n, m = D.shape[0], Dbar.shape[0]
    pi = _check_init(init_pi, n, m)

    t_eff, c_eff, r_eff = _resolve_steps(params, D, Dbar)
    descent_tol = (
        THEORETICAL_DESCENT_TOL if params.step_mode == "theoretical" else PRACTICAL_DESCENT_TOL
    )
    settings = params.sinkhorn
    warnings = []
    pin_alpha = params.rho1 == 0.0
    pin_beta = params.rho2 == 0.0
    alpha = mu.copy() if pin_alpha else np.full(n, 1.0 / n)
    beta = nu.copy() if pin_beta else np.full(m, 1.0 / m)

    start = time.perf_counter()
    cost = apply_tensor(D, Dbar, pi)
    trace = [_safe_objective(float(np.sum(cost * pi)), pi, alpha, beta, params.tau1, params.tau2, warnings)]
    diffs = []
    inner_budget_hits = 0
    worst_increase = 0.0
    converged = False

    for _ in range(params.max_outer_iterations):
        try:
            pi_new, info = solve_pi_subproblem(
                cost, pi, alpha, beta, params.tau1, params.tau2, t_eff, settings, log=True
            )
        except InnerDiverged:
            warnings.append("multiplicative scalings overflowed; switched to log domain")
            settings = replace(settings, log_domain=True)
            pi_new, info = solve_pi_subproblem(
                cost, pi, alpha, beta, params.tau1, params.tau2, t_eff, settings, log=True
            )
        if not info["converged"]:
            inner_budget_hits += 1

        if pin_alpha:
            alpha_new = alpha
        else:
            alpha_new, _ = solve_marginal_subproblem(pi_new.sum(axis=1), alpha, mu, c_eff, params.rho1)
        if pin_beta:
            beta_new = beta
        else:
            beta_new, _ = solve_marginal_subproblem(pi_new.sum(axis=0), beta, nu, r_eff, params.rho2)

        diffs.append(
            (
                float(np.linalg.norm(pi_new - pi)),
                float(np.linalg.norm(alpha_new - alpha)),
                float(np.linalg.norm(beta_new - beta)),
            )
        )
        if pi_new.max(initial=0.0) > COMPACTNESS_CAP and not any(
            w.startswith("plan left") for w in warnings
        ):
            warnings.append("plan left the unit box: max entry %.3e" % pi_new.max())

        cost = apply_tensor(D, Dbar, pi_new)
        obj = _safe_objective(
            float(np.sum(cost * pi_new)), pi_new, alpha_new, beta_new, params.tau1, params.tau2, warnings
        )
        if obj > trace[-1] + descent_tol:
            worst_increase = max(worst_increase, obj - trace[-1])
        trace.append(obj)
        pi, alpha, beta = pi_new, alpha_new, beta_new

        if sum(diffs[-1]) <= params.outer_tolerance:
            converged = True
            break

    if worst_increase > 0.0:
        warnings.append(
            "objective increased along the trace (worst step +%.3e, %s mode)"
            % (worst_increase, params.step_mode)
        )
    if inner_budget_hits:
        warnings.append(
            "inner loop hit its sweep budget in %d of %d outer iterations"
            % (inner_budget_hits, len(diffs))
        )

    report = SolveReport(
        objective_trace=trace,
        iterate_diffs=diffs,
        stationarity_measure=min((sum(d) for d in diffs), default=math.inf),
        final_kl_mu_alpha=kl_divergence(mu, alpha),
        final_kl_nu_beta=kl_divergence(nu, beta),
        iterations=len(diffs),
        converged=converged,
        wall_time=time.perf_counter() - start,
        warnings=warnings,
        inner_tolerance=settings.inner_tolerance,
        step_t_effective=t_eff,
    )
    return pi, alpha, beta, report


def _round_to_polytope(pi, mu, nu):
    """Exact-feasibility repair: shrink rows to their targets, then
    columns, then spread the leftover mass as a rank-one patch. Entries
    stay nonnegative and both marginals land on (mu, nu) up to float
    accumulation error, whatever state the input plan is in.
    """
    pi1 = pi.sum(axis=1)
    scale = np.where(pi1 > 0, np.minimum(1.0, mu / np.maximum(pi1, 1e-300)), 0.0)
    out = pi * scale[:, None]
    pi2 = out.sum(axis=0)
    scale = np.where(pi2 > 0, np.minimum(1.0, nu / np.maximum(pi2, 1e-300)), 0.0)
    out = out * scale[None, :]
    err_r = np.maximum(mu - out.sum(axis=1), 0.0)
    err_c = np.maximum(nu - out.sum(axis=0), 0.0)
    mass = err_r.sum()
    if mass > 0.0:
        out = out + np.outer(err_r, err_c) / mass
    return out


def solve_balanced_gw(D, Dbar, mu, nu, init_pi=None, t=0.01, budget=2000, tol=1e-6,
                      step_mode="practical", settings=None):
    """Baseline: hard-marginal descent on the quadratic distortion.

    Each iteration projects against the linearized cost under the same
    proximal kernel as the relaxed solver, with marginals fixed at
    (mu, nu). Reports the quadratic objective trace.

    The default initializer is the independent coupling mu x nu: it is
    feasible, which the uniform plan is not for non-uniform marginals,
    and descent arguments only cover steps taken from feasible points.
    The plan is carried between iterations in log space; sharp kernels
    push entries below the exp underflow threshold, and a chain rebuilt
    from materialized zeros would lose that support permanently.

    Scaling sweeps on a sharp kernel can need arbitrarily many rounds to
    meet the marginal tolerance, so when a projection runs out of sweeps
    its plan is rounded onto the transport polytope exactly instead;
    that keeps every returned iterate feasible at bounded cost, and the
    objective effect of the patch shows up in the monitored trace like
    any other step.

    Returns
    -------
    (pi, report)
    """
    if t <= 0 or not math.isfinite(t):
        raise InvalidParams("step t must be positive and finite")
    if budget < 1:
        raise InvalidParams("budget must be >= 1")
    if step_mode not in ("practical", "theoretical"):
        raise InvalidParams("step_mode must be 'practical' or 'theoretical'")
    D = cost_matrix(D)
    Dbar = cost_matrix(Dbar)
    mu = prob_vector(mu)
    nu = prob_vector(nu)
    if np.any(mu <= 0) or np.any(nu <= 0):
        raise InvalidParams("balanced baseline needs strictly positive marginals")
    n, m = D.shape[0], Dbar.shape[0]
    pi = np.outer(mu, nu) if init_pi is None else _check_init(init_pi, n, m)
    settings = (settings or SinkhornSettings()).validate()
    t_eff = 0.5 * theoretical_step_bound(D, Dbar) if step_mode == "theoretical" else 1.0 / t
    descent_tol = THEORETICAL_DESCENT_TOL if step_mode == "theoretical" else PRACTICAL_DESCENT_TOL

    warnings = []
    start = time.perf_counter()
    with np.errstate(divide="ignore"):
        log_pi = np.where(pi > 0, np.log(np.maximum(pi, 1e-300)), _kernels.NEG)
    cost = apply_tensor(D, Dbar, pi)
    trace = [float(np.sum(cost * pi))]
    diffs = []
    inner_budget_hits = 0
    worst_increase = 0.0
    converged = False
    residual = math.inf

    for _ in range(budget):
        pi_new, log_pi, info = _balanced_log_loop(log_pi - t_eff * cost, mu, nu, settings)
        if not info["converged"]:
            inner_budget_hits += 1
            pi_new = _round_to_polytope(pi_new, mu, nu)
            with np.errstate(divide="ignore"):
                log_pi = np.where(pi_new > 0, np.log(np.maximum(pi_new, 1e-300)), _kernels.NEG)
        residual = max(
            float(np.abs(pi_new.sum(axis=1) - mu).max()),
            float(np.abs(pi_new.sum(axis=0) - nu).max()),
        )

        diffs.append((float(np.linalg.norm(pi_new - pi)), 0.0, 0.0))
        cost = apply_tensor(D, Dbar, pi_new)
        obj = float(np.sum(cost * pi_new))
        if obj > trace[-1] + descent_tol:
            worst_increase = max(worst_increase, obj - trace[-1])
        trace.append(obj)
        pi = pi_new

        if diffs[-1][0] <= tol:
            converged = True
            break

    if worst_increase > 0.0:
        warnings.append(
            "objective increased along the trace (worst step +%.3e, %s mode)"
            % (worst_increase, step_mode)
        )
    if inner_budget_hits:
        warnings.append(
            "inner loop hit its sweep budget in %d of %d outer iterations"
            % (inner_budget_hits, len(diffs))
        )
    if residual > 1e-8:
        warnings.append("final marginal residual %.3e exceeds 1e-8" % residual)

    def _kl_or_inf(a, b):
        try:
            return kl_divergence(a, b)
        except DivergenceInfinite:
            return math.inf

    report = SolveReport(
        objective_trace=trace,
        iterate_diffs=diffs,
        stationarity_measure=min((sum(d) for d in diffs), default=math.inf),
        final_kl_mu_alpha=_kl_or_inf(mu, pi.sum(axis=1)),
        final_kl_nu_beta=_kl_or_inf(nu, pi.sum(axis=0)),
        iterations=len(diffs),
        converged=converged,
        wall_time=time.perf_counter() - start,
        warnings=warnings,
        inner_tolerance=settings.inner_tolerance,
        step_t_effective=t_eff,
    )
    return pi, report
