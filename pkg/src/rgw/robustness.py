"""Contamination models, the additive robustness bound, and sweep drivers.

A contaminated marginal is the two-component mixture
(1 - eps) * clean + eps * outlier over a shared atom set. The additive
bound certifies the relaxed solver value against the clean value plus a
per-side penalty max(0, eps - rho / KL(outlier, clean)) * tau *
KL(clean, outlier). With disjoint supports both divergences are infinite;
rho / inf is taken as 0 and the bound degenerates to +inf, which the CSV
layer spells "unbounded" rather than inventing a finite number.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bpalm import RgwParams, solve_balanced_gw, solve_rgw
from .errors import DivergenceInfinite, EpsilonOutOfRange, InvalidParams, RgwError
from .gwkernel import pairwise_distances
from .measures import huber_mixture, kl_divergence, prob_vector

log = logging.getLogger(__name__)

OUTLIER_BOX = (-3.0, -2.5, 0.0, 0.5)


@dataclass
class ContaminationSpec:
    """Clean and outlier weight vectors over one atom set, plus the mix rate."""

    clean_weights: np.ndarray
    outlier_weights: np.ndarray
    epsilon: float

    def validate(self):
        self.clean_weights = prob_vector(self.clean_weights)
        self.outlier_weights = prob_vector(self.outlier_weights)
        if self.clean_weights.shape != self.outlier_weights.shape:
            raise InvalidParams("clean and outlier weights must share one atom set")
        if not 0.0 <= self.epsilon <= 1.0:
            raise EpsilonOutOfRange("epsilon=%r outside [0, 1]" % (self.epsilon,))
        return self

    def mixture(self):
        return huber_mixture(self.clean_weights, self.outlier_weights, self.epsilon)


def _kl_or_inf(a, b):
    try:
        return kl_divergence(a, b)
    except DivergenceInfinite:
        return math.inf


def _side_term(spec, rho, tau):
    if spec.epsilon == 0.0:
        return 0.0
    kl_out_clean = _kl_or_inf(spec.outlier_weights, spec.clean_weights)
    shrink = 0.0 if math.isinf(kl_out_clean) else rho / kl_out_clean
    coeff = max(0.0, spec.epsilon - shrink)
    if coeff == 0.0:
        return 0.0
    return coeff * tau * _kl_or_inf(spec.clean_weights, spec.outlier_weights)


def theorem1_bound(gw_clean, spec_mu, spec_nu, rho1, rho2, tau1, tau2):
    """Clean value plus both contamination penalties; +inf when a live
    penalty has infinite divergence."""
    spec_mu.validate()
    spec_nu.validate()
    return gw_clean + _side_term(spec_mu, rho1, tau1) + _side_term(spec_nu, rho2, tau2)


def recommended_rho(spec):
    """Radius eps * KL(outlier, clean) that absorbs the contamination."""
    spec.validate()
    if spec.epsilon == 0.0:
        return 0.0
    return spec.epsilon * kl_divergence(spec.outlier_weights, spec.clean_weights)


def sample_curve_points(n, rng):
    """Noisy bent-curve cloud in the plane; no reflective symmetry."""
    t = rng.uniform(0.0, 1.0, n)
    x = np.stack([t * 1.6 - 0.5, 0.8 * np.sin(2.2 * t) + 0.35 * t * t], axis=1)
    return x + rng.normal(scale=0.03, size=(n, 2))


def rotate_points(points, theta):
    c, s = np.cos(theta), np.sin(theta)
    return points @ np.array([[c, -s], [s, c]]).T


def sample_outlier_points(k, box, rng):
    x_lo, x_hi, y_lo, y_hi = box
    return np.stack([rng.uniform(x_lo, x_hi, k), rng.uniform(y_lo, y_hi, k)], axis=1)


def outlier_count(epsilon, n_clean):
    """Atom count giving outlier mass exactly eps with weights eps/k."""
    return max(1, round(epsilon * n_clean / (1.0 - epsilon)))


def contaminated_source(clean_points, outlier_box, epsilon, rng):
    """Append box outliers to a clean cloud.

    Returns (points, weights, spec) where weights = spec.mixture(), i.e.
    (1-eps)/n on clean atoms and eps/k on the k outlier atoms.
    """
    if not 0.0 <= epsilon < 1.0:
        raise EpsilonOutOfRange("epsilon=%r outside [0, 1)" % (epsilon,))
    n = clean_points.shape[0]
    if epsilon == 0.0:
        w = np.full(n, 1.0 / n)
        spec = ContaminationSpec(w.copy(), w.copy(), 0.0).validate()
        return clean_points.copy(), w, spec
    k = outlier_count(epsilon, n)
    points = np.concatenate([clean_points, sample_outlier_points(k, outlier_box, rng)])
    clean_w = np.concatenate([np.full(n, 1.0 / n), np.zeros(k)])
    outlier_w = np.concatenate([np.zeros(n), np.full(k, 1.0 / k)])
    spec = ContaminationSpec(clean_w, outlier_w, epsilon).validate()
    return points, spec.mixture(), spec


@dataclass
class SweepRow:
    epsilon: float
    rgw_value: float
    balanced_value: float
    bound: float
    converged_rgw: bool
    converged_balanced: bool
    seed: int


def _uniform_spec(m):
    w = np.full(m, 1.0 / m)
    return ContaminationSpec(w, w.copy(), 0.0).validate()


def contamination_sweep(clean_source_points, clean_target_points, outlier_box,
                        epsilons, params=None, seed=0, jobs=1, balanced_settings=None):
    """Solve the relaxed and hard-marginal problems per contamination rate.

    The target stays clean; the source gains box outliers with mass eps.
    rho1 follows recommended_rho when it is finite and falls back to
    params.rho1 otherwise (disjoint supports); rho2 is 0. Rows are
    independent, keyed by [seed, row] streams, and returned sorted by eps.
    balanced_settings overrides the hard-marginal driver's inner settings;
    left as None, the driver's own wider sweep budget applies (its
    projections need more sweeps than the relaxed scalings).
    """
    params = (params or RgwParams()).validate()
    if balanced_settings is not None:
        balanced_settings = balanced_settings.validate()
    epsilons = sorted(float(e) for e in epsilons)
    for e in epsilons:
        if not 0.0 <= e < 1.0:
            raise EpsilonOutOfRange("epsilon=%r outside [0, 1)" % (e,))

    Dbar = pairwise_distances(clean_target_points)
    m = Dbar.shape[0]
    nu = np.full(m, 1.0 / m)
    spec_nu = _uniform_spec(m)

    D_clean = pairwise_distances(clean_source_points)
    n = D_clean.shape[0]
    mu_clean = np.full(n, 1.0 / n)
    _, clean_report = solve_balanced_gw(
        D_clean, Dbar, mu_clean, nu,
        t=params.t, budget=params.max_outer_iterations, tol=params.outer_tolerance,
        step_mode=params.step_mode, settings=balanced_settings,
    )
    gw_clean = clean_report.objective_trace[-1]

    def one_row(idx_eps):
        idx, eps = idx_eps
        rng = np.random.default_rng([seed, idx])
        points, mu, spec_mu = contaminated_source(clean_source_points, outlier_box, eps, rng)
        try:
            rho1 = recommended_rho(spec_mu)
        except DivergenceInfinite:
            rho1 = params.rho1
        bound = theorem1_bound(gw_clean, spec_mu, spec_nu, rho1, 0.0, params.tau1, params.tau2)
        D = pairwise_distances(points)
        try:
            _, _, _, rep = solve_rgw(D, Dbar, mu, nu, params=replace(params, rho1=rho1, rho2=0.0))
            _, rep_b = solve_balanced_gw(
                D, Dbar, mu, nu,
                t=params.t, budget=params.max_outer_iterations, tol=params.outer_tolerance,
                step_mode=params.step_mode, settings=balanced_settings,
            )
        except RgwError as exc:
            log.warning("sweep row eps=%g failed: %s", eps, exc)
            return SweepRow(eps, math.nan, math.nan, bound, False, False, seed)
        log.info("sweep eps=%g rgw=%.6e bal=%.6e bound=%s",
                 eps, rep.objective_trace[-1], rep_b.objective_trace[-1], bound)
        return SweepRow(eps, rep.objective_trace[-1], rep_b.objective_trace[-1],
                        bound, rep.converged, rep_b.converged, seed)

    items = list(enumerate(epsilons))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one_row, items))
    return [one_row(item) for item in items]


def overlapping_support_spec(n_clean, n_outlier, leak, spread):
    """Contamination weights with full mutual support.

    The clean vector leaks a little mass onto the outlier atoms and the
    outlier vector spreads a little over the clean atoms, so both KL
    divergences between them are finite and the bound is a real number.
    """
    if not (0.0 < leak < 1.0 and 0.0 < spread < 1.0):
        raise InvalidParams("leak and spread must lie in (0, 1)")
    clean = np.concatenate([
        np.full(n_clean, (1.0 - leak) / n_clean),
        np.full(n_outlier, leak / n_outlier),
    ])
    outlier = np.concatenate([
        np.full(n_clean, spread / n_clean),
        np.full(n_outlier, (1.0 - spread) / n_outlier),
    ])
    return clean, outlier


def overlapping_instance(epsilon, n_clean=25, n_outlier=6, leak=0.05, spread=0.1,
                         n_target=30, outlier_box=OUTLIER_BOX, rotation=0.7, seed=0):
    """Synthetic instance whose robustness bound is finite.

    Source atoms are a clean curve plus a far cluster; the two weight
    vectors overlap per overlapping_support_spec. Returns a dict with the
    distance matrices, the mixture marginal, the specs, and nu.
    """
    rng = np.random.default_rng([seed, 0])
    clean_pts = sample_curve_points(n_clean, rng)
    outlier_pts = sample_outlier_points(n_outlier, outlier_box, np.random.default_rng([seed, 1]))
    target_pts = rotate_points(sample_curve_points(n_target, np.random.default_rng([seed, 2])), rotation)
    clean_w, outlier_w = overlapping_support_spec(n_clean, n_outlier, leak, spread)
    spec_mu = ContaminationSpec(clean_w, outlier_w, epsilon).validate()
    nu = np.full(n_target, 1.0 / n_target)
    return {
        "D": pairwise_distances(np.concatenate([clean_pts, outlier_pts])),
        "Dbar": pairwise_distances(target_pts),
        "mu": spec_mu.mixture(),
        "mu_clean": spec_mu.clean_weights,
        "nu": nu,
        "spec_mu": spec_mu,
        "spec_nu": _uniform_spec(n_target),
    }


@dataclass
class RhoRow:
    rho: float
    bound: float
    rgw_value: float
    converged: bool


def bound_vs_rho(instance, rhos, params=None, balanced_settings=None):
    """Evaluate the bound and the solver value along a rho grid.

    gw_clean is the hard-marginal value of the clean weights on the same
    geometry, solved once. Each grid point solves with rho1=rho, rho2=0.
    """
    params = (params or RgwParams()).validate()
    if balanced_settings is not None:
        balanced_settings = balanced_settings.validate()
    rhos = sorted(float(r) for r in rhos)
    if any(r < 0 for r in rhos):
        raise InvalidParams("rho grid must be nonnegative")
    _, clean_report = solve_balanced_gw(
        instance["D"], instance["Dbar"], instance["mu_clean"], instance["nu"],
        t=params.t, budget=params.max_outer_iterations, tol=params.outer_tolerance,
        step_mode=params.step_mode, settings=balanced_settings,
    )
    gw_clean = clean_report.objective_trace[-1]
    rows = []
    for rho in rhos:
        bound = theorem1_bound(gw_clean, instance["spec_mu"], instance["spec_nu"],
                               rho, 0.0, params.tau1, params.tau2)
        _, _, _, rep = solve_rgw(
            instance["D"], instance["Dbar"], instance["mu"], instance["nu"],
            params=replace(params, rho1=rho, rho2=0.0),
        )
        log.info("rho=%g rgw=%.6e bound=%.6e", rho, rep.objective_trace[-1], bound)
        rows.append(RhoRow(rho, bound, rep.objective_trace[-1], rep.converged))
    return rows
