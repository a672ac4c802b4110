"""Built-in oracle checks runnable from the CLI.

These duplicate the slow reference computations on purpose: the brute
force quadruple loop, an independent dual-root bisection, and a
monotonicity monitor for the descent-guaranteed step mode. Each check is
a coarse end-to-end gate, not a unit test; the suite must stay well under
half a minute.
"""

from dataclasses import dataclass

import numpy as np

from . import gwkernel
from .bpalm import RgwParams, solve_rgw
from .marginals import alpha_closed_form, dual_function_p, solve_marginal_subproblem
from .measures import kl_divergence
from .pisolver import SinkhornSettings


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def brute_force_tensor(D, Dbar, pi):
    """Quadruple-loop reference for the tensor application."""
    n, m = pi.shape
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(n):
                for l in range(m):
                    acc += (D[i, k] - Dbar[j, l]) ** 2 * pi[k, l]
            out[i, j] = acc
    return out


def _random_instance(rng, n, m):
    X = rng.normal(size=(n, 2))
    Y = rng.normal(size=(m, 2))
    D = gwkernel.pairwise_distances(X)
    Dbar = gwkernel.pairwise_distances(Y)
    pi = rng.uniform(0.1, 1.0, size=(n, m))
    pi /= pi.sum()
    return D, Dbar, pi

# Checks call through the gwkernel module attribute so a patched
# apply_tensor is actually exercised (mutation sanity).


def check_tensor_equivalence(instances=25, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(2, 9))
        D, Dbar, pi = _random_instance(rng, n, m)
        ref = brute_force_tensor(D, Dbar, pi)
        got = gwkernel.apply_tensor(D, Dbar, pi)
        scale = max(1e-30, np.abs(ref).max())
        worst = max(worst, np.abs(got - ref).max() / scale)
        val_ref = float(np.sum(ref * pi))
        val_got = gwkernel.gw_quadratic_value(D, Dbar, pi)
        worst = max(worst, abs(val_got - val_ref) / max(1e-30, abs(val_ref)))
    ok = worst <= 1e-10
    return CheckResult("tensor-equivalence", ok,
                       "max relative error %.3e over %d instances" % (worst, instances))


def _bisect_root(pfun, hi=1.0):
    lo = 0.0
    for _ in range(200):
        if pfun(hi) <= 0.0:
            break
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if pfun(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def check_marginal_root(cases=40, seed=1):
    rng = np.random.default_rng(seed)
    worst_gap = 0.0
    worst_kl = 0.0
    for _ in range(cases):
        n = int(rng.integers(3, 12))
        pi1 = rng.uniform(0.05, 1.0, n)
        pi1 /= rng.uniform(1.0, 3.0)
        prev = rng.uniform(0.1, 1.0, n)
        prev /= prev.sum()
        mu = rng.uniform(0.1, 1.0, n)
        mu /= mu.sum()
        step = float(rng.uniform(0.5, 20.0))
        # radius at half the unconstrained divergence keeps the constraint active
        slack = kl_divergence(mu, alpha_closed_form(pi1, prev, mu, step, 0.0))
        rho = 0.5 * slack
        if rho <= 0.0:
            continue
        alpha, res = solve_marginal_subproblem(pi1, prev, mu, step, rho)
        w_ref = _bisect_root(lambda w: dual_function_p(w, pi1, prev, mu, step, rho))
        worst_gap = max(worst_gap, abs(res.w_star - w_ref))
        worst_kl = max(worst_kl, abs(kl_divergence(mu, alpha) - rho))
    ok = worst_gap <= 1e-8 and worst_kl <= 1e-8
    return CheckResult("marginal-root", ok,
                       "max root gap %.3e, max KL residual %.3e" % (worst_gap, worst_kl))


def check_theoretical_descent(instances=4, iterations=60, seed=2):
    rng = np.random.default_rng(seed)
    worst_rise = 0.0
    box_ok = True
    for _ in range(instances):
        D, Dbar, _ = _random_instance(rng, 6, 7)
        mu = np.full(6, 1.0 / 6)
        nu = np.full(7, 1.0 / 7)
        params = RgwParams(step_mode="theoretical", max_outer_iterations=iterations,
                           outer_tolerance=1e-14,
                           sinkhorn=SinkhornSettings(inner_tolerance=1e-10))
        pi, _, _, rep = solve_rgw(D, Dbar, mu, nu, params=params)
        trace = np.asarray(rep.objective_trace)
        worst_rise = max(worst_rise, float(np.max(np.diff(trace), initial=0.0)))
        box_ok = box_ok and bool(pi.min() >= 0.0 and pi.max() <= 1.0 + 1e-9)
    ok = worst_rise <= 1e-9 and box_ok
    return CheckResult("theoretical-descent", ok,
                       "worst objective rise %.3e, iterates in box: %s" % (worst_rise, box_ok))


def run_all():
    return [
        check_tensor_equivalence(),
        check_marginal_root(),
        check_theoretical_descent(),
    ]
