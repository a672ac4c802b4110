"""Relaxed-marginal subproblems inside a KL ball.

Each outer iteration updates alpha (and symmetrically beta) by

    argmin_{alpha in simplex, KL(mu, alpha) <= rho}
        KL(pi_1, alpha) + (1/c) * KL(alpha_prev, alpha)

The Lagrangian in the multiplier w of the ball constraint has the closed
form alpha_hat(w) below, and the dual reduces to finding the root of the
scalar function p(w) = KL(mu, alpha_hat(w)) - rho, which is convex, twice
differentiable, and non-increasing on w >= 0 with limit -rho. Newton from
w = 0 therefore produces an increasing iterate sequence bounded by the
root; a doubling-plus-bisection fallback guards the floating-point edge
cases.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParams, NewtonStalled

ROOT_TOL = 1e-10
# |p| alone does not pin the multiplier when p is flat near the root, so
# termination also requires the w increment (or bracket) to collapse.
W_TOL = 1e-11
NEWTON_CAP = 100
BISECTION_CAP = 200


@dataclass
class DualRootResult:
    """Root-finding outcome for the ball multiplier.

    residual is |p(w_star)|, or 0 when the constraint is slack at w=0.
    """

    w_star: float
    newton_iterations: int
    residual: float


def _check(pi_marginal, alpha_prev, mu, c):
    pi1 = np.asarray(pi_marginal, dtype=np.float64)
    prev = np.asarray(alpha_prev, dtype=np.float64)
    ref = np.asarray(mu, dtype=np.float64)
    if not (pi1.shape == prev.shape == ref.shape) or pi1.ndim != 1:
        raise DimensionMismatch("marginal, previous iterate, and reference must share one length")
    if c <= 0:
        raise InvalidParams("prox step c must be > 0")
    return pi1, prev, ref


def alpha_closed_form(pi_row_marginal, alpha_prev, mu, c, w):
    """Minimizer of the penalized subproblem at a fixed multiplier w.

    alpha_hat(w) = (pi_1 + (1/c)*alpha_prev + w*mu) / (S + 1/c + w),
    with S the total mass of pi_1. Lands on the simplex; positive wherever
    any of the three inputs is.
    """
    pi1, prev, ref = _check(pi_row_marginal, alpha_prev, mu, c)
    if w < 0:
        raise InvalidParams("multiplier w must be >= 0")
    numer = pi1 + prev / c + w * ref
    return numer / (pi1.sum() + 1.0 / c + w)


def dual_function_p(w, pi_row_marginal, alpha_prev, mu, c, rho):
    """KL(mu, alpha_hat(w)) - rho. Coordinates with mu_i = 0 contribute 0.

    Returns +inf when alpha_hat(w) vanishes on the support of mu, which
    can only happen at w = 0 with a degenerate previous iterate.
    """
    pi1, prev, ref = _check(pi_row_marginal, alpha_prev, mu, c)
    total = pi1.sum() + 1.0 / c + w
    q = pi1 + prev / c + w * ref
    pos = ref > 0
    if np.any(q[pos] <= 0):
        return np.inf
    return float(np.sum(ref[pos] * np.log(ref[pos] * total / q[pos]))) - rho


def dual_function_p_prime(w, pi_row_marginal, alpha_prev, mu, c):
    """Analytic derivative of p: 1/total - sum_i mu_i^2 / q_i(w)."""
    pi1, prev, ref = _check(pi_row_marginal, alpha_prev, mu, c)
    total = pi1.sum() + 1.0 / c + w
    q = pi1 + prev / c + w * ref
    pos = ref > 0
    if np.any(q[pos] <= 0):
        return -np.inf
    return float(1.0 / total - np.sum(ref[pos] ** 2 / q[pos]))


def _bisection(pfun, w_lo, w_hi0):
    """Root of the non-increasing pfun on [w_lo, inf); pfun(w_lo) > 0."""
    w_hi = max(w_hi0, 1.0)
    for _ in range(BISECTION_CAP):
        if pfun(w_hi) < 0:
            break
        w_hi *= 2.0
    else:
        raise InvalidParams("dual function never crossed zero; rho may be invalid")
    iters = 0
    for _ in range(BISECTION_CAP):
        mid = 0.5 * (w_lo + w_hi)
        if mid == w_lo or mid == w_hi:
            break
        pm = pfun(mid)
        iters += 1
        if pm > 0:
            w_lo = mid
        else:
            w_hi = mid
        if w_hi - w_lo <= W_TOL * max(1.0, w_hi):
            break
    w = 0.5 * (w_lo + w_hi)
    return w, pfun(w), iters


def solve_marginal_subproblem(pi_marginal, prev, reference, step, rho):
    """Solve one relaxed-marginal update; serves alpha and beta by symmetry.

    Parameters
    ----------
    pi_marginal : ndarray
        Row (or column) sums of the freshly updated plan.
    prev : ndarray
        Previous alpha (or beta) iterate.
    reference : ndarray
        The ball center mu (or nu).
    step : float
        Prox step c (or r); the inertia weight on prev is 1/step.
    rho : float
        Ball radius, > 0. The zero-radius case pins the variable to the
        reference and must be handled by the caller.

    Returns
    -------
    (alpha, DualRootResult)
        alpha feasible: KL(reference, alpha) <= rho + 1e-8.
    """
    if rho <= 0:
        raise InvalidParams("rho must be > 0 here; rho = 0 pins the marginal instead")
    pi1, prev, ref = _check(pi_marginal, prev, reference, step)

    def pfun(w):
        return dual_function_p(w, pi1, prev, ref, step, rho)

    p0 = pfun(0.0)
    if p0 <= 0.0:
        return alpha_closed_form(pi1, prev, ref, step, 0.0), DualRootResult(0.0, 0, 0.0)

    w, pw, iters = 0.0, p0, 0
    try:
        if not np.isfinite(p0):
            raise NewtonStalled("p(0) is infinite")
        for _ in range(NEWTON_CAP):
            dpw = dual_function_p_prime(w, pi1, prev, ref, step)
            if not np.isfinite(dpw) or dpw >= 0.0:
                raise NewtonStalled("derivative lost negativity at w=%g" % w)
            w_new = w - pw / dpw
            if not np.isfinite(w_new) or w_new <= w:
                # At the root the update stalls by rounding; accept if solved.
                if abs(pw) <= ROOT_TOL:
                    break
                raise NewtonStalled("no progress at w=%g" % w)
            dw = w_new - w
            w, pw = w_new, pfun(w_new)
            iters += 1
            if abs(pw) <= ROOT_TOL and dw <= W_TOL * max(1.0, w):
                break
            if pw < -ROOT_TOL:
                # Convexity forbids overshoot; only rounding can land here.
                raise NewtonStalled("iterate crossed the root at w=%g" % w)
        else:
            raise NewtonStalled("no convergence in %d steps" % NEWTON_CAP)
    except NewtonStalled:
        w, pw, iters = _bisection(pfun, 0.0, 2.0 * max(w, 1.0))

    return alpha_closed_form(pi1, prev, ref, step, w), DualRootResult(w, iters, abs(pw))
