"""Independent reference implementations used by the tests.

Everything here is written directly from the definitions, favoring
obviousness over speed: quadruple loops, dense grids, generic scipy
minimizers. Production code must match these, never the other way
around.
"""

import numpy as np
from scipy.optimize import minimize, minimize_scalar


def tensor_quadruple_loop(D, Dbar, pi):
    """sum_kl (D_ik - Dbar_jl)^2 pi_kl, evaluated literally."""
    n, m = pi.shape
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(n):
                for l in range(m):
                    s += (D[i, k] - Dbar[j, l]) ** 2 * pi[k, l]
            out[i, j] = s
    return out


def quad_value_loop(D, Dbar, pi):
    return float(np.sum(tensor_quadruple_loop(D, Dbar, pi) * pi))


def lipschitz_quadruple_loop(D, Dbar):
    """max_ij sqrt(sum_kl (D_ik - Dbar_jl)^4), evaluated literally."""
    n, m = D.shape[0], Dbar.shape[0]
    best = 0.0
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(n):
                for l in range(m):
                    s += (D[i, k] - Dbar[j, l]) ** 4
            best = max(best, s)
    return float(np.sqrt(best))


def generalized_kl(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = 0.0
    for ai, bi in zip(a, b):
        if ai > 0:
            s += ai * np.log(ai / bi)
        s += bi - ai
    return s


def central_difference_gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def pi_step_objective(pi_flat, cost, pi_prev, alpha, beta, tau1, tau2, t):
    """Linearized-step objective as a function of the flattened plan."""
    pi = pi_flat.reshape(pi_prev.shape)
    val = float(np.sum(cost * pi))
    val += tau1 * generalized_kl(pi.sum(axis=1), alpha)
    val += tau2 * generalized_kl(pi.sum(axis=0), beta)
    val += (1.0 / t) * generalized_kl(pi.ravel(), pi_prev.ravel())
    return val


def solve_pi_step_scipy(cost, pi_prev, alpha, beta, tau1, tau2, t):
    """Generic minimizer for the plan subproblem (positivity via bounds)."""
    x0 = pi_prev.ravel().copy()
    res = minimize(
        pi_step_objective, x0,
        args=(cost, pi_prev, alpha, beta, tau1, tau2, t),
        method="L-BFGS-B",
        bounds=[(1e-300, None)] * x0.size,
        options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-12},
    )
    return res.x.reshape(pi_prev.shape)


def marginal_objective(alpha, pi1, alpha_prev, c):
    """KL(pi1, alpha) + (1/c) KL(alpha_prev, alpha); tau scales the whole
    objective so it is dropped."""
    return generalized_kl(pi1, alpha) + (1.0 / c) * generalized_kl(alpha_prev, alpha)


def solve_marginal_scipy(pi1, alpha_prev, mu, c, rho):
    """Reference solve on the simplex inside the KL ball, via SLSQP."""
    n = len(mu)
    x0 = np.asarray(mu, dtype=float).copy()
    cons = [
        {"type": "eq", "fun": lambda a: a.sum() - 1.0},
        {"type": "ineq", "fun": lambda a: rho - generalized_kl(mu, a)},
    ]
    res = minimize(
        marginal_objective, x0, args=(pi1, alpha_prev, c),
        method="SLSQP",
        bounds=[(1e-12, None)] * n,
        constraints=cons,
        options={"maxiter": 500, "ftol": 1e-14},
    )
    return res.x


def dual_root_bisection(pfun, lo=0.0, hi=1.0, iters=400):
    """Doubling plus bisection on a non-increasing scalar function."""
    for _ in range(iters):
        if pfun(hi) <= 0.0:
            break
        lo, hi = hi, 2.0 * hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if pfun(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def accuracy_by_set_intersection(pi, ground_truth):
    """|S_gt & S_pred| / |S_gt| * 100 with explicit set objects."""
    pred = set()
    for i, row in enumerate(pi):
        best_j = 0
        best = row[0]
        for j, v in enumerate(row):
            if v > best:
                best = v
                best_j = j
        pred.add((i, best_j))
    gt = {(int(a), int(b)) for a, b in ground_truth}
    return 100.0 * len(gt & pred) / len(gt)


def best_permutation_value(D, Dbar, rows_mass):
    """Enumerate injections of source rows into target columns (tiny n only)."""
    from itertools import permutations

    n, m = D.shape[0], Dbar.shape[0]
    best = np.inf
    best_map = None
    for perm in permutations(range(m), n):
        pi = np.zeros((n, m))
        for i, j in enumerate(perm):
            pi[i, j] = rows_mass[i]
        val = quad_value_loop(D, Dbar, pi)
        if val < best:
            best = val
            best_map = perm
    return best, best_map


def scalar_grid_min(fun, lo, hi, points=20001):
    xs = np.linspace(lo, hi, points)
    vals = np.array([fun(x) for x in xs])
    i = int(np.argmin(vals))
    # one refinement pass around the best grid point
    res = minimize_scalar(fun, bounds=(xs[max(0, i - 1)], xs[min(points - 1, i + 1)]),
                          method="bounded", options={"xatol": 1e-14})
    return float(res.x), float(res.fun)
