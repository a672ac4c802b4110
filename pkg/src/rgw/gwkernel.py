"""Distance matrices, the distortion tensor applied through its low-rank
decomposition, the robust objective, and the gradient Lipschitz constant.

The 4-way distortion tensor T[i,j,k,l] = (D[i,k] - Dbar[j,l])^2 is never
materialized. Every operation goes through the three-product identity

    (T @ pi)[i,j] = ((D*D) @ pi_1)[i] + ((Dbar*Dbar) @ pi_2)[j]
                    - 2 * (D @ pi @ Dbar)[i,j]

which costs O(n^2 m + n m^2). The quadruple-loop form exists only as an
oracle in the selfcheck module and the test suite.
"""

import numpy as np

from .errors import DimensionMismatch, InvalidParams
from .measures import kl_divergence

SYMMETRY_TOL = 1e-10
COUPLING_CAP = 1.0 + 1e-9


def cost_matrix(entries):
    """Validate a symmetric nonnegative matrix with zero diagonal."""
    d = np.asarray(entries, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise DimensionMismatch("expected a square matrix, got shape %s" % (d.shape,))
    if not np.all(np.isfinite(d)):
        raise InvalidParams("distance entries must be finite")
    if np.any(d < 0):
        raise InvalidParams("distance entries must be nonnegative")
    if np.abs(d - d.T).max() > SYMMETRY_TOL:
        raise InvalidParams("matrix is not symmetric within %g" % SYMMETRY_TOL)
    if d.shape[0] and np.abs(np.diagonal(d)).max() > 0:
        raise InvalidParams("diagonal must be exactly zero")
    return d


def coupling(entries):
    """Validate a transport plan: nonnegative, entries capped at 1 + 1e-9."""
    p = np.asarray(entries, dtype=np.float64)
    if p.ndim != 2:
        raise DimensionMismatch("expected a matrix, got shape %s" % (p.shape,))
    if not np.all(np.isfinite(p)):
        raise InvalidParams("coupling entries must be finite")
    if np.any(p < 0):
        raise InvalidParams("coupling entries must be nonnegative")
    if p.max(initial=0.0) > COUPLING_CAP:
        raise InvalidParams("coupling entry exceeds %g" % COUPLING_CAP)
    return p


def _check_dims(D, Dbar, pi):
    n, m = pi.shape
    if D.shape != (n, n) or Dbar.shape != (m, m):
        raise DimensionMismatch(
            "D %s, Dbar %s incompatible with coupling %s" % (D.shape, Dbar.shape, pi.shape)
        )


def apply_tensor(D, Dbar, pi):
    """Apply the distortion tensor to a coupling.

    Parameters
    ----------
    D : ndarray, shape (n, n)
        Intra-space distances of the source.
    Dbar : ndarray, shape (m, m)
        Intra-space distances of the target.
    pi : ndarray, shape (n, m)
        Transport plan.

    Returns
    -------
    ndarray, shape (n, m)
        Sum over (k, l) of (D[i,k] - Dbar[j,l])^2 * pi[k,l], via the
        three-product decomposition. Deterministic for fixed inputs.
    """
    D = np.asarray(D, dtype=np.float64)
    Dbar = np.asarray(Dbar, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    _check_dims(D, Dbar, pi)
    row = (D * D) @ pi.sum(axis=1)
    col = (Dbar * Dbar) @ pi.sum(axis=0)
    return row[:, None] + col[None, :] - 2.0 * (D @ pi @ Dbar)


def gw_quadratic_value(D, Dbar, pi):
    """Quadratic distortion <T @ pi, pi>; nonnegative."""
    val = float(np.sum(apply_tensor(D, Dbar, pi) * pi))
    # Cancellation can leave tiny negatives; the quadratic form is >= 0.
    return max(val, 0.0) if val > -1e-12 else val


def rgw_objective(D, Dbar, pi, alpha, beta, tau1, tau2):
    """Full robust objective: distortion plus KL marginal penalties.

    Finite whenever alpha and beta are strictly positive on the supports
    of the coupling marginals; otherwise DivergenceInfinite propagates.
    """
    if tau1 <= 0 or tau2 <= 0:
        raise InvalidParams("tau1 and tau2 must be > 0")
    quad = gw_quadratic_value(D, Dbar, pi)
    pi = np.asarray(pi, dtype=np.float64)
    pen1 = kl_divergence(pi.sum(axis=1), alpha)
    pen2 = kl_divergence(pi.sum(axis=0), beta)
    return quad + tau1 * pen1 + tau2 * pen2


def lipschitz_constant(D, Dbar):
    """Gradient Lipschitz constant of the quadratic distortion term.

    Equals max_{i,j} sqrt(sum_{k,l} (D[i,k] - Dbar[j,l])^4). The quartic
    expands into row-wise power sums, so the exact value costs
    O(n^2 + m^2 + n m) instead of a quadruple loop.
    """
    D = np.asarray(D, dtype=np.float64)
    Dbar = np.asarray(Dbar, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1] or Dbar.ndim != 2 or Dbar.shape[0] != Dbar.shape[1]:
        raise DimensionMismatch("cost matrices must be square")
    n, m = D.shape[0], Dbar.shape[0]
    s = np.stack([(D ** q).sum(axis=1) for q in (1, 2, 3, 4)])
    t = np.stack([(Dbar ** q).sum(axis=1) for q in (1, 2, 3, 4)])
    inner = (
        m * s[3][:, None]
        - 4.0 * np.outer(s[2], t[0])
        + 6.0 * np.outer(s[1], t[1])
        - 4.0 * np.outer(s[0], t[2])
        + n * t[3][None, :]
    )
    # Cancellation can leave small negatives where the true value is ~0.
    return float(np.sqrt(np.clip(inner, 0.0, None).max()))


def pairwise_distances(points):
    """Euclidean distance matrix of a point cloud, shape (n, d) -> (n, n)."""
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DimensionMismatch("expected an (n, d) array, got shape %s" % (x.shape,))
    sq = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    return np.sqrt(sq)
