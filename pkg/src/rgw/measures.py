"""Probability vectors, positive measures, and the generalized KL divergence.

Weights are plain float64 ndarrays; the constructors here only validate
(and optionally renormalize) their inputs. All downstream code assumes
inputs went through these checks.
"""

import numpy as np

from .errors import DimensionMismatch, DivergenceInfinite, EpsilonOutOfRange, InvalidParams

SIMPLEX_TOL = 1e-12


def positive_measure(weights):
    """Validate a nonnegative weight vector of arbitrary total mass."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size < 1:
        raise DimensionMismatch("expected a 1-d vector, got shape %s" % (w.shape,))
    if not np.all(np.isfinite(w)):
        raise InvalidParams("weights must be finite")
    if np.any(w < 0):
        raise InvalidParams("weights must be nonnegative")
    return w


def prob_vector(weights, renormalize=False):
    """Validate a probability vector (nonnegative, sums to 1 within 1e-12).

    Renormalization is opt-in for ingestion code paths; it is never done
    silently.
    """
    w = positive_measure(weights)
    total = w.sum()
    if renormalize:
        if total <= 0:
            raise InvalidParams("cannot renormalize a zero-mass vector")
        return w / total
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise InvalidParams("weights sum to %.17g, expected 1 within %g" % (total, SIMPLEX_TOL))
    return w


def kl_divergence(a, b):
    """Generalized KL divergence sum(a*log(a/b) - a + b) between positive measures.

    The -sum(a)+sum(b) terms vanish when both arguments are probability
    vectors, so this one function serves both the ambiguity-set constraints
    and the marginal penalties.

    Parameters
    ----------
    a, b : ndarray
        Nonnegative vectors of equal length. Wherever a_i > 0, b_i must be
        positive; 0*log(0) is taken as 0.

    Returns
    -------
    float
        Nonnegative; 0 iff a == b entrywise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch("length %d vs %d" % (a.size, b.size))
    pos = a > 0
    if np.any(b[pos] <= 0):
        raise DivergenceInfinite("a_i > 0 with b_i = 0 makes the divergence infinite")
    val = float(np.sum(a[pos] * np.log(a[pos] / b[pos])) - a.sum() + b.sum())
    # Negative values can only come from rounding; the divergence is >= 0.
    return max(val, 0.0) if val > -1e-12 else val


def is_in_kl_ball(reference, candidate, radius, tol=1e-9):
    """True iff kl_divergence(reference, candidate) <= radius + tol."""
    if radius < 0:
        raise InvalidParams("radius must be >= 0")
    return kl_divergence(reference, candidate) <= radius + tol


def huber_mixture(clean, outlier, epsilon):
    """Contaminated vector (1-epsilon)*clean + epsilon*outlier.

    Both vectors live on the same index set; disjoint supports are
    expressed through zero entries.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise EpsilonOutOfRange("epsilon=%r outside [0, 1]" % (epsilon,))
    c = prob_vector(clean)
    o = prob_vector(outlier)
    if c.shape != o.shape:
        raise DimensionMismatch("length %d vs %d" % (c.size, o.size))
    return (1.0 - epsilon) * c + epsilon * o
