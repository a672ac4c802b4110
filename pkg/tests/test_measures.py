"""Divergence and measure-constructor behavior."""

import math

import numpy as np
import pytest

from rgw.errors import (
    DimensionMismatch,
    DivergenceInfinite,
    EpsilonOutOfRange,
    InvalidParams,
)
from rgw.measures import (
    huber_mixture,
    is_in_kl_ball,
    kl_divergence,
    positive_measure,
    prob_vector,
)

from oracles import generalized_kl


class TestKlDivergence:
    def test_identical_vectors_give_zero(self):
        assert kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0.0

    def test_probability_pair_value(self):
        expected = 0.5 * math.log(2.0) + 0.5 * math.log(2.0 / 3.0)
        got = kl_divergence([0.5, 0.5], [0.25, 0.75])
        assert abs(got - expected) < 1e-15

    def test_unnormalized_pair_value(self):
        # Total masses differ, so the -sum(a)+sum(b) terms matter.
        expected = 0.2 * math.log(0.5) + 0.3 * math.log(3.0) - 0.5 + 0.5
        got = kl_divergence([0.2, 0.3], [0.4, 0.1])
        assert abs(got - expected) < 1e-15

    def test_matches_scalar_summation_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            a = rng.uniform(0.0, 2.0, n)
            b = rng.uniform(0.1, 2.0, n)
            assert abs(kl_divergence(a, b) - generalized_kl(a, b)) < 1e-12

    def test_zero_times_log_zero_is_zero(self):
        # a_i = 0 coordinates contribute only their +b_i mass term.
        got = kl_divergence([0.0, 1.0], [0.5, 1.0])
        assert abs(got - 0.5) < 1e-15

    def test_nonnegative_and_zero_only_at_equality(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            n = int(rng.integers(2, 10))
            a = rng.dirichlet(np.ones(n))
            b = rng.dirichlet(np.ones(n))
            d = kl_divergence(a, b)
            assert d >= 0.0
            if d == 0.0:
                np.testing.assert_allclose(a, b, atol=1e-14)
            assert kl_divergence(a, a) == 0.0

    def test_joint_convexity(self):
        rng = np.random.default_rng(13)
        for _ in range(300):
            n = int(rng.integers(2, 8))
            a1, a2 = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
            b1 = rng.uniform(0.05, 1.0, n)
            b2 = rng.uniform(0.05, 1.0, n)
            lam = float(rng.uniform())
            mixed = kl_divergence(lam * a1 + (1 - lam) * a2, lam * b1 + (1 - lam) * b2)
            bound = lam * kl_divergence(a1, b1) + (1 - lam) * kl_divergence(a2, b2)
            assert mixed <= bound + 1e-10

    def test_support_violation_raises(self):
        with pytest.raises(DivergenceInfinite):
            kl_divergence([0.5, 0.5], [1.0, 0.0])

    def test_length_mismatch_raises(self):
        with pytest.raises(DimensionMismatch):
            kl_divergence([0.5, 0.5], [1.0])


class TestKlBall:
    def test_center_is_inside_zero_ball(self):
        mu = np.array([0.3, 0.7])
        assert is_in_kl_ball(mu, mu, 0.0)

    def test_radius_decides_membership(self):
        ref = [0.5, 0.5]
        cand = [0.25, 0.75]
        assert not is_in_kl_ball(ref, cand, 0.1)
        assert is_in_kl_ball(ref, cand, 0.2)

    def test_negative_radius_rejected(self):
        with pytest.raises(InvalidParams):
            is_in_kl_ball([1.0], [1.0], -0.1)


class TestHuberMixture:
    def test_endpoints(self):
        clean = np.array([0.6, 0.4])
        outlier = np.array([0.1, 0.9])
        np.testing.assert_array_equal(huber_mixture(clean, outlier, 0.0), clean)
        np.testing.assert_array_equal(huber_mixture(clean, outlier, 1.0), outlier)

    def test_disjoint_support_mixture(self):
        got = huber_mixture([1.0, 0.0], [0.0, 1.0], 0.1)
        np.testing.assert_allclose(got, [0.9, 0.1], atol=1e-15)

    def test_output_mass_is_one(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(1, 12))
            c = rng.dirichlet(np.ones(n))
            o = rng.dirichlet(np.ones(n))
            eps = float(rng.uniform())
            assert abs(huber_mixture(c, o, eps).sum() - 1.0) <= 1e-12

    def test_epsilon_out_of_range(self):
        for eps in (-0.01, 1.01):
            with pytest.raises(EpsilonOutOfRange):
                huber_mixture([1.0], [1.0], eps)


class TestConstructors:
    def test_positive_measure_accepts_any_mass(self):
        w = positive_measure([0.0, 2.5, 1.0])
        assert w.dtype == np.float64

    def test_positive_measure_rejects_negative(self):
        with pytest.raises(InvalidParams):
            positive_measure([0.5, -0.1])

    def test_positive_measure_rejects_nonvector(self):
        with pytest.raises(DimensionMismatch):
            positive_measure([[0.5, 0.5]])

    def test_prob_vector_checks_mass(self):
        with pytest.raises(InvalidParams):
            prob_vector([0.5, 0.6])

    def test_prob_vector_renormalizes_on_request(self):
        got = prob_vector([2.0, 2.0], renormalize=True)
        np.testing.assert_allclose(got, [0.5, 0.5])
        with pytest.raises(InvalidParams):
            prob_vector([0.0, 0.0], renormalize=True)

    def test_prob_vector_rejects_nonfinite(self):
        with pytest.raises(InvalidParams):
            positive_measure([np.inf, 1.0])
