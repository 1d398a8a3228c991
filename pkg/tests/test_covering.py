"""Empirical covering numbers: greedy covers, bounds, samplers."""

import numpy as np
import pytest

from opgd.covering import (
    FunctionClassSpec,
    covering_estimate,
    entropy_bound,
    greedy_cover,
    pairwise_lp_distances,
    sample_class_values,
    sample_interaction_class_values,
    verify_cover,
)
from opgd.interaction import InteractionArchitecture
from opgd.network import Architecture


def small_spec(k=4):
    return FunctionClassSpec(
        arch=Architecture(1, 2, 2, k),
        a_bound=1.0,
        b_bound=1.0,
        c_budget=1.0,
        beta=1.0,
        alpha=1.0,
    )


class TestGreedyCoverExactCases:
    def test_two_constant_functions(self):
        values = np.vstack([np.zeros(16), np.ones(16)])
        dist = pairwise_lp_distances(values, 1.0)
        assert dist[0, 1] == pytest.approx(1.0)
        wide = greedy_cover(dist, 1.5)
        narrow = greedy_cover(dist, 0.5)
        assert len(wide) == 1
        assert len(narrow) == 2
        assert verify_cover(dist, wide, 1.5)
        assert verify_cover(dist, narrow, 0.5)

    def test_strict_radius(self):
        values = np.vstack([np.zeros(4), np.ones(4)])
        dist = pairwise_lp_distances(values, 1.0)
        # distance exactly 1 is NOT within a radius-1 ball (strict inequality)
        assert len(greedy_cover(dist, 1.0)) == 2

    def test_tie_breaks_to_lowest_index(self):
        dist = np.zeros((3, 3))
        assert greedy_cover(dist, 0.5) == [0]


class TestMonotonicity:
    def test_cover_size_non_increasing_in_radius(self):
        rng = np.random.default_rng(0)
        spec = small_spec()
        pts = rng.uniform(-1, 1, (32, 1))
        values = sample_class_values(spec, 40, pts, rng)
        dist = pairwise_lp_distances(values, 1.0)
        sizes = [len(greedy_cover(dist, eps)) for eps in (0.1, 0.2, 0.4)]
        assert sizes[0] >= sizes[1] >= sizes[2] >= 1


class TestSampler:
    def test_class_constraints_hold(self):
        rng = np.random.default_rng(1)
        spec = small_spec(k=6)
        pts = rng.uniform(-1, 1, (16, 1))
        values = sample_class_values(spec, 25, pts, rng)
        assert values.shape == (25, 16)
        assert np.all(np.abs(values) <= spec.beta)

    def test_interaction_sampler(self):
        rng = np.random.default_rng(2)
        per_group = Architecture(1, 2, 2, 3)
        ia = InteractionArchitecture(3, 1, per_group)
        spec = FunctionClassSpec(per_group, 1.0, 1.0, 1.0, beta=0.8, alpha=1.0)
        pts = rng.uniform(-1, 1, (10, 3))
        values = sample_interaction_class_values(ia, spec, 12, pts, rng)
        assert values.shape == (12, 10)
        assert np.all(np.abs(values) <= 0.8)

    def test_interaction_sampler_arch_mismatch(self):
        rng = np.random.default_rng(3)
        ia = InteractionArchitecture(2, 1, Architecture(1, 2, 2, 3))
        spec = FunctionClassSpec(Architecture(1, 2, 2, 5), 1.0, 1.0, 1.0, beta=1.0, alpha=1.0)
        with pytest.raises(ValueError):
            sample_interaction_class_values(ia, spec, 4, rng.uniform(-1, 1, (5, 2)), rng)


class TestEstimateAndBound:
    def test_estimate_valid_and_within_bound(self):
        rng = np.random.default_rng(4)
        spec = small_spec()
        pts = rng.uniform(-1, 1, (48, 1))
        rep = covering_estimate(spec, 50, pts, 0.25, 1.0, rng)
        assert rep["valid"]
        assert rep["n_cover"] >= 1
        assert rep["within_bound"]

    def test_bound_value_small_class(self):
        spec = small_spec()
        # unit constants: (beta/eps)^(alpha B^(L-1) A (C/eps)^(1/2) + 1)
        bound = entropy_bound(spec, 0.25, 1.0)
        assert bound == pytest.approx((1 / 0.25) ** (2.0 + 1.0), rel=1e-12)

    def test_bound_overflow_goes_to_inf(self):
        spec = FunctionClassSpec(
            Architecture(3, 3, 6, 2), 50.0, 50.0, 1e6, beta=10.0, alpha=5.0
        )
        assert entropy_bound(spec, 1e-3, 2.0) == np.inf

    def test_eps_must_be_below_truncation(self):
        rng = np.random.default_rng(5)
        spec = small_spec()
        with pytest.raises(ValueError):
            covering_estimate(spec, 10, rng.uniform(-1, 1, (8, 1)), 1.5, 1.0, rng)

    def test_p_floor(self):
        with pytest.raises(ValueError):
            pairwise_lp_distances(np.zeros((2, 4)), 0.5)
