"""Sum-over-subsets model: slicing, initialization, joint descent."""

import itertools
import math

import numpy as np
import pytest

from opgd.interaction import (
    InteractionArchitecture,
    interaction_fit,
    interaction_forward,
    interaction_init,
    interaction_risk_and_grad,
)
from opgd.gradients import grad_risk
from opgd.network import Architecture, Dataset, forward
from opgd.training import TrainConfig, fit_estimator

from test_network import forward_oracle, random_weights


def make_iarch(dim, d_star, k=3, depth=2):
    return InteractionArchitecture(dim, d_star, Architecture(d_star, depth, 2 * d_star, k))


class TestSubsets:
    def test_lexicographic_enumeration(self):
        ia = make_iarch(4, 2)
        assert ia.subsets == tuple(itertools.combinations(range(4), 2))
        assert ia.n_groups == 6
        assert all(len(s) == 2 for s in ia.subsets)
        assert len(set(ia.subsets)) == ia.n_groups

    def test_validation(self):
        with pytest.raises(ValueError):
            make_iarch(2, 3)
        with pytest.raises(ValueError):
            InteractionArchitecture(3, 2, Architecture(1, 2, 2, 1))


class TestForward:
    def test_zero_outer(self):
        ia = make_iarch(2, 1)
        ws = [random_weights(ia.per_group, np.random.default_rng(i)) for i in range(2)]
        for w in ws:
            w.outer[:] = 0.0
        assert interaction_forward(ia, ws, [0.3, 0.7]) == 0.0

    def test_full_order_reduces_to_plain(self):
        ia = make_iarch(2, 2, k=4)
        rng = np.random.default_rng(1)
        ws = [random_weights(ia.per_group, rng)]
        x = rng.uniform(-1, 1, 2)
        assert interaction_forward(ia, ws, x) == pytest.approx(
            forward(ia.per_group, ws[0], x), rel=1e-15
        )

    def test_matches_independent_subset_oracle(self):
        ia = make_iarch(3, 2, k=2, depth=3)
        rng = np.random.default_rng(2)
        ws = [random_weights(ia.per_group, rng) for _ in ia.subsets]
        for _ in range(10):
            x = rng.uniform(-1, 1, 3)
            want = sum(
                forward_oracle(ia.per_group, w, x[list(sub)])
                for w, sub in zip(ws, ia.subsets)
            )
            assert interaction_forward(ia, ws, x) == pytest.approx(want, rel=1e-12)

    def test_dimension_check(self):
        ia = make_iarch(3, 1)
        ws = interaction_init(ia, 30, np.random.default_rng(0))
        with pytest.raises(ValueError):
            interaction_forward(ia, ws, [0.1, 0.2])


class TestInit:
    def test_outer_blocks_zero(self):
        ia = make_iarch(3, 1, k=8)
        ws = interaction_init(ia, 100, np.random.default_rng(3))
        assert len(ws) == 3
        for w in ws:
            assert np.all(w.outer == 0.0)

    def test_ranges_scale_with_orders(self):
        # hidden ranges follow the group input size; input-layer ranges
        # follow the ambient dimension with the group-order exponent
        ia = make_iarch(3, 1, k=64)
        n = 100
        ws = interaction_init(ia, n, np.random.default_rng(4))
        hidden_bound = 20.0 * 1 * math.log(n) ** 2
        layer0_bound = 8.0 * 3 * math.log(n) ** 2 * n ** (1.0 / 2.0)
        for w in ws:
            assert np.abs(w.top).max() <= hidden_bound
            assert np.abs(w.layer0).max() <= layer0_bound
        assert max(np.abs(w.layer0).max() for w in ws) > hidden_bound

    def test_seeded_determinism(self):
        ia = make_iarch(2, 1)
        a = interaction_init(ia, 50, np.random.default_rng(9))
        b = interaction_init(ia, 50, np.random.default_rng(9))
        for wa, wb in zip(a, b):
            np.testing.assert_array_equal(wa.to_flat(), wb.to_flat())


class TestJointGradient:
    def test_group_gradient_matches_frozen_others(self):
        ia = make_iarch(3, 2, k=3)
        rng = np.random.default_rng(5)
        ws = [random_weights(ia.per_group, rng) for _ in ia.subsets]
        x = rng.uniform(0, 1, (12, 3))
        y = rng.uniform(-1, 1, 12)
        data = Dataset(x, y)
        risk, grads = interaction_risk_and_grad(ia, ws, data)
        for g_idx, sub in enumerate(ia.subsets):
            others = sum(
                forward(ia.per_group, ws[j], x[:, list(s)])
                for j, s in enumerate(ia.subsets)
                if j != g_idx
            )
            frozen = Dataset(x[:, list(sub)], y - others)
            alone = grad_risk(ia.per_group, ws[g_idx], frozen)
            np.testing.assert_allclose(
                grads[g_idx].to_flat(), alone.to_flat(), rtol=1e-9, atol=1e-12
            )


class TestFit:
    def test_full_order_reproduces_plain_estimator_bitwise(self):
        rng = np.random.default_rng(6)
        n = 30
        data = Dataset(rng.uniform(0, 1, (n, 1)), rng.uniform(-1, 1, n))
        arch = Architecture(1, 2, 2, 8)
        ia = InteractionArchitecture(1, 1, arch)
        cfg = TrainConfig(t_n=25, beta=3.0)
        est_p, tr_p = fit_estimator(arch, data, n, 0.5, cfg, 123)
        est_i, tr_i = interaction_fit(ia, data, cfg, 123)
        np.testing.assert_array_equal(tr_p.risks, tr_i.risks)
        np.testing.assert_array_equal(tr_p.grad_norms, tr_i.grad_norms)
        np.testing.assert_array_equal(tr_p.inner_disp, tr_i.inner_disp)
        np.testing.assert_array_equal(
            est_p.weights.to_flat(), est_i.group_weights[0].to_flat()
        )

    def test_additive_target_improves(self):
        rng = np.random.default_rng(7)
        n = 80
        x = rng.uniform(0, 1, (n, 2))
        y = x[:, 0] + x[:, 1] + 0.05 * rng.standard_normal(n)
        ia = make_iarch(2, 1, k=32)
        cfg = TrainConfig(t_n=60, beta=3.0)
        est, trace = interaction_fit(ia, Dataset(x, y), cfg, 11)
        assert trace.risks[-1] < trace.risks[0]
        assert trace.risks[0] == pytest.approx(float(np.mean(y**2)), abs=1e-12)

    def test_prediction_truncated(self):
        ia = make_iarch(2, 1, k=4)
        rng = np.random.default_rng(8)
        data = Dataset(rng.uniform(0, 1, (10, 2)), rng.uniform(-1, 1, 10))
        with pytest.warns(UserWarning):  # beta deliberately below max |Y|
            est, _ = interaction_fit(ia, data, TrainConfig(t_n=5, beta=0.2), 1)
        xs = rng.uniform(0, 1, (100, 2))
        assert np.all(np.abs(est.predict(xs)) <= 0.2)
