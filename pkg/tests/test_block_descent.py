"""Two-block descent guarantee on synthetic objectives with certified constants."""

import math

import numpy as np
import pytest

from opgd.block_descent import (
    certify_constants,
    fixed_point_instance,
    quadratic_instance,
    run_block_descent,
    sin_link_instance,
)
from opgd.checks import run_block_descent_suite


class TestSinLink:
    def test_all_assertions_hold(self):
        inst = sin_link_instance()
        consts = certify_constants(inst)
        rep = run_block_descent(inst, consts)
        assert rep["conclusion_ok"]
        assert rep["disp_ok"]
        assert rep["monotone_ok"]
        # the comparison point interpolates at the start: F(u*, v0) = 0
        assert inst.f(inst.u_star, inst.v0) == 0.0
        # descent makes real progress on this instance
        assert rep["final_value"] < 0.01

    def test_certified_constants_dominate_start(self):
        inst = sin_link_instance()
        consts = certify_constants(inst)
        g0 = math.hypot(float(inst.grad_u(inst.u0, inst.v0)), float(inst.grad_v(inst.u0, inst.v0)))
        assert consts.l_n >= g0
        assert consts.f0 == 1.0


class TestFixedPoint:
    def test_stays_put_with_zero_bounds(self):
        inst = fixed_point_instance()
        consts = certify_constants(inst)
        rep = run_block_descent(inst, consts)
        assert rep["final_value"] == 0.0
        assert rep["max_u_disp"] == 0.0 and rep["max_v_disp"] == 0.0
        assert rep["conclusion_ok"] and rep["disp_ok"] and rep["monotone_ok"]


class TestQuadraticFamily:
    def test_random_instances(self):
        rng = np.random.default_rng(17)
        for i in range(10):
            a = float(rng.uniform(-2, 2))
            alpha = float(rng.uniform(0.1, 2.0))
            v0 = float(rng.uniform(-2, 2))
            u0 = a * v0 + float(rng.uniform(-2, 2))
            inst = quadratic_instance(a, alpha, u0, v0)
            consts = certify_constants(inst)
            rep = run_block_descent(inst, consts)
            assert rep["conclusion_ok"], rep
            assert rep["disp_ok"], rep
            assert rep["monotone_ok"], rep

    def test_comparison_point_is_exact_minimizer_at_start(self):
        inst = quadratic_instance(1.5, 0.3, 2.0, -1.0)
        assert inst.f(inst.u_star, inst.v0) == 0.0

    def test_rejects_negative_curvature(self):
        with pytest.raises(ValueError):
            quadratic_instance(1.0, -0.5, 0.0, 0.0)


class TestPreconditions:
    def test_step_budget_below_constant_rejected(self):
        inst = sin_link_instance()
        consts = certify_constants(inst)
        with pytest.raises(ValueError):
            run_block_descent(inst, consts, t_n=max(1, int(consts.l_n) - 2))

    def test_suite_runner(self):
        rep = run_block_descent_suite(5, seed=3)
        assert rep["instances"] == 7
        assert rep["pass"]
