"""Full-batch descent loop, monitors, and the end-to-end estimator."""

import math

import numpy as np
import pytest

from opgd.experiments import generate, get_target
from opgd.initialization import init_weights
from opgd.network import Architecture, Dataset, predict, subnet_outputs
from opgd.training import DivergenceError, TrainConfig, fit_estimator, train

# frozen after the first verified execution of the seeded run below
GOLDEN_INITIAL_RISK = 0.20155852259839255
GOLDEN_FINAL_RISK = 0.048741194488732216


def small_problem(seed=0, n=20, k=8):
    rng = np.random.default_rng(seed)
    arch = Architecture(1, 2, 2, k)
    data = Dataset(rng.uniform(0, 1, (n, 1)), rng.uniform(-1, 1, n))
    w0 = init_weights(arch, n, 0.5, rng)
    return arch, data, w0


class TestTrainBasics:
    def test_zero_steps_returns_init(self):
        arch, data, w0 = small_problem()
        w, trace = train(arch, data, w0, TrainConfig(t_n=0, beta=1.0))
        np.testing.assert_array_equal(w.to_flat(), w0.to_flat())
        assert trace.risks.shape == (1,)
        assert trace.risks[0] == pytest.approx(float(np.mean(data.y**2)), abs=1e-12)

    def test_first_step_moves_only_outer(self):
        arch, data, w0 = small_problem(seed=3)
        t_n = 50
        w, _ = train(arch, data, w0, TrainConfig(t_n=1, step_size=1.0 / t_n, beta=1.0))
        np.testing.assert_array_equal(w.layer0, w0.layer0)
        np.testing.assert_array_equal(w.top, w0.top)
        tops = subnet_outputs(arch, w0, data.x)
        want = (1.0 / t_n) * (2.0 / data.n) * (tops * data.y[:, None]).sum(axis=0)
        np.testing.assert_allclose(w.outer, want, rtol=1e-12, atol=1e-15)

    def test_zero_targets_fixed_point(self):
        arch, data, w0 = small_problem(seed=4)
        data = Dataset(data.x, np.zeros(data.n))
        w, trace = train(arch, data, w0, TrainConfig(t_n=5, beta=1.0))
        np.testing.assert_array_equal(w.to_flat(), w0.to_flat())
        assert np.all(trace.risks == 0.0)

    def test_divergence_aborts_with_step_index(self):
        arch, data, w0 = small_problem(seed=5)
        with pytest.raises(DivergenceError) as err:
            train(arch, data, w0, TrainConfig(t_n=50, step_size=1e12, beta=1.0))
        assert err.value.step >= 1

    def test_trace_lengths(self):
        arch, data, w0 = small_problem(seed=6)
        _, trace = train(arch, data, w0, TrainConfig(t_n=7, beta=1.0))
        for arr in (trace.risks, trace.grad_norms, trace.inner_disp, trace.outer_disp):
            assert arr.shape == (8,)


class TestGoldenRun:
    def test_seeded_desk_run(self):
        target = get_target("abs1d")
        data = generate(
            target, 50, 0.25, np.random.default_rng(np.random.SeedSequence(1234).spawn(1)[0])
        )
        arch = Architecture(1, 2, 2, 256)
        cfg = TrainConfig(t_n=2000, beta=4.0 * math.log(50))
        est, trace = fit_estimator(arch, data, 50, 0.5, cfg, 777)
        assert trace.risks[0] == pytest.approx(GOLDEN_INITIAL_RISK, rel=1e-12)
        assert trace.risks[-1] == pytest.approx(GOLDEN_FINAL_RISK, rel=1e-12)
        assert trace.risks[-1] < trace.risks[0]
        assert trace.monotone_violations == []
        assert trace.displacement_violations == []

    def test_repeat_run_is_identical(self):
        arch, data, _ = small_problem(seed=8)
        cfg = TrainConfig(t_n=40, beta=2.0)
        est1, tr1 = fit_estimator(arch, data, data.n, 0.5, cfg, 99)
        est2, tr2 = fit_estimator(arch, data, data.n, 0.5, cfg, 99)
        np.testing.assert_array_equal(est1.weights.to_flat(), est2.weights.to_flat())
        np.testing.assert_array_equal(tr1.risks, tr2.risks)
        assert tr1.to_csv_string() == tr2.to_csv_string()


class TestEstimator:
    def test_prediction_bounded(self):
        arch, data, _ = small_problem(seed=9)
        cfg = TrainConfig(t_n=10, beta=0.3)
        with pytest.warns(UserWarning):  # beta deliberately below max |Y|
            est, _ = fit_estimator(arch, data, data.n, 0.5, cfg, 1)
        xs = np.random.default_rng(0).uniform(-2, 2, (200, 1))
        assert np.all(np.abs(predict(est, xs)) <= 0.3)

    def test_truncation_warning_for_small_beta(self):
        arch, data, _ = small_problem(seed=10)
        with pytest.warns(UserWarning):
            fit_estimator(arch, data, data.n, 0.5, TrainConfig(t_n=1, beta=1e-6), 1)


class TestTraceExport:
    def test_csv_shape_and_flags(self, tmp_path):
        arch, data, w0 = small_problem(seed=11)
        _, trace = train(arch, data, w0, TrainConfig(t_n=5, beta=1.0))
        path = tmp_path / "trace.csv"
        trace.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "step,risk,grad_norm,inner_disp,outer_disp,monotone_ok,disp_ok"
        assert len(lines) == 7
        first = lines[1].split(",")
        assert first[0] == "0" and first[5] == "1" and first[6] == "1"

    def test_record_trace_off_keeps_endpoints(self):
        arch, data, w0 = small_problem(seed=12)
        _, trace = train(arch, data, w0, TrainConfig(t_n=9, beta=1.0, record_trace=False))
        assert trace.risks.shape == (2,)
        assert trace.disp_bound == pytest.approx(math.sqrt(2 * float(np.mean(data.y**2))), rel=1e-12)


class TestConfigValidation:
    def test_default_step_size_matches_reciprocal(self):
        cfg = TrainConfig(t_n=400, beta=1.0)
        assert cfg.step_size == 1.0 / 400

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            TrainConfig(t_n=-1, beta=1.0)
        with pytest.raises(ValueError):
            TrainConfig(t_n=1, step_size=-0.1, beta=1.0)
        with pytest.raises(ValueError):
            TrainConfig(t_n=1, beta=0.0)
