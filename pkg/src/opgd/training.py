"""Full-batch gradient descent with per-step invariant monitors.

The update is w <- w - step_size * grad(risk), run for exactly ``t_n`` steps
with step_size = 1 / t_n unless overridden.  The monitors flag, without
aborting, any step where the risk increases and any step where either weight
block drifts further from the start than sqrt(2 * initial risk), the drift
radius the descent analysis guarantees when the step count dominates the
gradient's smoothness constants.  At desk scale that condition is far out of
reach, so violations are data, not errors.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .gradients import risk_and_grad
from .initialization import check_truncation_covers, init_weights
from .network import Architecture, Dataset, Estimator, WeightVector

__all__ = ["TrainConfig", "TrainingTrace", "DivergenceError", "train", "fit_estimator"]


class DivergenceError(RuntimeError):
    """Raised when the risk or gradient stops being finite during descent."""

    def __init__(self, step: int):
        super().__init__(f"non-finite risk or gradient at step {step}")
        self.step = step


@dataclass
class TrainConfig:
    t_n: int
    step_size: float | None = None
    beta: float = 1.0
    record_trace: bool = True
    monitor_tolerance: float = 1e-9

    def __post_init__(self):
        if self.t_n < 0:
            raise ValueError("t_n must be >= 0")
        if self.step_size is None and self.t_n > 0:
            self.step_size = 1.0 / self.t_n
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")


@dataclass
class TrainingTrace:
    """Per-step record of one descent run.

    All per-step arrays have t_n + 1 entries (index t describes the iterate
    after t steps); ``grad_norms[t]`` is the gradient norm at iterate t.
    """

    risks: np.ndarray
    grad_norms: np.ndarray
    inner_disp: np.ndarray
    outer_disp: np.ndarray
    disp_bound: float
    monotone_violations: list[int] = field(default_factory=list)
    displacement_violations: list[int] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return not self.monotone_violations

    def to_csv(self, path_or_file) -> None:
        """Write columns step, risk, grad_norm, inner_disp, outer_disp, monotone_ok, disp_ok."""
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            writer = csv.writer(fh)
            writer.writerow(
                ["step", "risk", "grad_norm", "inner_disp", "outer_disp", "monotone_ok", "disp_ok"]
            )
            mono_bad = set(self.monotone_violations)
            disp_bad = set(self.displacement_violations)
            for t in range(self.risks.size):
                writer.writerow(
                    [
                        t,
                        repr(float(self.risks[t])),
                        repr(float(self.grad_norms[t])),
                        repr(float(self.inner_disp[t])),
                        repr(float(self.outer_disp[t])),
                        int(t not in mono_bad),
                        int(t not in disp_bad),
                    ]
                )
        finally:
            if own:
                fh.close()

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self.to_csv(buf)
        return buf.getvalue()


def train(
    arch: Architecture,
    data: Dataset,
    init: WeightVector,
    cfg: TrainConfig,
) -> tuple[WeightVector, TrainingTrace]:
    """Run exactly cfg.t_n full-batch descent steps from ``init``.

    Returns the final weights and the trace.  Aborts with DivergenceError,
    carrying the step index, if the risk or gradient becomes non-finite.
    """
    w = init.copy()
    t_n = cfg.t_n
    risks = np.empty(t_n + 1)
    grad_norms = np.empty(t_n + 1)
    inner_disp = np.zeros(t_n + 1)
    outer_disp = np.zeros(t_n + 1)
    monotone_violations: list[int] = []
    displacement_violations: list[int] = []

    risk, g = risk_and_grad(arch, w, data)
    disp_bound = math.sqrt(2.0 * risk) if risk >= 0 else math.nan
    for t in range(t_n + 1):
        if not math.isfinite(risk):
            raise DivergenceError(t)
        gnorm = g.norm()
        if not math.isfinite(gnorm):
            raise DivergenceError(t)
        risks[t] = risk
        grad_norms[t] = gnorm
        if t > 0:
            inner_disp[t] = w.inner_distance(init)
            outer_disp[t] = w.outer_distance(init)
            if risk > risks[t - 1]:
                monotone_violations.append(t)
            if (
                inner_disp[t] > disp_bound + cfg.monitor_tolerance
                or outer_disp[t] > disp_bound + cfg.monitor_tolerance
            ):
                displacement_violations.append(t)
        if t == t_n:
            break
        w.axpy_(-cfg.step_size, g)
        risk, g = risk_and_grad(arch, w, data)

    trace = TrainingTrace(
        risks=risks,
        grad_norms=grad_norms,
        inner_disp=inner_disp,
        outer_disp=outer_disp,
        disp_bound=disp_bound,
        monotone_violations=monotone_violations,
        displacement_violations=displacement_violations,
    )
    if not cfg.record_trace:
        # keep endpoints and monitor outcomes, drop the bulk
        trace.risks = risks[[0, -1]]
        trace.grad_norms = grad_norms[[0, -1]]
        trace.inner_disp = inner_disp[[0, -1]]
        trace.outer_disp = outer_disp[[0, -1]]
    return w, trace


def fit_estimator(
    arch: Architecture,
    data: Dataset,
    n: int,
    tau: float,
    cfg: TrainConfig,
    seed: int,
) -> tuple[Estimator, TrainingTrace]:
    """Initialize from ``seed``, descend, truncate: the complete estimator.

    ``n`` sets the initialization ranges and is normally data.n.
    """
    rng = np.random.default_rng(seed)
    w0 = init_weights(arch, n, tau, rng)
    check_truncation_covers(cfg.beta, data.y)
    w, trace = train(arch, data, w0, cfg)
    return Estimator(arch=arch, weights=w, beta=cfg.beta), trace
