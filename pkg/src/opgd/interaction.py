"""Sum-over-coordinate-subsets model: one subnetwork group per subset.

The predictor is the sum, over all subsets I of {1..d} of a fixed size
``d_star``, of an independent combined network that sees only the
coordinates in I (in increasing order).  All groups share one architecture,
are initialized from a single stream in lexicographic subset order, and are
trained jointly by the same full-batch descent loop as the plain estimator.
With d_star == d there is exactly one group and the whole pipeline
reproduces the plain estimator bit for bit under a matched seed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .gradients import _backward_chunk
from .initialization import check_truncation_covers, init_weights
from .network import (
    Architecture,
    Dataset,
    WeightVector,
    _chunk_size,
    _forward_chunk,
    truncate,
)
from .training import DivergenceError, TrainConfig, TrainingTrace

__all__ = [
    "InteractionArchitecture",
    "InteractionEstimator",
    "interaction_forward",
    "interaction_init",
    "interaction_risk_and_grad",
    "interaction_train",
    "interaction_fit",
]

MAX_GROUPS = 10_000


@dataclass(frozen=True)
class InteractionArchitecture:
    """Ambient dimension, interaction order, and the shared group shape."""

    dim: int
    d_star: int
    per_group: Architecture

    def __post_init__(self):
        if not 1 <= self.d_star <= self.dim:
            raise ValueError("d_star must be in 1..dim")
        if self.per_group.input_dim != self.d_star:
            raise ValueError("per-group architecture must take d_star inputs")
        if math.comb(self.dim, self.d_star) > MAX_GROUPS:
            raise ValueError("too many coordinate subsets for a desk-scale run")

    @property
    def subsets(self) -> tuple[tuple[int, ...], ...]:
        """All size-d_star subsets of the coordinates, lexicographic, 0-based."""
        return tuple(itertools.combinations(range(self.dim), self.d_star))

    @property
    def n_groups(self) -> int:
        return math.comb(self.dim, self.d_star)


@dataclass
class InteractionEstimator:
    iarch: InteractionArchitecture
    group_weights: list[WeightVector]
    beta: float

    def predict(self, x):
        return truncate(self.beta, interaction_forward(self.iarch, self.group_weights, x))


def _slices(iarch: InteractionArchitecture, x: np.ndarray) -> list[np.ndarray]:
    if x.shape[1] != iarch.dim:
        raise ValueError(f"input has dimension {x.shape[1]}, expected {iarch.dim}")
    return [np.ascontiguousarray(x[:, list(sub)]) for sub in iarch.subsets]


def interaction_forward(
    iarch: InteractionArchitecture, group_weights: list[WeightVector], x
) -> np.ndarray | float:
    """Sum of group outputs, each on its own coordinate slice."""
    xb = np.atleast_2d(np.asarray(x, dtype=float))
    single = np.asarray(x).ndim == 1
    total = np.zeros(xb.shape[0])
    for w, xs in zip(group_weights, _slices(iarch, xb), strict=True):
        step = _chunk_size(iarch.per_group)
        for lo in range(0, xb.shape[0], step):
            total[lo : lo + step] += _forward_chunk(
                iarch.per_group, w, xs[lo : lo + step], False
            )[0]
    return float(total[0]) if single else total


def interaction_init(
    iarch: InteractionArchitecture, n: int, rng: np.random.Generator
) -> list[WeightVector]:
    """Group-wise randomized start, one stream, lexicographic subset order.

    Hidden ranges scale with d_star; input-layer ranges scale with the
    ambient dimension and use tau = 1 / (1 + d_star).
    """
    tau = 1.0 / (1.0 + iarch.d_star)
    return [
        init_weights(iarch.per_group, n, tau, rng, layer0_dim_factor=iarch.dim)
        for _ in iarch.subsets
    ]


def interaction_risk_and_grad(
    iarch: InteractionArchitecture,
    group_weights: list[WeightVector],
    data: Dataset,
) -> tuple[float, list[WeightVector]]:
    """Joint empirical risk and its gradient, grouped like the weights."""
    arch = iarch.per_group
    grads = [WeightVector.zeros(arch) for _ in iarch.subsets]
    slices = _slices(iarch, data.x)
    n = data.n
    step = _chunk_size(arch)
    resid_all = np.empty(n)
    for lo in range(0, n, step):
        caches = []
        f_sum = np.zeros(min(step, n - lo))
        for w, xs in zip(group_weights, slices, strict=True):
            f, acts, a_top, _ = _forward_chunk(arch, w, xs[lo : lo + step], True)
            caches.append((acts, a_top))
            f_sum += f
        resid = f_sum - data.y[lo : lo + step]
        resid_all[lo : lo + step] = resid
        scaled = 2.0 * resid / n
        for g, w, xs, (acts, a_top) in zip(grads, group_weights, slices, caches, strict=True):
            _backward_chunk(arch, w, xs[lo : lo + step], scaled, acts, a_top, g)
    return float(np.dot(resid_all, resid_all) / n), grads


def _group_inner_sq(ws: list[WeightVector], refs: list[WeightVector]) -> float:
    return sum(w.inner_sq_distance(ref) for w, ref in zip(ws, refs, strict=True))


def _group_outer_sq(ws: list[WeightVector], refs: list[WeightVector]) -> float:
    return sum(w.outer_sq_distance(ref) for w, ref in zip(ws, refs, strict=True))


def interaction_train(
    iarch: InteractionArchitecture,
    data: Dataset,
    inits: list[WeightVector],
    cfg: TrainConfig,
) -> tuple[list[WeightVector], TrainingTrace]:
    """Joint full-batch descent over the concatenated group weights."""
    ws = [w.copy() for w in inits]
    t_n = cfg.t_n
    risks = np.empty(t_n + 1)
    grad_norms = np.empty(t_n + 1)
    inner_disp = np.zeros(t_n + 1)
    outer_disp = np.zeros(t_n + 1)
    monotone_violations: list[int] = []
    displacement_violations: list[int] = []

    risk, grads = interaction_risk_and_grad(iarch, ws, data)
    disp_bound = math.sqrt(2.0 * risk)
    for t in range(t_n + 1):
        if not math.isfinite(risk):
            raise DivergenceError(t)
        gnorm = math.sqrt(sum(g.sq_norm() for g in grads))
        if not math.isfinite(gnorm):
            raise DivergenceError(t)
        risks[t] = risk
        grad_norms[t] = gnorm
        if t > 0:
            inner_disp[t] = math.sqrt(_group_inner_sq(ws, inits))
            outer_disp[t] = math.sqrt(_group_outer_sq(ws, inits))
            if risk > risks[t - 1]:
                monotone_violations.append(t)
            if (
                inner_disp[t] > disp_bound + cfg.monitor_tolerance
                or outer_disp[t] > disp_bound + cfg.monitor_tolerance
            ):
                displacement_violations.append(t)
        if t == t_n:
            break
        for w, g in zip(ws, grads, strict=True):
            w.axpy_(-cfg.step_size, g)
        risk, grads = interaction_risk_and_grad(iarch, ws, data)

    trace = TrainingTrace(
        risks=risks,
        grad_norms=grad_norms,
        inner_disp=inner_disp,
        outer_disp=outer_disp,
        disp_bound=disp_bound,
        monotone_violations=monotone_violations,
        displacement_violations=displacement_violations,
    )
    return ws, trace


def interaction_fit(
    iarch: InteractionArchitecture,
    data: Dataset,
    cfg: TrainConfig,
    seed,
) -> tuple[InteractionEstimator, TrainingTrace]:
    """Initialize, jointly descend, truncate."""
    rng = np.random.default_rng(seed)
    inits = interaction_init(iarch, data.n, rng)
    check_truncation_covers(cfg.beta, data.y)
    ws, trace = interaction_train(iarch, data, inits, cfg)
    return InteractionEstimator(iarch=iarch, group_weights=ws, beta=cfg.beta), trace
