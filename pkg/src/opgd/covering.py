"""Empirical covering numbers of truncated network classes.

A class is described by sup bounds on the input-layer and hidden weights, an
L1 budget on the outer coefficients, a truncation level, and a domain
half-width.  ``covering_estimate`` samples networks from the class, measures
pairwise empirical L_p distances on a point set, and greedily builds an
internal cover (centers chosen among the sample), which upper-bounds the
internal covering number of the sampled subset.  The comparison value is the
metric-entropy bound for the class with all unspecified leading constants
set to one; the bound is loose, so staying below it is a sanity floor, not a
sharpness claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .interaction import InteractionArchitecture, interaction_forward
from .network import Architecture, WeightVector, forward, truncate

__all__ = [
    "FunctionClassSpec",
    "sample_class_values",
    "sample_interaction_class_values",
    "pairwise_lp_distances",
    "greedy_cover",
    "verify_cover",
    "entropy_bound",
    "covering_estimate",
]


@dataclass(frozen=True)
class FunctionClassSpec:
    arch: Architecture
    a_bound: float  # sup bound, input-layer weights
    b_bound: float  # sup bound, hidden and top weights
    c_budget: float  # L1 budget on outer coefficients
    beta: float  # truncation level
    alpha: float  # domain half-width

    def __post_init__(self):
        if min(self.a_bound, self.b_bound, self.c_budget) < 1:
            raise ValueError("a_bound, b_bound, c_budget must be >= 1")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")


def _sample_network(spec: FunctionClassSpec, rng: np.random.Generator) -> WeightVector:
    arch = spec.arch
    K, r, d, L = arch.n_subnets, arch.width, arch.input_dim, arch.depth
    # outer drawn uniform within +-c_budget / K so the L1 budget always holds
    return WeightVector(
        outer=rng.uniform(-spec.c_budget / K, spec.c_budget / K, K),
        layer0=rng.uniform(-spec.a_bound, spec.a_bound, (K, r, d + 1)),
        hidden=rng.uniform(-spec.b_bound, spec.b_bound, (K, L - 2, r, r + 1)),
        top=rng.uniform(-spec.b_bound, spec.b_bound, (K, r + 1)),
    )


def sample_class_values(
    spec: FunctionClassSpec,
    sample_count: int,
    x_points: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Values of ``sample_count`` truncated class members on the points."""
    pts = np.atleast_2d(np.asarray(x_points, dtype=float))
    values = np.empty((sample_count, pts.shape[0]))
    for i in range(sample_count):
        w = _sample_network(spec, rng)
        values[i] = truncate(spec.beta, forward(spec.arch, w, pts))
    return values


def sample_interaction_class_values(
    iarch: InteractionArchitecture,
    spec: FunctionClassSpec,
    sample_count: int,
    x_points: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Same sampler for the grouped (interaction) class: truncated group sums.

    ``spec`` describes each group's weight class; its arch must match the
    per-group architecture.
    """
    if spec.arch != iarch.per_group:
        raise ValueError("spec.arch must equal the per-group architecture")
    pts = np.atleast_2d(np.asarray(x_points, dtype=float))
    values = np.empty((sample_count, pts.shape[0]))
    for i in range(sample_count):
        ws = [_sample_network(spec, rng) for _ in iarch.subsets]
        values[i] = truncate(spec.beta, interaction_forward(iarch, ws, pts))
    return values


def pairwise_lp_distances(values: np.ndarray, p: float) -> np.ndarray:
    """Empirical L_p distance matrix between rows of ``values``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    m = values.shape[0]
    dist = np.zeros((m, m))
    for i in range(m):
        diff = np.abs(values[i + 1 :] - values[i]) ** p
        di = np.mean(diff, axis=1) ** (1.0 / p)
        dist[i, i + 1 :] = di
        dist[i + 1 :, i] = di
    return dist


def greedy_cover(dist: np.ndarray, eps: float) -> list[int]:
    """Greedy internal cover: strict-inequality balls, most-covering-first.

    Repeatedly picks the uncovered element whose eps-ball covers the most
    uncovered elements (lowest index on ties) until everything is covered.
    """
    m = dist.shape[0]
    uncovered = np.ones(m, dtype=bool)
    centers: list[int] = []
    within = dist < eps
    while uncovered.any():
        counts = np.where(uncovered, within[:, uncovered].sum(axis=1), -1)
        pick = int(np.argmax(counts))
        centers.append(pick)
        uncovered &= ~within[pick]
    return centers


def verify_cover(dist: np.ndarray, centers: list[int], eps: float) -> bool:
    """Post-hoc check that every element is strictly within eps of a center."""
    return bool(np.all(dist[:, centers].min(axis=1) < eps))


def entropy_bound(
    spec: FunctionClassSpec,
    eps: float,
    p: float,
    smoothness_order: int = 2,
    c_base: float = 1.0,
    c_exp: float = 1.0,
    c_off: float = 1.0,
) -> float:
    """Metric-entropy bound for the class with the stated constants.

    Computed in logs; returns inf when it overflows float64.
    """
    d, L = spec.arch.input_dim, spec.arch.depth
    exponent = (
        c_exp
        * spec.alpha**d
        * spec.b_bound ** ((L - 1) * d)
        * spec.a_bound**d
        * (spec.c_budget / eps) ** (d / smoothness_order)
        + c_off
    )
    log_val = exponent * (math.log(c_base) + p * math.log(spec.beta / eps))
    return math.exp(log_val) if log_val < 700 else math.inf


def covering_estimate(
    spec: FunctionClassSpec,
    sample_count: int,
    x_points: np.ndarray,
    eps: float,
    p: float,
    rng: np.random.Generator,
) -> dict:
    """Greedy internal covering number of a class sample, with bound comparison."""
    if not 0 < eps < spec.beta:
        raise ValueError("eps must lie in (0, beta)")
    if sample_count < 2:
        raise ValueError("need at least two sampled functions")
    values = sample_class_values(spec, sample_count, x_points, rng)
    dist = pairwise_lp_distances(values, p)
    centers = greedy_cover(dist, eps)
    bound = entropy_bound(spec, eps, p)
    return {
        "n_cover": len(centers),
        "centers": centers,
        "valid": verify_cover(dist, centers, eps),
        "bound": bound,
        "within_bound": len(centers) <= bound,
        "eps": eps,
        "p": p,
        "sample_count": sample_count,
    }
