"""Numerical probes of the analysis bounds.

``layer_lipschitz_check`` evaluates, with explicit logistic constants
(sup |sigma'| = 1/4, sup |sigma| = 1), the per-layer inequality

    |A_w^(l) - A_v^(l)|  <=  max(1/4^l, 1) (2r+1)^l B^l alpha max|w - v|

for weight pairs whose hidden weights respect the bound B and inputs in
[-alpha, alpha]^d.  It is an exact inequality with no fitted constants.

The two scaling probes measure how the gradient norm and the gradient's
difference quotient grow with the subnetwork count K.  The analysis predicts
growth no faster than K^(3/2); the probes fit the log-log slope over a sweep
and compare against that ceiling (the only parameter-free prediction, since
the bounds' leading constants are unspecified).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .gradients import grad_risk
from .network import Architecture, Dataset, WeightVector, hidden_outputs

__all__ = [
    "BoundParams",
    "layer_lipschitz_check",
    "grad_scaling_probe",
    "lipschitz_scaling_probe",
]

SIGMA_PRIME_SUP = 0.25
SIGMA_SUP = 1.0


@dataclass(frozen=True)
class BoundParams:
    """Envelope constants for the probes; the analysis requires all >= 1."""

    b_n: float = 2.0  # sup bound on hidden and top weights
    gamma_star: float = 2.0  # sup bound on outer weights
    alpha_n: float = 1.0  # input sup bound
    m_n: float | None = None  # outer L2 budget (reported only)
    d_n: float | None = None  # objective Lipschitz-in-inner constant (reported only)

    def __post_init__(self):
        if self.b_n < 1 or self.gamma_star < 1 or self.alpha_n < 1:
            raise ValueError("b_n, gamma_star and alpha_n must all be >= 1")


def _check_hidden_bound(w: WeightVector, b_n: float) -> None:
    if np.abs(w.hidden).max(initial=0.0) > b_n or np.abs(w.top).max() > b_n:
        raise ValueError("hidden/top weights exceed the stated bound")


def _max_inner_diff(w: WeightVector, v: WeightVector, k: int) -> float:
    return max(
        float(np.abs(w.layer0[k] - v.layer0[k]).max()),
        float(np.abs(w.hidden[k] - v.hidden[k]).max(initial=0.0)),
        float(np.abs(w.top[k] - v.top[k]).max()),
    )


def layer_lipschitz_check(
    arch: Architecture,
    w: WeightVector,
    v: WeightVector,
    x,
    layer: int,
    params: BoundParams,
) -> dict:
    """Evaluate both sides of the per-layer weight-perturbation inequality.

    ``layer`` is the activation layer, 1..depth; the last one is the scalar
    subnetwork output.  Returns the worst-margin subnetwork's lhs and rhs and
    whether the inequality held for every subnetwork.
    """
    L = arch.depth
    if not 1 <= layer <= L:
        raise ValueError("layer must be in 1..depth")
    x = np.asarray(x, dtype=float).ravel()
    if np.abs(x).max() > params.alpha_n:
        raise ValueError("input outside [-alpha_n, alpha_n]^d")
    _check_hidden_bound(w, params.b_n)
    _check_hidden_bound(v, params.b_n)

    acts_w = hidden_outputs(arch, w, x)
    acts_v = hidden_outputs(arch, v, x)
    a_w, a_v = acts_w[layer - 1], acts_v[layer - 1]
    diff = np.abs(np.atleast_1d(a_w) - np.atleast_1d(a_v))
    lhs_per_k = diff if diff.ndim == 1 else diff.max(axis=1)

    factor = (
        max(SIGMA_PRIME_SUP**layer, 1.0)
        * (2 * arch.width + 1) ** layer
        * params.b_n**layer
        * params.alpha_n
        * max(SIGMA_SUP, 1.0)
    )
    ok = True
    worst = (-math.inf, 0.0, 0.0, 0)
    for k in range(arch.n_subnets):
        rhs_k = factor * _max_inner_diff(w, v, k)
        lhs_k = float(lhs_per_k[k])
        if lhs_k > rhs_k:
            ok = False
        margin = lhs_k - rhs_k
        if margin > worst[0]:
            worst = (margin, lhs_k, rhs_k, k)
    return {"lhs": worst[1], "rhs": worst[2], "ok": ok, "subnet": worst[3]}


def _sample_bounded_weights(
    arch: Architecture, params: BoundParams, rng: np.random.Generator
) -> WeightVector:
    K, r, d, L = arch.n_subnets, arch.width, arch.input_dim, arch.depth
    return WeightVector(
        outer=rng.uniform(-params.gamma_star, params.gamma_star, K),
        layer0=rng.uniform(-params.b_n, params.b_n, (K, r, d + 1)),
        hidden=rng.uniform(-params.b_n, params.b_n, (K, L - 2, r, r + 1)),
        top=rng.uniform(-params.b_n, params.b_n, (K, r + 1)),
    )


def _fit_loglog_slope(ks: np.ndarray, values: np.ndarray) -> float:
    lx = np.log(np.asarray(ks, dtype=float))
    ly = np.log(np.asarray(values, dtype=float))
    slope = np.polyfit(lx, ly, 1)[0]
    return float(slope)


def grad_scaling_probe(
    base_arch: Architecture,
    k_sweep: list[int],
    params: BoundParams,
    samples: int,
    rng: np.random.Generator,
    n_data: int = 16,
) -> dict:
    """Fit the growth exponent of the worst observed gradient norm in K."""
    if len(k_sweep) < 4:
        raise ValueError("sweep needs at least 4 subnetwork counts")
    max_norms = []
    for k_count in k_sweep:
        arch = replace(base_arch, n_subnets=int(k_count))
        worst = 0.0
        for _ in range(samples):
            w = _sample_bounded_weights(arch, params, rng)
            x = rng.uniform(-params.alpha_n, params.alpha_n, (n_data, arch.input_dim))
            y = rng.standard_normal(n_data)
            worst = max(worst, grad_risk(arch, w, Dataset(x, y)).norm())
        max_norms.append(worst)
    slope = _fit_loglog_slope(np.asarray(k_sweep), np.asarray(max_norms))
    return {
        "sweep": list(map(int, k_sweep)),
        "max_values": max_norms,
        "slope": slope,
        "threshold": 1.75,
        "pass": slope <= 1.75,
    }


def lipschitz_scaling_probe(
    base_arch: Architecture,
    k_sweep: list[int],
    params: BoundParams,
    pairs: int,
    rng: np.random.Generator,
    n_data: int = 16,
) -> dict:
    """Fit the growth exponent in K of max |grad(w1) - grad(w2)| / |w1 - w2|.

    Pairs alternate between independent draws and nearby perturbed copies;
    coincident pairs are skipped.
    """
    if len(k_sweep) < 4:
        raise ValueError("sweep needs at least 4 subnetwork counts")
    max_ratios = []
    for k_count in k_sweep:
        arch = replace(base_arch, n_subnets=int(k_count))
        worst = 0.0
        for p in range(pairs):
            w1 = _sample_bounded_weights(arch, params, rng)
            if p % 2 == 0:
                w2 = _sample_bounded_weights(arch, params, rng)
            else:
                w2 = WeightVector.from_flat(
                    arch,
                    np.clip(
                        w1.to_flat()
                        + rng.uniform(-1e-3, 1e-3, w1.n_params) * params.b_n,
                        -params.b_n,
                        params.b_n,
                    ),
                )
                w2.outer = w1.outer.copy()  # keep the outer bound intact
            dw = np.linalg.norm(w1.to_flat() - w2.to_flat())
            if dw == 0.0:
                continue
            x = rng.uniform(-params.alpha_n, params.alpha_n, (n_data, arch.input_dim))
            y = rng.standard_normal(n_data)
            data = Dataset(x, y)
            dg = np.linalg.norm(
                grad_risk(arch, w1, data).to_flat() - grad_risk(arch, w2, data).to_flat()
            )
            worst = max(worst, float(dg / dw))
        max_ratios.append(worst)
    slope = _fit_loglog_slope(np.asarray(k_sweep), np.asarray(max_ratios))
    return {
        "sweep": list(map(int, k_sweep)),
        "max_values": max_ratios,
        "slope": slope,
        "threshold": 1.75,
        "pass": slope <= 1.75,
    }
