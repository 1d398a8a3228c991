"""Reusable verification runs shared by the command line and the test suite.

Each run returns a plain dict with the measured quantities and pass flags;
callers decide whether a failed flag is fatal.
"""

from __future__ import annotations

import numpy as np

from .block_descent import (
    certify_constants,
    fixed_point_instance,
    quadratic_instance,
    run_block_descent,
    sin_link_instance,
)
from .gradients import fd_grad, grad_formula_direct, grad_risk
from .network import Architecture, Dataset, WeightVector, flat_index, forward
from .probes import BoundParams, layer_lipschitz_check

__all__ = [
    "max_rel_error",
    "random_conditioned_instance",
    "run_grad_check",
    "run_lipschitz_suite",
    "run_block_descent_suite",
]


def max_rel_error(
    a: np.ndarray, b: np.ndarray, floor: float = 1e-10, scale_floor: float = 0.0
) -> float:
    """Largest |a - b| / max(|a|, |b|, scale_floor) over coordinates where
    either side reaches ``floor`` in absolute value; 0.0 when none does.

    Coordinates below ``floor`` on both sides are saturation noise and carry
    no information.  A positive ``scale_floor`` turns the comparison into a
    mixed absolute/relative one for coordinates smaller than it; central
    differences carry an absolute noise floor near 1e-10, so a pure relative
    comparison against them is meaningless below about 1e-4."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    scale = np.maximum(np.abs(a), np.abs(b))
    mask = scale >= floor
    if not mask.any():
        return 0.0
    denom = np.maximum(scale[mask], scale_floor) if scale_floor > 0 else scale[mask]
    return float(np.max(np.abs(a[mask] - b[mask]) / denom))


def random_conditioned_instance(
    rng: np.random.Generator,
    d_max: int = 3,
    depth_max: int = 3,
    width_max: int = 6,
    subnets_max: int = 8,
    n_samples: int = 4,
) -> tuple[Architecture, WeightVector, Dataset]:
    """Small random network plus data, kept away from sigmoid saturation.

    Weight magnitudes stay well under 10 and pre-activations stay moderate,
    so every gradient coordinate is large relative to finite-difference
    noise.  Targets are network outputs plus order-one perturbations.
    """
    d = int(rng.integers(1, d_max + 1))
    depth = int(rng.integers(2, depth_max + 1))
    width = int(rng.integers(2 * d, width_max + 1))
    subnets = int(rng.integers(1, subnets_max + 1))
    arch = Architecture(d, depth, width, subnets)
    w = WeightVector.zeros(arch)
    w.layer0[...] = rng.uniform(-1.0, 1.0, w.layer0.shape)
    scale = 1.5 / (width + 1)
    w.hidden[...] = rng.uniform(-scale, scale, w.hidden.shape)
    w.top[...] = rng.uniform(-1.0, 1.0, w.top.shape)
    w.outer[...] = rng.uniform(0.5, 1.5, subnets) * rng.choice([-1.0, 1.0], subnets)
    x = rng.uniform(-1.0, 1.0, (n_samples, d))
    y = forward(arch, w, x) + rng.uniform(-0.5, 0.5, n_samples)
    return arch, w, Dataset(x, y)


def _grad_risk_via_formula(arch, w, data) -> np.ndarray:
    """Risk gradient assembled coordinate by coordinate from the path-sum formula."""
    resid = 2.0 * (forward(arch, w, data.x) - data.y) / data.n
    flat = np.zeros(w.n_params)
    d, L, r = arch.input_dim, arch.depth, arch.width

    def coords():
        for k in range(arch.n_subnets):
            for i in range(r):
                for j in range(d + 1):
                    yield k, i, j, 0
            for layer in range(1, L - 1):
                for i in range(r):
                    for j in range(r + 1):
                        yield k, i, j, layer
            for j in range(r + 1):
                yield k, 0, j, L - 1
            yield k, 0, 0, L

    for k, i, j, layer in coords():
        total = 0.0
        for s in range(data.n):
            total += resid[s] * grad_formula_direct(arch, w, data.x[s], (k, i, j, layer))
        flat[flat_index(arch, k, layer, i, j)] = total
    return flat


def run_grad_check(
    n_instances: int,
    seed: int,
    fd_tol: float = 1e-5,
    formula_tol: float = 1e-12,
    formula_every: int = 10,
) -> dict:
    """Compare the production gradient against both oracles.

    The finite-difference comparison runs on every instance; the exhaustive
    path-sum comparison, being pure Python, runs on every ``formula_every``-th
    instance (at least one).
    """
    rng = np.random.default_rng(seed)
    worst_fd = 0.0
    worst_formula = 0.0
    formula_checked = 0
    for idx in range(n_instances):
        arch, w, data = random_conditioned_instance(rng)
        g = grad_risk(arch, w, data).to_flat()
        g_fd = fd_grad(arch, w, data).to_flat()
        worst_fd = max(worst_fd, max_rel_error(g, g_fd, scale_floor=1e-4))
        if idx % formula_every == 0:
            worst_formula = max(worst_formula, max_rel_error(g, _grad_risk_via_formula(arch, w, data)))
            formula_checked += 1
    return {
        "instances": n_instances,
        "formula_instances": formula_checked,
        "max_fd_rel_error": worst_fd,
        "fd_tol": fd_tol,
        "fd_ok": worst_fd <= fd_tol,
        "max_formula_rel_error": worst_formula,
        "formula_tol": formula_tol,
        "formula_ok": worst_formula <= formula_tol,
        "pass": worst_fd <= fd_tol and worst_formula <= formula_tol,
    }


def run_lipschitz_suite(
    n_pairs: int,
    seed: int,
    dims: tuple[int, ...] = (1, 2),
    depths: tuple[int, ...] = (2, 3),
    b_n: float = 2.0,
    alpha_n: float = 1.0,
) -> dict:
    """Per-layer weight-perturbation inequality on random bounded pairs."""
    rng = np.random.default_rng(seed)
    params = BoundParams(b_n=b_n, gamma_star=1.0, alpha_n=alpha_n)
    violations = 0
    checked = 0
    combos = [(d, L) for d in dims for L in depths]
    for idx in range(n_pairs):
        d, depth = combos[idx % len(combos)]
        width = 2 * d if d > 1 else 4
        arch = Architecture(d, depth, width, int(rng.integers(1, 4)))

        def draw():
            w = WeightVector.zeros(arch)
            w.layer0[...] = rng.uniform(-3.0 * b_n, 3.0 * b_n, w.layer0.shape)
            w.hidden[...] = rng.uniform(-b_n, b_n, w.hidden.shape)
            w.top[...] = rng.uniform(-b_n, b_n, w.top.shape)
            return w

        w = draw()
        if idx % 2 == 0:
            v = draw()
            v.layer0 = w.layer0 + rng.uniform(-0.5, 0.5, w.layer0.shape)
        else:
            v = WeightVector(
                outer=w.outer.copy(),
                layer0=w.layer0 + rng.uniform(-0.1, 0.1, w.layer0.shape),
                hidden=np.clip(w.hidden + rng.uniform(-0.1, 0.1, w.hidden.shape), -b_n, b_n),
                top=np.clip(w.top + rng.uniform(-0.1, 0.1, w.top.shape), -b_n, b_n),
            )
        x = rng.uniform(-alpha_n, alpha_n, d)
        for layer in range(1, depth + 1):
            res = layer_lipschitz_check(arch, w, v, x, layer, params)
            checked += 1
            if not res["ok"]:
                violations += 1
    return {
        "pairs": n_pairs,
        "checks": checked,
        "violations": violations,
        "pass": violations == 0,
    }


def run_block_descent_suite(n_random: int, seed: int) -> dict:
    """Named instances plus random convex-in-u quadratics, all assertions."""
    rng = np.random.default_rng(seed)
    instances = [sin_link_instance(), fixed_point_instance()]
    for i in range(n_random):
        a = float(rng.uniform(-2, 2))
        alpha = float(rng.uniform(0.1, 2.0))
        v0 = float(rng.uniform(-2, 2))
        u0 = a * v0 + float(rng.uniform(-2, 2))
        instances.append(quadratic_instance(a, alpha, u0, v0, name=f"quadratic_{i}"))
    reports = []
    for inst in instances:
        consts = certify_constants(inst)
        reports.append(run_block_descent(inst, consts))
    all_ok = all(
        r["conclusion_ok"] and r["disp_ok"] and r["monotone_ok"] for r in reports
    )
    return {"instances": len(reports), "reports": reports, "pass": all_ok}
