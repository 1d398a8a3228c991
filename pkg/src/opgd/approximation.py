"""Explicit approximation of a Lipschitz target by indicator subnetworks.

The domain [-R - 2/R, R]^d (R = grid resolution) is subdivided into
(R^2 + 1)^d cubes of side 2/R.  Each cube gets one subnetwork whose first
layer gates every coordinate against the cube faces with slopes
4 d R^2 (log n)^2, whose second layer fires only when all 2d gates agree,
and whose remaining layers sharpen the result.  The outer coefficient of a
cube's subnetwork is the target sampled at the cube center, divided by the
repetition count; the whole construction can be repeated and the grid can be
shifted per coordinate in steps of 2/R^2 so that the inaccurate band of
half-width 1/R^2 around the cube faces carries little of the sample.

Rows and layers the weight recipe leaves free are zero.  The construction needs at least one sharpening
layer (depth >= 3) to push the interior value close to 1 at desk-scale n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .network import Architecture, WeightVector, forward, subnet_outputs

__all__ = [
    "GridSpec",
    "ApproxPlan",
    "build_indicator_subnet",
    "build_plan",
    "choose_shift",
    "in_band",
    "band_mass",
    "eval_plan_error",
    "perturb_and_check",
    "indicator_values",
    "plan_to_json",
    "plan_from_json",
]


@dataclass(frozen=True)
class GridSpec:
    """Shifted cube grid used by the construction."""

    resolution: int  # cubes have side 2/resolution
    dim: int
    shift: tuple[float, ...]
    n_rep: int = 1

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if len(self.shift) != self.dim:
            raise ValueError("shift must have one component per coordinate")
        step = self.shift_step
        for s in self.shift:
            if not 0 <= s < self.resolution * step:
                raise ValueError("shift components must lie in [0, 2/resolution)")
        if self.n_rep < 1:
            raise ValueError("n_rep must be >= 1")

    @property
    def cube_side(self) -> float:
        return 2.0 / self.resolution

    @property
    def delta(self) -> float:
        """Half-width of the boundary band around cube faces."""
        return 1.0 / self.resolution**2

    @property
    def shift_step(self) -> float:
        return 2.0 / self.resolution**2

    @property
    def origin(self) -> float:
        return -self.resolution - 2.0 / self.resolution

    @property
    def cubes_per_axis(self) -> int:
        return self.resolution**2 + 1

    @property
    def cubes_per_rep(self) -> int:
        return self.cubes_per_axis**self.dim

    def lines(self, axis: int) -> np.ndarray:
        """Grid-line coordinates along one axis, including both ends."""
        idx = np.arange(self.cubes_per_axis + 1)
        return self.origin + idx * self.cube_side + self.shift[axis]

    def corners(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of every cube, each (cubes_per_rep, dim)."""
        axes = [self.lines(j)[:-1] for j in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        lower = np.stack([m.ravel() for m in mesh], axis=1)
        return lower, lower + self.cube_side

    def centers(self) -> np.ndarray:
        lower, upper = self.corners()
        return 0.5 * (lower + upper)


def in_band(grid: GridSpec, x: np.ndarray) -> np.ndarray:
    """Boolean mask: strictly within delta of some grid plane in some coordinate."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    mask = np.zeros(x.shape[0], dtype=bool)
    n_lines = grid.cubes_per_axis + 1
    for j in range(grid.dim):
        pos = (x[:, j] - grid.origin - grid.shift[j]) / grid.cube_side
        nearest = np.clip(np.round(pos), 0, n_lines - 1)
        dist = np.abs(x[:, j] - (grid.origin + grid.shift[j] + nearest * grid.cube_side))
        mask |= dist < grid.delta
    return mask


def band_mass(grid: GridSpec, x: np.ndarray) -> float:
    """Empirical fraction of points within the boundary band."""
    return float(np.mean(in_band(grid, x)))


def choose_shift(grid: GridSpec, sample_x: np.ndarray) -> GridSpec:
    """Per coordinate, pick the shift whose band holds the least sample mass.

    The candidate bands for the resolution-many shifts tile each cell, so the
    selected per-coordinate band mass is at most 1/resolution by pigeonhole
    and the total band mass at most dim/resolution.  Ties break toward the
    smallest shift.
    """
    sample_x = np.atleast_2d(np.asarray(sample_x, dtype=float))
    if sample_x.shape[0] < 1:
        raise ValueError("sample must be nonempty")
    best = []
    for j in range(grid.dim):
        masses = []
        for k in range(grid.resolution):
            cand = GridSpec(
                grid.resolution,
                1,
                (k * grid.shift_step,),
                grid.n_rep,
            )
            masses.append(band_mass(cand, sample_x[:, j : j + 1]))
        best.append(int(np.argmin(masses)) * grid.shift_step)
    return GridSpec(grid.resolution, grid.dim, tuple(best), grid.n_rep)


def _log_sq(n: int) -> float:
    return math.log(n) ** 2


def build_indicator_subnet(
    lower: np.ndarray,
    upper: np.ndarray,
    resolution: int,
    n: int,
    depth: int,
    width: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inner weight blocks of one cube-indicator subnetwork.

    Returns (layer0, hidden, top) shaped like one subnetwork's blocks.
    Needs width >= 2 dim gates and at least one sharpening layer to act as an
    indicator at moderate n.
    """
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    d = lower.size
    if width < 2 * d:
        raise ValueError("width must be at least 2 * dim")
    if depth < 2:
        raise ValueError("depth must be >= 2")
    if n < 8 * d or n < math.exp(width + 1):
        raise ValueError("n must satisfy n >= 8 dim and n >= exp(width + 1)")
    ls = _log_sq(n)
    slope = 4.0 * d * resolution**2 * ls

    layer0 = np.zeros((width, d + 1))
    for j in range(d):
        layer0[j, j + 1] = slope
        layer0[j, 0] = -slope * lower[j]
        layer0[d + j, j + 1] = -slope
        layer0[d + j, 0] = slope * upper[j]

    combine = np.zeros(width + 1)
    combine[0] = -8.0 * ls * (2 * d - 1.0 / n)
    combine[1 : 2 * d + 1] = 8.0 * ls

    sharpen = np.zeros(width + 1)
    sharpen[0] = -3.0 * ls
    sharpen[1] = 6.0 * ls

    hidden = np.zeros((depth - 2, width, width + 1))
    if depth == 2:
        top = combine
    else:
        hidden[0, 0, :] = combine
        for m in range(1, depth - 2):
            hidden[m, 0, :] = sharpen
        top = sharpen
    return layer0, hidden, top


@dataclass
class ApproxPlan:
    grid: GridSpec
    arch: Architecture
    weights: WeightVector
    alphas: np.ndarray  # one per hosted cube, repetition-major
    slots: np.ndarray  # subnetwork index hosting each cube
    n: int
    target_sup: float

    @property
    def n_cubes(self) -> int:
        return self.alphas.size


def build_plan(
    m,
    sup_norm: float,
    resolution: int,
    n_rep: int,
    n: int,
    arch: Architecture,
    shift: tuple[float, ...] | None = None,
    slots: np.ndarray | None = None,
) -> ApproxPlan:
    """Assemble the full plan: indicator subnetworks plus outer coefficients.

    The outer coefficient of each cube is the target at the cube center over
    ``n_rep``, clipped to [-sup_norm / n_rep, sup_norm / n_rep]; subnetworks
    not hosting a cube keep outer weight zero.  ``slots`` assigns cubes to
    subnetwork indices (pairwise distinct; default 0, 1, ...).
    """
    d = arch.input_dim
    grid = GridSpec(resolution, d, tuple(shift) if shift is not None else (0.0,) * d, n_rep)
    total = n_rep * grid.cubes_per_rep
    if total > arch.n_subnets:
        raise ValueError(
            f"plan needs {total} subnetworks but the architecture has {arch.n_subnets}"
        )
    if slots is None:
        slots = np.arange(total)
    else:
        slots = np.asarray(slots, dtype=int)
        if slots.size != total or np.unique(slots).size != total:
            raise ValueError("slots must be pairwise distinct, one per cube")
        if slots.min() < 0 or slots.max() >= arch.n_subnets:
            raise ValueError("slot index out of range")

    lower, upper = grid.corners()
    centers = 0.5 * (lower + upper)
    cap = sup_norm / n_rep
    alpha_rep = np.clip(np.asarray(m(centers), dtype=float).ravel() / n_rep, -cap, cap)

    w = WeightVector.zeros(arch)
    for c in range(grid.cubes_per_rep):
        l0, hid, top = build_indicator_subnet(
            lower[c], upper[c], resolution, n, arch.depth, arch.width
        )
        for rep in range(n_rep):
            k = slots[rep * grid.cubes_per_rep + c]
            w.layer0[k] = l0
            w.hidden[k] = hid
            w.top[k] = top
    alphas = np.tile(alpha_rep, n_rep)
    w.outer[slots] = alphas
    return ApproxPlan(
        grid=grid,
        arch=arch,
        weights=w,
        alphas=alphas,
        slots=slots,
        n=n,
        target_sup=float(sup_norm),
    )


def indicator_values(plan: ApproxPlan, points: np.ndarray) -> np.ndarray:
    """Per-cube subnetwork outputs on ``points``, shape (n_points, n_cubes)."""
    return subnet_outputs(plan.arch, plan.weights, points)[:, plan.slots]


def eval_plan_error(plan: ApproxPlan, m, eval_points: np.ndarray) -> dict:
    """Empirical error report of the plan against the target on given points.

    ``sup_offband`` is the worst absolute error over points inside
    [-resolution, resolution]^d and outside the boundary band; ``l2_error``
    averages over all points; ``sup_norm`` is the largest |network| seen.
    """
    pts = np.atleast_2d(np.asarray(eval_points, dtype=float))
    f = forward(plan.arch, plan.weights, pts)
    target = np.asarray(m(pts), dtype=float).ravel()
    err = np.abs(f - target)
    band = in_band(plan.grid, pts)
    inside = np.all(np.abs(pts) <= plan.grid.resolution, axis=1)
    off = inside & ~band
    r = plan.grid.resolution
    sup_bound = plan.target_sup * (3.0**plan.arch.input_dim + plan.grid.cubes_per_rep / plan.n)
    sup_norm = float(np.max(np.abs(f)))
    return {
        "l2_error": float(np.mean(err**2)),
        "sup_offband": float(err[off].max()) if off.any() else 0.0,
        "sup_norm": sup_norm,
        "sup_norm_bound": sup_bound,
        "sup_norm_ok": sup_norm <= sup_bound,
        "band_mass": float(np.mean(band)),
        "n_points": int(pts.shape[0]),
        "n_offband": int(off.sum()),
    }


def perturb_and_check(
    plan: ApproxPlan,
    m,
    eval_points: np.ndarray,
    magnitude: float,
    trials: int,
    rng: np.random.Generator,
) -> dict:
    """Re-evaluate the plan under random inner-weight perturbations.

    Each trial adds independent uniform noise of sup-norm at most
    ``magnitude`` to every inner weight of every hosting subnetwork (outer
    coefficients and idle subnetworks are untouched; idle subnetworks cannot
    affect the output).  Reports the worst case over trials.
    """
    base = plan.weights
    slots = plan.slots
    reports = []
    for _ in range(trials):
        w = base.copy()
        w.layer0[slots] += rng.uniform(-magnitude, magnitude, (slots.size,) + base.layer0.shape[1:])
        w.hidden[slots] += rng.uniform(-magnitude, magnitude, (slots.size,) + base.hidden.shape[1:])
        w.top[slots] += rng.uniform(-magnitude, magnitude, (slots.size,) + base.top.shape[1:])
        trial_plan = ApproxPlan(
            grid=plan.grid,
            arch=plan.arch,
            weights=w,
            alphas=plan.alphas,
            slots=slots,
            n=plan.n,
            target_sup=plan.target_sup,
        )
        reports.append(eval_plan_error(trial_plan, m, eval_points))
    return {
        "trials": trials,
        "magnitude": magnitude,
        "worst_l2_error": max(r["l2_error"] for r in reports),
        "worst_sup_offband": max(r["sup_offband"] for r in reports),
        "worst_sup_norm": max(r["sup_norm"] for r in reports),
        "sup_norm_ok_all": all(r["sup_norm_ok"] for r in reports),
        "per_trial": reports,
    }


def plan_to_json(plan: ApproxPlan) -> str:
    """Serialize grid, shifts, coefficients, and hosted weight blocks."""
    doc = {
        "schema": 1,
        "grid": {
            "resolution": plan.grid.resolution,
            "dim": plan.grid.dim,
            "shift": list(plan.grid.shift),
            "n_rep": plan.grid.n_rep,
        },
        "arch": {
            "input_dim": plan.arch.input_dim,
            "depth": plan.arch.depth,
            "width": plan.arch.width,
            "n_subnets": plan.arch.n_subnets,
        },
        "n": plan.n,
        "target_sup": plan.target_sup,
        "slots": plan.slots.tolist(),
        "alphas": plan.alphas.tolist(),
        "blocks": {
            "layer0": plan.weights.layer0[plan.slots].tolist(),
            "hidden": plan.weights.hidden[plan.slots].tolist(),
            "top": plan.weights.top[plan.slots].tolist(),
        },
    }
    return json.dumps(doc, sort_keys=True)


def plan_from_json(text: str) -> ApproxPlan:
    doc = json.loads(text)
    if doc.get("schema") != 1:
        raise ValueError("unsupported plan schema")
    arch = Architecture(**doc["arch"])
    grid = GridSpec(
        doc["grid"]["resolution"],
        doc["grid"]["dim"],
        tuple(doc["grid"]["shift"]),
        doc["grid"]["n_rep"],
    )
    slots = np.asarray(doc["slots"], dtype=int)
    alphas = np.asarray(doc["alphas"], dtype=float)
    w = WeightVector.zeros(arch)
    w.layer0[slots] = np.asarray(doc["blocks"]["layer0"], dtype=float)
    w.hidden[slots] = np.asarray(doc["blocks"]["hidden"], dtype=float)
    w.top[slots] = np.asarray(doc["blocks"]["top"], dtype=float)
    w.outer[slots] = alphas
    return ApproxPlan(
        grid=grid,
        arch=arch,
        weights=w,
        alphas=alphas,
        slots=slots,
        n=doc["n"],
        target_sup=doc["target_sup"],
    )
