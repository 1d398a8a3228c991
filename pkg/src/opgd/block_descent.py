"""Synthetic check of the two-block descent guarantee.

The guarantee under test: for a nonnegative C^1 objective F(u, v) that is
convex in u, with gradient norm and gradient Lipschitz constant bounded by
L_n on the ball A of radius 2 sqrt(F(u0, v0)) + 1 around the start, and with
v -> F(u*, v) Lipschitz on the smaller ball of radius sqrt(2 F(u0, v0)),
running t_n >= L_n plain descent steps of size 1 / t_n gives

    F(end) <= F(u*, v0) + Lip_v * sqrt(2 F(u0, v0))
              + |u* - u0|^2 / 2 + F(u0, v0) / t_n,

with per-step decrease and both block displacements staying within
sqrt(2 F(u0, v0)) at every step.  Here Lip_v is the certified Lipschitz
constant of v -> F(u*, v); when u* is nonzero it equals D_n * |u*| for the
usual factored form, and when u* = 0 the product form stays well defined.

Instances are scalar in each block.  The constants are certified by dense
grid maximization over A (pitch 1e-2, inflated by 1.05), which the runner
treats as hypotheses, exactly as the guarantee does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "BlockInstance",
    "CertifiedConstants",
    "certify_constants",
    "run_block_descent",
    "quadratic_instance",
    "sin_link_instance",
    "fixed_point_instance",
]

GRID_PITCH = 1e-2
INFLATE = 1.05


@dataclass
class BlockInstance:
    """Scalar two-block objective with vectorized value, gradient, curvature."""

    name: str
    f: Callable
    grad_u: Callable
    grad_v: Callable
    hess_norm: Callable
    u0: float
    v0: float
    u_star: float


@dataclass(frozen=True)
class CertifiedConstants:
    l_n: float  # bound on both the gradient norm and its Lipschitz constant on A
    lip_v: float  # Lipschitz constant of v -> F(u*, v) on the displacement ball
    f0: float

    @property
    def radius(self) -> float:
        return 2.0 * math.sqrt(self.f0) + 1.0


def _sym2x2_norm(h11, h12, h22):
    mean = 0.5 * (h11 + h22)
    spread = np.sqrt((0.5 * (h11 - h22)) ** 2 + h12**2)
    return np.abs(mean) + spread


def certify_constants(inst: BlockInstance, pitch: float = GRID_PITCH) -> CertifiedConstants:
    """Grid-maximize the gradient norm, curvature, and v-Lipschitz ratio.

    The maxima are inflated by 5 percent to absorb the grid pitch.
    """
    f0 = float(inst.f(inst.u0, inst.v0))
    if f0 < 0:
        raise ValueError("objective must be nonnegative")
    radius = 2.0 * math.sqrt(f0) + 1.0
    ax = np.arange(-radius, radius + pitch, pitch)
    grad_max = 0.0
    hess_max = 0.0
    # row chunks keep the mesh memory bounded
    vs = inst.v0 + ax
    for lo in range(0, ax.size, 256):
        us = (inst.u0 + ax[lo : lo + 256])[:, None]
        mask = (us - inst.u0) ** 2 + (vs[None, :] - inst.v0) ** 2 <= radius**2
        if not mask.any():
            continue
        gu = inst.grad_u(us, vs[None, :])
        gv = inst.grad_v(us, vs[None, :])
        gn = np.sqrt(gu**2 + gv**2)
        grad_max = max(grad_max, float(gn[mask].max()))
        hn = np.broadcast_to(inst.hess_norm(us, vs[None, :]), mask.shape)
        hess_max = max(hess_max, float(hn[mask].max()))

    ball = math.sqrt(2.0 * f0)
    if ball > 0:
        vg = inst.v0 + np.arange(-ball, ball + pitch, pitch)
        vg = vg[np.abs(vg - inst.v0) <= ball]
        fv = inst.f(inst.u_star, vg)
        fv0 = float(inst.f(inst.u_star, inst.v0))
        dv = np.abs(vg - inst.v0)
        keep = dv > 1e-12
        lip_v = float(np.max(np.abs(fv[keep] - fv0) / dv[keep])) if keep.any() else 0.0
    else:
        lip_v = 0.0
    return CertifiedConstants(
        l_n=INFLATE * max(grad_max, hess_max, 1.0),
        lip_v=INFLATE * lip_v,
        f0=f0,
    )


def run_block_descent(
    inst: BlockInstance,
    consts: CertifiedConstants,
    t_n: int | None = None,
) -> dict:
    """Run the descent and evaluate every assertion of the guarantee.

    ``t_n`` defaults to ceil(l_n); values below l_n violate the precondition
    and are rejected.
    """
    if t_n is None:
        t_n = max(int(math.ceil(consts.l_n)), 1)
    if t_n < consts.l_n:
        raise ValueError("t_n must be at least the certified constant l_n")
    lam = 1.0 / t_n
    u, v = float(inst.u0), float(inst.v0)
    f_prev = float(inst.f(u, v))
    disp_ball = math.sqrt(2.0 * consts.f0)
    max_u_disp = 0.0
    max_v_disp = 0.0
    monotone_ok = True
    for _ in range(t_n):
        gu = float(inst.grad_u(u, v))
        gv = float(inst.grad_v(u, v))
        u -= lam * gu
        v -= lam * gv
        f_cur = float(inst.f(u, v))
        if f_cur > f_prev:
            monotone_ok = False
        f_prev = f_cur
        max_u_disp = max(max_u_disp, abs(u - inst.u0))
        max_v_disp = max(max_v_disp, abs(v - inst.v0))

    tol = 1e-12
    rhs = (
        float(inst.f(inst.u_star, inst.v0))
        + consts.lip_v * disp_ball
        + 0.5 * (inst.u_star - inst.u0) ** 2
        + consts.f0 / t_n
    )
    return {
        "name": inst.name,
        "t_n": t_n,
        "l_n": consts.l_n,
        "lip_v": consts.lip_v,
        "f0": consts.f0,
        "final_value": f_prev,
        "conclusion_rhs": rhs,
        "conclusion_ok": f_prev <= rhs + tol,
        "max_u_disp": max_u_disp,
        "max_v_disp": max_v_disp,
        "disp_ball": disp_ball,
        "disp_ok": max_u_disp <= disp_ball + tol and max_v_disp <= disp_ball + tol,
        "monotone_ok": monotone_ok,
    }


def quadratic_instance(a: float, alpha: float, u0: float, v0: float, name: str = "quadratic") -> BlockInstance:
    """F(u, v) = (u - a v)^2 + alpha (v - v0)^2: convex in u, nonnegative.

    The comparison point u* = a v0 attains F(u*, v0) = 0.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")

    def f(u, v):
        return (u - a * v) ** 2 + alpha * (v - v0) ** 2

    def gu(u, v):
        return 2.0 * (u - a * v)

    def gv(u, v):
        return -2.0 * a * (u - a * v) + 2.0 * alpha * (v - v0)

    def hn(u, v):
        h11 = 2.0 + 0.0 * np.asarray(u)
        h12 = -2.0 * a + 0.0 * np.asarray(u)
        h22 = 2.0 * a**2 + 2.0 * alpha + 0.0 * np.asarray(u)
        return _sym2x2_norm(h11, h12, h22)

    return BlockInstance(name, f, gu, gv, hn, u0, v0, a * v0)


def sin_link_instance() -> BlockInstance:
    """F(u, v) = (u - sin v)^2 from (1, 0) with comparison point u* = 0."""

    def f(u, v):
        return (u - np.sin(v)) ** 2

    def gu(u, v):
        return 2.0 * (u - np.sin(v))

    def gv(u, v):
        return -2.0 * (u - np.sin(v)) * np.cos(v)

    def hn(u, v):
        e = u - np.sin(v)
        c = np.cos(v)
        return _sym2x2_norm(2.0 + 0.0 * e, -2.0 * c, 2.0 * np.sin(v) * e + 2.0 * c**2)

    return BlockInstance("sin_link", f, gu, gv, hn, 1.0, 0.0, 0.0)


def fixed_point_instance() -> BlockInstance:
    """F(u, v) = u^2 + v^2 started at the minimizer: the trajectory is constant."""

    def f(u, v):
        return u**2 + v**2

    def gu(u, v):
        return 2.0 * u + 0.0 * np.asarray(v)

    def gv(u, v):
        return 2.0 * v + 0.0 * np.asarray(u)

    def hn(u, v):
        return 2.0 + 0.0 * (np.asarray(u) + np.asarray(v))

    return BlockInstance("fixed_point", f, gu, gv, hn, 0.0, 0.0, 0.0)
