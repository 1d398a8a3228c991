"""Randomized initialization and the theory-parameter calculator.

Initialization draws every inner weight i.i.d. uniform with per-layer ranges
that grow like (log n)^2 (times n^tau for the input layer) and sets every
outer coefficient to exactly zero, so the initial network is identically zero
and the initial risk equals the mean of Y^2.

``theory_params`` evaluates the full-scale parameter recipes (subnetwork
count, step count, step size, truncation level).  Those values are
astronomically infeasible for any real run; desk mode substitutes
configurable small values while reporting the literal ones alongside.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .network import Architecture, WeightVector

__all__ = ["TheoryParams", "init_weights", "theory_params", "desk_subnet_count"]


@dataclass(frozen=True)
class TheoryParams:
    """Full-scale parameter recipe plus the values actually used for a run.

    ``k_theory`` and ``l_n`` overflow float64 quickly; their base-10
    logarithms are always finite and exact enough for reporting.  ``t_n``,
    ``lam`` and ``k`` are the active (desk or theory) values; ``lam`` is
    defined as 1 / t_n, never set independently.
    """

    tau: float
    beta: float
    c1: float
    c2: float
    k_theory: float
    k_theory_log10: float
    l_n: float
    l_n_log10: float
    t_theory: float
    t_theory_log10: float
    feasible: bool
    mode: str
    k: int
    t_n: int

    @property
    def lam(self) -> float:
        return 1.0 / self.t_n


def desk_subnet_count(n: int) -> int:
    """Default desk-scale subnetwork count: max(8 n, 512)."""
    return max(8 * n, 512)


def theory_params(
    d: int,
    r: int,
    L: int,
    n: int,
    c1: float = 4.0,
    c2: float = 1.0,
    mode: str = "desk",
    consistency_variant: bool = False,
    desk_k: int | None = None,
    desk_t: int = 2000,
    k_budget: float = 1e8,
    t_budget: float = 1e7,
) -> TheoryParams:
    """Evaluate the full-scale parameter recipes for sample size ``n``.

    The subnetwork count is n^(6 d + r + 2) and the step count is
    ceil(c2 * L_n) with L_n = K^(3/2) * (log n)^(6 L + 2); the consistency
    variant uses exponent 6 L + 5 instead (the two analyses state different
    exponents and neither is privileged here).  tau is 1 / (1 + d) and the
    truncation level is c1 * log n; logs are natural throughout.

    ``feasible`` is False when either theory value exceeds its budget.  In
    desk mode the returned active K and t_n are the desk values.
    """
    if n < 3:
        raise ValueError("n must be >= 3 so that log n > 1")
    if mode not in ("desk", "theory"):
        raise ValueError("mode must be 'desk' or 'theory'")
    log_n = math.log(n)
    tau = 1.0 / (1.0 + d)
    beta = c1 * log_n

    k_exp = 6 * d + r + 2
    k_log10 = k_exp * math.log10(n)
    k_theory = float(n**k_exp) if k_log10 < 308 else math.inf

    ln_exp = 6 * L + (5 if consistency_variant else 2)
    # L_n = K^(3/2) * (log n)^ln_exp
    ln_log10 = 1.5 * k_log10 + ln_exp * math.log10(log_n)
    l_n = 10.0**ln_log10 if ln_log10 < 308 else math.inf
    t_log10 = math.log10(c2) + ln_log10
    t_theory = math.ceil(c2 * l_n) if math.isfinite(l_n) else math.inf

    feasible = k_theory <= k_budget and t_theory <= t_budget
    if mode == "theory":
        if not feasible:
            raise ValueError(
                "theory-scale parameters exceed the configured budget; "
                "use desk mode"
            )
        k_active, t_active = int(k_theory), int(t_theory)
    else:
        k_active = desk_subnet_count(n) if desk_k is None else int(desk_k)
        t_active = int(desk_t)
    if t_active < 1 or k_active < 1:
        raise ValueError("active K and t_n must be positive")

    return TheoryParams(
        tau=tau,
        beta=beta,
        c1=c1,
        c2=c2,
        k_theory=k_theory,
        k_theory_log10=k_log10,
        l_n=l_n,
        l_n_log10=ln_log10,
        t_theory=t_theory,
        t_theory_log10=t_log10,
        feasible=feasible,
        mode=mode,
        k=k_active,
        t_n=t_active,
    )


def init_weights(
    arch: Architecture,
    n: int,
    tau: float,
    rng: np.random.Generator,
    layer0_dim_factor: int | None = None,
) -> WeightVector:
    """Draw the randomized starting point for gradient descent.

    Outer coefficients are exactly zero.  Hidden and top weights are uniform
    on +-20 d (log n)^2, input-layer weights uniform on
    +-8 d (log n)^2 n^tau, with d = input_dim (natural log).  For grouped
    models the input-layer range scales with the ambient dimension instead;
    pass it as ``layer0_dim_factor``.

    One uniform stream is consumed subnetwork-major, layer-major, row-major,
    so equal seeds give identical draws regardless of vectorization.
    """
    if n < 3:
        raise ValueError("n must be >= 3 so that log n > 1")
    if not tau > 0:
        raise ValueError("tau must be positive")
    d, L, r, K = arch.input_dim, arch.depth, arch.width, arch.n_subnets
    log_sq = math.log(n) ** 2
    bound_hidden = 20.0 * d * log_sq
    d0 = d if layer0_dim_factor is None else int(layer0_dim_factor)
    bound_layer0 = 8.0 * d0 * log_sq * n**tau

    n0 = r * (d + 1)
    nh = (L - 2) * r * (r + 1)
    nt = r + 1
    u = rng.random((K, n0 + nh + nt))
    u = 2.0 * u - 1.0
    w = WeightVector(
        outer=np.zeros(K),
        layer0=(bound_layer0 * u[:, :n0]).reshape(K, r, d + 1),
        hidden=(bound_hidden * u[:, n0 : n0 + nh]).reshape(K, L - 2, r, r + 1),
        top=bound_hidden * u[:, n0 + nh :],
    )
    return w


def check_truncation_covers(beta: float, y: np.ndarray) -> None:
    """Warn when the truncation level does not dominate the observed targets."""
    y_max = float(np.max(np.abs(y))) if y.size else 0.0
    if beta <= y_max:
        warnings.warn(
            f"truncation level {beta:.3g} does not exceed max |Y| = {y_max:.3g}",
            stacklevel=2,
        )
