"""Data generators, Monte Carlo L2-error estimation, and rate sweeps.

Targets live on [0,1]^d; observations add Gaussian noise, which satisfies
the exponential moment condition the rate analysis assumes.  Sweeps derive
every random stream from one root seed through a fixed spawn tree (data,
fit, evaluation separated), so any run is exactly reproducible from its
config and seed, training never sees the evaluation sample, and repetitions
are independent of loop order.

Desk scaling: the subnetwork count follows K(n) = max(ceil(k_scale *
n^k_power), k_min) and the step count t(n) = max(ceil(t_scale n), t_min).
Full-theory values of these parameters are astronomically infeasible; the
sweep records them (via the theory calculator) alongside the desk values
actually run.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .initialization import theory_params
from .interaction import (
    InteractionArchitecture,
    interaction_fit,
)
from .network import Architecture, Dataset, Estimator, predict
from .training import DivergenceError, TrainConfig, fit_estimator

__all__ = [
    "TargetSpec",
    "TARGETS",
    "get_target",
    "ExperimentConfig",
    "RateReport",
    "generate",
    "mc_l2_error",
    "rate_sweep",
    "interaction_sweep",
]


@dataclass(frozen=True)
class TargetSpec:
    """A regression target with its smoothness metadata.

    ``components`` is set for sum-of-subsets targets: a mapping from
    0-based coordinate subsets to the component functions.
    """

    name: str
    dim: int
    fn: callable
    smoothness_p: float
    smoothness_c: float
    sup_norm: float
    lipschitz: float
    d_star: int | None = None
    components: dict | None = None


def _abs1d(x):
    return np.abs(x[..., 0] - 0.5)


def _sqrtabs1d(x):
    return np.sqrt(np.abs(x[..., 0] - 0.5))


def _prod2d(x):
    return x[..., 0] * x[..., 1]


def _sin2pi(x):
    return np.sin(2.0 * np.pi * x[..., 0])


def _additive3d(x):
    return np.sin(2.0 * np.pi * x[..., 0]) + np.sin(2.0 * np.pi * x[..., 1]) + np.sin(
        2.0 * np.pi * x[..., 2]
    )


def _pair(x):
    return (x[..., 0] - 0.5) * (x[..., 1] - 0.5)


def _pairwise3d(x):
    return _pair(x[..., [0, 1]]) + _pair(x[..., [0, 2]]) + _pair(x[..., [1, 2]])


def _mildcos1d(x):
    return 0.1 * np.cos(np.pi * x[..., 0] / 4.0)


TARGETS: dict[str, TargetSpec] = {
    t.name: t
    for t in [
        TargetSpec("abs1d", 1, _abs1d, 1.0, 1.0, 0.5, 1.0),
        TargetSpec("sqrtabs1d", 1, _sqrtabs1d, 0.5, 1.0, math.sqrt(0.5), math.inf),
        TargetSpec("prod2d", 2, _prod2d, 1.0, math.sqrt(2.0), 1.0, math.sqrt(2.0)),
        TargetSpec(
            "additive3d",
            3,
            _additive3d,
            1.0,
            2.0 * math.pi,
            3.0,
            2.0 * math.pi * math.sqrt(3.0),
            d_star=1,
            components={(0,): _sin2pi, (1,): _sin2pi, (2,): _sin2pi},
        ),
        TargetSpec(
            "pairwise3d",
            3,
            _pairwise3d,
            1.0,
            1.0,
            0.75,
            math.sqrt(3.0) / 2.0,
            d_star=2,
            components={(0, 1): _pair, (0, 2): _pair, (1, 2): _pair},
        ),
        TargetSpec("mildcos1d", 1, _mildcos1d, 1.0, 0.1 * math.pi / 4.0, 0.1, 0.1 * math.pi / 4.0),
        TargetSpec(
            "abs1d_grouped",
            1,
            _abs1d,
            1.0,
            1.0,
            0.5,
            1.0,
            d_star=1,
            components={(0,): _abs1d},
        ),
    ]
}


def get_target(name: str) -> TargetSpec:
    if name not in TARGETS:
        raise KeyError(f"unknown target {name!r}; known: {sorted(TARGETS)}")
    return TARGETS[name]


def generate(target: TargetSpec, n: int, noise_sd: float, rng: np.random.Generator) -> Dataset:
    """n observations: X uniform on [0,1]^dim, Y = m(X) + noise."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = rng.random((n, target.dim))
    y = np.asarray(target.fn(x), dtype=float)
    if noise_sd > 0:
        y = y + noise_sd * rng.standard_normal(n)
    return Dataset(x, y)


def _as_callable(predictor):
    if callable(predictor) and not isinstance(predictor, Estimator):
        return predictor
    if isinstance(predictor, Estimator):
        return lambda pts: predict(predictor, pts)
    if hasattr(predictor, "predict"):
        return predictor.predict
    raise TypeError("predictor must be callable or expose .predict")


def mc_l2_error(predictor, target: TargetSpec, eval_n: int, rng: np.random.Generator) -> float:
    """Unbiased Monte Carlo estimate of the integrated squared error."""
    if eval_n < 1:
        raise ValueError("eval_n must be >= 1")
    pred = _as_callable(predictor)
    pts = rng.random((eval_n, target.dim))
    diff = np.asarray(pred(pts), dtype=float) - np.asarray(target.fn(pts), dtype=float)
    return float(np.mean(diff**2))


@dataclass
class ExperimentConfig:
    target: str
    n_values: list[int]
    reps: int
    seed: int
    noise_sd: float = 0.25
    eval_n: int = 4000
    depth: int = 2
    width: int | None = None  # default 2 * dim (minimum the analysis allows)
    c1: float = 4.0  # truncation level c1 * log n
    k_scale: float = 8.0
    k_power: float = 1.0
    k_min: int = 512
    t_scale: float = 0.0
    t_min: int = 2000
    group_k: int | None = None  # per-group subnets; default splits the plain budget

    def __post_init__(self):
        self.n_values = [int(v) for v in self.n_values]
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError("n_values must be strictly increasing")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")

    def subnet_count(self, n: int) -> int:
        return max(int(math.ceil(self.k_scale * n**self.k_power)), self.k_min)

    def steps(self, n: int) -> int:
        return max(int(math.ceil(self.t_scale * n)), self.t_min)

    def arch_for(self, n: int, dim: int) -> Architecture:
        return Architecture(dim, self.depth, self.width or 2 * dim, self.subnet_count(n))

    def to_dict(self) -> dict:
        return asdict(self)


def _theory_scale_summary(cfg: ExperimentConfig, target: TargetSpec) -> list[dict]:
    """Literal full-scale parameters per n, recorded next to the desk values."""
    out = []
    width = cfg.width or 2 * target.dim
    for n in cfg.n_values:
        tp = theory_params(target.dim, width, cfg.depth, n, c1=cfg.c1,
                           desk_k=cfg.subnet_count(n), desk_t=cfg.steps(n))
        out.append(
            {
                "n": n,
                "k_theory_log10": tp.k_theory_log10,
                "t_theory_log10": tp.t_theory_log10,
                "feasible": tp.feasible,
                "k_desk": tp.k,
                "t_desk": tp.t_n,
            }
        )
    return out


def _slope_fit(ns: np.ndarray, means: np.ndarray, ses: np.ndarray) -> tuple[float, float]:
    """Least squares slope of log mean error against log n.

    The half-width propagates the per-cell standard errors through the
    log transform (delta method) at the 95 percent normal quantile.
    """
    lx = np.log(ns)
    ly = np.log(means)
    xbar = lx.mean()
    sxx = float(np.sum((lx - xbar) ** 2))
    coef = (lx - xbar) / sxx
    slope = float(np.dot(coef, ly))
    var = float(np.sum(coef**2 * (ses / means) ** 2))
    return slope, 1.96 * math.sqrt(var)


@dataclass
class RateReport:
    rows: list[dict]
    per_n: list[dict]
    slope: float
    slope_half_width: float
    theory_slope: float
    monotone_ok: bool
    config: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_n": self.per_n,
            "slope": self.slope,
            "slope_half_width": self.slope_half_width,
            "theory_slope": self.theory_slope,
            "monotone_ok": self.monotone_ok,
            "summary": self.summary,
            "config": self.config,
        }


def _aggregate(rows: list[dict], n_values: list[int], key: str) -> list[dict]:
    per_n = []
    for n in n_values:
        vals = np.array([r[key] for r in rows if r["n"] == n and not r["diverged"]])
        per_n.append(
            {
                "n": n,
                "mean": float(vals.mean()) if vals.size else math.nan,
                "se": float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0,
                "reps_ok": int(vals.size),
            }
        )
    return per_n


def _monotone_within_se(per_n: list[dict]) -> bool:
    for a, b in zip(per_n, per_n[1:]):
        pooled = math.sqrt(a["se"] ** 2 + b["se"] ** 2)
        if b["mean"] > a["mean"] + pooled:
            return False
    return True


def rate_sweep(cfg: ExperimentConfig, progress=None) -> RateReport:
    """Monte Carlo estimate of the error-versus-n trend for the plain estimator."""
    target = get_target(cfg.target)
    tau = 1.0 / (1.0 + target.dim)
    root = np.random.SeedSequence(cfg.seed)
    cell_seeds = root.spawn(len(cfg.n_values))
    rows = []
    for n, cell in zip(cfg.n_values, cell_seeds):
        arch = cfg.arch_for(n, target.dim)
        t_n = cfg.steps(n)
        tcfg = TrainConfig(t_n=t_n, beta=cfg.c1 * math.log(n), record_trace=False)
        for rep, rep_seed in enumerate(cell.spawn(cfg.reps)):
            data_ss, fit_ss, eval_ss = rep_seed.spawn(3)
            data = generate(target, n, cfg.noise_sd, np.random.default_rng(data_ss))
            row = {"n": n, "rep": rep, "l2_error": math.nan, "train_risk_final": math.nan, "diverged": 0}
            try:
                est, trace = fit_estimator(arch, data, n, tau, tcfg, fit_ss)
                row["train_risk_final"] = float(trace.risks[-1])
                row["l2_error"] = mc_l2_error(est, target, cfg.eval_n, np.random.default_rng(eval_ss))
            except DivergenceError:
                row["diverged"] = 1
            rows.append(row)
            if progress:
                progress(row)
    per_n = _aggregate(rows, cfg.n_values, "l2_error")
    ns = np.array([p["n"] for p in per_n if p["reps_ok"] > 0], dtype=float)
    means = np.array([p["mean"] for p in per_n if p["reps_ok"] > 0])
    ses = np.array([p["se"] for p in per_n if p["reps_ok"] > 0])
    if ns.size >= 2:
        slope, half = _slope_fit(ns, means, ses)
    else:
        slope, half = math.nan, math.nan
    return RateReport(
        rows=rows,
        per_n=per_n,
        slope=slope,
        slope_half_width=half,
        theory_slope=-1.0 / (1.0 + target.dim),
        monotone_ok=_monotone_within_se(per_n),
        config=cfg.to_dict(),
        summary={"theory_scale": _theory_scale_summary(cfg, target)},
    )


def _interaction_arch(cfg: ExperimentConfig, target: TargetSpec, n: int) -> InteractionArchitecture:
    d_star = target.d_star
    n_groups = math.comb(target.dim, d_star)
    if cfg.group_k is not None:
        per_group_k = int(cfg.group_k)
    else:
        # split the plain subnetwork budget evenly; one group reproduces it exactly
        per_group_k = int(math.ceil(cfg.subnet_count(n) / n_groups))
    per_group = Architecture(d_star, cfg.depth, 2 * d_star, per_group_k)
    return InteractionArchitecture(target.dim, d_star, per_group)


def interaction_sweep(cfg: ExperimentConfig, progress=None) -> RateReport:
    """Paired comparison: plain estimator versus the grouped estimator.

    Both arms see identical training data and evaluation points.  Unless
    ``group_k`` pins it, the per-group subnetwork budget splits the plain
    budget evenly, so with d_star equal to the ambient dimension the two
    arms coincide exactly.
    """
    target = get_target(cfg.target)
    if target.d_star is None:
        raise ValueError("interaction sweep needs a target with interaction structure")
    tau = 1.0 / (1.0 + target.dim)
    root = np.random.SeedSequence(cfg.seed)
    cell_seeds = root.spawn(len(cfg.n_values))
    rows = []
    for n, cell in zip(cfg.n_values, cell_seeds):
        plain_arch = cfg.arch_for(n, target.dim)
        iarch = _interaction_arch(cfg, target, n)
        t_n = cfg.steps(n)
        tcfg = TrainConfig(t_n=t_n, beta=cfg.c1 * math.log(n), record_trace=False)
        for rep, rep_seed in enumerate(cell.spawn(cfg.reps)):
            data_ss, fit_ss, eval_ss = rep_seed.spawn(3)
            data = generate(target, n, cfg.noise_sd, np.random.default_rng(data_ss))
            row = {
                "n": n,
                "rep": rep,
                "plain_l2": math.nan,
                "inter_l2": math.nan,
                "plain_risk_final": math.nan,
                "inter_risk_final": math.nan,
                "diverged": 0,
            }
            try:
                est_p, tr_p = fit_estimator(plain_arch, data, n, tau, tcfg, fit_ss)
                row["plain_risk_final"] = float(tr_p.risks[-1])
                row["plain_l2"] = mc_l2_error(
                    est_p, target, cfg.eval_n, np.random.default_rng(eval_ss)
                )
                est_i, tr_i = interaction_fit(iarch, data, tcfg, fit_ss)
                row["inter_risk_final"] = float(tr_i.risks[-1])
                row["inter_l2"] = mc_l2_error(
                    est_i, target, cfg.eval_n, np.random.default_rng(eval_ss)
                )
            except DivergenceError:
                row["diverged"] = 1
            rows.append(row)
            if progress:
                progress(row)
    ok = [r for r in rows if not r["diverged"]]
    plain_med = float(np.median([r["plain_l2"] for r in ok])) if ok else math.nan
    inter_med = float(np.median([r["inter_l2"] for r in ok])) if ok else math.nan
    per_n = _aggregate(
        [dict(r, l2_error=r["inter_l2"]) for r in rows], cfg.n_values, "l2_error"
    )
    return RateReport(
        rows=rows,
        per_n=per_n,
        slope=math.nan,
        slope_half_width=math.nan,
        theory_slope=-1.0 / (1.0 + target.d_star),
        monotone_ok=True,
        config=cfg.to_dict(),
        summary={
            "plain_median": plain_med,
            "inter_median": inter_med,
            "inter_beats_plain": bool(inter_med <= plain_med) if ok else False,
            "theory_scale": _theory_scale_summary(cfg, target),
        },
    )
