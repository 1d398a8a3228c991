"""Command-line surface: reproducible runs with JSON configs and CSV/JSON outputs.

Every run resolves its configuration (defaults <- config file <- flags),
writes the resolved config next to its outputs, and derives all randomness
from the single seed in that config, so re-running from the emitted
config.json reproduces every output byte for byte.

Exit codes: 0 success, 1 assertion failure inside a verification run,
2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import approximation as ap
from .checks import run_block_descent_suite, run_grad_check, run_lipschitz_suite
from .covering import FunctionClassSpec, covering_estimate
from .experiments import ExperimentConfig, generate, get_target, interaction_sweep, rate_sweep
from .network import Architecture
from .probes import BoundParams, grad_scaling_probe, lipschitz_scaling_probe
from .training import DivergenceError, TrainConfig, fit_estimator

SCHEMA = 1


class ConfigError(Exception):
    pass


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonify(obj), sort_keys=True, indent=2) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _resolve(defaults: dict, args) -> dict:
    cfg = dict(defaults)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a JSON object")
        schema = loaded.pop("schema", SCHEMA)
        if schema != SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}")
        command = loaded.pop("command", args.command)
        if command != args.command:
            raise ConfigError(
                f"config is for command {command!r}, not {args.command!r}"
            )
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def _emit_config(out: Path, command: str, cfg: dict) -> None:
    _write_json(out / "config.json", {"schema": SCHEMA, "command": command, **cfg})


def _progress(row: dict) -> None:
    print(" ".join(f"{k}={_fmt(v)}" for k, v in row.items()), file=sys.stderr)


# ----------------------------------------------------------------- commands


def _cmd_train(cfg: dict, out: Path) -> int:
    target = get_target(cfg["target"])
    n = int(cfg["n"])
    width = cfg["width"] or 2 * target.dim
    arch = Architecture(target.dim, int(cfg["depth"]), int(width), int(cfg["k"]))
    data_ss, fit_ss = np.random.SeedSequence(cfg["seed"]).spawn(2)
    data = generate(target, n, cfg["noise_sd"], np.random.default_rng(data_ss))
    tcfg = TrainConfig(t_n=int(cfg["t_n"]), beta=cfg["c1"] * math.log(n))
    try:
        est, trace = fit_estimator(arch, data, n, 1.0 / (1.0 + target.dim), tcfg, fit_ss)
    except DivergenceError as exc:
        _write_json(out / "report.json", {"diverged": True, "step": exc.step})
        return 1
    trace.to_csv(out / "trace.csv")
    _write_json(
        out / "report.json",
        {
            "diverged": False,
            "initial_risk": trace.risks[0],
            "final_risk": trace.risks[-1],
            "risk_decreased": bool(trace.risks[-1] < trace.risks[0]),
            "beta": est.beta,
            "displacement_bound": trace.disp_bound,
            "monotone_violations": trace.monotone_violations,
            "displacement_violations": trace.displacement_violations,
        },
    )
    return 0


def _cmd_grad_check(cfg: dict, out: Path) -> int:
    report = run_grad_check(
        int(cfg["instances"]),
        cfg["seed"],
        fd_tol=cfg["fd_tol"],
        formula_tol=cfg["formula_tol"],
        formula_every=int(cfg["formula_every"]),
    )
    _write_json(out / "report.json", report)
    return 0 if report["pass"] else 1


def _cmd_lemma1(cfg: dict, out: Path) -> int:
    report = run_block_descent_suite(int(cfg["random_instances"]), cfg["seed"])
    _write_json(out / "report.json", report)
    return 0 if report["pass"] else 1


def _cmd_lipschitz(cfg: dict, out: Path) -> int:
    report = run_lipschitz_suite(
        int(cfg["pairs"]),
        cfg["seed"],
        dims=tuple(cfg["dims"]),
        depths=tuple(cfg["depths"]),
        b_n=cfg["b_n"],
        alpha_n=cfg["alpha_n"],
    )
    _write_json(out / "report.json", report)
    return 0 if report["pass"] else 1


def _cmd_scaling(cfg: dict, out: Path) -> int:
    base = Architecture(int(cfg["dim"]), int(cfg["depth"]), int(cfg["width"]), 1)
    params = BoundParams(b_n=cfg["b_n"], gamma_star=cfg["gamma_star"], alpha_n=cfg["alpha_n"])
    rng = np.random.default_rng(cfg["seed"])
    g = grad_scaling_probe(base, cfg["sweep"], params, int(cfg["samples"]), rng, int(cfg["n_data"]))
    l = lipschitz_scaling_probe(base, cfg["sweep"], params, int(cfg["pairs"]), rng, int(cfg["n_data"]))
    report = {"grad_norm": g, "grad_lipschitz": l, "pass": g["pass"] and l["pass"]}
    _write_json(out / "report.json", report)
    return 0 if report["pass"] else 1


def _build_plan_from_cfg(cfg: dict):
    target = get_target(cfg["target"])
    res = int(cfg["resolution"])
    n_rep = int(cfg["n_rep"])
    n = int(cfg["n"])
    width = cfg["width"] or 2 * target.dim
    rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"]))
    base_grid = ap.GridSpec(res, target.dim, (0.0,) * target.dim, n_rep)
    sample = rng.random((int(cfg["shift_sample"]), target.dim))
    grid = ap.choose_shift(base_grid, sample)
    arch = Architecture(target.dim, int(cfg["depth"]), int(width), n_rep * grid.cubes_per_rep)
    plan = ap.build_plan(target.fn, target.sup_norm, res, n_rep, n, arch, shift=grid.shift)
    if target.dim == 1:
        lo = plan.grid.origin - 0.5
        pts = np.linspace(lo, res + 0.5, int(cfg["eval_points"]))[:, None]
    else:
        pts = rng.uniform(plan.grid.origin, res, (int(cfg["eval_points"]), target.dim))
    return target, plan, pts, sample, rng


def _cmd_construct(cfg: dict, out: Path) -> int:
    target, plan, pts, sample, _ = _build_plan_from_cfg(cfg)
    report = ap.eval_plan_error(plan, target.fn, pts)
    d, res = target.dim, plan.grid.resolution
    alpha_sq = float(np.sum(plan.alphas**2))
    alpha_budget = plan.grid.cubes_per_rep * target.sup_norm**2 / plan.grid.n_rep
    report.update(
        {
            "shift": list(plan.grid.shift),
            "sample_band_mass": ap.band_mass(plan.grid, sample),
            "band_mass_bound": d / res,
            "alpha_sq_sum": alpha_sq,
            "alpha_sq_budget": alpha_budget,
            "alpha_ok": alpha_sq <= alpha_budget,
        }
    )
    report["pass"] = (
        report["sup_norm_ok"]
        and report["alpha_ok"]
        and report["sample_band_mass"] <= report["band_mass_bound"]
    )
    (out / "plan.json").write_text(ap.plan_to_json(plan) + "\n")
    _write_json(out / "report.json", report)
    return 0 if report["pass"] else 1


def _cmd_perturb(cfg: dict, out: Path) -> int:
    target, plan, pts, _, rng = _build_plan_from_cfg(cfg)
    magnitude = cfg["magnitude"] if cfg["magnitude"] is not None else math.log(int(cfg["n"]))
    report = ap.perturb_and_check(
        plan, target.fn, pts, magnitude, int(cfg["trials"]), rng
    )
    report["pass"] = report["sup_norm_ok_all"]
    _write_json(out / "report.json", report)
    return 0 if report["pass"] else 1


def _cmd_cover(cfg: dict, out: Path) -> int:
    arch = Architecture(int(cfg["dim"]), int(cfg["depth"]), int(cfg["width"]), int(cfg["k"]))
    spec = FunctionClassSpec(
        arch, cfg["a_bound"], cfg["b_bound"], cfg["c_budget"], cfg["beta"], cfg["alpha"]
    )
    rng = np.random.default_rng(cfg["seed"])
    pts = rng.uniform(-spec.alpha, spec.alpha, (int(cfg["n_points"]), arch.input_dim))
    results = []
    for eps in cfg["eps_list"]:
        results.append(
            covering_estimate(spec, int(cfg["sample_count"]), pts, float(eps), cfg["p"], rng)
        )
    sizes = [r["n_cover"] for r in results]
    monotone = all(
        b <= a for a, b, ea, eb in zip(sizes, sizes[1:], cfg["eps_list"], cfg["eps_list"][1:])
        if eb >= ea
    )
    report = {
        "results": results,
        "monotone_in_eps": monotone,
        "pass": monotone and all(r["valid"] and r["within_bound"] for r in results),
    }
    _write_json(out / "report.json", report)
    return 0 if report["pass"] else 1


def _rate_cfg(cfg: dict) -> ExperimentConfig:
    return ExperimentConfig(
        target=cfg["target"],
        n_values=list(cfg["n_values"]),
        reps=int(cfg["reps"]),
        seed=cfg["seed"],
        noise_sd=cfg["noise_sd"],
        eval_n=int(cfg["eval_n"]),
        depth=int(cfg["depth"]),
        width=cfg["width"],
        c1=cfg["c1"],
        k_scale=cfg["k_scale"],
        k_power=cfg["k_power"],
        k_min=int(cfg["k_min"]),
        t_scale=cfg["t_scale"],
        t_min=int(cfg["t_min"]),
        group_k=cfg.get("group_k"),
    )


def _cmd_rates(cfg: dict, out: Path) -> int:
    report = rate_sweep(_rate_cfg(cfg), progress=_progress)
    _write_csv(
        out / "rates.csv",
        ["n", "rep", "l2_error", "train_risk_final", "diverged"],
        [[r["n"], r["rep"], r["l2_error"], r["train_risk_final"], r["diverged"]] for r in report.rows],
    )
    _write_json(out / "report.json", report.to_dict())
    return 0


def _cmd_interaction_rates(cfg: dict, out: Path) -> int:
    report = interaction_sweep(_rate_cfg(cfg), progress=_progress)
    _write_csv(
        out / "rates.csv",
        ["n", "rep", "plain_l2", "inter_l2", "plain_risk_final", "inter_risk_final", "diverged"],
        [
            [
                r["n"],
                r["rep"],
                r["plain_l2"],
                r["inter_l2"],
                r["plain_risk_final"],
                r["inter_risk_final"],
                r["diverged"],
            ]
            for r in report.rows
        ],
    )
    _write_json(out / "report.json", report.to_dict())
    return 0


_COMMANDS = {
    "train": (
        _cmd_train,
        {
            "target": "abs1d",
            "n": 50,
            "noise_sd": 0.25,
            "k": 256,
            "t_n": 2000,
            "depth": 2,
            "width": None,
            "c1": 4.0,
            "seed": 0,
        },
    ),
    "grad-check": (
        _cmd_grad_check,
        {
            "instances": 100,
            "fd_tol": 1e-5,
            "formula_tol": 1e-12,
            "formula_every": 10,
            "seed": 2024,
        },
    ),
    "lemma1": (_cmd_lemma1, {"random_instances": 50, "seed": 5}),
    "lipschitz-check": (
        _cmd_lipschitz,
        {
            "pairs": 1000,
            "dims": [1, 2],
            "depths": [2, 3],
            "b_n": 2.0,
            "alpha_n": 1.0,
            "seed": 11,
        },
    ),
    "scaling-probe": (
        _cmd_scaling,
        {
            "sweep": [4, 16, 64, 256],
            "samples": 40,
            "pairs": 40,
            "dim": 1,
            "depth": 2,
            "width": 2,
            "b_n": 2.0,
            "gamma_star": 2.0,
            "alpha_n": 1.0,
            "n_data": 16,
            "seed": 7,
        },
    ),
    "construct": (
        _cmd_construct,
        {
            "target": "mildcos1d",
            "resolution": 4,
            "n_rep": 1,
            "n": 10000,
            "depth": 3,
            "width": None,
            "shift_sample": 512,
            "eval_points": 8001,
            "seed": 3,
        },
    ),
    "perturb-check": (
        _cmd_perturb,
        {
            "target": "mildcos1d",
            "resolution": 4,
            "n_rep": 1,
            "n": 10000,
            "depth": 3,
            "width": None,
            "shift_sample": 512,
            "eval_points": 4001,
            "trials": 100,
            "magnitude": None,
            "seed": 3,
        },
    ),
    "cover": (
        _cmd_cover,
        {
            "dim": 1,
            "depth": 2,
            "width": 2,
            "k": 4,
            "a_bound": 1.0,
            "b_bound": 1.0,
            "c_budget": 1.0,
            "beta": 1.0,
            "alpha": 1.0,
            "sample_count": 60,
            "n_points": 64,
            "eps_list": [0.1, 0.2, 0.4],
            "p": 1.0,
            "seed": 13,
        },
    ),
    "rates": (
        _cmd_rates,
        {
            "target": "abs1d",
            "n_values": [100, 200, 400, 800, 1600, 3200],
            "reps": 20,
            "noise_sd": 0.25,
            "eval_n": 4000,
            "depth": 2,
            "width": None,
            "c1": 4.0,
            "k_scale": 8.0,
            "k_power": 1.0,
            "k_min": 512,
            "t_scale": 0.0,
            "t_min": 2000,
            "seed": 42,
        },
    ),
    "interaction-rates": (
        _cmd_interaction_rates,
        {
            "target": "additive3d",
            "n_values": [800],
            "reps": 10,
            "noise_sd": 0.25,
            "eval_n": 4000,
            "depth": 2,
            "width": None,
            "c1": 4.0,
            "k_scale": 0.24,
            "k_power": 1.0,
            "k_min": 96,
            "t_scale": 0.0,
            "t_min": 480,
            "group_k": 128,
            "seed": 42,
        },
    ),
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="opgd",
        description="Over-parametrized network regression: training, probes, and sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", type=str, default=None, help="output directory")
    args = parser.parse_args(argv)

    runner, defaults = _COMMANDS[args.command]
    try:
        cfg = _resolve(defaults, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or f"opgd-{args.command}")
    out.mkdir(parents=True, exist_ok=True)
    _emit_config(out, args.command, cfg)
    try:
        return runner(cfg, out)
    except (ValueError, KeyError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
