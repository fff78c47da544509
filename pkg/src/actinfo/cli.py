"""Command-line front end.

Subcommands reproduce the figure data tables, run estimator-calibration,
two-sample, and significance-decay experiments, and evaluate the
closed-form example models.  Every run writes a flat key=value manifest
echoing the full configuration (defaults, config file, and flags), and
every CSV artifact starts with a comment carrying the manifest hash, so a
rerun with the same config and seed is byte-identical.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chains import AcceptanceRule
from .core import target_probability
from .deviations import decay_slope, nonparam_rate
from .errors import ActInfoError, ConfigError
from .inference import (
    ft_test,
    nonparam_actinfo,
    param_actinfo,
    result_csv_row,
    RESULT_CSV_HEADER,
    two_sample_actinfo,
)
from .models import (
    CosmologyModel,
    MachineModel,
    StudentModel,
    build_machine,
    cosmology_actinfo_bound,
    figure_equilibrium_sweep,
    figure_time_sweep,
    machine_joint_family,
    machine_null_family,
    machine_target,
    student_actinfo,
    student_pass_probability,
)
from .sampling import RandomSource, sample_iid
from .tilting import tilt

# option schema per command: name -> (type, default, help)
_COMMON = {
    "out": (str, ".", "output directory"),
    "seed": (int, None, "RNG seed (mandatory for stochastic commands)"),
    "jobs": (int, 1, "parallel workers for replicate loops"),
    "config": (str, None, "key=value config file; flags override it"),
    "plot_script": (bool, False, "also emit a gnuplot script next to the CSV"),
}

_SCHEMAS = {
    "figure1": {"theta_max": (float, 10.0, "grid upper end"),
                "theta_step": (float, 0.1, "grid step"),
                "d": (int, 5, "machine parts"),
                "b": (float, 1.0, "flip-rate ratio")},
    "figure2": {"theta_max": (float, 10.0, "grid upper end"),
                "theta_step": (float, 0.1, "grid step"),
                "d": (int, 5, "machine parts"),
                "b": (float, 0.5, "flip-rate ratio")},
    "figure3": {"theta": (float, 2.5, "tilting strength"),
                "tmax": (int, 500, "time horizon"),
                "d": (int, 5, "machine parts")},
    "ldp-decay": {"p0a": (float, 1.0 / 32.0, "null target probability"),
                  "imin": (float, math.log(2.0), "actinfo threshold"),
                  "n": (str, "250,500,1000,2000,4000", "comma list of sample sizes")},
    "coverage": {"n": (int, 500, "sample size per replicate"),
                 "reps": (int, 1000, "replicate count"),
                 "d": (int, 5, "machine parts"),
                 "a": (float, 0.2, "specificity slope"),
                 "b": (float, 1.0, "flip-rate ratio"),
                 "theta": (float, 1.0, "true tilting strength"),
                 "imin": (float, math.log(2.0), "test threshold")},
    "two-sample": {"n": (int, 10000, "informed sample size"),
                   "n0": (int, 10000, "null sample size"),
                   "d": (int, 5, "machine parts"),
                   "a": (float, 0.2, "specificity slope"),
                   "b": (float, 0.5, "true flip-rate ratio"),
                   "theta": (float, 2.5, "true tilting strength"),
                   "imin": (float, math.log(2.0), "test threshold"),
                   "parametric": (bool, False, "fit Q parametrically")},
    "cosmology": {"a": (float, 0.99, "interval lower end"),
                  "b": (float, 1.01, "interval upper end")},
    "student": {"means": (str, "0", "covariate means, comma list"),
                "cov": (str, "1", "covariate covariance, row-major comma list"),
                "xi": (str, "0,1,1", "untrained coefficients plus error variance"),
                "theta": (str, "1,0", "training effects"),
                "f0": (float, 2.0, "pass threshold"),
                "t": (float, 2.0, "training time")},
    "machine-info": {"d": (int, 5, "machine parts"),
                     "a": (float, 0.2, "specificity slope"),
                     "b": (float, 1.0, "flip-rate ratio")},
}

_STOCHASTIC = {"coverage", "two-sample"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="actinfo", description=__doc__)
    parser.add_argument("--version", action="version", version=f"actinfo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in _SCHEMAS.items():
        p = sub.add_parser(name)
        for key, (typ, _default, help_) in {**schema, **_COMMON}.items():
            flag = "--" + key.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, action="store_const", const=True, default=None,
                               dest=key, help=help_)
            else:
                p.add_argument(flag, type=typ, default=None, dest=key, help=help_)
    return parser


def _parse_config_file(path: str) -> dict[str, str]:
    out = {}
    p = Path(path)
    if not p.exists():
        raise ConfigError("--config", f"no such file: {path}")
    for raw in p.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("--config", f"expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _coerce(key: str, typ, raw: str):
    try:
        if typ is bool:
            return raw.strip().lower() in {"1", "true", "yes", "on"}
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"--{key.replace('_', '-')}", f"bad value {raw!r}") from exc


def _resolve(args: argparse.Namespace) -> tuple[dict, dict]:
    """Merge defaults < config file < explicit flags; track each source."""
    schema = {**_SCHEMAS[args.command], **_COMMON}
    file_vals = _parse_config_file(args.config) if args.config else {}
    config, source = {}, {}
    for key, (typ, default, _help) in schema.items():
        cli_val = getattr(args, key)
        if cli_val is not None:
            config[key], source[key] = cli_val, "cli"
        elif key in file_vals:
            config[key], source[key] = _coerce(key, typ, file_vals[key]), "config"
        else:
            config[key], source[key] = default, "default"
    if args.command in _STOCHASTIC and config["seed"] is None:
        raise ConfigError("--seed", "required for stochastic commands")
    return config, source


class RunContext:
    """Output directory, manifest, and CSV writing for one invocation."""

    def __init__(self, command: str, config: dict, source: dict):
        self.command = command
        self.config = config
        self.out = Path(config["out"])
        self.out.mkdir(parents=True, exist_ok=True)
        lines = [f"command={command}", f"version={__version__}"]
        for key in sorted(config):
            if key in ("out", "config"):
                continue
            lines.append(f"{key}={'' if config[key] is None else config[key]}")
            lines.append(f"source.{key}={source[key]}")
        self.manifest_text = "\n".join(lines) + "\n"
        self.manifest_hash = hashlib.sha256(self.manifest_text.encode()).hexdigest()[:16]

    def finish(self):
        (self.out / "manifest.txt").write_text(self.manifest_text)

    def write_csv(self, name: str, header: str, rows) -> Path:
        def cell(x):
            if isinstance(x, bool):
                return str(x).lower()
            if isinstance(x, float):
                return repr(float(x))
            return str(x)

        path = self.out / name
        lines = [f"# manifest={self.manifest_hash}", header]
        lines.extend(",".join(cell(x) for x in row) for row in rows)
        path.write_text("\n".join(lines) + "\n")
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.out / name
        path.write_text(text)
        return path


def _theta_grid(theta_max: float, step: float) -> np.ndarray:
    if theta_max <= 0 or step <= 0:
        raise ConfigError("--theta-max", "grid bounds must be positive")
    return np.round(np.arange(0.0, theta_max + step / 2, step), 12)


def _equilibrium_figure(ctx: RunContext, b: float, csv_name: str):
    thetas = _theta_grid(ctx.config["theta_max"], ctx.config["theta_step"])
    rows = []
    for a in (-0.2, 0.0, 0.2):
        sweep = figure_equilibrium_sweep(MachineModel(ctx.config["d"], a, b), thetas)
        rows.extend((a, float(th), float(ip), sweep.ifo)
                    for th, ip in zip(sweep.thetas, sweep.iplus))
    ctx.write_csv(csv_name, "a,theta,iplus,ifo", rows)
    if ctx.config["plot_script"]:
        stem = csv_name.removesuffix(".csv")
        script = "\n".join(
            ["set datafile separator ','", "set key left top",
             "set xlabel 'theta'", "set ylabel 'actinfo (nats)'"]
            + [f"{'plot' if i == 0 else 'replot'} '{csv_name}' "
               f"using ($1=={a} ? $2 : 1/0):3 with lines title 'a={a}'"
               for i, a in enumerate((-0.2, 0.0, 0.2))]
            + [f"replot '{csv_name}' using 2:4 with lines dashtype 2 title 'I_f0'",
               f"pause -1"]) + "\n"
        ctx.write_text(stem + ".gp", script)


def _cmd_figure1(ctx: RunContext):
    _equilibrium_figure(ctx, ctx.config["b"], "fig1.csv")


def _cmd_figure2(ctx: RunContext):
    _equilibrium_figure(ctx, ctx.config["b"], "fig2.csv")


def _cmd_figure3(ctx: RunContext):
    tmax = ctx.config["tmax"]
    if tmax < 0:
        raise ConfigError("--tmax", "must be nonnegative")
    for b in (1.0, 0.5):
        for a in (0.2, -0.2):
            sweep = figure_time_sweep(
                MachineModel(ctx.config["d"], a, b, ctx.config["theta"]), tmax)
            rows = [(int(t), float(ip), float(ips), sweep.iplus_eq, sweep.ifo)
                    for t, ip, ips in zip(sweep.times, sweep.iplus, sweep.iplus_stopped)]
            ctx.write_csv(f"fig3_a{a:g}_b{b:g}.csv",
                          "t,iplus,iplus_stopped,iplus_eq,ifo", rows)


def _cmd_ldp_decay(ctx: RunContext):
    try:
        ns = [int(tok) for tok in str(ctx.config["n"]).split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError("--n", "expected a comma list of integers") from exc
    if not ns:
        raise ConfigError("--n", "need at least one sample size")
    p0a, imin = ctx.config["p0a"], ctx.config["imin"]
    report = nonparam_rate(p0a, imin)
    slope = decay_slope(ns, p0a, report.p_min)
    rows = [(n, -rate * n, rate, report.rate) for n, rate in slope]
    ctx.write_csv("ldp_decay.csv", "n,log_level,normalized_rate,target_C", rows)
    print(f"target C = {report.rate:.6f}; final normalized rate = {slope[-1][1]:.6f}")


def _coverage_replicate(rep: int, cfg: dict) -> tuple:
    model = MachineModel(cfg["d"], cfg["a"], cfg["b"], cfg["theta"])
    system = build_machine(model)
    A = machine_target(system)
    p0a = target_probability(system.p0, A)
    informed = tilt(system.family, cfg["theta"])
    rng = RandomSource(cfg["seed"]).substream(rep)
    sample = sample_iid(informed, cfg["n"], rng)
    res_np = nonparam_actinfo(sample, A, p0a)
    res_par = param_actinfo(sample, system.family, A)
    return rep, res_np, res_par


def _cmd_coverage(ctx: RunContext):
    cfg = ctx.config
    if cfg["reps"] < 1 or cfg["n"] < 1:
        raise ConfigError("--reps", "replicates and sample size must be positive")
    model = MachineModel(cfg["d"], cfg["a"], cfg["b"], cfg["theta"])
    system = build_machine(model)
    A = machine_target(system)
    p0a = target_probability(system.p0, A)
    true_value = math.log(target_probability(tilt(system.family, cfg["theta"]), A)) - math.log(p0a)

    reps = range(cfg["reps"])
    if cfg["jobs"] > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            results = sorted(pool.map(_coverage_replicate, reps,
                                      [cfg] * cfg["reps"], chunksize=16))
    else:
        results = [_coverage_replicate(rep, cfg) for rep in reps]

    rows, covered = [], {"nonparametric": 0, "parametric": 0}
    theta_hats = []
    for _rep, res_np, res_par in results:
        for res in (res_np, res_par):
            outcome = ft_test(res, cfg["imin"], p0a)
            rows.append(result_csv_row(res, outcome).split(","))
            if not res.degenerate and res.ci_low <= true_value <= res.ci_high:
                covered[res.kind] += 1
        theta_hats.append(res_par.theta_hat)
    ctx.write_csv("coverage.csv", RESULT_CSV_HEADER, rows)
    mean_theta = float(np.mean(theta_hats))
    summary = [(kind, cfg["reps"], covered[kind] / cfg["reps"], true_value, mean_theta)
               for kind in ("nonparametric", "parametric")]
    ctx.write_csv("coverage_summary.csv",
                  "estimator,reps,coverage,true_value,mean_theta_hat", summary)
    for kind, _reps, cov, _tv, _mt in summary:
        print(f"{kind}: coverage {cov:.3f} (true value {true_value:.4f})")
    print(f"mean theta_hat = {mean_theta:.4f} (true {cfg['theta']})")


def _cmd_two_sample(ctx: RunContext):
    cfg = ctx.config
    if cfg["n"] < 1 or cfg["n0"] < 1:
        raise ConfigError("--n", "sample sizes must be positive")
    model = MachineModel(cfg["d"], cfg["a"], cfg["b"], cfg["theta"])
    system = build_machine(model)
    A = machine_target(system)
    rng = RandomSource(cfg["seed"])
    sample = sample_iid(tilt(system.family, cfg["theta"]), cfg["n"], rng.substream(0))
    null_sample = sample_iid(system.p0, cfg["n0"], rng.substream(1))
    family0 = machine_null_family(cfg["d"])
    family = machine_joint_family(cfg["d"], cfg["a"]) if cfg["parametric"] else None
    result = two_sample_actinfo(sample, null_sample, family0, A,
                                parametric=cfg["parametric"], family=family)
    outcome = ft_test(result, cfg["imin"], target_probability(system.p0, A))
    ctx.write_csv("two_sample.csv", RESULT_CSV_HEADER,
                  [result_csv_row(result, outcome).split(",")])
    exact = math.log(target_probability(tilt(system.family, cfg["theta"]), A)) \
        - math.log(target_probability(system.p0, A))
    print(f"estimate {result.estimate:.4f} (exact {exact:.4f}), "
          f"ci [{result.ci_low:.4f}, {result.ci_high:.4f}], reject={outcome.reject}")


def _cmd_cosmology(ctx: RunContext):
    model = CosmologyModel(ctx.config["a"], ctx.config["b"])
    bound = cosmology_actinfo_bound(model)
    ctx.write_csv("cosmology.csv", "a,b,epsilon,xi_max,p0max,bound,approx,approx_valid",
                  [(model.a, model.b, model.epsilon, bound.xi_max, bound.p0max,
                    bound.value, bound.approx, bound.approx_valid)])
    print(f"bound {bound.value:.4f} nats (approx {bound.approx:.4f}, "
          f"valid={bound.approx_valid})")


def _parse_floats(key: str, raw: str) -> list[float]:
    try:
        return [float(tok) for tok in str(raw).split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--{key}", "expected a comma list of numbers") from exc


def _cmd_student(ctx: RunContext):
    cfg = ctx.config
    means = _parse_floats("means", cfg["means"])
    cov_flat = _parse_floats("cov", cfg["cov"])
    k = len(means)
    if len(cov_flat) != k * k:
        raise ConfigError("--cov", f"expected {k * k} entries for {k} covariates")
    model = StudentModel(np.array(means), np.array(cov_flat).reshape(k, k),
                         tuple(_parse_floats("xi", cfg["xi"])),
                         tuple(_parse_floats("theta", cfg["theta"])), cfg["f0"])
    t = cfg["t"]
    pass_prob = student_pass_probability(model, t)
    null_prob = student_pass_probability(model, 0.0)
    info = student_actinfo(model, t)
    ctx.write_csv("student.csv", "t,pass_prob,null_pass_prob,actinfo",
                  [(t, pass_prob, null_prob, info)])
    print(f"pass probability {pass_prob:.5f} (untrained {null_prob:.5f}), "
          f"actinfo {info:.4f} nats")


def _cmd_machine_info(ctx: RunContext):
    cfg = ctx.config
    model = MachineModel(cfg["d"], cfg["a"], cfg["b"])
    system = build_machine(model)
    A = machine_target(system)
    p0a = target_probability(system.p0, A)
    ifo = -math.log(p0a)
    ctx.write_csv("machine_info.csv", "d,a,b,states,p0_target,ifo",
                  [(cfg["d"], cfg["a"], cfg["b"], system.space.size, p0a, ifo)])
    print(f"{system.space.size} states, P0(target) = {p0a:.6g}, I_f0 = {ifo:.4f} nats")


_RUNNERS = {
    "figure1": _cmd_figure1,
    "figure2": _cmd_figure2,
    "figure3": _cmd_figure3,
    "ldp-decay": _cmd_ldp_decay,
    "coverage": _cmd_coverage,
    "two-sample": _cmd_two_sample,
    "cosmology": _cmd_cosmology,
    "student": _cmd_student,
    "machine-info": _cmd_machine_info,
}


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config, source = _resolve(args)
        ctx = RunContext(args.command, config, source)
        _RUNNERS[args.command](ctx)
        ctx.finish()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ActInfoError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
