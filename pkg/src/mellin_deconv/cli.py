"""Command-line front end.

Configuration is resolved per subcommand as
defaults < ``--config`` file < ``--set key=value`` < explicit flags.
``--config`` accepts a path or a shipped preset name (``paper_fig2.json``,
``paper_fig3.json``).  Exit codes: 0 success, 1 runtime error, 2 usage error.
Data goes to stdout and files; diagnostics go to stderr.
"""
import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import ConfigError, MellinDeconvError, ParamError, UsageError
from .gsse import GsseConfig, estimate_gsse, model_from_dict
from .harness import ExperimentConfig, export_report, rate_regression, run_experiment
from .io import ensure_dir, read_samples, write_estimate, write_samples, write_table
from .simulate import (OBS_STREAM, TIME_STREAM, derive_seed, observation_model, sample_observations,
                       sample_times, time_distribution)
from .sse import SseConfig, bandwidth, estimate_sse

log = logging.getLogger("mellin_deconv")

THREADS_ENV = "MELLIN_DECONV_THREADS"
SUBCOMMANDS = ("simulate", "estimate", "experiment", "rates", "fixtures-check")
PRESETS = ("paper_fig2.json", "paper_fig3.json")

COMMON_DEFAULTS = {"output": ".", "create": False, "threads": 1, "seed": 0}

SIMULATE_DEFAULTS = {"dist": "gamma:2", "obs": "subordinated_bm", "n": 1000}

ESTIMATE_DEFAULTS = {
    "input": "samples.csv",
    "route": "sse",
    "gamma_line": None,
    "beta": math.pi / 2,
    "smoothness_mode": "C",
    "bandwidth_multiplier": 1.0,
    "epsilon": 0.5,
    "A_multiplier": 1.0,
    "U_multiplier": 1.0,
    "model": "brownian_drift:0,1",
    "x_min": 0.05,
    "x_max": 10.0,
    "grid_points": 200,
    "clip_nonnegative": False,
}

RATES_OVERRIDES = {"n_list": [1000, 4000, 16000, 64000], "replications": 50}


@dataclass
class CliConfig:
    subcommand: str
    config_path: str = None
    overrides: list = field(default_factory=list)
    output_dir: str = "."
    seed: int = 0
    values: dict = field(default_factory=dict)

    def resolved(self):
        """Everything needed to rerun, in the config-file form."""
        out = {"subcommand": self.subcommand}
        out.update(self.values)
        return out


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _experiment_defaults():
    d = ExperimentConfig().to_dict()
    d.pop("threads")
    d.pop("seed")
    return d


def _defaults(sub):
    base = dict(COMMON_DEFAULTS)
    if sub == "simulate":
        base.update(SIMULATE_DEFAULTS)
    elif sub == "estimate":
        base.update(ESTIMATE_DEFAULTS)
    elif sub in ("experiment", "rates"):
        base.update(_experiment_defaults())
        if sub == "rates":
            base.update(RATES_OVERRIDES)
    return base


def _load_config_file(path):
    if not os.path.exists(path) and os.path.basename(path) in PRESETS:
        text = resources.files("mellin_deconv.presets").joinpath(os.path.basename(path)).read_text()
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return data


def _parse_set(item):
    if "=" not in item:
        raise UsageError(f"--set expects key=value, got {item!r}")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _merge(sub, defaults, layer, source):
    for key, value in layer.items():
        if key == "subcommand":
            if value != sub:
                raise UsageError(f"{source} is for subcommand {value!r}, not {sub!r}")
            continue
        if key not in defaults:
            raise UsageError(f"unknown key {key!r} in {source} for {sub}")
        defaults[key] = value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="JSON config file or preset name (default: none)")
    g.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key; value parsed as JSON (repeatable)")
    g.add_argument("--seed", type=int, help="master seed (default: 0)")
    g.add_argument("-o", "--output", help="output directory (default: .)")
    g.add_argument("--threads", type=int,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    g.add_argument("--create", action="store_true", default=None,
                   help="create the output directory if missing")
    g.add_argument("--print-config", action="store_true",
                   help="print the resolved config as JSON and exit")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(
        prog="mellin-deconv",
        description="Recover the density of a random time T from samples of B_T or L_T.")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("simulate", parents=[common], help="draw times and observations",
                        description="Writes times.csv and samples.csv to the output directory.")
    p.add_argument("--dist", help="time law: gamma:ALPHA | gig:LAM,KAPPA,DELTA | heavy_tail_q:NU "
                                  "(default: gamma:2)")
    p.add_argument("--obs", help="observation model: subordinated_bm | variance_mean:MU,SIGMA | "
                                 "subordinated_stable:ALPHA (default: subordinated_bm)")
    p.add_argument("--n", type=int, help="sample size (default: 1000)")

    p = subs.add_parser("estimate", parents=[common], help="estimate p_T from a samples CSV",
                        description="Writes estimate.csv to the output directory.")
    p.add_argument("-i", "--input", help="samples CSV (default: samples.csv)")
    p.add_argument("--route", choices=("sse", "gsse", "gsse-decomposed"), help="estimator (default: sse)")
    p.add_argument("--gamma", type=float, dest="gamma_line",
                   help="integration line Re z (default: 0.8 for sse, 0.7 for gsse)")
    p.add_argument("--beta", type=float, help="smoothness exponent (default: pi/2)")
    p.add_argument("--mode", choices=("C", "D"), dest="smoothness_mode", help="smoothness class (default: C)")
    p.add_argument("--multiplier", type=float, dest="bandwidth_multiplier",
                   help="sse bandwidth multiplier (default: 1)")
    p.add_argument("--epsilon", type=float, help="gsse epsilon (default: 0.5)")
    p.add_argument("--model", help="gsse Levy model: brownian_drift:MU,SIGMA | stable:ALPHA "
                                   "(default: brownian_drift:0,1)")
    p.add_argument("--clip", action="store_true", default=None, dest="clip_nonnegative",
                   help="set negative estimates to 0")

    for name, text in (("experiment", "replicated estimation with loss statistics and plots"),
                       ("rates", "fit the log-log slope of median sup-loss against n")):
        p = subs.add_parser(name, parents=[common], help=text, description=text)
        p.add_argument("--route", choices=("sse", "gsse", "gsse-decomposed"), help="estimator (default: sse)")
        p.add_argument("--gamma", type=float, dest="gamma_line", help="integration line (default: 0.8)")
        p.add_argument("--reps", type=int, dest="replications", help="replications per n (default: 100; rates 50)")
        p.add_argument("--n-list", dest="n_list", help="comma-separated sample sizes")

    subs.add_parser("fixtures-check", parents=[common], help="run the lower-bound fixture checks")
    return parser


def parse_and_validate(argv):
    """Parse ``argv`` into a validated :class:`CliConfig`.

    Raises
    ------
    UsageError
        Unknown keys, malformed values or violated constraints.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = args.subcommand
    values = _defaults(sub)
    if args.config:
        _merge(sub, values, _load_config_file(args.config), args.config)
    _merge(sub, values, dict(_parse_set(s) for s in args.set), "--set")
    flags = {k: v for k, v in vars(args).items()
             if v is not None and k not in ("subcommand", "config", "set", "print_config", "verbose")}
    if "n_list" in flags:
        try:
            flags["n_list"] = [int(s) for s in flags["n_list"].split(",") if s.strip()]
        except ValueError as exc:
            raise UsageError("--n-list expects comma-separated integers") from exc
    env_threads = os.environ.get(THREADS_ENV)
    if "threads" not in flags and env_threads:
        try:
            flags["threads"] = int(env_threads)
        except ValueError as exc:
            raise UsageError(f"{THREADS_ENV} must be an integer") from exc
    _merge(sub, values, flags, "command-line flags")
    cfg = CliConfig(sub, args.config, list(args.set), values["output"], values["seed"], values)
    _validate(cfg)
    return cfg, args


def _parse_tagged(text, what):
    kind, _, rest = str(text).partition(":")
    try:
        nums = [float(s) for s in rest.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"bad {what} spec {text!r}") from exc
    return kind, nums


_DIST_PARAMS = {"gamma": ("alpha",), "gig": ("lam", "kappa", "delta"), "heavy_tail_q": ("nu",)}
_OBS_PARAMS = {"subordinated_bm": (), "variance_mean": ("mu", "sigma"), "subordinated_stable": ("alpha",)}
_MODEL_PARAMS = {"brownian_drift": ("mu", "sigma"), "stable": ("alpha",)}


def _tagged_to_dict(text, table, what):
    kind, nums = _parse_tagged(text, what)
    if kind not in table:
        raise UsageError(f"unknown {what} {kind!r}; choose from {', '.join(table)}")
    names = table[kind]
    if len(nums) != len(names):
        raise UsageError(f"{what} {kind} needs {len(names)} parameter(s): {', '.join(names) or 'none'}")
    return dict(zip(names, nums)), kind


def _experiment_config(values):
    data = {k: v for k, v in values.items() if k not in ("output", "create")}
    return ExperimentConfig.from_dict(data)


def _estimator_config(values, n):
    gamma = values["gamma_line"]
    if values["route"] == "sse":
        return SseConfig(0.8 if gamma is None else gamma, values["beta"], values["smoothness_mode"],
                         values["bandwidth_multiplier"], n, values["x_min"])
    return GsseConfig(0.7 if gamma is None else gamma, values["beta"], values["epsilon"],
                      values["smoothness_mode"], values["A_multiplier"], values["U_multiplier"], n)


def _validate(cfg):
    v = cfg.values
    try:
        if not isinstance(v["seed"], int) or v["seed"] < 0:
            raise UsageError("seed must be a nonnegative integer")
        if not isinstance(v["threads"], int) or v["threads"] < 1:
            raise UsageError("threads must be a positive integer")
        if cfg.subcommand == "simulate":
            params, kind = _tagged_to_dict(v["dist"], _DIST_PARAMS, "distribution")
            time_distribution(kind, **params)
            params, kind = _tagged_to_dict(v["obs"], _OBS_PARAMS, "observation model")
            observation_model(kind, **params)
            if not isinstance(v["n"], int) or v["n"] < 1:
                raise UsageError("n must be a positive integer")
        elif cfg.subcommand == "estimate":
            _estimator_config(v, 1000)
            if v["route"] != "sse":
                params, kind = _tagged_to_dict(v["model"], _MODEL_PARAMS, "model")
                model_from_dict({"kind": kind, **params})
        elif cfg.subcommand in ("experiment", "rates"):
            _experiment_config(v)
    except UsageError:
        raise
    except (ConfigError, ParamError, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _run_simulate(v, out):
    params, kind = _tagged_to_dict(v["dist"], _DIST_PARAMS, "distribution")
    dist = time_distribution(kind, **params)
    params, okind = _tagged_to_dict(v["obs"], _OBS_PARAMS, "observation model")
    obs = observation_model(okind, **params)
    times = sample_times(dist, v["n"], derive_seed(v["seed"], v["n"], 0, TIME_STREAM))
    xs = sample_observations(times, obs, derive_seed(v["seed"], v["n"], 0, OBS_STREAM))
    meta = {"dist": v["dist"], "obs": v["obs"], "master_seed": v["seed"]}
    paths = [write_samples(os.path.join(out, "times.csv"), times, meta),
             write_samples(os.path.join(out, "samples.csv"), xs, meta)]
    for p in paths:
        print(p)


def _run_estimate(v, out):
    samples = read_samples(v["input"])
    cfg = _estimator_config(v, len(samples))
    x = np.linspace(v["x_min"], v["x_max"], v["grid_points"])
    if v["route"] == "sse":
        h = bandwidth(cfg.n, cfg.beta, cfg.gamma_line, cfg.smoothness_mode, cfg.bandwidth_multiplier)
        est = estimate_sse(samples, cfg, h, x, clip_nonnegative=v["clip_nonnegative"])
    else:
        params, kind = _tagged_to_dict(v["model"], _MODEL_PARAMS, "model")
        est = estimate_gsse(samples, model_from_dict({"kind": kind, **params}), cfg, x,
                            variance_reduction=v["route"] == "gsse-decomposed",
                            clip_nonnegative=v["clip_nonnegative"])
    print(write_estimate(os.path.join(out, "estimate.csv"), est, {"input": v["input"]}))


def _progress(n, done, total):
    log.info("finished n=%d (%d/%d)", n, done, total)


def _run_experiment(v, out, create):
    report = run_experiment(_experiment_config(v), progress=_progress)
    files = export_report(report, out, create=create)
    print("n,median,q1,q3")
    for row in report.summary():
        print(f"{row[0]},{row[2]:.6g},{row[3]:.6g},{row[4]:.6g}")
    log.info("wrote %d files to %s in %.1f s", len(files), out, report.runtime)


def _run_rates(v, out):
    report = run_experiment(_experiment_config(v), progress=_progress)
    fit = rate_regression(report)
    med = report.medians()
    write_table(os.path.join(out, "rates.csv"), ["n", "median_sup_loss"], sorted(med.items()),
                {"slope": fit["slope"], "stderr": fit["stderr"]})
    print(f"slope {fit['slope']:.4f} stderr {fit['stderr']:.4f}")


def _run_fixtures():
    from .lower_bound import invariant_suite

    rows = invariant_suite()
    width = max(len(r[0]) for r in rows)
    print(f"{'check':<{width}}  {'value':>12}  {'target':<18}  result")
    for name, value, target, ok in rows:
        print(f"{name:<{width}}  {value:>12.4g}  {target:<18}  {'PASS' if ok else 'FAIL'}")
    failed = sum(not r[3] for r in rows)
    if failed:
        print(f"{failed} fixture check(s) failed", file=sys.stderr)
    return 1 if failed else 0


def dispatch(cfg):
    """Run the pipeline named by ``cfg``; returns the exit code."""
    v = cfg.values
    try:
        if cfg.subcommand == "fixtures-check":
            return _run_fixtures()
        out = ensure_dir(v["output"], v["create"])
        if cfg.subcommand == "simulate":
            _run_simulate(v, out)
        elif cfg.subcommand == "estimate":
            _run_estimate(v, out)
        elif cfg.subcommand == "experiment":
            _run_experiment(v, out, v["create"])
        else:
            _run_rates(v, out)
    except (MellinDeconvError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, args = parse_and_validate(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.print_config:
        print(json.dumps(cfg.resolved(), indent=2, sort_keys=True))
        return 0
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
