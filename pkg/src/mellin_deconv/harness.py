"""Replicated estimation experiments, loss summaries and rate fits.

Every replication draws its time and observation streams from seeds derived
from ``(seed, n, replication)``, so results do not depend on the order in
which replications run or on the thread count.
"""
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import stats

from .errors import ConfigError, InsufficientData, MellinDeconvError
from .gsse import GsseConfig, brownian_drift, estimate_gsse, stable
from .io import ensure_dir, write_table
from .mellin import catalog_density
from .simulate import (OBS_STREAM, TIME_STREAM, derive_seed, gig_density, observation_model,
                       sample_observations, sample_times, time_distribution)
from .sse import SseConfig, bandwidth, estimate_sse

log = logging.getLogger(__name__)

ROUTES = ("sse", "gsse", "gsse-decomposed")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment description; this is also the JSON config schema.

    ``time_distribution`` and ``observation`` are ``{"kind": ..., **params}``
    dicts.  The Levy model used by the gsse routes follows from
    ``observation``.  ``curve_n`` selects the sample size whose estimates are
    kept as curves (default: the first entry of ``n_list``).
    """
    route: str = "sse"
    time_distribution: dict = field(default_factory=lambda: {"kind": "gamma", "alpha": 2.0})
    observation: dict = field(default_factory=lambda: {"kind": "subordinated_bm"})
    gamma_line: float = 0.8
    beta: float = math.pi / 2
    smoothness_mode: str = "C"
    bandwidth_multiplier: float = 1.0
    epsilon: float = 0.5
    A_multiplier: float = 1.0
    U_multiplier: float = 1.0
    n_list: tuple = (500, 1000, 5000, 10000)
    replications: int = 100
    seed: int = 0
    x_min: float = 0.05
    x_max: float = 10.0
    grid_points: int = 200
    clip_nonnegative: bool = True
    curve_n: int = 0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "time_distribution", dict(self.time_distribution))
        object.__setattr__(self, "observation", dict(self.observation))
        if self.route not in ROUTES:
            raise ConfigError(f"route must be one of {ROUTES}, got {self.route!r}")
        if not self.n_list or any(n < 3 for n in self.n_list):
            raise ConfigError("n_list must hold sample sizes >= 3")
        if self.replications < 0:
            raise ConfigError("replications must be >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if not 0 < self.x_min < self.x_max:
            raise ConfigError("need 0 < x_min < x_max")
        if self.grid_points < 2:
            raise ConfigError("grid_points must be >= 2")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.curve_n and self.curve_n not in self.n_list:
            raise ConfigError(f"curve_n={self.curve_n} is not in n_list")
        self.time_dist()
        self.obs_model()
        self.estimator_config(self.n_list[0])

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self):
        d = asdict(self)
        d["n_list"] = list(self.n_list)
        return d

    def time_dist(self):
        spec = dict(self.time_distribution)
        kind = spec.pop("kind", None)
        try:
            return time_distribution(kind, **spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"time_distribution: {exc}") from exc

    def obs_model(self):
        spec = dict(self.observation)
        kind = spec.pop("kind", None)
        try:
            return observation_model(kind, **spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"observation: {exc}") from exc

    def levy_model(self):
        obs = self.obs_model()
        if obs.kind == "subordinated_bm":
            return brownian_drift(0.0, 1.0)
        if obs.kind == "variance_mean":
            return brownian_drift(obs.params["mu"], obs.params["sigma"])
        return stable(obs.params["alpha"])

    def estimator_config(self, n):
        if self.route == "sse":
            if self.obs_model().kind != "subordinated_bm":
                raise ConfigError("the sse route needs observation kind 'subordinated_bm'")
            return SseConfig(self.gamma_line, self.beta, self.smoothness_mode,
                             self.bandwidth_multiplier, n, self.x_min)
        return GsseConfig(self.gamma_line, self.beta, self.epsilon, self.smoothness_mode,
                          self.A_multiplier, self.U_multiplier, n)

    def x_grid(self):
        return np.linspace(self.x_min, self.x_max, self.grid_points)


def true_density(dist):
    """Density function of a :class:`TimeDistribution`."""
    p = dist.params
    if dist.kind == "gamma":
        return catalog_density("gamma_density", alpha=p["alpha"])
    if dist.kind == "gig":
        return lambda x: gig_density(x, p["lam"], p["kappa"], p["delta"])
    if p["nu"] >= 2:
        return catalog_density("heavy_tail_q", q=p["nu"])
    c = p["nu"] * math.sin(math.pi / p["nu"]) / math.pi
    return lambda x: c / (1 + np.asarray(x, float) ** p["nu"])


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    x_grid: np.ndarray
    truth: np.ndarray
    losses: dict
    curves: dict
    seeds: dict
    cutoffs: dict
    runtime: float = 0.0

    def __post_init__(self):
        for n, arr in self.losses.items():
            if arr.shape != (self.config.replications,):
                raise ValueError(f"loss array for n={n} has shape {arr.shape}")
            if np.any(arr < 0):
                raise ValueError("negative loss")

    @property
    def n_list(self):
        return list(self.config.n_list)

    def summary(self):
        """Per-n rows ``(n, reps, median, q1, q3, whisker_low, whisker_high, mean)``."""
        rows = []
        for n in self.n_list:
            arr = self.losses[n]
            if arr.size == 0:
                continue
            q1, med, q3 = np.percentile(arr, [25, 50, 75])
            iqr = q3 - q1
            lo = float(arr[arr >= q1 - 1.5 * iqr].min())
            hi = float(arr[arr <= q3 + 1.5 * iqr].max())
            rows.append((n, arr.size, float(med), float(q1), float(q3), lo, hi, float(arr.mean())))
        return rows

    def medians(self):
        return {n: float(np.median(self.losses[n])) for n in self.n_list if self.losses[n].size}


def _with_context(exc, n, rep):
    msg = f"n={n}, replication={rep}: {exc}"
    try:
        return type(exc)(msg)
    except TypeError:
        return MellinDeconvError(msg)


def simulate_replication(config, n, rep):
    """Observations for replication ``rep`` at size ``n`` and the seeds used."""
    ts = derive_seed(config.seed, n, rep, TIME_STREAM)
    os_ = derive_seed(config.seed, n, rep, OBS_STREAM)
    times = sample_times(config.time_dist(), n, ts)
    obs = sample_observations(times, config.obs_model(), os_)
    return obs, (ts, os_)


def estimate_route(config, samples, n, x_grid):
    """Run the configured estimator on one sample."""
    est_cfg = config.estimator_config(n)
    if config.route == "sse":
        h = bandwidth(n, est_cfg.beta, est_cfg.gamma_line, est_cfg.smoothness_mode,
                      est_cfg.bandwidth_multiplier)
        return estimate_sse(samples, est_cfg, h, x_grid, clip_nonnegative=config.clip_nonnegative)
    return estimate_gsse(samples, config.levy_model(), est_cfg, x_grid,
                         variance_reduction=config.route == "gsse-decomposed",
                         clip_nonnegative=config.clip_nonnegative)


def _one(config, n, rep, x_grid, truth):
    try:
        obs, seeds = simulate_replication(config, n, rep)
        est = estimate_route(config, obs, n, x_grid)
    except MellinDeconvError as exc:
        raise _with_context(exc, n, rep) from exc
    return float(np.max(np.abs(est.values - truth))), est.values, seeds, est.bandwidth_or_cutoffs


def run_experiment(config, progress=None):
    """Simulate, estimate and score every ``(n, replication)`` pair.

    The loss is ``max |p_hat - p_T|`` over ``config.x_grid()``.  ``progress``
    is called as ``progress(n, done, total)`` after each sample size.
    """
    t0 = time.perf_counter()
    x = config.x_grid()
    truth = true_density(config.time_dist())(x)
    curve_n = config.curve_n or config.n_list[0]
    losses, curves, seeds, cuts = {}, {}, {}, {}
    reps = config.replications
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        for i, n in enumerate(config.n_list):
            results = list(pool.map(lambda r: _one(config, n, r, x, truth), range(reps)))
            losses[n] = np.array([r[0] for r in results], float)
            if n == curve_n:
                curves[n] = np.array([r[1] for r in results]).reshape(reps, x.size)
            for r, res in enumerate(results):
                seeds[(n, r)] = res[2]
            if results:
                cuts[n] = results[0][3]
            if progress is not None:
                progress(n, i + 1, len(config.n_list))
    return ExperimentReport(config, x, truth, losses, curves, seeds, cuts, time.perf_counter() - t0)


def rate_regression(reports):
    """Least-squares slope of log median loss against log n.

    Accepts one report or a sequence; needs at least three distinct n.
    Returns ``{"slope", "stderr", "intercept"}``.
    """
    if isinstance(reports, ExperimentReport):
        reports = [reports]
    pairs = {}
    for rep in reports:
        pairs.update(rep.medians())
    return rate_fit(list(pairs), list(pairs.values()))


def rate_fit(n_values, medians):
    n_values = np.asarray(n_values, float)
    medians = np.asarray(medians, float)
    if np.unique(n_values).size < 3:
        raise InsufficientData("rate regression needs at least three distinct sample sizes")
    if np.any(medians <= 0):
        raise InsufficientData("median losses must be positive for a log fit")
    fit = stats.linregress(np.log(n_values), np.log(medians))
    return {"slope": float(fit.slope), "stderr": float(fit.stderr), "intercept": float(fit.intercept)}


def normality_diagnostic(values, skew_tol=0.5, kurt_tol=1.0):
    """Moment check of replicated estimates: passes iff |skew| < 0.5 and |excess kurtosis| < 1."""
    v = np.asarray(values, float)
    if v.size < 200:
        raise InsufficientData(f"normality diagnostic needs >= 200 values, got {v.size}")
    v = v - v.mean()
    sk = float(stats.skew(v))
    ku = float(stats.kurtosis(v, fisher=True))
    return {"skewness": sk, "excess_kurtosis": ku, "pass": abs(sk) < skew_tol and abs(ku) < kurt_tol}


LOSSES_CSV = "losses.csv"
SUMMARY_CSV = "summary.csv"
CURVES_DIR = "curves"
OVERLAY_SVG = "overlay.svg"
BOXPLOT_SVG = "boxplot.svg"


def export_report(report, directory, create=False, plots=True):
    """Write the report files and return their paths.

    Layout: ``losses.csv`` (n, replication, sup_loss), ``summary.csv``,
    ``curves/rep_<k>.csv`` (x, true, estimate at ``curve_n``),
    ``overlay.svg`` and ``boxplot.svg``.
    """
    from . import plotting

    ensure_dir(directory, create)
    cfg = report.config
    # thread count does not change results, so it stays out of the files
    meta = {"config": {k: v for k, v in cfg.to_dict().items() if k != "threads"}}
    out = []
    loss_rows = [(n, r, report.losses[n][r]) for n in report.n_list for r in range(cfg.replications)]
    out.append(write_table(os.path.join(directory, LOSSES_CSV), ["n", "replication", "sup_loss"],
                           loss_rows, meta))
    out.append(write_table(os.path.join(directory, SUMMARY_CSV),
                           ["n", "replications", "median", "q1", "q3", "whisker_low", "whisker_high", "mean"],
                           report.summary()))
    curve_n = cfg.curve_n or cfg.n_list[0]
    curves = report.curves.get(curve_n, np.empty((0, report.x_grid.size)))
    if cfg.replications:
        cdir = ensure_dir(os.path.join(directory, CURVES_DIR), True)
        for k, c in enumerate(curves):
            rows = zip(report.x_grid, report.truth, c)
            out.append(write_table(os.path.join(cdir, f"rep_{k}.csv"), ["x", "true", "estimate"], rows,
                                   {"n": curve_n, "replication": k}))
    if plots:
        label = f"{cfg.route}, n={curve_n}"
        out.append(plotting.overlay_plot(os.path.join(directory, OVERLAY_SVG), report.x_grid, curves,
                                         report.truth, label))
        out.append(plotting.loss_boxplot(os.path.join(directory, BOXPLOT_SVG), report.n_list,
                                         report.losses, cfg.route))
    return out
