"""Reproducible samplers for random times and for the observed process at those times.

Replication seeds come from :func:`derive_seed`, which feeds
``(n, replication, stream)`` into a ``numpy.random.SeedSequence`` spawned from
the master seed, so every replication can be regenerated on its own.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .errors import NegativeTimeError, ParamError
from .mellin import SampleSet

log = logging.getLogger(__name__)

TIME_STREAM = 0
OBS_STREAM = 1


def derive_seed(master, n, rep, stream):
    """Seed of stream ``stream`` for replication ``rep`` at sample size ``n``."""
    if master < 0 or n < 0 or rep < 0 or stream < 0:
        raise ParamError("seed components must be nonnegative")
    ss = np.random.SeedSequence(int(master), spawn_key=(int(n), int(rep), int(stream)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class TimeDistribution:
    """Law of the random time: ``gamma``, ``gig`` or ``heavy_tail_q``.

    Parameters by kind: gamma ``alpha`` (rate 1); gig ``lam, kappa, delta``;
    heavy_tail_q ``nu`` with density ``nu sin(pi/nu) / (pi (1 + x^nu))``.
    """
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        p = self.params
        try:
            if self.kind == "gamma":
                ok = p["alpha"] > 0
            elif self.kind == "gig":
                lam, kap, dlt = p["lam"], p["kappa"], p["delta"]
                ok = kap >= 0 and dlt >= 0 and (kap > 0 or dlt > 0)
                # the degenerate ends need the matching sign of lam
                ok = ok and not (dlt == 0 and lam <= 0) and not (kap == 0 and lam >= 0)
            elif self.kind == "heavy_tail_q":
                ok = p["nu"] > 1
            else:
                raise ParamError(f"unknown time distribution {self.kind!r}")
        except KeyError as exc:
            raise ParamError(f"missing parameter {exc} for {self.kind}") from exc
        if not ok:
            raise ParamError(f"invalid parameters {p} for {self.kind}")

    @property
    def tag(self):
        inner = ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({inner})"


@dataclass(frozen=True)
class ObservationModel:
    """How observations arise from times.

    ``subordinated_bm``: ``sqrt(T) N``; ``variance_mean``: ``mu T + sigma sqrt(T) N``;
    ``subordinated_stable``: ``T^(1/alpha) S`` with ``S`` symmetric alpha-stable.
    """
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        p = self.params
        if self.kind == "subordinated_bm":
            ok = True
        elif self.kind == "variance_mean":
            ok = "mu" in p and p.get("sigma", 0) > 0
        elif self.kind == "subordinated_stable":
            ok = 0 < p.get("alpha", 0) <= 2
        else:
            raise ParamError(f"unknown observation model {self.kind!r}")
        if not ok:
            raise ParamError(f"invalid parameters {p} for {self.kind}")


def time_distribution(kind, **params):
    return TimeDistribution(kind, {k: float(v) for k, v in params.items()})


def observation_model(kind, **params):
    return ObservationModel(kind, {k: float(v) for k, v in params.items()})


# ---------------------------------------------------------------------------
# GIG
# ---------------------------------------------------------------------------

def _log_gig_norm(lam, kappa, delta):
    # log of int v^(lam-1) exp(-(kappa^2 v + delta^2 / v) / 2) dv
    if delta == 0:
        return special.gammaln(lam) - lam * math.log(kappa ** 2 / 2)
    if kappa == 0:
        return special.gammaln(-lam) + lam * math.log(delta ** 2 / 2)
    w = delta * kappa
    return math.log(2.0) + lam * math.log(delta / kappa) + math.log(special.kve(lam, w)) - w


def gig_density(v, lam, kappa, delta):
    """GIG density ``(kappa/delta)^lam / (2 K_lam(delta kappa)) v^(lam-1) exp(-(kappa^2 v + delta^2/v)/2)``.

    ``delta = 0`` gives Gamma(lam, rate kappa^2/2); ``kappa = 0`` the inverse Gamma.
    """
    TimeDistribution("gig", {"lam": lam, "kappa": kappa, "delta": delta})
    v = np.asarray(v, float)
    out = np.zeros(v.shape)
    pos = v > 0
    vp = v[pos]
    logf = (lam - 1) * np.log(vp) - 0.5 * (kappa ** 2 * vp + delta ** 2 / vp)
    out[pos] = np.exp(logf - _log_gig_norm(lam, kappa, delta))
    return out


def _gamma_envelope(lam, kappa, delta):
    """Best Gamma(s, rate c) envelope for a GIG with ``lam >= 0``, ``kappa, delta > 0``.

    Returns ``(s, c, log_bound, acceptance)`` where ``log_bound`` is the
    supremum of log(target/envelope) with both unnormalised.
    """
    log_norm = _log_gig_norm(lam, kappa, delta)
    half_k2 = kappa ** 2 / 2

    def parts(s, c):
        a = half_k2 - c
        d = lam - s
        vstar = (d + math.sqrt(d * d + 2 * a * delta ** 2)) / (2 * a)
        bound = d * math.log(vstar) - a * vstar - delta ** 2 / (2 * vstar)
        log_env = special.gammaln(s) - s * math.log(c)
        return bound, log_norm - bound - log_env

    def unpack(p):
        s = math.exp(min(max(p[0], -10.0), 10.0))
        c = half_k2 / (1 + math.exp(-min(max(p[1], -15.0), 15.0)))
        return s, c

    def neg_log_acc(p):
        return -parts(*unpack(p))[1]

    start = [math.log(max(lam, 0.5)), 2.0]
    res = optimize.minimize(neg_log_acc, start, method="Nelder-Mead",
                            options={"xatol": 1e-4, "fatol": 1e-6})
    s, c = unpack(res.x)
    bound, log_acc = parts(s, c)
    return s, c, bound, math.exp(log_acc)


def _sample_gig(lam, kappa, delta, n, rng):
    if delta == 0:
        return rng.gamma(lam, 2 / kappa ** 2, n)
    if kappa == 0:
        return 1.0 / rng.gamma(-lam, 2 / delta ** 2, n)
    if lam < 0:
        # 1/V is GIG(-lam, delta, kappa)
        return 1.0 / _sample_gig(-lam, delta, kappa, n, rng)
    s, c, bound, acc = _gamma_envelope(lam, kappa, delta)
    log.info("gig rejection sampler: envelope Gamma(%.4g, %.4g), acceptance %.3f", s, c, acc)
    out = np.empty(n)
    filled = 0
    while filled < n:
        batch = int(1.2 * (n - filled) / acc) + 16
        v = rng.gamma(s, 1 / c, batch)
        logr = (lam - s) * np.log(v) - (kappa ** 2 / 2 - c) * v - delta ** 2 / (2 * v) - bound
        keep = v[np.log(rng.random(batch)) < logr]
        take = min(keep.size, n - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def heavy_tail_q_cdf(x, nu):
    """CDF of ``nu sin(pi/nu) / (pi (1 + x^nu))`` on ``x >= 0``."""
    x = np.asarray(x, float)
    y = np.maximum(x, 0.0) ** nu
    return special.betainc(1 / nu, 1 - 1 / nu, y / (1 + y))


def _heavy_tail_inverse(u, nu):
    # X^nu / (1 + X^nu) is Beta(1/nu, 1 - 1/nu)
    b = special.betaincinv(1 / nu, 1 - 1 / nu, u)
    with np.errstate(divide="ignore"):
        return (b / (1 - b)) ** (1 / nu)


def sample_times(dist, n, seed):
    """``n`` i.i.d. draws from ``dist``; deterministic in ``seed``."""
    if n < 1:
        raise ParamError("n must be positive")
    rng = np.random.default_rng(seed)
    p = dist.params
    if dist.kind == "gamma":
        vals = rng.gamma(p["alpha"], 1.0, n)
    elif dist.kind == "gig":
        vals = _sample_gig(p["lam"], p["kappa"], p["delta"], n, rng)
    else:
        u = rng.random(n)
        if p["nu"] == 2:
            vals = np.tan(np.pi * u / 2)
        else:
            vals = _heavy_tail_inverse(u, p["nu"])
    return SampleSet(vals, seed=seed, model_tag=dist.tag)


def symmetric_stable(alpha, size, rng):
    """Chambers-Mallows-Stuck draws with characteristic function ``exp(-|u|^alpha)``."""
    v = rng.uniform(-np.pi / 2, np.pi / 2, size)
    w = rng.exponential(1.0, size)
    if alpha == 1:
        return np.tan(v)
    return (np.sin(alpha * v) / np.cos(v) ** (1 / alpha)
            * (np.cos((1 - alpha) * v) / w) ** ((1 - alpha) / alpha))


def sample_observations(times, model, seed):
    """Observations at the given times; deterministic in ``seed``.

    Raises
    ------
    NegativeTimeError
        If any time is negative.
    """
    t = times.values if isinstance(times, SampleSet) else np.asarray(times, float)
    if np.any(t < 0):
        raise NegativeTimeError("times must be nonnegative")
    rng = np.random.default_rng(seed)
    p = model.params
    if model.kind == "subordinated_bm":
        vals = np.sqrt(t) * rng.standard_normal(t.size)
    elif model.kind == "variance_mean":
        vals = p["mu"] * t + p["sigma"] * np.sqrt(t) * rng.standard_normal(t.size)
    else:
        a = p["alpha"]
        vals = t ** (1 / a) * symmetric_stable(a, t.size, rng)
    tag = getattr(times, "model_tag", "")
    return SampleSet(vals, seed=seed, model_tag=f"{model.kind}|{tag}")
