"""Mellin transforms: empirical, closed-form catalog, inversion and norms."""
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    DomainError,
    ParamError,
    QuadratureError,
    SingularSampleError,
    StripError,
    TailError,
    UnknownCatalogTag,
)
from .quadrature import QuadratureConfig, panel_rule, refine_integrate, symmetric_rule
from .special import complex_gamma, complex_loggamma

LINE_PANEL_WIDTH = 0.5
LINE_ORDER = 16


@dataclass(frozen=True)
class MellinFunction:
    """A Mellin transform together with its strip of analyticity.

    ``evaluate`` takes complex scalars or arrays.
    """
    evaluate: Callable
    strip_lo: float
    strip_hi: float
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.strip_lo < self.strip_hi:
            raise ParamError(f"empty strip ({self.strip_lo}, {self.strip_hi})")

    def __call__(self, z):
        return self.evaluate(z)

    def contains(self, re):
        return self.strip_lo < re < self.strip_hi

    def scaled(self, c):
        return MellinFunction(lambda z: c * self.evaluate(z), self.strip_lo, self.strip_hi,
                              self.name, dict(self.params, scale=c))


@dataclass(frozen=True)
class SampleSet:
    values: np.ndarray
    seed: int = 0
    model_tag: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ParamError("a SampleSet needs a nonempty 1-d sequence")
        if not np.all(np.isfinite(vals)):
            raise ParamError("SampleSet values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size


def _as_values(samples):
    return samples.values if isinstance(samples, SampleSet) else np.asarray(samples, dtype=float)


def empirical_mellin(samples, z, absolute=True, chunk=4096):
    """Empirical Mellin transform ``mean(|X_k|^(z-1))``.

    ``z`` may be an array; the result has its shape.  Zero samples contribute
    0 when ``Re z > 1`` and are an error otherwise.
    """
    x = _as_values(samples)
    if absolute:
        x = np.abs(x)
    elif np.any(x < 0):
        raise DomainError("negative samples need absolute=True")
    zz = np.asarray(z, dtype=complex)
    if np.any(zz.real <= 0.5):
        raise DomainError("empirical Mellin transform requires Re z > 1/2")
    zeros = x == 0
    if np.any(zeros) and np.any(zz.real <= 1):
        raise SingularSampleError("zero sample with Re z <= 1")
    logs = np.log(x[~zeros])
    flat = zz.ravel() - 1.0
    total = np.zeros(flat.shape, dtype=complex)
    for start in range(0, logs.size, chunk):
        block = logs[start:start + chunk]
        total += np.exp(np.outer(block, flat)).sum(axis=0)
    return (total / x.size).reshape(zz.shape)[()]


# ---------------------------------------------------------------------------
# closed-form catalog
# ---------------------------------------------------------------------------

def _inv_sin(w):
    # 1/sin(w) via exponentials bounded by 1, no overflow for large |Im w|
    sgn = np.where(w.imag >= 0, 1.0, -1.0)
    e = np.exp(1j * sgn * w)
    return sgn * 2j * e / (e * e - 1.0)


def analytic_mellin(name, **params):
    """Closed-form Mellin transform from the density catalog.

    ``gamma_density(alpha)``: Gamma(alpha, 1) density.
    ``heavy_tail_q(q)``: ``q sin(pi/q) / (pi (1 + x^q))``.
    ``log_tail_q(nu)``: density with transform ``(z^-nu + (2-z)^-nu) / 2``.
    """
    if name == "gamma_density":
        alpha = float(params.get("alpha", 0))
        if not alpha > 0:
            raise ParamError("gamma_density needs alpha > 0")
        lg_alpha = complex_loggamma(alpha).real
        return MellinFunction(
            lambda z: np.exp(complex_loggamma(np.asarray(z, complex) + alpha - 1) - lg_alpha),
            1.0 - alpha, np.inf, name, {"alpha": alpha})
    if name == "heavy_tail_q":
        q = float(params.get("q", 0))
        if not q >= 2:
            raise ParamError("heavy_tail_q needs q >= 2")
        s = np.sin(np.pi / q)
        return MellinFunction(lambda z: s * _inv_sin(np.pi * np.asarray(z, complex) / q),
                              0.0, q, name, {"q": q})
    if name == "log_tail_q":
        nu = float(params.get("nu", 0))
        if not nu > 1:
            raise ParamError("log_tail_q needs nu > 1")
        return MellinFunction(
            lambda z: 0.5 * (np.asarray(z, complex) ** -nu + (2.0 - np.asarray(z, complex)) ** -nu),
            0.0, 2.0, name, {"nu": nu})
    raise UnknownCatalogTag(f"unknown catalog tag {name!r}")


def catalog_density(name, **params):
    """Density function matching :func:`analytic_mellin` for the same tag."""
    if name == "gamma_density":
        from scipy.stats import gamma
        alpha = float(params["alpha"])
        if not alpha > 0:
            raise ParamError("gamma_density needs alpha > 0")
        return gamma(alpha).pdf
    if name == "heavy_tail_q":
        q = float(params["q"])
        if not q >= 2:
            raise ParamError("heavy_tail_q needs q >= 2")
        c = q * np.sin(np.pi / q) / np.pi
        return lambda x: c / (1.0 + np.asarray(x, float) ** q)
    if name == "log_tail_q":
        nu = float(params["nu"])
        if not nu > 1:
            raise ParamError("log_tail_q needs nu > 1")
        from scipy.special import gammaln
        c = np.exp(-gammaln(nu)) / 2

        def pdf(x):
            x = np.asarray(x, float)
            with np.errstate(divide="ignore"):
                lx = np.abs(np.log(x))
            return c * lx ** (nu - 1) * np.where(x <= 1, 1.0, 1.0 / np.maximum(x, 1.0) ** 2)
        return pdf
    raise UnknownCatalogTag(f"unknown catalog tag {name!r}")


def abs_observation_mellin(m_time):
    """Mellin transform of ``|sqrt(T) N|`` given that of ``T``.

    ``M[p_|X|](w) = 2^((w-1)/2) Gamma(w/2) M[p_T]((w+1)/2) / sqrt(pi)``.
    """
    def evaluate(w):
        w = np.asarray(w, complex)
        return 2 ** ((w - 1) / 2) * complex_gamma(w / 2) * m_time((w + 1) / 2) / np.sqrt(np.pi)
    return MellinFunction(evaluate, max(2 * m_time.strip_lo - 1, 0.0), 2 * m_time.strip_hi - 1,
                          f"abs_obs[{m_time.name}]", dict(m_time.params))


# ---------------------------------------------------------------------------
# inversion, convolution, norms
# ---------------------------------------------------------------------------

def line_rule(cutoff):
    """Gauss-Legendre nodes/weights on ``[-cutoff, cutoff]`` used for vertical lines."""
    return symmetric_rule(cutoff, LINE_PANEL_WIDTH, LINE_ORDER)


def empirical_mellin_line(samples, re_arg, slope, cutoff, chunk=8192):
    """Empirical Mellin transform at ``re_arg + i slope v`` for every node of ``line_rule(cutoff)``.

    Same values as :func:`empirical_mellin`, computed by splitting each node
    into panel midpoint plus a fixed offset so that only one complex
    exponential per sample, panel and offset is needed; the negative half of
    the line follows by conjugation.
    """
    x = np.abs(_as_values(samples))
    if re_arg <= 0.5:
        raise DomainError("empirical Mellin transform requires Re z > 1/2")
    zeros = x == 0
    if np.any(zeros) and re_arg <= 1:
        raise SingularSampleError("zero sample with Re z <= 1")
    if cutoff <= 0:
        return np.empty(0, complex)
    pos, _ = panel_rule(0.0, cutoff, LINE_PANEL_WIDTH, LINE_ORDER)
    pos = pos.reshape(-1, LINE_ORDER)
    mids = 0.5 * (pos[:, 0] + pos[:, -1])
    offsets = pos[0] - mids[0]
    logs = np.log(x[~zeros])
    acc = np.zeros((mids.size, LINE_ORDER), dtype=complex)
    for start in range(0, logs.size, chunk):
        lb = logs[start:start + chunk]
        amp = np.exp((re_arg - 1.0) * lb)
        outer_mid = np.exp(1j * slope * np.outer(mids, lb)) * amp
        outer_off = np.exp(1j * slope * np.outer(lb, offsets))
        acc += outer_mid @ outer_off
    half = (acc / x.size).ravel()
    return np.concatenate([np.conj(half[::-1]), half])


def invert_on_line(values_on_line, gamma_line, v, w, x_grid, prefactor=1 / (2 * np.pi)):
    """``prefactor * sum_j w_j x^-(gamma + i v_j) F_j`` for every x.

    Returns ``(real_part, imag_residue_ratio)`` where the ratio compares the
    discarded imaginary part with the absolute integral.
    """
    x = np.asarray(x_grid, float)
    if np.any(x <= 0):
        raise DomainError("inversion grid must be positive")
    if v.size == 0:
        return np.zeros(x.shape), 0.0
    logx = np.log(x)
    kern = np.exp(-np.outer(logx, gamma_line + 1j * v))
    weighted = w * values_on_line
    out = prefactor * (kern @ weighted)
    scale = prefactor * np.exp(-gamma_line * logx) * np.sum(np.abs(weighted))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(scale > 0, np.abs(out.imag) / scale, 0.0)
    return out.real, float(np.max(ratio)) if ratio.size else 0.0


def mellin_inverse_regularized(m, gamma_line, cutoff, x_grid, residue_tol=1e-8):
    """Truncated inverse Mellin transform on the line ``Re z = gamma_line``.

    ``(1/2pi) int_{-cutoff}^{cutoff} x^(-gamma - iv) m(gamma + iv) dv``.
    """
    if not m.contains(gamma_line):
        raise StripError(f"gamma_line={gamma_line} outside strip ({m.strip_lo}, {m.strip_hi})")
    if cutoff < 0:
        raise DomainError("cutoff must be nonnegative")
    v, w = line_rule(cutoff)
    vals = m(gamma_line + 1j * v) if v.size else np.empty(0, complex)
    out, ratio = invert_on_line(vals, gamma_line, v, w, x_grid)
    if ratio > residue_tol:
        raise QuadratureError(f"imaginary residue {ratio:.2e} exceeds {residue_tol:.0e}")
    return out


def multiplicative_convolution(f, g, x, quad_cfg=QuadratureConfig()):
    """``(f v g)(x) = int_0^inf f(t) g(x/t) dt / t`` on the log axis.

    The range ``|log t| <= quad_cfg.log_range`` is integrated with panel
    refinement; the integrand at both ends must be negligible.
    """
    if x <= 0:
        raise DomainError("x must be positive")
    lim = quad_cfg.log_range
    logx = np.log(x)

    def integrand(s):
        s = np.asarray(s)
        with np.errstate(over="ignore", under="ignore"):
            return f(np.exp(s)) * g(np.exp(logx - s))

    value, _ = refine_integrate(integrand, -lim, lim, quad_cfg)
    ends = np.abs(integrand(np.array([-lim, lim])))
    if np.max(ends) > quad_cfg.tol * max(1.0, abs(value)):
        raise QuadratureError(f"integrand not negligible at |log t| = {lim}")
    return float(value)


def smoothness_norm(m, beta, gamma_line, mode="C", cutoff=60.0, tail_fraction=0.01):
    """Truncated norm ``int |m(gamma + iv)| weight(v) dv`` over ``|v| <= cutoff``.

    ``mode="C"`` weights by ``exp(beta |v|)``, ``mode="D"`` by ``1 + |v|^beta``.
    The tail beyond ``cutoff`` is extrapolated from the local decay of the
    weighted integrand; a :class:`TailError` is raised when it does not decay
    or the tail exceeds ``tail_fraction`` of the truncated integral.
    """
    if not m.contains(gamma_line):
        raise StripError(f"gamma_line={gamma_line} outside strip")
    if mode == "C":
        weight = lambda v: np.exp(beta * np.abs(v))
    elif mode == "D":
        weight = lambda v: 1.0 + np.abs(v) ** beta
    else:
        raise ParamError(f"mode must be 'C' or 'D', got {mode!r}")
    v, w = line_rule(cutoff)
    f = np.abs(m(gamma_line + 1j * v)) * weight(v)
    partial = float(np.dot(w, f))
    probe = np.array([cutoff - 1.0, cutoff, -cutoff + 1.0, -cutoff])
    fp = np.abs(m(gamma_line + 1j * probe)) * weight(probe)
    tail = 0.0
    for inner, outer in ((fp[0], fp[1]), (fp[2], fp[3])):
        if outer == 0:
            continue
        if inner == 0 or outer >= inner:
            raise TailError("weighted Mellin transform does not decay; norm diverges")
        if mode == "C":
            rate = np.log(inner / outer)
            tail += outer / rate
        else:
            power = np.log(inner / outer) / np.log(cutoff / (cutoff - 1.0))
            if power <= 1:
                raise TailError(f"weighted transform decays like |v|^-{power:.2f}; norm diverges")
            tail += outer * cutoff / (power - 1)
    if partial == 0:
        return 0.0
    if tail > tail_fraction * partial:
        raise TailError(f"tail estimate {tail:.3g} exceeds {tail_fraction:.0%} of {partial:.3g}")
    return partial
