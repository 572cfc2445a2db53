"""Density of a random time T recovered from samples of B_T.

The estimator inverts the Mellin transform of ``p_T`` on the line
``Re z = gamma_line``, replacing ``M[p_|X|](2z - 1)`` by its empirical
counterpart and cutting the inversion integral at ``|v| <= 1/h``.
"""
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, QuadratureError
from .mellin import SampleSet, empirical_mellin_line, invert_on_line, line_rule
from .special import complex_loggamma

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class SseConfig:
    gamma_line: float = 0.8
    beta: float = math.pi / 2
    smoothness_mode: str = "C"
    bandwidth_multiplier: float = 1.0
    n: int = 1000
    x_min: float = 0.05

    def __post_init__(self):
        if not self.gamma_line > 0.75:
            raise ConfigError(f"gamma_line must exceed 3/4 for the sse route, got {self.gamma_line}")
        if not self.beta > 0:
            raise ConfigError("beta must be positive")
        if not self.bandwidth_multiplier > 0:
            raise ConfigError("bandwidth_multiplier must be positive")
        if self.smoothness_mode not in ("C", "D"):
            raise ConfigError("smoothness_mode must be 'C' or 'D'")
        if self.n < 1:
            raise ConfigError("n must be a positive integer")

    def to_dict(self):
        return asdict(self)


@dataclass
class DensityEstimate:
    """Estimated density values on a positive, strictly increasing grid."""
    x_grid: np.ndarray
    values: np.ndarray
    config: object
    bandwidth_or_cutoffs: dict = field(default_factory=dict)
    imag_residue: float = 0.0

    def __post_init__(self):
        self.x_grid = np.asarray(self.x_grid, float)
        self.values = np.asarray(self.values, float)
        if self.x_grid.shape != self.values.shape:
            raise ValueError("grid and values differ in shape")
        if np.any(self.x_grid <= 0) or np.any(np.diff(self.x_grid) <= 0):
            raise DomainError("grid must be positive and strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite density estimate")


def bandwidth(n, beta, gamma_line, mode="C", multiplier=1.0):
    """Spectral bandwidth ``h_n``; the inversion integral is cut at ``1/h_n``.

    mode C (exponentially decaying Mellin transform)::

        h = c (pi + 2 beta) / (log n - 2 (1 - gamma) log log n)   gamma < 1
        h = c (pi + 2 beta) / log n                               gamma >= 1

    mode D (polynomial decay)::

        h = c pi / (log n - 2 (beta + 1 - gamma) log log n)       gamma < 1
        h = c pi / (log n - 2 beta log log n)                     gamma >= 1
    """
    if n < 3:
        raise DomainError("bandwidth needs n >= 3")
    if not beta > 0:
        raise DomainError("beta must be positive")
    ln = math.log(n)
    lln = math.log(ln)
    if mode == "C":
        num = math.pi + 2 * beta
        den = ln - 2 * (1 - gamma_line) * lln if gamma_line < 1 else ln
    elif mode == "D":
        num = math.pi
        den = ln - 2 * (beta + 1 - gamma_line) * lln if gamma_line < 1 else ln - 2 * beta * lln
    else:
        raise DomainError(f"mode must be 'C' or 'D', got {mode!r}")
    if den <= 0:
        raise DomainError(f"bandwidth denominator {den:.3g} <= 0: n={n} too small for beta={beta}")
    return multiplier * num / den


def _line_factor(gamma_line, v):
    # 1 / (2^z Gamma(z - 1/2)), z = gamma + iv
    z = gamma_line + 1j * v
    return np.exp(-z * math.log(2.0) - complex_loggamma(z - 0.5))


def estimate_sse(samples, config, h, x_grid, plug_in=None, clip_nonnegative=False,
                 residue_tol=1e-6):
    """Regularised Mellin-inversion estimate of ``p_T`` on ``x_grid``.

    Parameters
    ----------
    samples : SampleSet or array or None
        Observations of ``B_T``; ignored when ``plug_in`` is given.
    config : SseConfig
    h : float
        Bandwidth; the integral runs over ``|v| <= 1/h``.
    x_grid : array of positive floats
    plug_in : MellinFunction, optional
        Exact Mellin transform of ``p_|X|`` used in place of the empirical
        one, isolating the regularisation bias.
    clip_nonnegative : bool
        Replace negative estimates by 0.

    Raises
    ------
    QuadratureError
        If the imaginary residue exceeds ``residue_tol`` of the absolute
        integral (Hermitian symmetry broken).
    """
    if not h > 0:
        raise DomainError("h must be positive")
    gamma_line = config.gamma_line
    cutoff = 1.0 / h if math.isfinite(h) else 0.0
    v, w = line_rule(cutoff)
    if v.size:
        z = gamma_line + 1j * v
        if plug_in is not None:
            mell = plug_in(2 * z - 1)
        else:
            mell = empirical_mellin_line(samples, 2 * gamma_line - 1, 2.0, cutoff)
        on_line = mell * _line_factor(gamma_line, v)
    else:
        on_line = np.empty(0, complex)
    values, ratio = invert_on_line(on_line, gamma_line, v, w, x_grid, prefactor=1 / SQRT_PI)
    if ratio > residue_tol:
        raise QuadratureError(f"imaginary residue {ratio:.2e} exceeds {residue_tol:.0e}")
    if clip_nonnegative:
        values = np.maximum(values, 0.0)
    return DensityEstimate(np.asarray(x_grid, float), values, config,
                           {"h": h, "cutoff": cutoff}, ratio)


def z_terms(samples, config, h, x):
    """Per-observation summands ``Z_{n,k}`` at one point ``x``; their mean is the estimate."""
    vals = np.abs(samples.values if isinstance(samples, SampleSet) else np.asarray(samples, float))
    if x <= 0:
        raise DomainError("x must be positive")
    if np.any(vals == 0):
        raise DomainError("zero observation: |X|^(2(z-1)) undefined for gamma < 1")
    v, w = line_rule(1.0 / h)
    if v.size == 0:
        return np.zeros(vals.shape)
    z = config.gamma_line + 1j * v
    kern = w * _line_factor(config.gamma_line, v) * np.exp(-z * math.log(x))
    powers = np.exp(np.outer(np.log(vals), 2 * (z - 1)))
    return (powers @ kern).real / SQRT_PI


def z_term(sample_value, config, h, x):
    """``Z_{n,k}`` for a single observation."""
    return float(z_terms(np.array([sample_value]), config, h, x)[0])


def variance_rate_rho(n, h, gamma_line):
    """Normalising rate ``n^-1/2 h^(2(gamma-1)) log^-2(1/h) exp(pi/h)``."""
    if not 0 < h < 1:
        raise DomainError("variance rate needs 0 < h < 1")
    return n ** -0.5 * h ** (2 * (gamma_line - 1)) * math.log(1 / h) ** -2 * math.exp(math.pi / h)
