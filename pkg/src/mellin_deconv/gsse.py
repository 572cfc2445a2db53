"""Density of a random time T recovered from samples of a Levy process L_T.

With ``psi`` the characteristic exponent of ``L``, the characteristic function
of ``X = L_T`` is the Laplace transform of ``p_T`` evaluated along the curve
``psi((0, inf))``.  Integrating it against ``psi^-z psi'`` gives
``M[p_T](z) Gamma(1 - z)``, which is then inverted on ``Re z = gamma``.
"""
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import BranchError, ConfigError, DomainError, ModelError, QuadratureError
from .mellin import SampleSet, invert_on_line, line_rule
from .quadrature import QuadratureConfig, _legendre
from .special import complex_loggamma, kummer_1f1
from .sse import DensityEstimate

log = logging.getLogger(__name__)

# graded panels [l0 q^(k+1), l0 q^k] resolve the power singularity at 0
_GRADE_RATIO = 0.25
_GRADE_PANELS = 20
_UNIFORM_ORDER = 16


@dataclass(frozen=True)
class LevyModel:
    """Characteristic exponent ``psi(u) = -log E exp(iu L_1)`` and its derivative.

    Build instances with :func:`brownian_drift`, :func:`stable` or :func:`triplet`.
    """
    kind: str
    params: dict = field(default_factory=dict)

    def psi(self, u):
        u = np.asarray(u, float)
        p = self.params
        if self.kind == "brownian_drift":
            return -1j * p["mu"] * u + 0.5 * p["sigma"] ** 2 * u * u
        if self.kind == "stable":
            return (np.abs(u) ** p["alpha"]).astype(complex)
        if self.kind == "triplet":
            out = -1j * p["mu"] * u + 0.5 * p["sigma2"] * u * u
            for xj, wj in p["jumps"]:
                small = 1.0 if abs(xj) <= 1 else 0.0
                out = out + wj * (1 - np.exp(1j * u * xj) + 1j * u * xj * small)
            return out
        raise ModelError(f"unknown model kind {self.kind!r}")

    def psi_prime(self, u):
        u = np.asarray(u, float)
        p = self.params
        if self.kind == "brownian_drift":
            return -1j * p["mu"] + p["sigma"] ** 2 * u + 0j
        if self.kind == "stable":
            a = p["alpha"]
            with np.errstate(divide="ignore", invalid="ignore"):
                out = a * np.abs(u) ** (a - 1) * np.sign(u)
            return out.astype(complex)
        if self.kind == "triplet":
            out = -1j * p["mu"] + p["sigma2"] * u + 0j
            for xj, wj in p["jumps"]:
                small = 1.0 if abs(xj) <= 1 else 0.0
                out = out - 1j * wj * (np.exp(1j * u * xj) - small) * xj
            return out
        raise ModelError(f"unknown model kind {self.kind!r}")


def brownian_drift(mu=1.0, sigma=1.0):
    """``psi(u) = -i mu u + sigma^2 u^2 / 2``."""
    if not (math.isfinite(mu) and math.isfinite(sigma)) or sigma < 0:
        raise ModelError("brownian_drift needs finite mu and sigma >= 0")
    return LevyModel("brownian_drift", {"mu": float(mu), "sigma": float(sigma)})


def stable(alpha):
    """Symmetric stable exponent ``psi(u) = |u|^alpha``, ``0 < alpha <= 2``."""
    if not 0 < alpha <= 2:
        raise ModelError(f"stable index must lie in (0, 2], got {alpha}")
    return LevyModel("stable", {"alpha": float(alpha)})


def triplet(mu, sigma2, jumps=()):
    """Levy triplet with a finite discrete jump measure.

    Parameters
    ----------
    mu, sigma2 : float
        Drift and Gaussian variance.
    jumps : sequence of (x_j, w_j)
        Atoms ``w_j delta_{x_j}`` of the jump measure; ``w_j > 0``, ``x_j != 0``.
    """
    try:
        atoms = tuple((float(x), float(w)) for x, w in jumps)
    except (TypeError, ValueError) as exc:
        raise ModelError("jump measure must be a finite sequence of (location, weight) pairs") from exc
    if not (math.isfinite(mu) and math.isfinite(sigma2)) or sigma2 < 0:
        raise ModelError("triplet needs finite mu and sigma2 >= 0")
    for x, w in atoms:
        if not (math.isfinite(x) and math.isfinite(w)) or w <= 0 or x == 0:
            raise ModelError(f"invalid jump atom ({x}, {w})")
    return LevyModel("triplet", {"mu": float(mu), "sigma2": float(sigma2), "jumps": atoms})


def model_from_dict(spec):
    """Build a model from ``{"kind": ..., **params}`` (the config-file form)."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    builders = {"brownian_drift": brownian_drift, "stable": stable, "triplet": triplet}
    if kind not in builders:
        raise ModelError(f"unknown model kind {kind!r}")
    try:
        return builders[kind](**spec)
    except TypeError as exc:
        raise ModelError(str(exc)) from exc


def char_exponent(model, u):
    """``psi(u)`` for scalar or array ``u``."""
    out = model.psi(u)
    return complex(out) if np.ndim(u) == 0 else out


@dataclass(frozen=True)
class ContourReport:
    A_hat: float
    re_divergent: bool
    zero_re_points: int
    violated: bool


def contour_condition_check(model, u_grid):
    """Check that ``psi`` stays in a sector ``|Im psi| <= A Re psi`` with ``Re psi -> inf``.

    ``A_hat`` is the largest ratio ``|Im psi| / Re psi`` over grid points with
    ``Re psi > 0`` (``inf`` if there are none); grid points with ``Re psi = 0``
    are counted in ``zero_re_points``.
    """
    u = np.asarray(u_grid, float)
    if u.ndim != 1 or u.size < 2 or np.any(u <= 0) or np.any(np.diff(u) <= 0):
        raise DomainError("u_grid must be positive and increasing")
    if u[-1] < 100:
        raise DomainError("u_grid must reach at least 100")
    p = model.psi(u)
    pos = p.real > 0
    zero_re = int(np.count_nonzero(~pos))
    A_hat = float(np.max(np.abs(p.imag[pos]) / p.real[pos])) if np.any(pos) else math.inf
    mid = p.real[u.size // 2]
    re_div = bool(mid > 0 and p.real[-1] > 10 * mid)
    violated = (not re_div) or not math.isfinite(A_hat) or bool(np.any(p.imag[~pos] != 0))
    return ContourReport(A_hat, re_div, zero_re, violated)


def growth_diagnostics(model, u_grid):
    """Ratios behind the growth bounds ``|psi| <~ u^2``, ``|psi'| <~ u`` and, with drift, ``|psi| >~ u`` near 0."""
    u = np.asarray(u_grid, float)
    p = np.abs(model.psi(u))
    dp = np.abs(model.psi_prime(u))
    return {
        "max_psi_over_u2": float(np.max(p / u ** 2)),
        "max_dpsi_over_u": float(np.max(dp / u)),
        "min_psi_over_u": float(np.min(p / u)),
    }


@dataclass(frozen=True)
class GsseConfig:
    gamma_line: float = 0.7
    beta: float = math.pi / 2
    epsilon: float = 0.5
    smoothness_mode: str = "C"
    A_multiplier: float = 1.0
    U_multiplier: float = 1.0
    n: int = 1000

    def __post_init__(self):
        if not 0.5 < self.gamma_line < 1:
            raise ConfigError(f"gamma_line must lie in (1/2, 1), got {self.gamma_line}")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if not self.beta > 0:
            raise ConfigError("beta must be positive")
        if self.smoothness_mode not in ("C", "D"):
            raise ConfigError("smoothness_mode must be 'C' or 'D'")
        if not (self.A_multiplier > 0 and self.U_multiplier > 0):
            raise ConfigError("cutoff multipliers must be positive")
        if self.n < 3:
            raise ConfigError("n must be at least 3")

    def to_dict(self):
        return asdict(self)


def cutoffs(config):
    """Cutoffs ``(A_n, U_n)`` for the lambda and v integrals.

    ``A_n = a n^(1/(4(1-gamma)+2 eps))``; ``U_n`` grows like ``log n`` with a
    coefficient depending on the smoothness mode.
    """
    g, eps, b = config.gamma_line, config.epsilon, config.beta
    ln = math.log(config.n)
    lln = math.log(ln)
    A = config.A_multiplier * config.n ** (1.0 / (4 * (1 - g) + 2 * eps))
    if config.smoothness_mode == "C":
        U = eps / ((2 - 2 * g + eps) * (2 * b + math.pi)) * ln - (2 * g - 1) / (2 * b + math.pi) * lln
    else:
        U = eps / (math.pi * (2 - 2 * g + eps)) * ln - (2 * b + 2 * g - 1) / math.pi * lln
    U *= config.U_multiplier
    if U <= 0:
        raise DomainError(f"U_n = {U:.3g} <= 0: n={config.n} too small for these parameters")
    return A, U


# ---------------------------------------------------------------------------
# lambda quadrature
# ---------------------------------------------------------------------------

def oscillation_width(x):
    """Panel width keeping a quarter oscillation of ``exp(i x lambda)`` per panel."""
    return min(math.pi / (4 * (1 + abs(x))), 0.5)


@dataclass(frozen=True)
class LambdaRule:
    """Nodes on ``[eps0, A]``: graded panels up to ``lam0`` then uniform panels.

    The uniform part has ``npan`` panels of width ``width`` starting at ``lam0``;
    its nodes are ``mids[p] + offsets[j]`` laid out panel by panel.
    """
    nodes: np.ndarray
    weights: np.ndarray
    eps0: float
    lam0: float
    width: float
    npan: int
    offsets: np.ndarray


def lambda_rule(A, width, order=_UNIFORM_ORDER):
    if not A > 0:
        raise DomainError("A_n must be positive")
    x, w = _legendre(order)
    lam0 = min(0.5, A)
    hi = lam0 * _GRADE_RATIO ** np.arange(_GRADE_PANELS)
    lo = hi * _GRADE_RATIO
    half = 0.5 * (hi - lo)[::-1]
    mid = 0.5 * (hi + lo)[::-1]
    g_nodes = (mid[:, None] + half[:, None] * x).ravel()
    g_weights = (half[:, None] * w).ravel()
    npan = max(0, int(math.ceil((A - lam0) / width - 1e-12)))
    if npan:
        wd = (A - lam0) / npan
        mids = lam0 + wd * (np.arange(npan) + 0.5)
        offsets = 0.5 * wd * x
        u_nodes = (mids[:, None] + offsets).ravel()
        u_weights = np.tile(0.5 * wd * w, npan)
    else:
        wd = 0.0
        offsets = np.empty(0)
        u_nodes = u_weights = np.empty(0)
    return LambdaRule(np.concatenate([g_nodes, u_nodes]), np.concatenate([g_weights, u_weights]),
                      float(lo[-1]), lam0, wd, npan, offsets)


def _checked_log_psi(psi_vals):
    bad = (psi_vals == 0) | ((psi_vals.real < 0) & (psi_vals.imag == 0))
    if np.any(bad):
        raise BranchError("psi reaches zero or the negative real axis on (0, A_n]")
    return np.log(psi_vals)


def _phi_quadrature(model, z, x, A_n):
    rule = lambda_rule(A_n, oscillation_width(x))
    lam = rule.nodes
    logpsi = _checked_log_psi(model.psi(lam))
    integrand = np.exp((z - 1) * logpsi + 1j * x * lam) * model.psi_prime(lam)
    # below eps0: psi^(z-1) psi' integrates to psi^z / z
    head = np.exp(z * _checked_log_psi(model.psi(np.array([rule.eps0])))[0]) / z
    return complex(np.dot(rule.weights, integrand) + head * np.exp(1j * x * rule.eps0))


def phi_n(model, z, x, A_n, quad_cfg=None):
    """Kernel integral ``int_0^A psi^(z-1) exp(i x lambda) psi' d lambda``.

    Stable models use the closed form ``A^(alpha z)/z 1F1(alpha z; 1 + alpha z; i A x)``;
    with ``quad_cfg.verify`` it is cross-checked against quadrature.

    Raises
    ------
    BranchError
        ``psi`` touches the negative real axis.
    QuadratureError
        Closed form and quadrature disagree beyond ``quad_cfg.tol`` (verify mode).
    """
    z = complex(z)
    if not 0 < z.real < 1:
        raise DomainError(f"Re z must lie in (0, 1), got {z.real}")
    if not A_n > 0:
        raise DomainError("A_n must be positive")
    if model.kind != "stable":
        return _phi_quadrature(model, z, x, A_n)
    az = model.params["alpha"] * z
    closed = complex(np.exp(az * math.log(A_n)) / z * kummer_1f1(az, 1 + az, 1j * A_n * x))
    if quad_cfg is not None and quad_cfg.verify:
        quad = _phi_quadrature(model, z, x, A_n)
        tol = max(quad_cfg.tol, 1e-6)
        if abs(quad - closed) > tol * max(1.0, abs(closed)):
            raise QuadratureError(f"closed form {closed} and quadrature {quad} disagree")
    return closed


# ---------------------------------------------------------------------------
# estimator
# ---------------------------------------------------------------------------

def empirical_cf_on_rule(values, rule, block=128):
    """Empirical characteristic function ``mean exp(i lambda X)`` at the rule's nodes.

    The uniform part reuses ``exp(i mid_p X)`` via a running product across
    panels, re-anchored at every block.
    """
    x = np.asarray(values, float)
    n = x.size
    order = rule.offsets.size
    n_graded = rule.nodes.size - rule.npan * order
    out = np.empty(rule.nodes.size, complex)
    for s in range(0, n_graded, block):
        lam = rule.nodes[s:min(s + block, n_graded)]
        out[s:s + lam.size] = np.exp(1j * np.outer(lam, x)).mean(axis=1)
    if rule.npan == 0:
        return out
    off = np.exp(1j * np.outer(x, rule.offsets))  # n x order
    step = np.exp(1j * rule.width * x)
    first_mid = rule.lam0 + 0.5 * rule.width
    for p0 in range(0, rule.npan, block):
        rows = min(block, rule.npan - p0)
        mids = np.empty((rows, n), complex)
        mids[0] = np.exp(1j * (first_mid + p0 * rule.width) * x)
        for r in range(1, rows):
            mids[r] = mids[r - 1] * step
        vals = (mids @ off) / n
        start = n_graded + p0 * order
        out[start:start + rows * order] = vals.ravel()
    return out


def curve_integral(model, rule, cf_vals, z, head=1.0, chunk=32):
    """``sum_j w_j psi_j^-z psi'_j cf_j`` for each ``z`` plus the analytic head below ``eps0``.

    ``head`` is the characteristic-function value assumed on ``[0, eps0]``.
    """
    lam = rule.nodes
    logpsi = _checked_log_psi(model.psi(lam))
    amp = rule.weights * model.psi_prime(lam) * cf_vals
    z = np.atleast_1d(np.asarray(z, complex))
    out = np.empty(z.shape, complex)
    for s in range(0, z.size, chunk):
        zs = z[s:s + chunk]
        out[s:s + chunk] = np.exp(-np.outer(zs, logpsi)) @ amp
    if head != 0:
        log_eps = _checked_log_psi(model.psi(np.array([rule.eps0])))[0]
        out = out + head * np.exp((1 - z) * log_eps) / (1 - z)
    return out


def estimate_gsse(samples, model, config, x_grid, variance_reduction=False, cf=None,
                  cutoff_override=None, residue_tol=None, clip_nonnegative=False):
    """Estimate ``p_T`` on ``x_grid`` from observations of ``L_T``.

    Parameters
    ----------
    samples : SampleSet or array
        Observations of ``X = L_T``; ignored when ``cf`` is given.
    model : LevyModel
    config : GsseConfig
    x_grid : array of positive floats
    variance_reduction : bool
        Subtract ``exp(-m_n psi)`` from the empirical characteristic function
        and add back its exact transform ``m_n^(z-1) Gamma(1-z)``.
    cf : callable, optional
        Exact characteristic function of ``X`` used instead of the empirical one.
    cutoff_override : (A, U), optional
        Replace the rule-based cutoffs.
    residue_tol : float, optional
        Largest admitted imaginary residue; defaults to 1e-6 with ``cf`` and
        no check otherwise (the empirical integrand is not Hermitian).

    Notes
    -----
    The real part is returned; ``imag_residue`` holds the relative size of the
    discarded imaginary part.
    """
    A, U = cutoff_override if cutoff_override is not None else cutoffs(config)
    g = config.gamma_line
    info = {"A_n": float(A), "U_n": float(U)}
    v, w = line_rule(U)
    if v.size == 0:
        est = DensityEstimate(np.asarray(x_grid, float), np.zeros(np.shape(x_grid)), config, info, 0.0)
        return est
    z = g + 1j * v
    if cf is not None:
        rule = lambda_rule(A, 0.5)
        cf_vals = np.asarray(cf(rule.nodes), complex)
        m_n = None
        if residue_tol is None:
            residue_tol = 1e-6
    else:
        vals = samples.values if isinstance(samples, SampleSet) else np.asarray(samples, float)
        rule = lambda_rule(A, oscillation_width(np.max(np.abs(vals))))
        cf_vals = empirical_cf_on_rule(vals, rule)
        m_n = float(np.mean(vals))
    if variance_reduction:
        if m_n is None:
            raise ConfigError("variance reduction needs samples, not an exact characteristic function")
        if m_n <= 0:
            raise ConfigError(f"variance reduction needs a positive sample mean, got {m_n:.4g}")
        base = np.exp(-m_n * model.psi(rule.nodes))
        inner = curve_integral(model, rule, cf_vals - base, z, head=0.0)
        on_line = inner * np.exp(-complex_loggamma(1 - z)) + np.exp((z - 1) * math.log(m_n))
        dropped = m_n ** -(1 - g) * math.exp(-m_n * A * A / 2)
        info.update(m_n=m_n, dropped_bound=dropped)
        log.info("decomposition remainder bound %.3e (m_n=%.4g, A_n=%.4g)", dropped, m_n, A)
    else:
        inner = curve_integral(model, rule, cf_vals, z, head=1.0)
        on_line = inner * np.exp(-complex_loggamma(1 - z))
    values, ratio = invert_on_line(on_line, g, v, w, x_grid, prefactor=1 / (2 * math.pi))
    if residue_tol is not None and ratio > residue_tol:
        raise QuadratureError(f"imaginary residue {ratio:.2e} exceeds {residue_tol:.0e}")
    if clip_nonnegative:
        values = np.maximum(values, 0.0)
    return DensityEstimate(np.asarray(x_grid, float), values, config, info, ratio)
