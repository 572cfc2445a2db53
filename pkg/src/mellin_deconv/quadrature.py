"""Composite Gauss-Legendre rules shared by the transforms."""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureError


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for composite Gauss-Legendre integration.

    ``panel_width`` is the starting width for refined rules; ``log_range``
    bounds ``|log t|`` for integrals over the half line.
    """
    order: int = 16
    panel_width: float = 0.25
    log_range: float = 40.0
    tol: float = 1e-10
    max_refine: int = 5
    verify: bool = False


@lru_cache(maxsize=32)
def _legendre(order):
    return np.polynomial.legendre.leggauss(order)


def panel_rule(a, b, width, order=16):
    """Nodes and weights of equal-width Gauss-Legendre panels on ``[a, b]``.

    The panel count is ``ceil((b - a) / width)``, so the actual width never
    exceeds ``width``.  A symmetric interval gives a node set symmetric about 0.
    """
    if b <= a:
        return np.empty(0), np.empty(0)
    npan = max(1, int(np.ceil((b - a) / width - 1e-12)))
    x, w = _legendre(order)
    edges = np.linspace(a, b, npan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def symmetric_rule(cutoff, width=0.5, order=16):
    """Panel rule on ``[-cutoff, cutoff]`` with nodes mirrored exactly."""
    if cutoff <= 0:
        return np.empty(0), np.empty(0)
    pos, wpos = panel_rule(0.0, cutoff, width, order)
    return np.concatenate([-pos[::-1], pos]), np.concatenate([wpos[::-1], wpos])


def refine_integrate(func, a, b, cfg=QuadratureConfig()):
    """Integrate a vectorised ``func`` over ``[a, b]``, halving panels until stable.

    Returns ``(value, error_estimate)``.
    """
    width = cfg.panel_width
    nodes, weights = panel_rule(a, b, width, cfg.order)
    prev = np.dot(weights, func(nodes))
    for _ in range(cfg.max_refine):
        width /= 2
        nodes, weights = panel_rule(a, b, width, cfg.order)
        cur = np.dot(weights, func(nodes))
        err = abs(cur - prev)
        if err <= cfg.tol * max(1.0, abs(cur)):
            return cur, err
        prev = cur
    raise QuadratureError(f"no convergence on [{a}, {b}]: last change {err:.3g}")
