"""Potential w = log(1/|.|) * G(u), residuals of the coupled system and decay fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import IllConditionedPoint, InvalidArgument, UnsupportedInput
from .fractional_calculus import DEFAULT_QUADRATURE, half_laplacian_pointwise
from .function_space import Grid1D, SampledFunction, evaluate, integrate, symmetric_grid
from .log_functionals import log_convolution


@dataclass
class ELReport:
    residual_u: float
    residual_w: float
    u_decay_exponent: Optional[float]
    w_log_slope: Optional[float]
    theta_used: float
    excluded_nodes: int = 0
    failure_ratio: float = 0.0

    def to_dict(self):
        return asdict(self)


def potential_grid(inner, outer=40.0, n_outer=160):
    """Grid containing the nodes of ``inner`` plus geometric nodes out to +-outer."""
    x = inner.nodes
    b = x[-1]
    if outer <= b:
        return inner
    r = np.geomspace(b, outer, n_outer + 1)[1:]
    half = np.concatenate([x[x >= 0], r])
    return symmetric_grid(half) if inner.symmetric else Grid1D(np.concatenate([-r[::-1], x, r]))


def log_potential(v, grid):
    """int log(1/|x-y|) v(y) dy at the nodes of ``grid``, exact for piecewise-linear v."""
    return SampledFunction(grid, -np.asarray(log_convolution(v, grid.nodes)))


def w_potential(u, G, eval_grid=None, refine=4):
    """w = log(1/|.|) * G(u) sampled on eval_grid (default: u's grid extended to +-40)."""
    if G(0.0) != 0.0:
        raise InvalidArgument("w diverges unless G(0) = 0")
    fine = u.grid.refined(refine)
    v = SampledFunction(fine, G(evaluate(u, fine.nodes)))
    if eval_grid is None:
        eval_grid = potential_grid(u.grid)
    return log_potential(v, eval_grid)


def _node_weights(x):
    w = np.zeros_like(x)
    h = np.diff(x)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    return w


def _wnorm(r, w):
    return math.sqrt(float(np.sum(w * r * r)))


def _pointwise(f, nodes, exterior, skip):
    vals = np.full(nodes.size, np.nan)
    bad = 0
    for i in range(skip, nodes.size - skip):
        try:
            vals[i] = half_laplacian_pointwise(f, nodes[i], exterior=exterior)
        except IllConditionedPoint:
            bad += 1
    return vals, bad


def _log_tail(w, mass):
    """Exterior model -mass log|y| + c matched to w at each hull end."""
    x = w.grid.nodes
    cl = w.values[0] + mass * math.log(abs(x[0]))
    cr = w.values[-1] + mass * math.log(abs(x[-1]))
    return (lambda y: -mass * np.log(np.abs(y)) + cl, lambda y: -mass * np.log(np.abs(y)) + cr)


def _u_residual(lap_u, u, wg, theta, mass_term):
    return lap_u + (u.values if mass_term else 0.0) - theta * wg


def u_residual_vector(u, w, theta, G, mass_term=True, skip_cells=2):
    """Nodal residual of the u-equation; NaN at skipped or ill-conditioned nodes."""
    lap_u, _ = _pointwise(u, u.grid.nodes, None, skip_cells)
    wg = evaluate(w, u.grid.nodes) * G.derivative(u.values)
    return _u_residual(lap_u, u, wg, theta, mass_term)


def system_residual(u, w, theta, G, q=DEFAULT_QUADRATURE, mass_term=True, skip_cells=2, refine=4):
    """Relative residuals of (-Delta)^{1/2} u (+ u) = theta w g(u) and (-Delta)^{1/2} w = pi G(u).

    Each residual is a trapezoid-weighted L2 norm over nodes at least
    ``skip_cells`` cells from the hull, divided by the largest of the norms of
    the individual terms. Nodes where the pointwise half-Laplacian is
    ill-conditioned are skipped and counted.
    """
    if not G.has_derivative:
        raise UnsupportedInput("growth model has no derivative")
    xu = u.grid.nodes
    lap_u, bad_u = _pointwise(u, xu, None, skip_cells)
    g = G.derivative(u.values)
    wu = evaluate(w, xu)
    terms = [lap_u, theta * wu * g]
    if mass_term:
        terms.append(u.values)
    ok = np.isfinite(lap_u)
    wts = _node_weights(xu) * ok
    res = _u_residual(lap_u, u, wu * g, theta, mass_term)
    scale = max(_wnorm(np.nan_to_num(t), wts) for t in terms)
    r_u = _wnorm(np.nan_to_num(res), wts) / scale if scale > 0 else 0.0

    fine = u.grid.refined(refine)
    mass = integrate(SampledFunction(fine, G(evaluate(u, fine.nodes))))
    xw = w.grid.nodes
    lap_w, bad_w = _pointwise(w, xw, _log_tail(w, mass) if mass > 0 else None, skip_cells)
    src = math.pi * np.asarray(G(evaluate(u, xw)))
    okw = np.isfinite(lap_w)
    ww = _node_weights(xw) * okw
    scale_w = max(_wnorm(np.nan_to_num(lap_w), ww), _wnorm(src, ww))
    r_w = _wnorm(np.nan_to_num(lap_w - src), ww) / scale_w if scale_w > 0 else 0.0

    total = (xu.size - 2 * skip_cells) + (xw.size - 2 * skip_cells)
    excluded = bad_u + bad_w

    slope = None
    if xw[-1] >= 20.0:
        slope = w_log_slope(w, (5.0, 20.0))
    expo = None
    if xu[-1] >= 20.0 and np.all(u.values[np.abs(xu) >= 5] > 0):
        expo = decay_fit(u, (5.0, 20.0))
    return ELReport(r_u, r_w, expo, slope, float(theta), excluded, excluded / max(total, 1))


def el_coefficient(multiplier):
    """Coefficient in (-Delta)^{1/2} u = theta w g(u) from the ascent multiplier.

    The ascent pairs grad Phi = 2 w g(u) with multiplier * grad |(-Delta)^{1/4} u|^2
    = multiplier * 2 (-Delta)^{1/2} u, so the equation's coefficient is its inverse.
    """
    if multiplier == 0:
        raise InvalidArgument("zero multiplier")
    return 1.0 / multiplier


def _window_samples(u, window):
    lo, hi = window
    if not 0 < lo < hi:
        raise InvalidArgument("window must satisfy 0 < lo < hi")
    x = u.grid.nodes
    sel = (np.abs(x) >= lo) & (np.abs(x) <= hi)
    xs, ys = np.abs(x[sel]), u.values[sel]
    pos = ys > 0
    if not np.all(pos):
        if not np.any(pos):
            raise InvalidArgument("no positive samples in the decay window")
        # shrink to the contiguous part of the window nearest lo where u > 0
        cut = np.min(xs[~pos])
        warnings.warn(f"nonpositive samples in decay window; shrinking it to [{lo}, {cut})")
        keep = pos & (xs < cut)
        xs, ys = xs[keep], ys[keep]
    if xs.size < 2 or np.ptp(xs) == 0:
        raise InvalidArgument("decay window holds fewer than two distinct abscissae")
    return xs, ys


def decay_fit(u, window=(5.0, 20.0)):
    """Exponent p in u ~ |x|^{-p}: minus the least-squares slope of log u against log|x|."""
    xs, ys = _window_samples(u, window)
    slope = np.polyfit(np.log(xs), np.log(ys), 1)[0]
    if not slope < 0:
        raise InvalidArgument(f"no decay in window (fitted slope {slope:.3g} >= 0)")
    return float(-slope)


def is_superpolynomial(u, window=(5.0, 10.0), ratio=1.5):
    """True when the fitted exponent keeps growing as the window is doubled."""
    lo, hi = window
    p1 = decay_fit(u, window)
    p2 = decay_fit(u, (2 * lo, 2 * hi))
    return bool(p2 > ratio * p1)


def w_log_slope(w, window=(5.0, 20.0)):
    """Coefficient M in w(x) = -M log|x| + c, least squares over the window."""
    lo, hi = window
    x = w.grid.nodes
    sel = (np.abs(x) >= lo) & (np.abs(x) <= hi)
    if np.count_nonzero(sel) < 2:
        raise InvalidArgument("window holds fewer than two nodes")
    slope = np.polyfit(np.log(np.abs(x[sel])), w.values[sel], 1)[0]
    return float(-slope)
