"""Moving-plane diagnostics: reflections about x = lambda, w_lambda, c_lambda and lambda_1."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import integrate

from ._quad import gauss01
from .errors import InvalidArgument, UnsupportedInput
from .fractional_calculus import gagliardo_seminorm_sq, half_laplacian_pointwise, stiffness_matrix
from .function_space import Grid1D, SampledFunction, evaluate, lp_norm
from .log_functionals import log_convolution


@dataclass
class ReflectionDiagnostics:
    lambda_grid: List[float]
    min_u_lambda: List[float]
    sigma_minus_measure: List[float]
    c_lambda: List[float]
    lambda1_estimate: float
    symmetry_score: float
    c_lambda_upper: List[float] = field(default_factory=list)
    mu_fit: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def _reflection_nodes(u, lam):
    """Nodes of Sigma_lambda = {x < lam} where both u and u(2 lam - .) are linear per cell."""
    x = u.grid.nodes
    left = x[x < lam]
    mirrored = 2.0 * lam - x[x > lam]
    nodes = np.union1d(np.union1d(left, mirrored), [lam])
    # merge nodes closer than rounding so cells stay nondegenerate
    keep = np.concatenate([[True], np.diff(nodes) > 1e-13 * max(1.0, np.abs(nodes).max())])
    nodes = nodes[keep]
    nodes[-1] = lam
    return nodes


def reflection_leaves_hull(u, lam):
    a, b = u.grid.hull
    return bool(2 * lam - b < a or 2 * lam - a > b)


def reflect_diff(u, lam):
    """u_lambda = u(2 lam - x) - u(x) on Sigma_lambda, exact for piecewise-linear u.

    The returned grid ends at x = lam (where u_lambda vanishes) and reaches
    left far enough to cover the reflection of the whole hull.
    """
    nodes = _reflection_nodes(u, lam)
    if nodes.size < 3:
        raise UnsupportedInput("Sigma_lambda holds fewer than 3 nodes")
    vals = evaluate(u, 2.0 * lam - nodes) - evaluate(u, nodes)
    vals[-1] = 0.0
    return SampledFunction(Grid1D(nodes), vals)


def _pieces(ul, tol=0.0):
    """Sub-cells of ul's grid where ul < -tol, with linear zero-crossing splitting."""
    x, v = ul.grid.nodes, ul.values + tol
    out = []
    for k in range(x.size - 1):
        a, b, va, vb = x[k], x[k + 1], v[k], v[k + 1]
        if va >= 0 and vb >= 0:
            continue
        if va < 0 and vb < 0:
            out.append((a, b))
        elif va < 0:
            out.append((a, a + (b - a) * va / (va - vb)))
        else:
            out.append((a + (b - a) * va / (va - vb), b))
    return out


def _default_tol(u):
    return 1e-12 * max(1.0, float(np.abs(u.values).max()))


def sigma_minus_measure(u, lam, tol=None):
    ul = reflect_diff(u, lam)
    tol = _default_tol(u) if tol is None else tol
    return float(sum(b - a for a, b in _pieces(ul, tol)))


def _g_callable(g):
    if hasattr(g, "derivative"):
        if not g.has_derivative:
            raise UnsupportedInput("growth model has no derivative")
        return g.derivative
    return g


def c_lambda(u, g, lam, variant="midpoint", tol=None, n_gauss=8):
    """(int_{Sigma_lambda^-} (lam - y) g(xi(y))^2 dy)^{1/2}.

    xi is (u + u^lambda)/2 for variant 'midpoint' and max(u, u^lambda) for
    'upper'. ``g`` is a GrowthModel (its derivative is used) or a callable.
    """
    if variant not in ("midpoint", "upper"):
        raise InvalidArgument("variant must be 'midpoint' or 'upper'")
    gfun = _g_callable(g)
    ul = reflect_diff(u, lam)
    tol = _default_tol(u) if tol is None else tol
    s, w = gauss01(n_gauss)
    total = 0.0
    for a, b in _pieces(ul, tol):
        y = a + (b - a) * s
        uy = evaluate(u, y)
        ur = evaluate(u, 2.0 * lam - y)
        xi = 0.5 * (uy + ur) if variant == "midpoint" else np.maximum(uy, ur)
        total += (b - a) * float(w @ ((lam - y) * np.asarray(gfun(xi)) ** 2))
    return math.sqrt(max(total, 0.0))


def w_lambda(u, G, lam, eval_nodes=None):
    """w(2 lam - x) - w(x) on Sigma_lambda for w = log(1/|.|) * G(u).

    Computed as int_{Sigma_lambda} log(|x - y^lam| / |x - y|) rho(y) dy with
    rho = G(u^lam) - G(u) = K_lambda u_lambda, which reduces to two exact log
    convolutions of the piecewise-linear rho.
    """
    if G(0.0) != 0.0:
        raise InvalidArgument("w_lambda needs G(0) = 0")
    ul = reflect_diff(u, lam)
    x = ul.grid.nodes
    rho = np.asarray(G(evaluate(u, 2.0 * lam - x))) - np.asarray(G(evaluate(u, x)))
    rho[-1] = 0.0
    r = SampledFunction(ul.grid, rho)
    xe = x if eval_nodes is None else np.asarray(eval_nodes, float)
    if np.any(xe > lam + 1e-12):
        raise InvalidArgument("w_lambda is evaluated on Sigma_lambda only")
    vals = np.asarray(log_convolution(r, 2.0 * lam - xe)) - np.asarray(log_convolution(r, xe))
    return SampledFunction(Grid1D(xe), vals) if eval_nodes is None or xe.size >= 3 else vals


def reflection_kernel(x, y, lam):
    """log(|x - y^lam| / |x - y|), positive for x != y in Sigma_lambda."""
    return np.log(np.abs(x - (2.0 * lam - y)) / np.abs(x - y))


def lambda1_estimate(u, lam_range, tol=None, xtol=1e-12):
    """sup{lam : min_{Sigma_mu} u_mu >= -tol for all mu <= lam} by bisection."""
    lo, hi = map(float, lam_range)
    if not lo < hi:
        raise InvalidArgument("lam_range must be increasing")
    if tol is None:
        tol = 1e-8 * float(np.abs(u.values).max())

    def ok(lam):
        return float(reflect_diff(u, lam).values.min()) >= -tol

    if not ok(lo):
        raise InvalidArgument(f"predicate fails already at lambda = {lo!r}; widen the range")
    if ok(hi):
        return hi
    while hi - lo > xtol * max(1.0, abs(lo) + abs(hi)):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def symmetry_score(u, center):
    """|u - u(2 center - .)|_2 / |u|_2, exact for piecewise-linear u."""
    x = u.grid.nodes
    nodes = np.union1d(x, 2.0 * center - x)
    diff = evaluate(u, nodes) - evaluate(u, 2.0 * center - nodes)
    d = SampledFunction(Grid1D(nodes), diff)
    n = lp_norm(u, 2)
    return lp_norm(d, 2) / n if n > 0 else 0.0


def _l2_neg(f):
    return lp_norm(f.with_values(np.minimum(f.values, 0.0)), 2)


def mu_ratio(u, G, lam, tol=None):
    """|w_lambda^-|_{L2(Sigma)} / (c_lambda |u_lambda^-|_{L2(Sigma)}), None if undefined."""
    c = c_lambda(u, G, lam, tol=tol)
    ul = reflect_diff(u, lam)
    un = _l2_neg(ul)
    if c == 0.0 or un == 0.0:
        return None
    wl = w_lambda(u, G, lam)
    return _l2_neg(wl) / (c * un)


def sweep(u, G, lambdas, lam_range=None):
    lambdas = [float(l) for l in lambdas]
    mins, meas, cs, ups, ratios = [], [], [], [], []
    for lam in lambdas:
        ul = reflect_diff(u, lam)
        mins.append(float(ul.values.min()))
        meas.append(sigma_minus_measure(u, lam))
        cs.append(c_lambda(u, G, lam))
        ups.append(c_lambda(u, G, lam, variant="upper"))
        r = mu_ratio(u, G, lam)
        if r is not None:
            ratios.append(r)
    if lam_range is None:
        lam_range = (min(lambdas), max(lambdas))
    lam1 = lambda1_estimate(u, lam_range)
    return ReflectionDiagnostics(lambdas, mins, meas, cs, lam1, symmetry_score(u, lam1), ups,
                                 max(ratios) if ratios else None)


# ---------------------------------------------------------------------------
# energy inequality and reflection identity


def _with_zero_crossings(u):
    x, v = u.grid.nodes, u.values
    new_x, new_v = [x[0]], [v[0]]
    for k in range(x.size - 1):
        if v[k] * v[k + 1] < 0:
            z = x[k] + (x[k + 1] - x[k]) * v[k] / (v[k] - v[k + 1])
            new_x.append(z)
            new_v.append(0.0)
        new_x.append(x[k + 1])
        new_v.append(v[k + 1])
    return SampledFunction(Grid1D(np.array(new_x)), np.array(new_v))


def negative_part_energy_bound(u):
    """(|u^-|_{H^1/2}^2, 2 C^{-1} int (-Delta)^{1/2} u u^- + int u u^-) with u^- = min(u, 0).

    2 C^{-1} int (-Delta)^{1/2} u v equals the Gagliardo bilinear form [u, v],
    which is evaluated with the stiffness matrix after zero crossings have
    been inserted as nodes (so u^- is exactly piecewise linear).
    """
    if np.all(u.values >= 0):
        return 0.0, 0.0
    uz = _with_zero_crossings(u)
    neg = uz.with_values(np.minimum(uz.values, 0.0))
    l2 = lp_norm(neg, 2) ** 2
    lhs = gagliardo_seminorm_sq(neg) + l2
    Q = stiffness_matrix(uz.grid)
    rhs = Q.bilinear(uz.values, neg.values) + l2
    return lhs, rhs


def reflection_identity(f, lam, half_width=12.0, points=None):
    """Both sides of int_R (L f + f) f^- = 2 int_{Sigma_lambda} (L f + f) f^-, L = (-Delta)^{1/2}.

    ``f`` is a smooth callable antisymmetric about lam; f^- is min(f, 0) on
    Sigma_lambda extended by antisymmetry, so f^-(2 lam - x) = -f^-(x).
    """
    def fneg(x):
        return min(f(x), 0.0) if x < lam else -min(f(2 * lam - x), 0.0)

    def integrand(x):
        return (half_laplacian_pointwise(f, x, eps0=0.02) + f(x)) * fneg(x)

    opts = dict(limit=200, epsabs=1e-9, epsrel=1e-8, points=points)
    left = integrate.quad(integrand, lam - half_width, lam, **opts)[0]
    right = integrate.quad(integrand, lam, lam + half_width,
                           **dict(opts, points=None if points is None else [2 * lam - p for p in points]))[0]
    return left + right, 2.0 * left
