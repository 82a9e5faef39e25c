"""H^{1/2} seminorms, the fractional stiffness form and pointwise half-Laplacians.

Two independent routes to the Gagliardo seminorm live here:

* :func:`gagliardo_seminorm_sq` integrates (u(x)-u(y))^2/(x-y)^2 cell pair by
  cell pair, with the near-diagonal pairs handled analytically and the
  exterior handled by the exact primitive of 1/(x-y)^2.
* :func:`stiffness_matrix` uses the identity
  [u]^2 = -2 iint u'(x) u'(y) log|x-y| dx dy (valid for compactly supported
  u), which turns the form into slopes against cell-pair integrals of log.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import gamma

from ._quad import gauss01, richardson
from .errors import GrowthOverflow, IllConditionedPoint, InvalidArgument, UnsupportedInput
from .function_space import Grid1D, SampledFunction, gauss_points


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    diagonal_refinement_levels: int = 40
    tail_cutoff: float = 0.0

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise InvalidArgument("tolerances must be positive")
        if self.diagonal_refinement_levels < 0:
            raise InvalidArgument("diagonal_refinement_levels must be >= 0")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class StiffnessForm:
    """[u]^2 = c^T Q c for nodal coefficients c that vanish at both hull ends."""

    grid: Grid1D
    entries: np.ndarray

    def energy(self, c):
        c = np.asarray(c, dtype=float)
        return float(c @ self.entries @ c)

    def bilinear(self, c, d):
        return float(np.asarray(c) @ self.entries @ np.asarray(d))

    def interior(self):
        return self.entries[1:-1, 1:-1]


def normalization_constant(s, N=1):
    """C_{N,s} = 4^s s Gamma(N/2+s) / (pi^{N/2} Gamma(1-s))."""
    if not 0.0 < s < 1.0:
        raise InvalidArgument("s must lie in (0, 1)")
    if N < 1:
        raise InvalidArgument("N must be a positive integer")
    return 4.0 ** s * s * gamma(N / 2.0 + s) / (math.pi ** (N / 2.0) * gamma(1.0 - s))


def normalization_constant_numeric(s):
    """(int_R (1 - cos z)/|z|^{1+2s} dz)^{-1} for N = 1, by adaptive quadrature."""
    if not 0.0 < s < 1.0:
        raise InvalidArgument("s must lie in (0, 1)")
    a = 1.0
    # (1 - cos z)/z^2 is smooth; the singular power z^(1-2s) goes into the weight
    smooth = lambda z: 0.5 if z == 0.0 else 2.0 * (math.sin(0.5 * z) / z) ** 2
    head, _ = integrate.quad(smooth, 0.0, a, weight="alg", wvar=(1.0 - 2.0 * s, 0.0),
                             epsabs=1e-15, epsrel=1e-13)
    # tail: int_a^inf z^{-1-2s} dz minus the oscillatory cosine part (QAWF)
    power_tail = a ** (-2 * s) / (2 * s)
    with warnings.catch_warnings():
        # QAWF flags slow cycle convergence for small s; the result is still accurate
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        cos_tail, _ = integrate.quad(lambda z: z ** (-1 - 2 * s), a, np.inf, weight="cos",
                                     wvar=1.0, epsabs=1e-14, limlst=100)
    return 1.0 / (2.0 * (head + power_tail - cos_tail))


# ---------------------------------------------------------------------------
# Gagliardo seminorm by cell-pair quadrature


def _require_compact(u):
    if not u.vanishes_at_hull(atol=1e-14 * max(1.0, np.abs(u.values).max())):
        raise UnsupportedInput(
            "function does not vanish at the hull ends: its zero extension jumps and "
            "the H^1/2 seminorm is infinite")


def _pair_gauss(xa, xb, ya, yb, lx, ly, n=8):
    """iint ((lx(x) - ly(y)) / (x - y))^2 over [xa,xb] x [ya,yb] by tensor Gauss."""
    s, w = gauss01(n)
    x = xa + (xb - xa) * s
    y = ya + (yb - ya) * s
    q = (lx(x)[:, None] - ly(y)[None, :]) / (x[:, None] - y[None, :])
    return (xb - xa) * (yb - ya) * float(w @ (q * q) @ w)


def _pair_adaptive(xa, xb, ya, yb, lx, ly, depth):
    """Separated rectangles; split the longer side until its length <= 2 * gap."""
    gap = max(ya - xb, xa - yb)
    lx_len, ly_len = xb - xa, yb - ya
    if depth <= 0 or max(lx_len, ly_len) <= 2.0 * gap:
        return _pair_gauss(xa, xb, ya, yb, lx, ly)
    if lx_len >= ly_len:
        # split toward the gap so the sub-rectangle next to it shrinks geometrically
        m = 0.5 * (xa + xb)
        return (_pair_adaptive(xa, m, ya, yb, lx, ly, depth - 1)
                + _pair_adaptive(m, xb, ya, yb, lx, ly, depth - 1))
    m = 0.5 * (ya + yb)
    return (_pair_adaptive(xa, xb, ya, m, lx, ly, depth - 1)
            + _pair_adaptive(xa, xb, m, yb, lx, ly, depth - 1))


def _adjacent_pair(h1, h2, s1, s2):
    """iint over [p-h1,p] x [p,p+h2] of ((s1 a + s2 b)/(a + b))^2 with a = p-x, b = y-p.

    The integrand is homogeneous of degree 0; splitting the rectangle along its
    diagonal (Duffy) leaves two one-dimensional rational integrals with closed
    forms.
    """
    d = s1 - s2
    # triangle with a = h1*rho, b = h2*rho*eta
    t1 = s2 ** 2 + 2 * s2 * d * (h1 / h2) * math.log1p(h2 / h1) + d ** 2 * h1 / (h1 + h2)
    # triangle with b = h2*rho, a = h1*rho*eta (roles of the two slopes swap)
    t2 = s1 ** 2 - 2 * s1 * d * (h2 / h1) * math.log1p(h1 / h2) + d ** 2 * h2 / (h1 + h2)
    return 0.5 * h1 * h2 * (t1 + t2)


def gagliardo_seminorm_sq(u, q=DEFAULT_QUADRATURE):
    """iint_{R^2} (u(x)-u(y))^2/(x-y)^2 dx dy for the zero extension of u."""
    _require_compact(u)
    x = u.grid.nodes
    if q.tail_cutoff and q.tail_cutoff < max(abs(x[0]), abs(x[-1])):
        raise InvalidArgument("tail_cutoff must cover the grid hull")
    h = u.grid.widths
    s = u.slopes()
    c = u.values
    m = h.size
    total = float(np.sum(s * s * h * h))  # diagonal cells: quotient is the slope
    for k in range(m - 1):
        total += 2.0 * _adjacent_pair(h[k], h[k + 1], s[k], s[k + 1])

    def linear(k):
        return lambda t, k=k: c[k] + s[k] * (t - x[k])

    # separated pairs: vectorised Gauss where safe, adaptive splitting otherwise
    xs, ws = gauss_points(u.grid, 8)
    vals = c[:-1, None] + s[:, None] * (xs - x[:-1, None])
    far_sum = 0.0
    for k in range(m - 2):
        ls = np.arange(k + 2, m)
        gap = x[ls] - x[k + 1]
        size = np.maximum(h[k], h[ls])
        ok = size <= 2.0 * gap
        if np.any(ok):
            l_ok = ls[ok]
            dq = (vals[k][None, :, None] - vals[l_ok][:, None, :]) / (xs[k][None, :, None] - xs[l_ok][:, None, :])
            far_sum += float(np.einsum("i,lij,lj->", ws[k], dq * dq, ws[l_ok]))
        for l in ls[~ok]:
            far_sum += _pair_adaptive(x[k], x[k + 1], x[l], x[l + 1], linear(k), linear(l),
                                      q.diagonal_refinement_levels)
    total += 2.0 * far_sum
    # exterior: u(x)^2 int_{|y| outside hull} dy/(x-y)^2, both orderings
    a, b = x[0], x[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = vals * vals * (1.0 / (b - xs) + 1.0 / (xs - a))
    total += 2.0 * float(np.sum(ws * np.nan_to_num(tail)))
    return total


def quarter_laplacian_norm_sq(u, q=DEFAULT_QUADRATURE):
    """|(-Delta)^{1/4} u|_2^2 = C_{1,1/2} [u]^2 / 2 = [u]^2 / (2 pi)."""
    return gagliardo_seminorm_sq(u, q) / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# Stiffness form


def _log_primitive2(t):
    """Second antiderivative of log|t|: t^2 log|t| / 2 - 3 t^2 / 4."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 0.5 * t * t * np.log(np.abs(t)) - 0.75 * t * t
    return np.where(t == 0.0, 0.0, out)


def log_rectangle(a, b, c, d):
    """Exact iint_{[a,b]x[c,d]} log|x-y| dy dx."""
    F = _log_primitive2
    return F(b - c) - F(a - c) - F(b - d) + F(a - d)


def stiffness_matrix(grid, far_ratio=1.0):
    """Q with c^T Q c = [u]^2 for piecewise-linear u vanishing at the hull ends.

    Cell pairs closer than ``far_ratio`` cell widths use the exact log
    primitive; separated pairs use 6x6 tensor Gauss on the smooth log.
    """
    x = grid.nodes
    h = grid.widths
    m = h.size
    L = np.empty((m, m))
    k, l = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    gap = np.maximum(x[l] - x[k + 1], x[k] - x[l + 1])
    near = gap < far_ratio * np.maximum(h[k], h[l])
    L[near] = log_rectangle(x[k[near]], x[k[near] + 1], x[l[near]], x[l[near] + 1])
    s, w = gauss01(6)
    pts = x[:-1, None] + h[:, None] * s[None, :]
    wts = h[:, None] * w[None, :]
    for i in range(m):
        far = ~near[i]
        if not np.any(far):
            continue
        js = np.nonzero(far)[0]
        lg = np.log(np.abs(pts[i][None, :, None] - pts[js][:, None, :]))
        L[i, js] = np.einsum("a,jab,jb->j", wts[i], lg, wts[js])
    L = 0.5 * (L + L.T)
    D = np.zeros((m, m + 1))
    D[np.arange(m), np.arange(m)] = -1.0 / h
    D[np.arange(m), np.arange(m) + 1] = 1.0 / h
    Q = -2.0 * D.T @ L @ D
    return StiffnessForm(grid, 0.5 * (Q + Q.T))


def mass_matrix(grid):
    """Piecewise-linear L^2 Gram matrix."""
    h = grid.widths
    n = grid.size
    M = np.zeros((n, n))
    i = np.arange(n - 1)
    M[i, i] += h / 3.0
    M[i + 1, i + 1] += h / 3.0
    M[i, i + 1] += h / 6.0
    M[i + 1, i] += h / 6.0
    return M


# ---------------------------------------------------------------------------
# Pointwise half-Laplacian


def _rational_step(x):
    return x * x / (1.0 + x * x) + 1.0


def _lorentzian(x):
    return 1.0 / (1.0 + x * x)


CLOSED_FORMS = {
    "rational_step": _rational_step,      # x^2/(1+x^2) + 1
    "lorentzian": _lorentzian,         # 1/(1+x^2)
    "constant": lambda x: np.ones_like(np.asarray(x, dtype=float)),
}

CLOSED_FORM_HALF_LAPLACIANS = {
    "rational_step": lambda x: (x * x - 1.0) / (1.0 + x * x) ** 2,
    "lorentzian": lambda x: (1.0 - x * x) / (1.0 + x * x) ** 2,
    "constant": lambda x: 0.0 * x,
}


def _pv_callable(f, x, eps0, levels=4, tol=1e-12):
    """(1/pi) P.V. int (f(x)-f(y))/(x-y)^2 dy for a smooth f defined on all of R."""
    fx = float(f(x))

    def sym(t):
        return (2.0 * fx - f(x + t) - f(x - t)) / (t * t)

    vals = []
    for k in range(levels):
        eps = eps0 * 0.5 ** k
        outer, _ = integrate.quad(sym, eps, 1.0 + eps, epsabs=tol, epsrel=tol, limit=200)
        far, _ = integrate.quad(sym, 1.0 + eps, np.inf, epsabs=tol, epsrel=tol, limit=200)
        f2 = (f(x + eps) - 2.0 * fx + f(x - eps)) / (eps * eps)
        # excised part: int_0^eps sym(t) dt = -f''(x) eps + O(eps^3)
        vals.append(outer + far - f2 * eps)
    return richardson(vals, 2.0, (2, 3, 4)) / math.pi


def _kink_check(u, i):
    s = u.slopes()
    jump = abs(s[i] - s[i - 1])
    neighbours = abs(s[i - 1] - s[i - 2]) + abs(s[i + 1] - s[i])
    scale = np.abs(s).max() + 1e-300
    if jump > 1e-8 * scale and jump > 8.0 * neighbours:
        raise IllConditionedPoint(f"sampled function has a kink at node {u.grid.nodes[i]!r}")


def _pv_sampled(u, x, levels=4, exterior=None):
    """P.V. integral for a sampled function through its cubic-spline interpolant.

    The spline is C^2, so the excised neighbourhood contributes
    -f''(x) eps - [f'''] eps^2/12 exactly; Richardson removes the second term.
    Outside the hull the function is zero unless ``exterior`` supplies
    (left_tail, right_tail) callables.
    """
    nodes = u.grid.nodes
    i = int(np.searchsorted(nodes, x))
    if i >= nodes.size or not np.isclose(nodes[i], x, rtol=0, atol=1e-12 * (1 + abs(x))):
        raise InvalidArgument("sampled half-Laplacian is evaluated at grid nodes")
    if i < 2 or i > nodes.size - 3:
        raise IllConditionedPoint("node is within two cells of the hull boundary")
    _kink_check(u, i)
    spline = CubicSpline(nodes, u.values, bc_type="not-a-knot")
    fx = float(u.values[i])
    a, b = nodes[0], nodes[-1]
    h = min(nodes[i] - nodes[i - 1], nodes[i + 1] - nodes[i])
    gs, gw = gauss01(8)

    def piece_integral(lo, hi, sign):
        # int_lo^hi (fx - f(x + sign t)) / t^2 dt, geometric splitting near t = 0
        total = 0.0
        edges = [lo]
        while edges[-1] < hi:
            edges.append(min(hi, max(2.0 * edges[-1], edges[-1] + (hi - lo) / 8)))
        for p, q_ in zip(edges[:-1], edges[1:]):
            t = p + (q_ - p) * gs
            total += (q_ - p) * float(gw @ ((fx - spline(x + sign * t)) / (t * t)))
        return total

    # far part inside the hull, cell by cell on the spline
    xs, ws = gauss_points(u.grid, 8)
    outside = (nodes[1:] <= x - 2 * h) | (nodes[:-1] >= x + 2 * h)
    xo, wo = xs[outside], ws[outside]
    far_cells = float(np.sum(wo * (fx - spline(xo)) / (x - xo) ** 2))
    # the cells within 2h of x but not covered by the near window
    partial = 0.0
    for k in range(nodes.size - 1):
        lo_k, hi_k = nodes[k], nodes[k + 1]
        if hi_k <= x - 2 * h or lo_k >= x + 2 * h:
            continue
        for lo, hi in ((lo_k, min(hi_k, x - 2 * h)), (max(lo_k, x + 2 * h), hi_k)):
            if hi > lo:
                yq = lo + (hi - lo) * gs
                partial += (hi - lo) * float(gw @ ((fx - spline(yq)) / (x - yq) ** 2))
    # exterior of the hull
    if exterior is None:
        ext = fx * (1.0 / (b - x) + 1.0 / (x - a))
    else:
        left, right = exterior
        ext = integrate.quad(lambda y: (fx - left(y)) / (x - y) ** 2, -np.inf, a, limit=200)[0]
        ext += integrate.quad(lambda y: (fx - right(y)) / (x - y) ** 2, b, np.inf, limit=200)[0]
    f2 = float(spline(x, 2))
    vals = []
    for k in range(levels):
        eps = h * 0.5 ** k
        near = piece_integral(eps, 2 * h, 1.0) + piece_integral(eps, 2 * h, -1.0)
        vals.append(near - f2 * eps)
    return (richardson(vals, 2.0, (2, 3, 4)) + far_cells + partial + ext) / math.pi


def half_laplacian_pointwise(f, x, q=DEFAULT_QUADRATURE, eps0=None, exterior=None):
    """(-Delta)^{1/2} f(x) = C_{1,1/2} P.V. int (f(x)-f(y))/(x-y)^2 dy.

    ``f`` is a closed-form tag (see ``CLOSED_FORMS``), a vectorised callable on
    R, or a :class:`SampledFunction` evaluated at one of its nodes.
    """
    if isinstance(f, SampledFunction):
        return _pv_sampled(f, float(x), exterior=exterior)
    if isinstance(f, str):
        try:
            f = CLOSED_FORMS[f]
        except KeyError:
            raise InvalidArgument(f"unknown closed form {f!r}") from None
    if eps0 is None:
        eps0 = 0.05
    return _pv_callable(f, float(x), eps0, tol=min(q.abs_tol, 1e-10))


def fourier_pair_check(xi):
    """Return (int e^{-2 pi i x xi}/(1+x^2) dx, pi e^{-2 pi |xi|})."""
    rhs = math.pi * math.exp(-2.0 * math.pi * abs(xi))
    if xi == 0:
        lhs = 2.0 * integrate.quad(lambda x: 1.0 / (1.0 + x * x), 0.0, np.inf, epsabs=1e-13)[0]
    else:
        # the sine part vanishes by evenness; QAWF handles the oscillatory tail
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            lhs = 2.0 * integrate.quad(lambda x: 1.0 / (1.0 + x * x), 0.0, np.inf, weight="cos",
                                       wvar=2.0 * math.pi * abs(xi), epsabs=1e-13, limlst=200)[0]
    return lhs, rhs


def tm_integral(u, alpha, n_gauss=8):
    """int_I (e^{alpha u^2} - 1) dx over the grid hull.

    Raises GrowthOverflow naming the first cell where e^{alpha u^2} leaves
    double range instead of saturating.
    """
    if alpha <= 0:
        raise InvalidArgument("alpha must be positive")
    xs, ws = gauss_points(u.grid, n_gauss)
    v = np.interp(xs, u.grid.nodes, u.values)
    expo = alpha * v * v
    bad = np.nonzero(np.any(expo > 709.0, axis=1))[0]
    if bad.size:
        k = int(bad[0])
        raise GrowthOverflow(f"e^(alpha u^2) overflows on cell {k} "
                             f"[{u.grid.nodes[k]!r}, {u.grid.nodes[k + 1]!r}]", cell=k)
    return float(np.sum(ws * np.expm1(expo)))


def write_stiffness_csv(form, path):
    """Dense row-major export; the header line holds the matrix order."""
    Q = form.entries
    with open(path, "w") as fh:
        fh.write(f"{Q.shape[0]}\n")
        np.savetxt(fh, Q, delimiter=",", fmt="%.17g")


def read_stiffness_csv(path):
    with open(path) as fh:
        n = int(fh.readline())
        Q = np.loadtxt(fh, delimiter=",", ndmin=2)
    if Q.shape != (n, n):
        raise InvalidArgument(f"expected a {n}x{n} matrix, got {Q.shape}")
    return Q
