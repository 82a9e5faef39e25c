"""Bilinear log-kernel energies, exact log convolutions and the radial reduction check.

Every functional here is a bilinear form vᵀ K w in the hat-function
coefficients of piecewise-linear v and w. The Galerkin matrices K are built
cell pair by cell pair. For a pair of cells the double integral collapses to
int k(t) C(t) dt, where C(t) (the overlap correlation of two linear shape
functions) is a cubic polynomial between the four corner differences. That
one-dimensional integral is done with a log-weighted Gauss rule on pieces
ending at t = 0 and plain Gauss elsewhere, so the log singularity and the
kink of log+ at |t| = 1 are both resolved exactly up to rounding.
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import asdict, dataclass
from typing import List

import numpy as np

from ._quad import gauss01, gauss_log01
from .errors import InvalidArgument, UnsupportedInput
from .function_space import Grid1D, SampledFunction, evaluate

SIGNS = ("full", "plus", "minus")
_CACHE: "OrderedDict[bytes, tuple]" = OrderedDict()
_CACHE_SIZE = 16


@dataclass(frozen=True)
class FunctionalReport:
    phi_plus: float
    phi_minus: float
    phi: float
    method: str
    est_error: float

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class IdentityDiscrepancy:
    direct_value: float
    formula_value: float
    abs_gap: float
    probe: str

    def to_dict(self):
        return asdict(self)


def reports_to_json(items):
    return json.dumps([it.to_dict() for it in items], indent=2)


# ---------------------------------------------------------------------------
# local cell-pair integrals


def _t_rule(lo, hi, minus, kinks=()):
    """Nodes and weights for int_lo^hi k(t) p(t) dt with p cubic between ``kinks``.

    Returns (t, w_full, w_minus): w_full integrates against log(1/|t|),
    w_minus against log+|t|.
    """
    cuts = {lo, hi}
    for z in (0.0, -1.0, 1.0, *kinks):
        if lo < z < hi:
            cuts.add(z)
    cuts = sorted(cuts)
    g8, w8 = gauss01(8)
    g4, w4 = gauss01(4)
    _, wl4 = gauss_log01(4)
    ts, wf, wm = [], [], []
    for p, q in zip(cuts[:-1], cuts[1:]):
        L = q - p
        if L <= 0:
            continue
        if p == 0.0 or q == 0.0:
            # log|t| = log L + log s along s = |t|/L measured from the zero end
            s = g4
            t = q * s if p == 0.0 else p * s
            ts.append(t)
            wf.append(-L * (w4 * math.log(L) + wl4))
            wm.append(np.zeros_like(s))
            continue
        # separated from 0: grade geometrically toward 0 if it is close
        near = min(abs(p), abs(q))
        edges = [p, q]
        if near < L:
            if p > 0:
                e, pts = p, [p]
                while e < q:
                    e = min(q, 2.0 * e) if 2.0 * e < q else q
                    pts.append(e)
                edges = pts
            else:
                e, pts = q, [q]
                while e > p:
                    e = 2.0 * e if 2.0 * e > p else p
                    pts.append(e)
                edges = pts[::-1]
        for a, b in zip(edges[:-1], edges[1:]):
            t = a + (b - a) * g8
            w = (b - a) * w8
            lg = np.log(np.abs(t))
            ts.append(t)
            wf.append(-w * lg)
            wm.append(w * np.maximum(lg, 0.0) if minus else np.zeros_like(t))
    return np.concatenate(ts), np.concatenate(wf), np.concatenate(wm)


def _overlap_corr(t, a, b, c, d):
    """C_ab(t) = int psi_alpha(x) psi_beta(x - t) dx over x in [a,b], x-t in [c,d].

    psi_0 falls from 1 to 0 across its cell, psi_1 rises. Returns (4, len(t))
    in the order 00, 01, 10, 11. The integrand is quadratic so 2-point Gauss
    on the overlap is exact.
    """
    lo = np.maximum(a, c + t)
    hi = np.minimum(b, d + t)
    ln = np.clip(hi - lo, 0.0, None)
    g, w = gauss01(2)
    x = lo[:, None] + ln[:, None] * g[None, :]
    y = x - t[:, None]
    hx, hy = b - a, d - c
    px = ((b - x) / hx, (x - a) / hx)
    py = ((d - y) / hy, (y - c) / hy)
    out = np.empty((4, t.size))
    for i, (al, be) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        out[i] = ln * ((px[al] * py[be]) @ w)
    return out


def _pair_local(a, b, c, d, minus=True):
    """(full, minus) 2x2 local matrices for cells [a,b] (x) and [c,d] (y)."""
    t, wf, wm = _t_rule(a - d, b - c, minus, (a - c, b - d))
    C = _overlap_corr(t, a, b, c, d)
    return (C @ wf).reshape(2, 2), (C @ wm).reshape(2, 2)


def _assemble(n, L00, L01, L10, L11):
    K = np.zeros((n, n))
    K[:-1, :-1] += L00
    K[:-1, 1:] += L01
    K[1:, :-1] += L10
    K[1:, 1:] += L11
    return 0.5 * (K + K.T)


def _uniform_matrices(x):
    h = x[1] - x[0]
    m = x.size - 1
    offs = np.arange(-(m - 1), m)
    full = np.empty((offs.size, 2, 2))
    mins = np.empty((offs.size, 2, 2))
    for i, o in enumerate(offs):
        c = o * h
        full[i], mins[i] = _pair_local(0.0, h, c, c + h)
    k, l = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    # x in cell k, y in cell l: t = x - y, offset of y relative to x is l - k
    idx = (l - k) + (m - 1)
    out = []
    for tab in (full, mins):
        L = tab[idx]
        out.append(_assemble(m + 1, L[..., 0, 0], L[..., 0, 1], L[..., 1, 0], L[..., 1, 1]))
    return tuple(out)


def _general_matrices(x):
    m = x.size - 1
    h = np.diff(x)
    a, b = x[:-1], x[1:]
    g8, w8 = gauss01(8)
    psi = np.stack([1.0 - g8, g8])           # (2, 8)
    pts = a[:, None] + h[:, None] * g8       # (m, 8)
    wts = h[:, None] * w8                    # (m, 8)
    Wp = wts[:, None, :] * psi[None, :, :]   # (m, 2, 8)
    Lf = np.zeros((m, m, 2, 2))
    Lm = np.zeros((m, m, 2, 2))
    near = np.zeros((m, m), dtype=bool)
    for k in range(m):
        gap = np.maximum(a - b[k], a[k] - b)
        tlo, thi = a[k] - b, b[k] - a
        nk = (gap < 0.5 * np.maximum(h[k], h)) | (np.abs(np.arange(m) - k) <= 1)
        straddle = ((tlo < 1) & (thi > 1)) | ((tlo < -1) & (thi > -1))
        nk |= straddle
        near[k] = nk
        far = np.nonzero(~nk)[0]
        if far.size:
            lg = np.log(np.abs(pts[k][None, :, None] - pts[far][:, None, :]))  # (f, 8, 8)
            Lf[k, far] = -np.einsum("ai,fij,fbj->fab", Wp[k], lg, Wp[far])
            pos = np.maximum(lg, 0.0)
            Lm[k, far] = np.einsum("ai,fij,fbj->fab", Wp[k], pos, Wp[far])
    for k, l in zip(*np.nonzero(near)):
        Lf[k, l], Lm[k, l] = _pair_local(a[k], b[k], a[l], b[l])
    out = []
    for L in (Lf, Lm):
        out.append(_assemble(m + 1, L[..., 0, 0], L[..., 0, 1], L[..., 1, 0], L[..., 1, 1]))
    return tuple(out)


def kernel_matrices(grid):
    """Galerkin matrices (K_full, K_plus, K_minus) for the hat basis on ``grid``.

    K_full integrates log(1/|x-y|), K_minus integrates log+|x-y| and
    K_plus = K_full + K_minus integrates log+(1/|x-y|).
    """
    x = grid.nodes
    key = x.tobytes()
    hit = _CACHE.get(key)
    if hit is not None:
        _CACHE.move_to_end(key)
        return hit
    full, minus = _uniform_matrices(x) if grid.is_uniform(1e-12) else _general_matrices(x)
    res = (full, full + minus, minus)
    for M in res:
        M.setflags(write=False)
    _CACHE[key] = res
    if len(_CACHE) > _CACHE_SIZE:
        _CACHE.popitem(last=False)
    return res


# ---------------------------------------------------------------------------
# bilinear forms and reports


def _common_grid(v, w):
    if v.grid.nodes.shape == w.grid.nodes.shape and np.array_equal(v.grid.nodes, w.grid.nodes):
        return v.grid, v.values, w.values
    nodes = np.union1d(v.grid.nodes, w.grid.nodes)
    # keep zero extensions exact: a function is zero outside its own hull
    g = Grid1D(nodes)
    return g, _extend(v, nodes), _extend(w, nodes)


def _extend(u, nodes):
    vals = np.interp(nodes, u.grid.nodes, u.values, left=0.0, right=0.0)
    a, b = u.grid.hull
    if (u.values[0] != 0 and nodes[0] < a) or (u.values[-1] != 0 and nodes[-1] > b):
        raise UnsupportedInput("functions with a jump at their hull need a common hull")
    return vals


def _check_nonneg(*us):
    for u in us:
        if np.any(u.values < 0):
            raise InvalidArgument("log-kernel energies need nonnegative inputs")


def log_kernel_bilinear_direct(v, w, sign="full"):
    """iint k(x-y) v(x) w(y) over the grid hulls, k = log(1/|t|), log+(1/|t|) or log+|t|."""
    if sign not in SIGNS:
        raise InvalidArgument(f"sign must be one of {SIGNS}")
    _check_nonneg(v, w)
    grid, cv, cw = _common_grid(v, w)
    K = kernel_matrices(grid)[SIGNS.index(sign)]
    return float(cv @ K @ cw)


def _bilinear_all(c, grid):
    Kf, Kp, Km = kernel_matrices(grid)
    plus = float(c @ Kp @ c)
    minus = float(c @ Km @ c)
    return plus, minus


def _g_values(u, G, grid):
    s = evaluate(u, grid.nodes)
    return np.asarray(G(s), dtype=float)


def _energy_report(u, G, refine, method="direct"):
    fine = u.grid.refined(refine)
    plus, minus = _bilinear_all(_g_values(u, G, fine), fine)
    coarse = u.grid.refined(max(1, refine // 2))
    p2, m2 = _bilinear_all(_g_values(u, G, coarse), coarse)
    est = abs((plus - minus) - (p2 - m2))
    return FunctionalReport(max(plus, 0.0), max(minus, 0.0), max(plus, 0.0) - max(minus, 0.0), method, est)


def phi_report(u, G, refine=4):
    """Phi(u) = iint_I log(1/|x-y|) G(u(x)) G(u(y)) over I = (-1, 1).

    The integration domain is the grid hull, which must lie inside [-1, 1];
    G(u) is sampled on a ``refine``-times finer grid. est_error compares with
    half the refinement.
    """
    a, b = u.grid.hull
    if a < -1.0 - 1e-12 or b > 1.0 + 1e-12:
        raise InvalidArgument("phi_report needs a grid inside [-1, 1]")
    return _energy_report(u, G, refine)


def psi_report(u, G, refine=4):
    """Psi(u) over the grid hull, standing in for R; needs G(0) = 0."""
    if G(0.0) != 0.0:
        raise InvalidArgument("psi_report needs G(0) = 0, otherwise Psi diverges on R")
    if not u.vanishes_at_hull(atol=0.0) and not np.allclose(u.values[[0, -1]], 0.0):
        raise UnsupportedInput("psi_report needs u to vanish at the hull ends")
    return _energy_report(u, G, refine)


def log_star_norm(v):
    """int log(1+|x|) v(x) dx, exact for piecewise-linear v."""
    _check_nonneg(v)
    x = v.grid.nodes
    c = v.values
    if x[0] < 0 < x[-1] and not np.any(x == 0):
        nodes = np.sort(np.append(x, 0.0))
        c = np.interp(nodes, x, c)
        x = nodes
    a, b = x[:-1], x[1:]
    ca, cb = c[:-1], c[1:]
    # on each cell |x| is linear; integrate log(1+|x|) against the hat pair
    g, w = gauss01(8)
    xs = a[:, None] + (b - a)[:, None] * g
    vals = ca[:, None] + (cb - ca)[:, None] * g
    return float(np.sum((b - a)[:, None] * w * np.log1p(np.abs(xs)) * vals))


# ---------------------------------------------------------------------------
# convolution with log|.|


def _T0(t):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = t * np.log(np.abs(t)) - t
    return np.where(t == 0, 0.0, r)


def _T1(t):
    with np.errstate(divide="ignore", invalid="ignore"):
        r = 0.5 * t * t * np.log(np.abs(t)) - 0.25 * t * t
    return np.where(t == 0, 0.0, r)


def _log_conv_cells(x0, a, b, ca, cb):
    """Per-cell int_a^b log|x0-y| v(y) dy for linear v (values ca, cb), exact."""
    s = (cb - ca) / (b - a)
    alpha = ca - s * a + s * x0   # v(y) = alpha + s * (y - x0)
    ta, tb = a - x0, b - x0
    return alpha * (_T0(tb) - _T0(ta)) + s * (_T1(tb) - _T1(ta))


def log_convolution(v, x):
    """(log|.| * v)(x) = int log|x-y| v(y) dy over the hull of v, exact."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    n = v.grid.nodes
    a, b, ca, cb = n[:-1], n[1:], v.values[:-1], v.values[1:]
    out = np.array([np.sum(_log_conv_cells(x0, a, b, ca, cb)) for x0 in xs])
    return out if np.ndim(x) else float(out[0])


def _split_at(v, pts):
    x = v.grid.nodes
    new = [p for p in pts if x[0] < p < x[-1] and not np.any(np.isclose(x, p, rtol=0, atol=1e-15))]
    if not new:
        return x, v.values
    nodes = np.sort(np.concatenate([x, new]))
    return nodes, np.interp(nodes, x, v.values)


def _require_even(v):
    x, c = v.grid.nodes, v.values
    if not np.allclose(x, -x[::-1], atol=1e-12) or not np.allclose(c, c[::-1], atol=1e-12 * (1 + np.abs(c).max())):
        raise InvalidArgument("input must be an even function on a symmetric grid")


def newton_radial_convolution(v, x):
    """log|x| int_{|y|<|x|} v + int_{|y|>=|x|} log|y| v(y) dy, the one-dimensional
    transplant of Newton's theorem. Returned as is; compare with log_convolution."""
    if x == 0:
        raise InvalidArgument("the radial formula is undefined at x = 0")
    _require_even(v)
    r = abs(float(x))
    nodes, c = _split_at(v, (-r, r))
    a, b, ca, cb = nodes[:-1], nodes[1:], c[:-1], c[1:]
    mid = 0.5 * (a + b)
    inner = np.abs(mid) < r
    mass_in = float(np.sum(0.5 * (ca + cb) * (b - a) * inner))
    outer = np.sum(_log_conv_cells(0.0, a[~inner], b[~inner], ca[~inner], cb[~inner]))
    return math.log(r) * mass_in + float(outer)


def radial_reduction_bilinear(v, w=None, n_gauss=8):
    """int_0^inf v(r) ( log(1/r) int_0^r w + int_r^inf log(1/rho) w(rho) drho ) dr.

    The even-function reduction of the log bilinear form; for v = w it equals
    2 int_0^inf v(r) log(1/r) int_0^r v dr. Reported as is.
    """
    if w is None:
        w = v
    _require_even(v)
    _require_even(w)
    _check_nonneg(v, w)
    hi = max(v.grid.nodes[-1], w.grid.nodes[-1])
    r_nodes = np.union1d(v.grid.nodes[v.grid.nodes >= 0], w.grid.nodes[w.grid.nodes >= 0])
    wv = np.interp(r_nodes, w.grid.nodes, w.values, right=0.0)
    a, b = r_nodes[:-1], r_nodes[1:]
    wa, wb = wv[:-1], wv[1:]
    cell_mass = 0.5 * (wa + wb) * (b - a)
    cum = np.concatenate([[0.0], np.cumsum(cell_mass)])
    # int_r^hi log(1/rho) w = -(int_0^hi - int_0^r) log(rho) w
    cell_log = _log_conv_cells(0.0, a, b, wa, wb)
    cum_log = np.concatenate([[0.0], np.cumsum(cell_log)])

    def inner(r, k):
        # r inside cell k
        s = (wb[k] - wa[k]) / (b[k] - a[k])
        part_mass = wa[k] * (r - a[k]) + 0.5 * s * (r - a[k]) ** 2
        part_log = _log_conv_cells(0.0, a[k], r, wa[k], wa[k] + s * (r - a[k]))
        W = cum[k] + part_mass
        tail = -(cum_log[-1] - cum_log[k] - part_log)
        return W, tail

    g, wq = gauss01(n_gauss)
    total = 0.0
    for k in range(a.size):
        lo, hi_k = a[k], b[k]
        edges = [lo, hi_k]
        if lo == 0.0:
            # geometric grading toward r = 0 where r log r lives
            edges = [0.0] + list(hi_k * 2.0 ** -np.arange(40, -1, -1))
        for p, q in zip(edges[:-1], edges[1:]):
            r = p + (q - p) * g
            W, tail = inner(r, k)
            vr = np.interp(r, v.grid.nodes, v.values, right=0.0)
            with np.errstate(divide="ignore"):
                f = vr * (-np.log(r) * W + tail)
            total += (q - p) * float(wq @ f)
    return total


def identity_discrepancy(v, probes):
    """Compare the true log convolution with the radial formula at each probe,
    plus one record comparing the direct bilinear form with the reduction."""
    _require_even(v)
    out: List[IdentityDiscrepancy] = []
    for x in probes:
        direct = log_convolution(v, x)
        formula = newton_radial_convolution(v, x)
        out.append(IdentityDiscrepancy(direct, formula, abs(direct - formula), f"convolution at x={x:g}"))
    direct = log_kernel_bilinear_direct(v, v, "full")
    formula = radial_reduction_bilinear(v, v)
    out.append(IdentityDiscrepancy(direct, formula, abs(direct - formula), "bilinear form v=w"))
    return out
