"""Grids, piecewise-linear sampled functions, norms and rearrangement."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ._quad import gauss01
from .errors import CSVFormatError, InvalidArgument


@dataclass(frozen=True)
class Grid1D:
    nodes: np.ndarray
    symmetric: bool = field(default=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise InvalidArgument("a grid needs at least 3 nodes")
        if not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0):
            raise InvalidArgument("grid nodes must be finite and strictly increasing")
        if self.symmetric and not np.allclose(nodes, -nodes[::-1], rtol=0, atol=1e-12 * np.abs(nodes).max()):
            raise InvalidArgument("grid flagged symmetric but nodes are not closed under negation")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def size(self):
        return self.nodes.size

    @property
    def widths(self):
        return np.diff(self.nodes)

    @property
    def hull(self):
        return float(self.nodes[0]), float(self.nodes[-1])

    def is_uniform(self, rtol=1e-10):
        h = self.widths
        return bool(np.all(np.abs(h - h[0]) <= rtol * h[0]))

    def refined(self, factor):
        """Split every cell into ``factor`` equal sub-cells."""
        if factor == 1:
            return self
        s = np.arange(factor) / factor
        x = self.nodes
        inner = (x[:-1, None] + np.diff(x)[:, None] * s[None, :]).ravel()
        nodes = np.append(inner, x[-1])
        if self.symmetric:
            nodes = 0.5 * (nodes - nodes[::-1])
        return Grid1D(nodes, self.symmetric)


def symmetric_grid(half_nodes):
    """Mirror nonnegative abscissae (which must start at 0) into a symmetric grid."""
    r = np.asarray(half_nodes, dtype=float)
    if r[0] != 0.0:
        raise InvalidArgument("half grid must start at 0")
    return Grid1D(np.concatenate([-r[:0:-1], r]), symmetric=True)


def make_interval_grid(n_nodes, half_width, refine_near_zero=False, grading=2.0):
    """Symmetric grid on [-half_width, half_width].

    With ``refine_near_zero`` the half grid is ``half_width * (k/m)**grading``,
    so cells shrink geometrically toward the origin.
    """
    if half_width <= 0:
        raise InvalidArgument("half_width must be positive")
    if n_nodes < 3 or n_nodes % 2 == 0:
        raise InvalidArgument("a symmetric grid needs an odd number of nodes >= 3")
    m = (n_nodes - 1) // 2
    s = np.arange(m + 1) / m
    r = half_width * (s ** grading if refine_near_zero else s)
    return symmetric_grid(r)


@dataclass(frozen=True)
class SampledFunction:
    """Piecewise-linear function on ``grid``, extended by zero outside the hull."""

    grid: Grid1D
    values: np.ndarray
    support_hint: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        if values.shape != self.grid.nodes.shape:
            raise InvalidArgument("values must have one entry per grid node")
        if not np.all(np.isfinite(values)):
            raise InvalidArgument("values must be finite")
        if self.support_hint is not None:
            a, b = self.support_hint
            x = self.grid.nodes
            outside = (x < a) | (x > b)
            if np.any(values[outside] != 0.0):
                raise InvalidArgument("values must vanish outside support_hint")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def nodes(self):
        return self.grid.nodes

    def __call__(self, x):
        return evaluate(self, x)

    def with_values(self, values):
        return SampledFunction(self.grid, values, self.support_hint)

    def resample(self, grid):
        return SampledFunction(grid, evaluate(self, grid.nodes))

    def slopes(self):
        return np.diff(self.values) / self.grid.widths

    def vanishes_at_hull(self, atol=0.0):
        return abs(self.values[0]) <= atol and abs(self.values[-1]) <= atol


def from_callable(f, grid):
    return SampledFunction(grid, np.asarray(f(grid.nodes), dtype=float))


def evaluate(u, x):
    """Linear interpolation between nodes, exactly 0 outside the hull."""
    x = np.asarray(x, dtype=float)
    out = np.interp(x, u.grid.nodes, u.values, left=0.0, right=0.0)
    return out if out.ndim else float(out)


def _abs_power_cell(a, b, p):
    """int_0^1 |a + (b - a) s|**p ds for same-sign endpoint values (a, b >= 0)."""
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    out = np.empty_like(hi)
    zero = lo <= 0.0
    out[zero] = hi[zero] ** p / (p + 1.0)
    nz = ~zero
    r = (hi[nz] - lo[nz]) / lo[nz]
    # (hi**(p+1) - lo**(p+1)) / ((p+1)(hi-lo)), written to survive hi ~ lo
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.expm1((p + 1.0) * np.log1p(r)) / ((p + 1.0) * r)
    q = np.where(r > 0, q, 1.0)
    out[nz] = lo[nz] ** p * q
    return out


def lp_norm(u, p):
    """(int |u|^p)^(1/p), integrated exactly cell by cell."""
    if p < 1:
        raise InvalidArgument("p must be >= 1")
    a, b = u.values[:-1], u.values[1:]
    h = u.grid.widths
    same = a * b >= 0
    total = np.sum(h[same] * _abs_power_cell(np.abs(a[same]), np.abs(b[same]), p))
    # sign change: split at the zero crossing
    a2, b2, h2 = np.abs(a[~same]), np.abs(b[~same]), h[~same]
    if a2.size:
        ha = h2 * a2 / (a2 + b2)
        hb = h2 - ha
        z = np.zeros_like(a2)
        total += np.sum(ha * _abs_power_cell(a2, z, p) + hb * _abs_power_cell(z, b2, p))
    return float(total ** (1.0 / p))


def integrate(u):
    """Trapezoid rule, exact for piecewise-linear functions."""
    return float(np.sum(0.5 * (u.values[:-1] + u.values[1:]) * u.grid.widths))


def superlevel_measure(u, t):
    """|{x : u(x) > t}| for each level in ``t`` (u piecewise linear, zero outside)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a, b = u.values[:-1], u.values[1:]
    h = u.grid.widths
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    span = hi - lo
    flat = span == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.clip((hi[None, :] - t[:, None]) / span[None, :], 0.0, 1.0)
    frac = np.where(flat[None, :], (lo[None, :] > t[:, None]).astype(float), frac)
    return frac @ h


def schwarz_rearrange(u, grid=None):
    """Symmetric decreasing rearrangement of a nonnegative piecewise-linear u.

    The distribution function of a piecewise-linear function is piecewise
    linear in the level between consecutive nodal values, so the rearrangement
    is again piecewise linear with radial nodes at half the measures of the
    superlevel sets of the nodal values. The result is therefore exactly
    equimeasurable with ``u``. If ``grid`` is given the result is resampled
    onto it, which gives up exact equimeasurability.
    """
    if np.any(u.values < 0):
        raise InvalidArgument("rearrangement needs a nonnegative function")
    levels = np.unique(u.values)[::-1]
    strict = superlevel_measure(u, levels)
    # |{u >= t}| is the left limit of the strict measure; plateaus make them differ
    eps = np.spacing(np.maximum(np.abs(levels), 1.0)) * 4
    weak = superlevel_measure(u, levels - eps)
    r = np.concatenate([strict, weak]) / 2.0
    vals = np.concatenate([levels, levels])
    order = np.lexsort((-vals, r))
    r, vals = r[order], vals[order]
    scale = max(r[-1], 1e-300)
    keep = np.concatenate([[True], np.diff(r) > 1e-13 * scale])
    r, vals = r[keep], vals[keep]
    if r[0] > 0:  # plateau at the maximum: extend the flat top to the origin
        r = np.concatenate([[0.0], r])
        vals = np.concatenate([[vals[0]], vals])
    else:
        r[0] = 0.0
    # a zero-width support (u identically zero) still needs a nondegenerate grid
    if r.size < 2:
        return SampledFunction(grid or u.grid, np.zeros((grid or u.grid).size))
    out = SampledFunction(symmetric_grid(r), np.concatenate([vals[:0:-1], vals]))
    if grid is not None:
        return out.resample(grid)
    return out


def write_csv(u, path):
    with open(path, "w", newline="") as fh:
        fh.write("x,value\n")
        for x, v in zip(u.grid.nodes, u.values):
            fh.write(f"{x:.17g},{v:.17g}\n")


def read_csv(path):
    """Read the two-column ``x,value`` format; errors name the offending line."""
    xs, vs = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "value"]:
            raise CSVFormatError("expected header 'x,value'", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise CSVFormatError(f"expected 2 columns, got {len(row)}", lineno)
            try:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
            except ValueError:
                raise CSVFormatError(f"non-numeric entry {row!r}", lineno) from None
            if len(xs) > 1 and xs[-1] <= xs[-2]:
                raise CSVFormatError("abscissae must be strictly increasing", lineno)
    nodes = np.array(xs)
    if nodes.size < 3:
        raise CSVFormatError("need at least 3 rows", len(xs) + 1)
    sym = bool(np.array_equal(nodes, -nodes[::-1]))
    return SampledFunction(Grid1D(nodes, sym), np.array(vs))


def gauss_points(grid, n=8):
    """Per-cell Gauss nodes (cells x n) and weights including cell widths."""
    s, w = gauss01(n)
    h = grid.widths
    x = grid.nodes[:-1, None] + h[:, None] * s[None, :]
    return x, h[:, None] * w[None, :]
