"""Nonlinearities G with growth up to e^{pi s^2} and critical-growth classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import GrowthOverflow, InvalidArgument

KINDS = ("power", "critical_family", "piecewise_critical", "custom_table", "scaled")


def c_gamma(gamma):
    """Minimiser on [0, inf) of e^{pi s^2} / (1+s)^gamma."""
    if not gamma > 0:
        raise InvalidArgument("gamma must be positive")
    return 0.5 * (math.sqrt(1.0 + 2.0 * gamma / math.pi) - 1.0)


@dataclass(frozen=True)
class GrowthModel:
    kind: str
    p: float = 2.0
    gamma: float = 0.0
    c: float = 1.0
    table: Optional[Tuple[np.ndarray, np.ndarray]] = None
    base: Optional["GrowthModel"] = None
    s_max: float = 25.0
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown growth kind {self.kind!r}")
        if self.kind == "power" and not self.p > 0:
            raise InvalidArgument("power exponent must be positive")
        if self.kind in ("critical_family", "piecewise_critical") and self.gamma < 0:
            raise InvalidArgument("gamma must be nonnegative")
        if self.kind == "piecewise_critical" and self.gamma <= 0:
            raise InvalidArgument("piecewise_critical needs gamma > 0")
        if self.kind in ("critical_family", "scaled") and not self.c > 0:
            raise InvalidArgument("multiplier c must be positive")
        if self.kind == "custom_table":
            s, g = self.table
            s = np.asarray(s, float)
            g = np.asarray(g, float)
            if s.ndim != 1 or s.size < 2 or s[0] != 0.0 or np.any(np.diff(s) <= 0):
                raise InvalidArgument("table abscissae must start at 0 and increase")
            if np.any(g < 0):
                raise InvalidArgument("table values must be nonnegative")
            object.__setattr__(self, "table", (s, g))
            object.__setattr__(self, "_interp", PchipInterpolator(s, g, extrapolate=False))
        if self.kind == "scaled" and self.base is None:
            raise InvalidArgument("scaled model needs a base")

    # -- properties ---------------------------------------------------------
    @property
    def has_derivative(self):
        if self.kind == "scaled":
            return self.base.has_derivative
        return self.kind != "custom_table"

    @property
    def claims_assumption_a(self):
        """Even, continuous, strictly increasing on [0, inf)."""
        if self.kind == "critical_family":
            # decreasing on (0, c_gamma) whenever gamma > 0
            return self.gamma == 0
        if self.kind == "scaled":
            return self.base.claims_assumption_a
        return self.kind != "custom_table" or bool(np.all(np.diff(self.table[1]) > 0))

    @property
    def value_at_zero(self):
        return float(self(0.0))

    def describe(self):
        if self.label:
            return self.label
        if self.kind == "power":
            return f"power:{self.p:g}"
        if self.kind == "critical_family":
            return f"critical:gamma={self.gamma:g},c={self.c:g}"
        if self.kind == "piecewise_critical":
            return f"piecewise:gamma={self.gamma:g}"
        if self.kind == "scaled":
            return f"{self.c:g}*{self.base.describe()}"
        return "table"

    # -- evaluation ---------------------------------------------------------
    def _check(self, a):
        if np.any(~np.isfinite(a)):
            raise InvalidArgument("s must be finite")
        if np.any(a > self.s_max):
            bad = float(a.flat[int(np.argmax(a))])
            raise GrowthOverflow(f"|s| = {bad!r} exceeds s_max = {self.s_max!r}", s=bad)

    def log_value(self, s):
        """log G(|s|), finite for large s where G itself overflows (analytic kinds)."""
        a = np.abs(np.asarray(s, dtype=float))
        with np.errstate(divide="ignore"):
            if self.kind == "power":
                return self.p * np.log(a)
            if self.kind == "critical_family":
                return math.log(self.c) + math.pi * a * a - self.gamma * np.log1p(a)
            if self.kind == "scaled":
                return math.log(self.c) + self.base.log_value(a)
            if self.kind == "piecewise_critical":
                cg = c_gamma(self.gamma)
                const = math.exp(math.pi * cg * cg) * (1.0 - (1.0 + cg) ** -self.gamma) - 1.0
                crit = math.pi * a * a - self.gamma * np.log1p(a)
                low = np.log(np.expm1(math.pi * np.minimum(a, cg) ** 2))
                # log(e^crit + const); const may be negative but e^crit + const > 0 here
                high = crit + np.log1p(const * np.exp(-crit))
                return np.where(a <= cg, low, high)
            return np.log(self._table_eval(a))

    def _table_eval(self, a):
        s, g = self.table
        out = self._interp(np.minimum(a, s[-1]))
        if np.any(a > s[-1]):
            raise GrowthOverflow(f"|s| beyond table range {s[-1]!r}", s=float(np.max(a)))
        return out

    def __call__(self, s):
        return self.eval(s)[0]

    def eval(self, s, want_derivative=False):
        """Return (G(s), g(s) or None); both are even/odd in s respectively."""
        arr = np.asarray(s, dtype=float)
        a = np.abs(arr)
        self._check(a)
        sign = np.sign(arr)
        with np.errstate(over="ignore"):
            val, d = self._eval_abs(a, want_derivative)
        if np.any(~np.isfinite(val)):
            raise GrowthOverflow("G overflows double precision", s=float(np.max(a)))
        val = val if np.ndim(val) else float(val)
        if d is not None:
            d = d * sign
            d = d if np.ndim(d) else float(d)
        return val, d

    def _eval_abs(self, a, want_derivative):
        d = None
        if self.kind == "power":
            val = a ** self.p
            if want_derivative:
                with np.errstate(divide="ignore", invalid="ignore"):
                    d = np.where(a > 0, self.p * a ** (self.p - 1.0), 0.0 if self.p >= 1 else np.inf)
        elif self.kind == "critical_family":
            e = np.exp(math.pi * a * a)
            val = self.c * e / (1.0 + a) ** self.gamma
            if want_derivative:
                d = val * (2.0 * math.pi * a - self.gamma / (1.0 + a))
        elif self.kind == "piecewise_critical":
            g_ = self.gamma
            cg = c_gamma(g_)
            low = np.expm1(math.pi * a * a)
            crit = np.exp(math.pi * a * a) / (1.0 + a) ** g_
            shift = math.exp(math.pi * cg * cg) - 1.0 - math.exp(math.pi * cg * cg) / (1.0 + cg) ** g_
            val = np.where(a <= cg, low, crit + shift)
            if want_derivative:
                d = np.where(a <= cg, 2.0 * math.pi * a * np.exp(math.pi * a * a),
                             crit * (2.0 * math.pi * a - g_ / (1.0 + a)))
        elif self.kind == "scaled":
            val, d = self.base.eval(a, want_derivative)
            val = self.c * val
            if d is not None:
                d = self.c * d
        else:
            if want_derivative:
                raise InvalidArgument("table growth models do not provide derivatives")
            val = self._table_eval(a)
        return val, d

    def derivative(self, s):
        return self.eval(s, want_derivative=True)[1]


def power(p=2.0, **kw):
    return GrowthModel("power", p=p, **kw)


def critical_family(gamma, c=1.0, **kw):
    return GrowthModel("critical_family", gamma=gamma, c=c, **kw)


def piecewise_critical(gamma, **kw):
    return GrowthModel("piecewise_critical", gamma=gamma, **kw)


def scaled(base, factor):
    return GrowthModel("scaled", c=factor, base=base, s_max=base.s_max)


def table_model(s, g, **kw):
    return GrowthModel("custom_table", table=(np.asarray(s, float), np.asarray(g, float)), **kw)


def piecewise_branch_gap(gamma):
    """|lower branch - upper branch| at s = c_gamma."""
    cg = c_gamma(gamma)
    low = math.expm1(math.pi * cg * cg)
    e = math.exp(math.pi * cg * cg)
    high = e / (1 + cg) ** gamma - e / (1 + cg) ** gamma + e - 1.0
    return abs(low - high)


@dataclass(frozen=True)
class Certificate:
    holds: bool
    value: float
    arg: float
    value_doubled: float


def _log_ratio_sup(G, gamma, s):
    return G.log_value(s) - math.pi * s * s + gamma * np.log1p(s)


def gamma_critical_classify(G, gamma, s_grid_max=50.0, n=20001, s0=1.0):
    """Probe gamma-critical growth on a finite s-grid, in log space.

    at_most holds when sup_s log(G(s) (1+s)^gamma e^{-pi s^2}) is finite and
    moves by less than log(1.01) when the grid range doubles. at_least holds
    when inf_{s >= s0} of G(s) s^gamma e^{-pi s^2} stays above 1e-300 and
    stable under the same doubling.
    """
    if s_grid_max < 10:
        raise InvalidArgument("s_grid_max must be at least 10")
    tol = math.log(1.01)

    def probe(smax):
        s = np.linspace(0.0, smax, n)
        up = _log_ratio_sup(G, gamma, s)
        i = int(np.argmax(up))
        tail = s[s >= s0]
        low = G.log_value(tail) - math.pi * tail ** 2 + gamma * np.log(tail)
        j = int(np.argmin(low))
        return float(up[i]), float(s[i]), float(low[j]), float(tail[j])

    sup1, arg1, inf1, iarg1 = probe(s_grid_max)
    sup2, _, inf2, _ = probe(2.0 * s_grid_max)
    at_most = bool(np.isfinite(sup1) and np.isfinite(sup2) and abs(sup2 - sup1) < tol)
    at_least = bool(np.isfinite(inf1) and np.isfinite(inf2) and abs(inf2 - inf1) < tol
                    and inf1 > math.log(1e-300))
    return (Certificate(at_most, math.exp(min(sup1, 700.0)), arg1, math.exp(min(sup2, 700.0))),
            Certificate(at_least, math.exp(max(inf1, -745.0)), iarg1, math.exp(max(inf2, -745.0))))


def parse_growth(text, s_max=25.0):
    """Parse ``power:2``, ``critical:gamma=2[,c=1]``, ``piecewise:gamma=2`` or ``table:path.csv``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if not rest:
        raise InvalidArgument(f"growth text {text!r} needs parameters after ':'")
    if kind == "power":
        try:
            return power(float(rest), s_max=s_max)
        except ValueError:
            raise InvalidArgument(f"bad power exponent in {text!r}") from None
    if kind == "table":
        from .function_space import read_csv
        u = read_csv(rest)
        if u.grid.nodes[0] < 0:
            keep = u.grid.nodes >= 0
            return table_model(u.grid.nodes[keep], u.values[keep], s_max=s_max)
        return table_model(u.grid.nodes, u.values, s_max=s_max)
    params = {}
    for item in rest.split(","):
        k, eq, v = item.partition("=")
        if not eq:
            raise InvalidArgument(f"expected key=value in {text!r}")
        try:
            params[k.strip()] = float(v)
        except ValueError:
            raise InvalidArgument(f"non-numeric value in {text!r}") from None
    unknown = set(params) - {"gamma", "c"}
    if unknown:
        raise InvalidArgument(f"unknown growth parameter(s) {sorted(unknown)}")
    if "gamma" not in params:
        raise InvalidArgument(f"{text!r} needs gamma=")
    if kind == "critical":
        return critical_family(params["gamma"], params.get("c", 1.0), s_max=s_max)
    if kind == "piecewise":
        if "c" in params:
            raise InvalidArgument("piecewise growth takes only gamma")
        return piecewise_critical(params["gamma"], s_max=s_max)
    raise InvalidArgument(f"unknown growth kind {kind!r}")
