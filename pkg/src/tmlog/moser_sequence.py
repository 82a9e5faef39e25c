"""The Moser concentrating family w_n: closed-form seminorm pieces and numeric checks.

w_n(x) = A_n log n        for |x| <= 1/n
       = A_n log(1/|x|)   for 1/n <= |x| <= 1
       = 0                for |x| >= 1
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import zeta

from .errors import GrowthOverflow, InvalidArgument
from .fractional_calculus import DEFAULT_QUADRATURE, gagliardo_seminorm_sq
from .function_space import Grid1D, SampledFunction, symmetric_grid
from .log_functionals import phi_report

# sharp n-independent limit of 2*I12 + 2*I23 (each tends to 7 zeta(3))
BRACKET_C = 28.0 * zeta(3)


def _check_n(n):
    if int(n) != n or n < 3:
        raise InvalidArgument("n must be an integer >= 3 (A_n is real only for log n > 1)")
    return int(n)


def A_n(n):
    n = _check_n(n)
    L = math.log(n)
    return math.sqrt((1.0 - 1.0 / L) / (math.pi * L))


def moser_grid(n, per_decade=32, plateau_cells=8):
    """Symmetric grid with nodes at 0, +-1/n, +-1 and log-graded nodes in between."""
    n = _check_n(n)
    decades = math.log10(n)
    k = max(2, int(math.ceil(per_decade * decades)))
    outer = np.logspace(-decades, 0.0, k + 1)
    outer[0], outer[-1] = 1.0 / n, 1.0
    inner = np.linspace(0.0, 1.0 / n, plateau_cells + 1)[:-1]
    return symmetric_grid(np.concatenate([inner, outer]))


def moser_values(n, x):
    a = A_n(n)
    r = np.abs(np.asarray(x, dtype=float))
    L = math.log(n)
    with np.errstate(divide="ignore"):
        mid = a * -np.log(r)
    return np.where(r <= 1.0 / n, a * L, np.where(r >= 1.0, 0.0, mid))


def moser_function(n, grid=None):
    """Exact nodal samples of w_n; the grid must contain +-1/n and +-1."""
    n = _check_n(n)
    if grid is None:
        grid = moser_grid(n)
    x = grid.nodes
    for b in (1.0 / n, -1.0 / n, 1.0, -1.0):
        if not np.any(np.isclose(x, b, rtol=1e-14, atol=0.0)):
            raise InvalidArgument(f"grid is missing the breakpoint {b!r}")
    return SampledFunction(grid, moser_values(n, x))


# ---------------------------------------------------------------------------
# closed-form pieces


def _f(t):
    # t^2 / (e^t + e^-t - 2) = (t / (2 sinh(t/2)))^2, -> 1 at t = 0
    if t == 0.0:
        return 1.0
    e = math.exp(-abs(t))
    return t * t * e / (1.0 - e) ** 2


def _h(t):
    e = math.exp(-abs(t))
    return t * t * e / (1.0 + e) ** 2


def _quad(fun, a, b):
    val, _ = integrate.quad(fun, a, b, epsabs=1e-13, epsrel=1e-12, limit=500)
    return val


def component_integrals(n):
    """(I12, I13, I22, I23) for the cross/self interactions of the three branches."""
    n = _check_n(n)
    L = math.log(n)
    i12 = 2.0 * _quad(lambda t: t * t / math.expm1(t) if t > 0 else 0.0, 0.0, L) \
        + 2.0 * _quad(lambda t: t * t / (math.exp(t) + 1.0), 0.0, L)
    i13 = L * L * 2.0 * math.log1p(2.0 / (n - 1))
    fh = lambda t: _f(t) + _h(t)
    i22 = 4.0 * L * _quad(fh, 0.0, L) - 4.0 * _quad(lambda t: fh(t) * t, 0.0, L)
    # 4 int_1^n (log t)^2/(t^2-1) dt with t = e^s
    i23 = 4.0 * _quad(lambda s: s * s / (2.0 * math.sinh(s)) if s > 0 else 0.0, 0.0, L)
    return i12, i13, i22, i23


def seminorm_closed(n):
    i12, i13, i22, i23 = component_integrals(n)
    return A_n(n) ** 2 * (2 * i12 + 2 * i13 + i22 + 2 * i23)


def A_constant(t_max=60.0):
    """int_0^inf (f + h) dt with f = t^2/(e^t+e^-t-2), h = t^2/(e^t+e^-t+2).

    Returns (value, tail_bound): the integral is taken to ``t_max`` and the
    remainder is bounded by int_{t_max}^inf 2 t^2 e^{-t} (1-e^{-t_max})^{-2} dt.
    """
    val = _quad(lambda t: _f(t) + _h(t), 0.0, t_max)
    T = t_max
    tail = 2.0 * math.exp(-T) * (T * T + 2 * T + 2) / (1.0 - math.exp(-T)) ** 2
    return val, tail


A_CLAIMED = math.pi ** 2 / 4.0


def bracket_bound(n, C=BRACKET_C):
    """[C + pi^2 log n + 4 (log n)^2 log(1 + 2/(n-1))] A_n^2."""
    n = _check_n(n)
    L = math.log(n)
    return (C + math.pi ** 2 * L + 4 * L * L * math.log1p(2.0 / (n - 1))) * A_n(n) ** 2


# ---------------------------------------------------------------------------
# witnesses


@dataclass
class MoserWitness:
    n: int
    A_n: float
    I12: float
    I13: float
    I22: float
    I23: float
    seminorm_sq_closed: float
    seminorm_sq_numeric: float
    quarter_norm_sq: float
    in_unit_ball: bool
    bracket_value: float
    phi_lower_bound: Optional[float] = None
    phi_direct: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def verify_normalization(n, q=DEFAULT_QUADRATURE, per_decade=32):
    n = _check_n(n)
    i12, i13, i22, i23 = component_integrals(n)
    a = A_n(n)
    closed = a * a * (2 * i12 + 2 * i13 + i22 + 2 * i23)
    u = moser_function(n, moser_grid(n, per_decade))
    numeric = gagliardo_seminorm_sq(u, q)
    qn = numeric / (2.0 * math.pi)
    return MoserWitness(n, a, i12, i13, i22, i23, closed, numeric, qn, bool(qn <= 1.0),
                        bracket_bound(n))


def c2_constant(gamma, c1):
    """c_2 with c1^{-1} ((log n - 1)/pi)^{-gamma/2} n/e >= c_2 (log n)^{-gamma/2} n."""
    if c1 <= 0:
        raise InvalidArgument("c1 must be positive")
    return math.pi ** (gamma / 2.0) / (c1 * math.e)


def phi_lower_bound(n, gamma, c1):
    c2 = c2_constant(gamma, c1)
    return 0.25 * c2 * c2 * math.log(n) ** (1.0 - gamma)


def check_plateau_bound(n, G, gamma, c1):
    """Does G(w_n) >= c_2 (log n)^{-gamma/2} n hold on |x| <= 1/n?"""
    s = A_n(n) * math.log(n)
    lhs = float(G(s))
    return lhs >= c2_constant(gamma, c1) * math.log(n) ** (-gamma / 2.0) * n


def phi_moser(n, G, gamma, c1, per_decade=32, refine=4):
    """(Phi(w_n) by the direct kernel method, lower bound (1/4) c_2^2 (log n)^{1-gamma})."""
    n = _check_n(n)
    u = moser_function(n, moser_grid(n, per_decade))
    try:
        rep = phi_report(u, G, refine=refine)
    except GrowthOverflow as exc:
        raise GrowthOverflow(f"G(w_n) overflows at the plateau value {A_n(n) * math.log(n)!r}: {exc}",
                             s=A_n(n) * math.log(n)) from exc
    return rep.phi, phi_lower_bound(n, gamma, c1)


def default_c1(G, gamma, s0=1.0):
    """Smallest c1 with G(s) >= c1^{-1} s^{-gamma} e^{pi s^2} on [s0, 10], from a log-space scan."""
    s = np.linspace(s0, 10.0, 2001)
    log_ratio = G.log_value(s) + gamma * np.log(s) - math.pi * s * s
    return float(math.exp(-np.min(log_ratio)))
