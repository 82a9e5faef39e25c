import math

import numpy as np
import pytest
from scipy import integrate as spi
from scipy.special import gamma as Gamma

from tmlog.errors import GrowthOverflow, IllConditionedPoint, InvalidArgument, UnsupportedInput
from tmlog.fractional_calculus import (CLOSED_FORM_HALF_LAPLACIANS, CLOSED_FORMS, QuadratureSpec,
                                       fourier_pair_check, gagliardo_seminorm_sq,
                                       half_laplacian_pointwise, log_rectangle, mass_matrix,
                                       normalization_constant, normalization_constant_numeric,
                                       quarter_laplacian_norm_sq, read_stiffness_csv,
                                       stiffness_matrix, tm_integral, write_stiffness_csv)
from tmlog.function_space import Grid1D, SampledFunction, evaluate, from_callable, make_interval_grid
from tmlog.moser_sequence import moser_function


def hat_fn(grid):
    return from_callable(lambda x: np.maximum(0.0, 1.0 - np.abs(x)), grid)


def brute_seminorm(u):
    """Adaptive 2D quadrature of the Gagliardo double integral plus the exterior tail."""
    a, b = u.grid.hull
    f = lambda y, x: ((evaluate(u, x) - evaluate(u, y)) / (x - y)) ** 2 if x != y else 0.0
    cuts = sorted(set([a, b] + [float(t) for t in u.grid.nodes]))
    inside = 0.0
    for i in range(len(cuts) - 1):
        for j in range(len(cuts) - 1):
            inside += spi.dblquad(f, cuts[i], cuts[i + 1], cuts[j], cuts[j + 1],
                                  epsabs=1e-11, epsrel=1e-10)[0]
    tail = spi.quad(lambda x: evaluate(u, x) ** 2 * (1 / (x - a) + 1 / (b - x)), a, b,
                    points=list(u.grid.nodes[1:-1]), epsabs=1e-12, limit=200)[0]
    return inside + 2 * tail


@pytest.fixture(scope="module")
def hat_oracle():
    return brute_seminorm(hat_fn(make_interval_grid(3, 1.0)))


def test_constant_at_half():
    assert normalization_constant(0.5, 1) == pytest.approx(1 / math.pi, rel=1e-14)
    assert normalization_constant_numeric(0.5) == pytest.approx(1 / math.pi, abs=1e-8)
    # independent oracle: int (1 - cos z)/z^2 = pi
    head = spi.quad(lambda z: (1 - math.cos(z)) / z ** 2 if z else 0.5, 0, 1)[0]
    tail = 1.0 - spi.quad(lambda z: 1.0 / z ** 2, 1, np.inf, weight="cos", wvar=1.0)[0]
    assert 1 / (2 * (head + tail)) == pytest.approx(1 / math.pi, abs=1e-8)


def test_constant_at_quarter():
    c = normalization_constant(0.25, 1)
    assert 0 < c < np.inf
    # int (1 - cos z)/|z|^{1+2s} dz = -2 Gamma(-2s) cos(pi s)
    expected = 1.0 / (-2.0 * Gamma(-0.5) * math.cos(math.pi / 4))
    assert c == pytest.approx(expected, rel=1e-12)
    assert normalization_constant_numeric(0.25) == pytest.approx(c, rel=1e-8)


def test_constant_rejects_bad_order():
    with pytest.raises(InvalidArgument):
        normalization_constant(1.0, 1)


def test_zero_seminorm():
    g = make_interval_grid(33, 1.0)
    assert gagliardo_seminorm_sq(SampledFunction(g, np.zeros(33))) == 0.0
    assert quarter_laplacian_norm_sq(SampledFunction(g, np.zeros(33))) == 0.0


def test_hat_seminorm_matches_brute_force(hat_oracle):
    for n in (3, 17, 65):
        u = hat_fn(make_interval_grid(n, 1.0))
        assert gagliardo_seminorm_sq(u) == pytest.approx(hat_oracle, rel=1e-8)
    # regression constant: 8 log 2
    assert hat_oracle == pytest.approx(8 * math.log(2), rel=1e-8)


def test_seminorm_needs_compact_support():
    g = make_interval_grid(17, 1.0)
    with pytest.raises(UnsupportedInput):
        gagliardo_seminorm_sq(SampledFunction(g, np.ones(17)))


def test_quarter_norm_identity():
    rng = np.random.default_rng(1)
    g = make_interval_grid(33, 1.0)
    c = rng.uniform(0, 1, 33)
    c[[0, -1]] = 0
    u = SampledFunction(g, c)
    assert quarter_laplacian_norm_sq(u) * 2 * math.pi == pytest.approx(gagliardo_seminorm_sq(u), rel=1e-14)


def test_scale_invariance():
    g = make_interval_grid(33, 1.0)
    rng = np.random.default_rng(2)
    c = rng.uniform(0, 1, 33)
    c[[0, -1]] = 0
    base = gagliardo_seminorm_sq(SampledFunction(g, c))
    for tau in (0.3, 2.5):
        scaled = SampledFunction(Grid1D(g.nodes / tau, True), c)
        assert gagliardo_seminorm_sq(scaled) == pytest.approx(base, rel=1e-8)


def test_log_rectangle_against_quad():
    a, b, c, d = 0.0, 0.7, 0.2, 1.5
    ref = spi.dblquad(lambda y, x: math.log(abs(x - y)) if x != y else 0.0, a, b, c, d,
                      epsabs=1e-12)[0]
    assert log_rectangle(a, b, c, d) == pytest.approx(ref, abs=1e-8)


def test_stiffness_symmetric_and_positive():
    g = make_interval_grid(65, 1.0, refine_near_zero=True)
    Q = stiffness_matrix(g).entries
    assert np.max(np.abs(Q - Q.T)) == 0.0
    assert np.linalg.eigvalsh(Q[1:-1, 1:-1]).min() > 0


def test_stiffness_columns_match_quadrature():
    g = make_interval_grid(17, 1.0, refine_near_zero=True)
    Q = stiffness_matrix(g)
    for i in (1, 5, 8):
        e = np.zeros(17)
        e[i] = 1
        assert Q.energy(e) == pytest.approx(gagliardo_seminorm_sq(SampledFunction(g, e)), rel=1e-6)


def test_stiffness_random_coefficients():
    g = make_interval_grid(65, 1.0)
    Q = stiffness_matrix(g)
    rng = np.random.default_rng(11)
    for _ in range(20):
        c = rng.standard_normal(65)
        c[[0, -1]] = 0
        e = Q.energy(c)
        assert abs(e - gagliardo_seminorm_sq(SampledFunction(g, c))) <= 1e-4 * e


def test_mass_matrix_integrates_squares():
    g = make_interval_grid(9, 1.0, refine_near_zero=True)
    rng = np.random.default_rng(4)
    c = rng.standard_normal(9)
    u = SampledFunction(g, c)
    ref = spi.quad(lambda x: evaluate(u, x) ** 2, -1, 1, points=list(g.nodes[1:-1]))[0]
    assert c @ mass_matrix(g) @ c == pytest.approx(ref, rel=1e-12)


def test_stiffness_csv_round_trip(tmp_path):
    g = make_interval_grid(9, 1.0)
    Q = stiffness_matrix(g)
    write_stiffness_csv(Q, tmp_path / "q.csv")
    assert np.array_equal(read_stiffness_csv(tmp_path / "q.csv"), Q.entries)


def test_half_laplacian_examples():
    assert half_laplacian_pointwise("rational_step", 0.0) == pytest.approx(-1.0, abs=1e-8)
    assert half_laplacian_pointwise("lorentzian", 1.0) == pytest.approx(0.0, abs=1e-8)
    for x in (-3.0, 0.0, 2.0):
        assert half_laplacian_pointwise("constant", x) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("tag", ["rational_step", "lorentzian"])
def test_closed_form_half_laplacians(tag):
    xs = np.linspace(-10, 10, 201)
    num = np.array([half_laplacian_pointwise(tag, x) for x in xs])
    assert np.max(np.abs(num - CLOSED_FORM_HALF_LAPLACIANS[tag](xs))) <= 1e-4


def test_half_laplacian_linearity():
    f, g = CLOSED_FORMS["rational_step"], CLOSED_FORMS["lorentzian"]
    for x in (-1.3, 0.2, 4.0):
        combo = half_laplacian_pointwise(lambda t: 2.0 * f(t) - 3.0 * g(t), x)
        parts = 2.0 * half_laplacian_pointwise(f, x) - 3.0 * half_laplacian_pointwise(g, x)
        assert combo == pytest.approx(parts, abs=1e-8)


def test_half_laplacian_sampled_matches_closed_form():
    g = make_interval_grid(801, 40.0)
    u = from_callable(lambda x: 1.0 / (1.0 + x * x), g)
    for x in (0.0, 1.0, 2.5):
        assert half_laplacian_pointwise(u, x) == pytest.approx(
            CLOSED_FORM_HALF_LAPLACIANS["lorentzian"](x), abs=2e-3)


def test_half_laplacian_flags_kinks():
    g = make_interval_grid(65, 1.0)
    u = from_callable(lambda x: np.maximum(0.0, 0.5 - np.abs(x)), g)
    with pytest.raises(IllConditionedPoint):
        half_laplacian_pointwise(u, 0.0)


@pytest.mark.parametrize("xi", [0.0, 0.25, 0.5, 1.0])
def test_fourier_pair(xi):
    lhs, rhs = fourier_pair_check(xi)
    assert abs(lhs - rhs) <= 1e-5
    assert rhs == pytest.approx(math.pi * math.exp(-2 * math.pi * abs(xi)))


def test_fourier_pair_even():
    assert fourier_pair_check(-0.5) == pytest.approx(fourier_pair_check(0.5))
    assert fourier_pair_check(0.5)[1] == pytest.approx(0.1357605, abs=1e-6)


def test_tm_integral_examples():
    g = make_interval_grid(65, 1.0)
    assert tm_integral(SampledFunction(g, np.zeros(65)), math.pi) == 0.0
    assert tm_integral(SampledFunction(g, np.ones(65)), math.pi) == pytest.approx(2 * (math.exp(math.pi) - 1), rel=1e-12)


def test_tm_integral_moser_trend():
    at_pi = [tm_integral(moser_function(n), math.pi) for n in (10 ** 2, 10 ** 3, 10 ** 4)]
    above = [tm_integral(moser_function(n), 1.2 * math.pi) for n in (10 ** 2, 10 ** 3, 10 ** 4)]
    assert max(at_pi) < 10.0
    assert above[0] < above[1] < above[2]


def test_tm_integral_overflow_names_cell():
    g = make_interval_grid(5, 1.0)
    u = SampledFunction(g, np.array([0, 0, 20.0, 0, 0]))
    with pytest.raises(GrowthOverflow) as exc:
        tm_integral(u, math.pi)
    assert exc.value.cell == 1


def test_quadrature_spec_validation():
    with pytest.raises(InvalidArgument):
        QuadratureSpec(abs_tol=0)
