import math

import numpy as np
import pytest

from tmlog.errors import InvalidArgument
from tmlog.fractional_calculus import gagliardo_seminorm_sq
from tmlog.function_space import Grid1D, SampledFunction, evaluate, from_callable, make_interval_grid
from tmlog.growth_models import power, scaled
from tmlog.moving_plane import (c_lambda, lambda1_estimate, mu_ratio, negative_part_energy_bound,
                                reflect_diff, reflection_identity, reflection_kernel,
                                reflection_leaves_hull, sigma_minus_measure, sweep, symmetry_score,
                                w_lambda, _with_zero_crossings)

LINEAR = scaled(power(2), 0.5)  # G(s) = s^2/2, g(s) = s


def lorentz(grid, center=0.0):
    return from_callable(lambda x: 1.0 / (1.0 + (x - center) ** 2), grid)


@pytest.fixture(scope="module")
def wide():
    return make_interval_grid(801, 40.0)


def test_even_at_zero_is_flat(wide):
    ul = reflect_diff(lorentz(wide), 0.0)
    assert np.max(np.abs(ul.values)) == 0.0
    assert ul.grid.nodes[-1] == 0.0


def test_even_decreasing_left_planes(wide):
    for lam in (-0.3, -2.0, -7.5):
        assert reflect_diff(lorentz(wide), lam).values.min() >= 0.0


def test_center_detection_shifted():
    g = Grid1D(np.linspace(-39.0, 41.0, 801))
    ul = reflect_diff(lorentz(g, 1.0), 1.0)
    assert np.max(np.abs(ul.values)) <= 1e-15


def test_antisymmetry_on_mirrored_pairs():
    # dyadic nodes and plane so that 2 lam - x is exact
    g = Grid1D(np.linspace(-20.0, 20.0, 641))
    u = from_callable(lambda x: np.exp(-(x - 0.4) ** 2) * (1 + 0.3 * np.sin(3 * x)), g)
    lam = 0.75
    ul = reflect_diff(u, lam)
    x = ul.grid.nodes
    xr = 2 * lam - x
    assert np.array_equal(2 * lam - xr, x)
    mirrored = evaluate(u, 2 * lam - xr) - evaluate(u, xr)
    assert np.array_equal(mirrored, -ul.values)


def test_hull_flag():
    g = make_interval_grid(65, 1.0)
    assert not reflection_leaves_hull(lorentz(g), 0.0)
    assert reflection_leaves_hull(lorentz(g), 0.5)


def test_kernel_positivity():
    rng = np.random.default_rng(32)
    lam = 0.8
    x = rng.uniform(-10, lam, 2000)
    y = rng.uniform(-10, lam, 2000)
    keep = x != y
    assert np.all(reflection_kernel(x[keep], y[keep], lam) > 0)


def test_w_lambda_nonnegative_when_u_lambda_is(wide):
    u = lorentz(wide)
    for lam in (-0.5, -3.0):
        assert reflect_diff(u, lam).values.min() >= 0
        assert w_lambda(u, LINEAR, lam).values.min() >= -1e-12


def test_w_lambda_vanishes_for_even_input(wide):
    assert np.max(np.abs(w_lambda(lorentz(wide), LINEAR, 0.0).values)) <= 1e-12


def test_difference_quotient_sign(wide):
    u = from_callable(lambda x: np.exp(-(x - 0.3) ** 2), wide)
    lam = 1.2
    ul = reflect_diff(u, lam)
    x = ul.grid.nodes
    rho = LINEAR(evaluate(u, 2 * lam - x)) - LINEAR(evaluate(u, x))
    assert np.all(rho[ul.values >= 0] >= 0)


def test_c_lambda_empty_set(wide):
    u = lorentz(wide)
    for lam in (-2.0, -8.0):
        assert sigma_minus_measure(u, lam) == 0.0
        assert c_lambda(u, LINEAR, lam) == 0.0


def test_c_lambda_positive_right_of_center(wide):
    u = lorentz(wide)
    assert sigma_minus_measure(u, 0.2) > 0
    assert c_lambda(u, LINEAR, 0.2) > 0
    assert c_lambda(u, LINEAR, 0.2, variant="upper") >= c_lambda(u, LINEAR, 0.2)


def test_c_lambda_decays_for_asymmetric_profile():
    g = make_interval_grid(1601, 200.0)
    u = from_callable(lambda x: np.where(x < 0, 1 / (1 + x * x / 4), 1 / (1 + x * x)), g)
    cs = [c_lambda(u, LINEAR, lam) for lam in (-2.0, -4.0, -8.0, -16.0)]
    assert all(a > b > 0 for a, b in zip(cs, cs[1:]))
    assert cs[-1] < 0.2 * cs[0]


def test_c_lambda_rejects_unknown_variant(wide):
    with pytest.raises(InvalidArgument):
        c_lambda(lorentz(wide), LINEAR, 0.2, variant="lower")


def test_lambda1_even(wide):
    h = wide.widths.max()
    assert abs(lambda1_estimate(lorentz(wide), (-5, 5))) <= h


def test_lambda1_shifted():
    g = Grid1D(np.linspace(-39.0, 41.0, 801))
    assert abs(lambda1_estimate(lorentz(g, 1.0), (-5, 5)) - 1.0) <= g.widths.max()


def test_lambda1_translation_equivariance(wide):
    a = 0.7
    u = from_callable(lambda x: np.exp(-x * x) * (1 + 0.2 * np.cos(x)), wide)
    moved = SampledFunction(Grid1D(wide.nodes + a), u.values)
    assert abs(lambda1_estimate(moved, (-5, 5)) - lambda1_estimate(u, (-5, 5)) - a) <= wide.widths.max()


def test_lambda1_range_error(wide):
    with pytest.raises(InvalidArgument):
        lambda1_estimate(lorentz(wide), (1.0, 3.0))


def test_maximizer_is_symmetric(maximizer):
    u = maximizer.function()
    lam1 = lambda1_estimate(u, (-2.0, 2.0))
    x, c = u.grid.nodes, u.values
    center = float(np.sum(x * c) / np.sum(c))
    assert abs(lam1 - center) <= u.grid.widths.max()
    assert symmetry_score(u, lam1) <= 1e-6


def test_sweep_report(wide):
    d = sweep(lorentz(wide), LINEAR, np.linspace(-8, 2, 11), (-8, 2))
    n = len(d.lambda_grid)
    assert len(d.min_u_lambda) == len(d.sigma_minus_measure) == len(d.c_lambda) == n
    assert min(d.sigma_minus_measure) >= 0 and min(d.c_lambda) >= 0
    assert d.mu_fit is not None and d.mu_fit > 0
    assert set(d.to_dict()) >= {"lambda1_estimate", "symmetry_score"}


def test_mu_fit_stable_under_refinement():
    lams = (0.25, 0.5, 1.0, 2.0)
    mus = []
    for n in (401, 1601):
        u = lorentz(make_interval_grid(n, 40.0))
        mus.append(max(mu_ratio(u, LINEAR, lam) for lam in lams))
    assert abs(mus[1] - mus[0]) <= 0.2 * mus[1]


def test_energy_bound_nonnegative_input():
    g = make_interval_grid(65, 1.0)
    assert negative_part_energy_bound(from_callable(lambda x: np.maximum(0, 1 - np.abs(x)), g)) == (0.0, 0.0)


def hat_minus_shifted(g):
    return from_callable(lambda x: np.maximum(0, 1 - np.abs(x)) - 1.5 * np.maximum(0, 1 - np.abs(x - 0.4) / 0.5), g)


def test_energy_bound_mixed_sign():
    u = hat_minus_shifted(make_interval_grid(201, 1.0))
    lhs, rhs = negative_part_energy_bound(u)
    assert lhs > 0
    assert lhs <= rhs + 1e-4


def test_energy_bound_cross_term_by_polarization():
    u = _with_zero_crossings(hat_minus_shifted(make_interval_grid(41, 1.0)))
    neg = u.with_values(np.minimum(u.values, 0.0))
    lhs, rhs = negative_part_energy_bound(u)
    l2 = lhs - gagliardo_seminorm_sq(neg)
    cross = (gagliardo_seminorm_sq(u.with_values(u.values + neg.values))
             - gagliardo_seminorm_sq(u.with_values(u.values - neg.values))) / 4
    assert rhs == pytest.approx(cross + l2, rel=1e-8)


def test_reflection_identity_mixed_sign():
    lam = 0.3
    f = lambda x: math.sin(2 * (x - lam)) * math.exp(-(x - lam) ** 2)
    full, twice_half = reflection_identity(f, lam, points=[lam - math.pi / 2])
    assert abs(full) > 1e-3
    assert abs(full - twice_half) <= 1e-4
