import math

import numpy as np
import pytest

from tmlog import extremal_solver as es
from tmlog.errors import InvalidArgument
from tmlog.euler_lagrange import (decay_fit, el_coefficient, is_superpolynomial, log_potential,
                                  potential_grid, system_residual, u_residual_vector, w_log_slope,
                                  w_potential)
from tmlog.function_space import (Grid1D, SampledFunction, evaluate, from_callable, integrate,
                                  make_interval_grid)
from tmlog.growth_models import critical_family, power


@pytest.fixture(scope="module")
def el_pair(maximizer, square):
    u = maximizer.function()
    mult, _ = es.theta_estimate(maximizer, square)
    w = w_potential(u, square)
    return u, w, el_coefficient(mult)


def test_zero_pair():
    g = make_interval_grid(65, 1.0)
    u = SampledFunction(g, np.zeros(65))
    w = w_potential(u, power(2))
    assert np.all(w.values == 0.0)
    rep = system_residual(u, w, 3.0, power(2), mass_term=False)
    assert rep.residual_u == 0.0 and rep.residual_w == 0.0


def test_plateau_potential():
    v = SampledFunction(Grid1D(np.linspace(-1, 1, 33)), np.ones(33))
    w = log_potential(v, Grid1D(np.array([-0.5, 0.0, 0.5])))
    assert w.values[1] == pytest.approx(2.0, abs=1e-12)
    assert w.values[2] == pytest.approx(1.7384, abs=1e-4)


def test_potential_log_growth():
    g = make_interval_grid(65, 1.0)
    u = from_callable(lambda x: np.cos(np.pi * x / 2), g)
    G = power(2)
    w = w_potential(u, G, eval_grid=potential_grid(g, outer=1e4, n_outer=200))
    mass = integrate(SampledFunction(g.refined(4), G(evaluate(u, g.refined(4).nodes))))
    far = np.abs(w.grid.nodes) > 10
    bounded = w.values[far] + mass * np.log(np.abs(w.grid.nodes[far]))
    assert np.ptp(bounded) < 1e-2


def test_potential_needs_vanishing_growth():
    g = make_interval_grid(9, 1.0)
    with pytest.raises(InvalidArgument):
        w_potential(SampledFunction(g, np.zeros(9)), critical_family(2))


def test_maximizer_residuals(el_pair, square):
    u, w, theta = el_pair
    rep = system_residual(u, w, theta, square, mass_term=False)
    assert theta > 0
    assert rep.residual_u <= 0.05
    assert rep.residual_w <= 0.05
    assert rep.failure_ratio == 0.0


def test_residual_sensitive_to_theta(el_pair, square):
    u, w, theta = el_pair
    base = system_residual(u, w, theta, square, mass_term=False).residual_u
    doubled = system_residual(u, w, 2 * theta, square, mass_term=False).residual_u
    assert doubled > base


def test_residual_affine_in_theta(el_pair, square):
    u, w, theta = el_pair
    r = [u_residual_vector(u, w, t, square, mass_term=False) for t in (0.5 * theta, theta, 1.5 * theta)]
    ok = np.isfinite(r[1])
    assert np.allclose(r[0][ok] + r[2][ok], 2 * r[1][ok], atol=1e-12)


def test_w_log_slope_matches_mass(el_pair, square):
    u, w, _ = el_pair
    fine = u.grid.refined(4)
    mass = integrate(SampledFunction(fine, square(evaluate(u, fine.nodes))))
    assert w_log_slope(w, (5.0, 20.0)) == pytest.approx(mass, rel=0.1)


def test_decay_fit_lorentzian():
    g = make_interval_grid(801, 40.0)
    u = from_callable(lambda x: 1 / (1 + x * x), g)
    assert decay_fit(u, (5.0, 20.0)) == pytest.approx(2.0, rel=0.05)


def test_exponential_is_superpolynomial():
    g = make_interval_grid(801, 40.0)
    u = from_callable(lambda x: np.exp(-np.abs(x)), g)
    assert is_superpolynomial(u, (5.0, 10.0))
    assert not is_superpolynomial(from_callable(lambda x: 1 / (1 + x * x), g), (5.0, 10.0))


def test_constant_has_no_decay():
    g = make_interval_grid(81, 40.0)
    with pytest.raises(InvalidArgument):
        decay_fit(SampledFunction(g, np.ones(81)), (5.0, 20.0))


def test_el_coefficient():
    assert el_coefficient(4.0) == 0.25
    with pytest.raises(InvalidArgument):
        el_coefficient(0.0)
