import numpy as np
import pytest
from scipy.integrate import trapezoid

from conftest import FD_TOL, max_rel_grad_error, random_points
from optinput.model import (ModelDivergenceError, builtin_lgss, builtin_nonlinear, get_model,
                            simulate)


def test_lgss_gradient_matches_finite_differences():
    pts = random_points(np.random.default_rng(1), [0.2, 0.05], [0.9, 0.5])
    assert max_rel_grad_error(builtin_lgss(), pts) < FD_TOL


def test_nonlinear_gradient_matches_finite_differences():
    pts = random_points(np.random.default_rng(2), [0.3, 0.3], [0.9, 1.0])
    assert max_rel_grad_error(builtin_nonlinear(), pts) < FD_TOL


def test_lgss_gradient_zero_residual():
    g = builtin_lgss().transition_grad(1.0, 0.5, 0.0, np.array([0.5, 0.1]))
    np.testing.assert_allclose(g, [0.0, -10.0])


@pytest.mark.parametrize("factory", [builtin_lgss, builtin_nonlinear])
def test_observation_gradient_is_zero(factory):
    m = factory()
    x = np.linspace(-3, 3, 7)
    assert np.all(m.observation_grad(x, x**2, 1.0, np.array([0.5, 0.6])) == 0.0)
    assert m.observation_grad(x, 0.0, 0.0, np.array([0.5, 0.6])).shape == (7, 2)


def test_nonlinear_mean_gradient_values():
    m = builtin_nonlinear()
    np.testing.assert_allclose(m.mean_grad(0.0, np.array([0.7, 0.6])), [0.0, 0.0])
    np.testing.assert_allclose(m.mean_grad(0.0, np.array([0.7, 3.0]))[1], 0.0)
    assert m.mean_grad(2.0, np.array([0.7, 0.6]))[0] == 2.0


def test_lgss_zero_noise_recursion(zero_rng):
    m = builtin_lgss()
    # u0 drives the first transition; with u0 = 0 the first state stays at x0
    traj = simulate(m, (0.5, 0.1), [1.0, 1.0], zero_rng)
    np.testing.assert_allclose(traj.states, [0.0, 1.0])
    traj = simulate(m, (0.5, 0.1), [1.0, 1.0], zero_rng, u0=1.0)
    np.testing.assert_allclose(traj.states, [1.0, 1.5])
    np.testing.assert_allclose(traj.observations, [1.0, 1.5])


def test_nonlinear_zero_noise_step(zero_rng):
    traj = simulate(builtin_nonlinear(), (0.7, 0.6), [1.0, 0.0], zero_rng)
    assert traj.states[0] == 0.0
    assert traj.states[1] == pytest.approx(1.0)
    assert traj.observations[1] == pytest.approx(0.9)


@pytest.mark.parametrize("name", ["lgss", "gopaluni"])
def test_simulate_is_reproducible(name):
    m = get_model(name)
    u = np.tile([1.0, -1.0, 0.0], 20)
    a = simulate(m, (0.5, 0.6), u, 123)
    b = simulate(m, (0.5, 0.6), u, 123)
    c = simulate(m, (0.5, 0.6), u, 124)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.observations, b.observations)
    assert not np.array_equal(a.states, c.states)
    assert len(a) == 60


def test_samplers_match_densities():
    # sample moments of the transition draws agree with the declared Gaussian
    m = builtin_nonlinear()
    rng = np.random.default_rng(0)
    theta = np.array([0.7, 0.6])
    x = m.sample_transition(np.full(200_000, 0.8), 1.0, theta, rng)
    mean = m.transition_mean(0.8, 1.0, theta)
    assert abs(x.mean() - mean) < 4 * 0.1 / np.sqrt(len(x))
    assert abs(x.std() - 0.1) < 1e-3
    # and the log-density integrates to one on a grid
    grid = np.linspace(mean - 1, mean + 1, 20001)
    mass = trapezoid(np.exp(m.transition_logpdf(0.8, grid, 1.0, theta)), grid)
    assert mass == pytest.approx(1.0, abs=1e-9)


def test_simulate_rejects_bad_arguments():
    m = builtin_lgss()
    with pytest.raises(ValueError):
        simulate(m, (0.5,), [1.0], 0)
    with pytest.raises(ValueError):
        simulate(m, (0.5, 0.1), [], 0)
    with pytest.raises(ValueError):
        get_model("nope")


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_simulate_reports_divergence():
    with pytest.raises(ModelDivergenceError, match="non-finite"):
        simulate(builtin_lgss(), (1e200, 0.1), np.ones(10), 0)
