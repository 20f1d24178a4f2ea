import numpy as np
import pytest

from optinput.kalman import kalman_filter, lgss_exact_score, lgss_loglik
from optinput.model import Trajectory, builtin_lgss, simulate

THETA0 = np.array([0.5, 0.1])


def central_diff(f, theta, h):
    g = np.empty(2)
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        g[k] = (f(theta + e) - f(theta - e)) / (2 * h)
    return g


@pytest.mark.parametrize("seed", range(5))
def test_exact_score_matches_loglik_differences(seed):
    rng = np.random.default_rng(seed)
    u = rng.choice([-1.0, 0.0, 1.0], 100)
    traj = simulate(builtin_lgss(), THETA0, u[1:], rng, u0=u[0])
    theta = THETA0 + rng.uniform(-0.05, 0.05, 2)
    exact = lgss_exact_score(theta, traj)
    numeric = central_diff(lambda th: lgss_loglik(th, traj), theta, 1e-5)
    np.testing.assert_allclose(exact, numeric, rtol=1e-6, atol=1e-6 * np.abs(exact).max())


def test_empty_trajectory_gives_zero_score():
    e = np.empty(0)
    traj = Trajectory(e, e, e)
    assert np.array_equal(lgss_exact_score(THETA0, traj), np.zeros(2))


@pytest.mark.slow
def test_exact_score_has_zero_mean_at_truth():
    m = builtin_lgss()
    u = np.tile([1.0, -1.0, 0.0, 1.0], 25)
    S = np.array([lgss_exact_score(THETA0, simulate(m, THETA0, u, s)) for s in range(2000)])
    se = S.std(axis=0, ddof=1) / np.sqrt(len(S))
    assert np.all(np.abs(S.mean(axis=0)) < 3 * se)


def test_kalman_filter_noise_free_limit():
    # with negligible noise the filtered mean tracks the deterministic recursion
    traj = simulate(builtin_lgss(), (0.5, 1e-6), np.ones(20), 0)
    means, variances, _ = kalman_filter((0.5, 1e-6), traj, obs_std=0.1)
    assert np.all(variances < 1e-6)
    np.testing.assert_allclose(means, traj.states, atol=1e-5)


def test_exact_score_rejects_nonpositive_std():
    traj = simulate(builtin_lgss(), THETA0, np.ones(3), 0)
    with pytest.raises(ValueError):
        lgss_exact_score((0.5, 0.0), traj)
