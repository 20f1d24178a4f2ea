import numpy as np
import pytest

from conftest import FlatObservationModel, ThetaFreeModel
from optinput.kalman import kalman_filter, lgss_exact_score
from optinput.model import ProposalSpec, builtin_lgss, builtin_nonlinear, gaussian_logpdf, simulate
from optinput.smc import (ParticleCollapseError, SmootherConfig, estimate_score, fl_ancestors,
                          run_apf)

THETA0 = np.array([0.5, 0.1])


@pytest.fixture(scope="module")
def lgss_data():
    rng = np.random.default_rng(7)
    u = rng.choice([-1.0, 1.0], 51)
    return simulate(builtin_lgss(), THETA0, u[1:], rng, u0=u[0])


def test_config_validation():
    with pytest.raises(ValueError):
        SmootherConfig(num_particles=1)
    with pytest.raises(ValueError):
        SmootherConfig(lag=-1)


def test_weights_normalised_and_ancestors_valid(lgss_data):
    ps = run_apf(builtin_lgss(), THETA0, lgss_data, SmootherConfig(300, 5), seed=1)
    assert ps.T == 50 and ps.N == 300
    np.testing.assert_allclose(ps.weights.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(ps.weights >= 0)
    assert ps.ancestors.min() >= 0 and ps.ancestors.max() < 300
    assert np.all(ps.particles[0] == 0.0)


def test_bootstrap_weight_is_observation_density(lgss_data):
    m = builtin_lgss()
    ps = run_apf(m, THETA0, lgss_data, SmootherConfig(100, 0), seed=3)
    for t in (1, 17, 50):
        expected = m.observation_logpdf(ps.particles[t], lgss_data.observations[t - 1],
                                        lgss_data.inputs[t - 1], THETA0)
        assert np.array_equal(ps.log_weights[t], expected)


def test_flat_observation_gives_uniform_weights():
    m = FlatObservationModel()
    traj = simulate(m, THETA0, np.ones(10), 0)
    ps = run_apf(m, THETA0, traj, SmootherConfig(2, 0), seed=0)
    assert np.all(ps.weights == 0.5)


def test_run_apf_is_reproducible(lgss_data):
    cfg = SmootherConfig(50, 3)
    a = estimate_score(builtin_lgss(), THETA0, lgss_data, cfg, seed=11)
    b = estimate_score(builtin_lgss(), THETA0, lgss_data, cfg, seed=11)
    c = estimate_score(builtin_lgss(), THETA0, lgss_data, cfg, seed=12)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_ess_callback(lgss_data):
    seen = []
    run_apf(builtin_lgss(), THETA0, lgss_data, SmootherConfig(40, 0), seed=0,
            callback=lambda t, ess: seen.append((t, ess)))
    assert [t for t, _ in seen] == list(range(1, 51))
    assert all(1.0 <= e <= 40.0 + 1e-9 for _, e in seen)


def test_filtered_means_track_kalman(lgss_data):
    N = 1000
    ps = run_apf(builtin_lgss(), THETA0, lgss_data, SmootherConfig(N, 0), seed=5)
    kf_mean, kf_var, _ = kalman_filter(THETA0, lgss_data)
    # Monte Carlo standard error of a weighted mean, inflated by 1/ESS
    se = np.sqrt(kf_var / ps.ess())
    assert np.all(np.abs(ps.filtered_means() - kf_mean) < 3 * se)


def test_custom_proposal_targets_same_filter(lgss_data):
    # a wider Gaussian proposal around the transition mean must give the same filter
    wide = 0.3

    def sample(x_prev, u_prev, theta, rng):
        return theta[0] * x_prev + u_prev + wide * rng.standard_normal(np.shape(x_prev))

    def logpdf(x_prev, x_next, u_prev, theta):
        return gaussian_logpdf(x_next, theta[0] * x_prev + u_prev, wide)

    m = builtin_lgss()
    m.proposal = ProposalSpec(logpdf=logpdf, sample=sample)
    ps = run_apf(m, THETA0, lgss_data, SmootherConfig(3000, 0), seed=2)
    kf_mean, kf_var, _ = kalman_filter(THETA0, lgss_data)
    se = np.sqrt(kf_var / ps.ess())
    assert np.all(np.abs(ps.filtered_means() - kf_mean) < 3 * se)
    t = 10
    expected = (m.observation_logpdf(ps.particles[t], lgss_data.observations[t - 1], 0, THETA0)
                + m.transition_logpdf(ps.particles[t - 1, ps.ancestors[t]], ps.particles[t],
                                      lgss_data.inputs[t - 2], THETA0)
                - logpdf(ps.particles[t - 1, ps.ancestors[t]], ps.particles[t], lgss_data.inputs[t - 2], THETA0))
    np.testing.assert_allclose(ps.log_weights[t], expected)


def test_collapse_is_reported():
    class Impossible(ThetaFreeModel):
        def observation_logpdf(self, x, y, u, theta):
            return np.full(np.broadcast(x, y).shape, -np.inf)

    m = Impossible()
    traj = simulate(m, THETA0, np.ones(5), 0)
    with pytest.raises(ParticleCollapseError) as info:
        run_apf(m, THETA0, traj, SmootherConfig(10, 0), seed=0)
    assert info.value.t == 1


def test_fl_ancestors(lgss_data):
    ps = run_apf(builtin_lgss(), THETA0, lgss_data, SmootherConfig(30, 0), seed=4)
    T = ps.T
    assert np.array_equal(fl_ancestors(ps, 7, 0), np.arange(30))
    # lag beyond the horizon traces from T for every t
    for t in (1, 20, T):
        assert np.array_equal(fl_ancestors(ps, t, T + 5), fl_ancestors(ps, t, T - t))
    # path composition: ancestor at t-1 is the parent of the ancestor at t
    for t in range(2, T - 3):
        at_t = fl_ancestors(ps, t, 4)
        kappa_lag = 4 + 1
        assert np.array_equal(fl_ancestors(ps, t - 1, kappa_lag), ps.ancestors[t, at_t])
    with pytest.raises(ValueError):
        fl_ancestors(ps, 0, 1)


def test_theta_free_model_has_zero_score():
    m = ThetaFreeModel()
    traj = simulate(m, THETA0, np.ones(30), 0)
    s = estimate_score(m, THETA0, traj, SmootherConfig(50, 5), seed=0)
    assert np.array_equal(s, np.zeros(2))


def test_particle_score_near_exact_on_one_dataset(lgss_data):
    exact = lgss_exact_score(THETA0, lgss_data)
    est = np.array([estimate_score(builtin_lgss(), THETA0, lgss_data, SmootherConfig(500, 10), seed=s)
                    for s in range(10)])
    spread = est.std(axis=0, ddof=1)
    assert np.all(np.abs(est.mean(axis=0) - exact) < 3 * spread / np.sqrt(10))


def test_nonlinear_score_is_finite():
    m = builtin_nonlinear()
    traj = simulate(m, (0.7, 0.6), np.tile([1.0, 0.0, -1.0], 20), 0)
    s = estimate_score(m, (0.7, 0.6), traj, SmootherConfig(100, 5), seed=0)
    assert s.shape == (2,) and np.all(np.isfinite(s))
