"""Auxiliary particle filter and fixed-lag smoothed score estimation.

The filter resamples multinomially at every step, propagates through the
model's proposal kernel (the transition density itself by default) and
weights by ``g f / R``.  The score is estimated with Fisher's identity: the
gradients of ``log g`` and ``log f`` are averaged over the time-``t``
ancestors of the particles alive at ``kappa_t = min(t + lag, T)``, using
the filter weights at ``kappa_t``.

Arrays in :class:`ParticleSystem` are time-major with row 0 holding the
known initial state, so row ``t`` corresponds to ``x_t``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import StateSpaceModel, Trajectory
from .utils import as_generator

logger = logging.getLogger(__name__)


class ParticleCollapseError(RuntimeError):
    """All importance weights vanished (or were non-finite) at some time step."""

    def __init__(self, t: int, message: str = ""):
        self.t = t
        super().__init__(message or f"particle collapse at t={t}: all weights zero or non-finite")


@dataclass(frozen=True)
class SmootherConfig:
    num_particles: int = 1000
    lag: int = 5

    def __post_init__(self):
        if self.num_particles < 2:
            raise ValueError("num_particles must be >= 2")
        if self.lag < 0:
            raise ValueError("lag must be >= 0")


@dataclass(frozen=True)
class ParticleSystem:
    """Output of :func:`run_apf`.

    particles : (T+1, N) states, row 0 is ``x0``
    weights : (T+1, N) normalised filter weights ``w_{t|t}``
    log_weights : (T+1, N) unnormalised log-weights as computed at each step
    ancestors : (T+1, N) index into row ``t-1`` of each particle's parent;
        row 0 is the identity
    """

    particles: np.ndarray
    weights: np.ndarray
    log_weights: np.ndarray
    ancestors: np.ndarray

    @property
    def T(self) -> int:
        return self.particles.shape[0] - 1

    @property
    def N(self) -> int:
        return self.particles.shape[1]

    def filtered_means(self) -> np.ndarray:
        return np.sum(self.weights[1:] * self.particles[1:], axis=1)

    def ess(self) -> np.ndarray:
        return 1.0 / np.sum(self.weights[1:] ** 2, axis=1)


def multinomial_resample(weights: np.ndarray, rng, size: int | None = None) -> np.ndarray:
    """I.i.d. draws of indices with probabilities ``weights``."""
    size = len(weights) if size is None else size
    cdf = np.cumsum(weights)
    idx = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
    return np.minimum(idx, len(weights) - 1)


def run_apf(
    model: StateSpaceModel,
    theta,
    traj: Trajectory,
    config: SmootherConfig,
    seed=None,
    callback: Callable[[int, float], None] | None = None,
) -> ParticleSystem:
    """Run the particle filter over ``traj.observations``.

    ``callback(t, ess)`` is invoked after weighting at every step.
    Raises :class:`ParticleCollapseError` if every weight vanishes.
    """
    theta = model.check_theta(theta)
    T = len(traj)
    if T < 1:
        raise ValueError("trajectory must have at least one time step")
    N = config.num_particles
    rng = as_generator(seed)
    X = np.empty((T + 1, N))
    W = np.empty((T + 1, N))
    logW = np.zeros((T + 1, N))
    A = np.empty((T + 1, N), dtype=np.intp)
    X[0] = model.x0
    W[0] = 1.0 / N
    A[0] = np.arange(N)
    u_prev, u, y = traj.prev_inputs, traj.inputs, traj.observations
    proposal = model.proposal

    for t in range(1, T + 1):
        a = multinomial_resample(W[t - 1], rng)
        x_prev = X[t - 1, a]
        if proposal is None:
            x = model.sample_transition(x_prev, u_prev[t - 1], theta, rng)
            lw = model.observation_logpdf(x, y[t - 1], u[t - 1], theta)
        else:
            x = proposal.sample(x_prev, u_prev[t - 1], theta, rng)
            lw = (model.observation_logpdf(x, y[t - 1], u[t - 1], theta)
                  + model.transition_logpdf(x_prev, x, u_prev[t - 1], theta)
                  - proposal.logpdf(x_prev, x, u_prev[t - 1], theta))
        lw = np.where(np.isnan(lw), -np.inf, np.broadcast_to(lw, (N,)))
        top = lw.max()
        if not np.isfinite(top):
            raise ParticleCollapseError(t)
        w = np.exp(lw - top)
        W[t] = w / w.sum()
        X[t], A[t], logW[t] = x, a, lw
        if callback is not None:
            callback(t, 1.0 / np.sum(W[t] ** 2))
    return ParticleSystem(particles=X, weights=W, log_weights=logW, ancestors=A)


def fl_ancestors(ps: ParticleSystem, t: int, lag: int) -> np.ndarray:
    """Index at time ``t`` of the ancestor of each particle alive at ``min(t + lag, T)``."""
    T = ps.T
    if not 1 <= t <= T:
        raise ValueError(f"t must be in 1..{T}, got {t}")
    idx = np.arange(ps.N)
    for s in range(min(t + lag, T), t, -1):
        idx = ps.ancestors[s, idx]
    return idx


def score_from_particles(model: StateSpaceModel, theta, traj: Trajectory,
                         ps: ParticleSystem, lag: int) -> np.ndarray:
    theta = model.check_theta(theta)
    T = ps.T
    X, A = ps.particles, ps.ancestors
    parents = np.take_along_axis(X[:-1], A[1:], axis=1)
    grads = (model.observation_grad(X[1:], traj.observations[:, None], traj.inputs[:, None], theta)
             + model.transition_grad(parents, X[1:], traj.prev_inputs[:, None], theta))
    grads = np.broadcast_to(grads, (T, ps.N, model.dim_theta))
    score = np.zeros(model.dim_theta)
    for t in range(1, T + 1):
        kappa = min(t + lag, T)
        idx = fl_ancestors(ps, t, lag)
        score += ps.weights[kappa] @ grads[t - 1, idx]
    return score


def estimate_score(
    model: StateSpaceModel,
    theta,
    traj: Trajectory,
    config: SmootherConfig,
    seed=None,
    callback: Callable[[int, float], None] | None = None,
) -> np.ndarray:
    """Fixed-lag smoothed particle estimate of the score at ``theta``."""
    ps = run_apf(model, theta, traj, config, seed, callback)
    return score_from_particles(model, theta, traj, ps, config.lag)
