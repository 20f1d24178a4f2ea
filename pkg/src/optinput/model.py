"""Scalar nonlinear state-space models with known initial state.

A model is described by a transition density ``f(x_t | x_{t-1}, u_{t-1})``
and an observation density ``g(y_t | x_t, u_t)``, both parametrised by a
vector ``theta``.  Every density, gradient and sampler works elementwise on
numpy arrays so that a whole particle cloud is processed in one call.

Indexing convention: ``u_{t-1}`` drives the transition into ``x_t`` and
``u_t`` enters the observation at ``t``.  The simulator takes ``u_{1:T}``
plus a separate ``u0`` (zero unless given) for the first transition.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .utils import as_generator

_LOG_2PI = np.log(2.0 * np.pi)


class ModelDivergenceError(RuntimeError):
    """Raised when simulation produces a non-finite state or observation."""


def gaussian_logpdf(x, mean, std):
    z = (x - mean) / std
    return -0.5 * _LOG_2PI - np.log(std) - 0.5 * z * z


@dataclass(frozen=True)
class ProposalSpec:
    """Propagation kernel used by the particle filter instead of ``f``.

    ``logpdf(x_prev, x_next, u_prev, theta)`` and
    ``sample(x_prev, u_prev, theta, rng)``.  Its support must cover the
    support of the transition density.
    """

    logpdf: Callable
    sample: Callable


class StateSpaceModel:
    """Base class for a parametrised scalar state-space model.

    Subclasses implement the four density/gradient methods and the two
    samplers.  ``proposal`` of ``None`` means the bootstrap kernel
    (propagate through the transition density itself).
    """

    name: str = "model"
    dim_theta: int = 1
    x0: float = 0.0
    proposal: ProposalSpec | None = None

    def transition_logpdf(self, x_prev, x_next, u_prev, theta):
        raise NotImplementedError

    def observation_logpdf(self, x, y, u, theta):
        raise NotImplementedError

    def transition_grad(self, x_prev, x_next, u_prev, theta):
        """Gradient of the transition log-density w.r.t. ``theta``, shape ``(..., d)``."""
        raise NotImplementedError

    def observation_grad(self, x, y, u, theta):
        """Gradient of the observation log-density w.r.t. ``theta``, shape ``(..., d)``."""
        raise NotImplementedError

    def sample_transition(self, x_prev, u_prev, theta, rng):
        raise NotImplementedError

    def sample_observation(self, x, u, theta, rng):
        raise NotImplementedError

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim_theta,):
            raise ValueError(
                f"{self.name}: theta must have length {self.dim_theta}, got shape {theta.shape}"
            )
        if not np.all(np.isfinite(theta)):
            raise ValueError(f"{self.name}: theta has non-finite entries: {theta}")
        return theta


@dataclass(frozen=True)
class Trajectory:
    """Inputs ``u_{1:T}``, states ``x_{1:T}`` and observations ``y_{1:T}``.

    ``u0`` is the input that drove the transition from the known ``x0``
    into ``x_1``.
    """

    inputs: np.ndarray
    states: np.ndarray
    observations: np.ndarray
    u0: float = 0.0
    x0: float = 0.0

    def __post_init__(self):
        n = len(self.inputs)
        if len(self.states) != n or len(self.observations) != n:
            raise ValueError("inputs, states and observations must have equal length")

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def prev_inputs(self) -> np.ndarray:
        """``u_{0:T-1}``: the input driving the transition into each ``x_t``."""
        return np.concatenate(([self.u0], self.inputs[:-1])) if len(self) else np.empty(0)


def simulate(model: StateSpaceModel, theta, inputs, seed=None, u0: float = 0.0) -> Trajectory:
    """Draw states and observations sequentially, starting at the known ``x0``.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``; the same
    seed gives a bit-identical trajectory.
    """
    theta = model.check_theta(theta)
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 1 or inputs.size == 0:
        raise ValueError("inputs must be a nonempty 1-d sequence")
    rng = as_generator(seed)
    T = inputs.size
    states = np.empty(T)
    obs = np.empty(T)
    x_prev, u_prev = float(model.x0), float(u0)
    for t in range(T):
        x = float(model.sample_transition(x_prev, u_prev, theta, rng))
        y = float(model.sample_observation(x, inputs[t], theta, rng))
        if not (np.isfinite(x) and np.isfinite(y)):
            raise ModelDivergenceError(
                f"{model.name}: non-finite sample at t={t + 1} (x={x}, y={y}, theta={theta})"
            )
        states[t], obs[t] = x, y
        x_prev, u_prev = x, inputs[t]
    return Trajectory(inputs=inputs.copy(), states=states, observations=obs,
                      u0=float(u0), x0=float(model.x0))


class LinearGaussianModel(StateSpaceModel):
    """``x_{t+1} = a x_t + u_t + v_t``, ``v ~ N(0, q^2)``; ``y_t = x_t + e_t``.

    ``theta = (a, q)``; the measurement noise std is fixed at ``obs_std``.
    """

    name = "lgss"
    dim_theta = 2

    def __init__(self, obs_std: float = 0.1, x0: float = 0.0):
        self.obs_std = obs_std
        self.x0 = x0

    def check_theta(self, theta) -> np.ndarray:
        theta = super().check_theta(theta)
        if theta[1] <= 0:
            raise ValueError(f"lgss: process noise std q must be positive, got {theta[1]}")
        return theta

    def transition_mean(self, x_prev, u_prev, theta):
        return theta[0] * x_prev + u_prev

    def transition_logpdf(self, x_prev, x_next, u_prev, theta):
        return gaussian_logpdf(x_next, self.transition_mean(x_prev, u_prev, theta), theta[1])

    def observation_logpdf(self, x, y, u, theta):
        return gaussian_logpdf(y, x, self.obs_std)

    def transition_grad(self, x_prev, x_next, u_prev, theta):
        a, q = theta
        res = x_next - a * x_prev - u_prev
        return np.stack(np.broadcast_arrays(res * x_prev / q**2, -1.0 / q + res**2 / q**3), axis=-1)

    def observation_grad(self, x, y, u, theta):
        shape = np.broadcast(x, y).shape
        return np.zeros(shape + (self.dim_theta,))

    def sample_transition(self, x_prev, u_prev, theta, rng):
        mean = self.transition_mean(x_prev, u_prev, theta)
        return mean + theta[1] * rng.standard_normal(np.shape(mean))

    def sample_observation(self, x, u, theta, rng):
        return x + self.obs_std * rng.standard_normal(np.shape(x))


class GopaluniModel(StateSpaceModel):
    """Nonlinear benchmark model.

    ``x_{t+1} = a x_t + x_t / (b + x_t^2) + u_t + v_t`` and
    ``y_t = x_t / 2 + 2 x_t^2 / 5 + e_t`` with ``theta = (a, b)`` and
    fixed noise stds ``proc_std``, ``obs_std``.
    """

    name = "gopaluni"
    dim_theta = 2

    def __init__(self, proc_std: float = 0.1, obs_std: float = 0.1, x0: float = 0.0):
        self.proc_std = proc_std
        self.obs_std = obs_std
        self.x0 = x0

    def transition_mean(self, x_prev, u_prev, theta):
        return theta[0] * x_prev + x_prev / (theta[1] + x_prev**2) + u_prev

    def mean_grad(self, x_prev, theta):
        """Gradient of the transition mean w.r.t. ``theta``."""
        x_prev = np.asarray(x_prev, dtype=float)
        return np.stack((x_prev, -x_prev / (theta[1] + x_prev**2) ** 2), axis=-1)

    def observation_mean(self, x):
        return 0.5 * x + 0.4 * x**2

    def transition_logpdf(self, x_prev, x_next, u_prev, theta):
        return gaussian_logpdf(x_next, self.transition_mean(x_prev, u_prev, theta), self.proc_std)

    def observation_logpdf(self, x, y, u, theta):
        return gaussian_logpdf(y, self.observation_mean(x), self.obs_std)

    def transition_grad(self, x_prev, x_next, u_prev, theta):
        res = x_next - self.transition_mean(x_prev, u_prev, theta)
        x_prev, res = np.broadcast_arrays(x_prev, res)
        return (res / self.proc_std**2)[..., None] * self.mean_grad(x_prev, theta)

    def observation_grad(self, x, y, u, theta):
        shape = np.broadcast(x, y).shape
        return np.zeros(shape + (self.dim_theta,))

    def sample_transition(self, x_prev, u_prev, theta, rng):
        mean = self.transition_mean(x_prev, u_prev, theta)
        return mean + self.proc_std * rng.standard_normal(np.shape(mean))

    def sample_observation(self, x, u, theta, rng):
        mean = self.observation_mean(x)
        return mean + self.obs_std * rng.standard_normal(np.shape(mean))


def builtin_lgss() -> LinearGaussianModel:
    return LinearGaussianModel()


def builtin_nonlinear() -> GopaluniModel:
    return GopaluniModel()


MODELS = {"lgss": builtin_lgss, "gopaluni": builtin_nonlinear}

#: true parameters of the two built-in models
TRUE_THETA = {"lgss": (0.5, 0.1), "gopaluni": (0.7, 0.6)}


def get_model(name: str) -> StateSpaceModel:
    try:
        return MODELS[name]()
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
