"""Exact filtering, log-likelihood and score for the linear Gaussian model.

Used as an oracle for the particle methods.  The score is obtained by
differentiating the prediction-error decomposition of the log-likelihood,
propagating the sensitivities of the predicted mean and variance through
the filter recursions.
"""
from __future__ import annotations

import numpy as np

from .model import Trajectory

_LOG_2PI = np.log(2.0 * np.pi)


def kalman_filter(theta, traj: Trajectory, obs_std: float = 0.1):
    """Return ``(filtered_means, filtered_vars, loglik)`` for ``y_{1:T}``."""
    a, q = float(theta[0]), float(theta[1])
    r2 = obs_std**2
    T = len(traj)
    means, variances = np.empty(T), np.empty(T)
    loglik = 0.0
    x_f, P_f = traj.x0, 0.0
    u_prev = traj.prev_inputs
    for t in range(T):
        x_p = a * x_f + u_prev[t]
        P_p = a * a * P_f + q * q
        S = P_p + r2
        if not S > 0:
            raise FloatingPointError(f"non-positive innovation variance at t={t + 1}")
        e = traj.observations[t] - x_p
        loglik += -0.5 * (_LOG_2PI + np.log(S) + e * e / S)
        K = P_p / S
        x_f = x_p + K * e
        P_f = P_p - K * P_p
        means[t], variances[t] = x_f, P_f
    return means, variances, loglik


def lgss_loglik(theta, traj: Trajectory, obs_std: float = 0.1) -> float:
    return kalman_filter(theta, traj, obs_std)[2]


def lgss_exact_score(theta, traj: Trajectory, obs_std: float = 0.1) -> np.ndarray:
    """Gradient of ``log p(y_{1:T} | u_{1:T})`` w.r.t. ``theta = (a, q)``."""
    a, q = float(theta[0]), float(theta[1])
    if not q > 0:
        raise ValueError("process noise std theta[1] must be positive")
    r2 = obs_std**2
    score = np.zeros(2)
    x_f, P_f = traj.x0, 0.0
    dx_f, dP_f = np.zeros(2), np.zeros(2)
    u_prev = traj.prev_inputs
    for t in range(len(traj)):
        x_p = a * x_f + u_prev[t]
        P_p = a * a * P_f + q * q
        dx_p = a * dx_f + np.array([x_f, 0.0])
        dP_p = a * a * dP_f + np.array([2.0 * a * P_f, 2.0 * q])

        S = P_p + r2
        if not S > 0:
            raise FloatingPointError(f"non-positive innovation variance at t={t + 1}")
        e = traj.observations[t] - x_p
        de = -dx_p
        dS = dP_p
        score += -0.5 * (dS / S + 2.0 * e * de / S - e * e * dS / S**2)

        K = P_p / S
        dK = (dP_p * S - P_p * dS) / S**2
        x_f = x_p + K * e
        dx_f = dx_p + dK * e + K * de
        P_f = P_p - K * P_p
        dP_f = dP_p - dK * P_p - K * dP_p
    return score
