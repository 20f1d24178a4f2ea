"""Fisher information estimates from replicated score estimates.

The information matrix of an input is estimated as the scaled, uncentred
outer-product sum of ``M`` score estimates, each computed on an independent
realisation of process and measurement noise.  The result is symmetric
positive semidefinite by construction.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .graph import BasisInput
from .model import ModelDivergenceError, StateSpaceModel, simulate
from .smc import ParticleCollapseError, SmootherConfig, estimate_score
from .utils import as_generator, check_simplex, derive_seed

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-10


def estimate_fim(scores) -> np.ndarray:
    """``sum_m s_m s_m^T / (M - 1)`` for score samples of shape ``(M, d)``."""
    S = np.atleast_2d(np.asarray(scores, dtype=float))
    M = S.shape[0]
    if M < 2:
        raise ValueError(f"need at least 2 score samples, got {M}")
    F = S.T @ S / (M - 1)
    return 0.5 * (F + F.T)


def check_info_matrix(F, tol: float = PSD_TOL) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise ValueError(f"information matrix must be square, got shape {F.shape}")
    if not np.all(np.isfinite(F)):
        raise ValueError("information matrix has non-finite entries")
    if np.max(np.abs(F - F.T), initial=0.0) > SYMMETRY_TOL * max(1.0, np.abs(F).max()):
        raise ValueError("information matrix is not symmetric")
    lo = np.linalg.eigvalsh(F).min()
    if lo < -tol * max(1.0, np.abs(F).max()):
        raise ValueError(f"information matrix is not PSD (min eigenvalue {lo:.3g})")
    return F


def mix_fim(gamma, fims) -> np.ndarray:
    gamma = check_simplex(gamma, len(fims))
    F = np.tensordot(gamma, np.stack([np.asarray(f, dtype=float) for f in fims]), axes=1)
    return 0.5 * (F + F.T)


def _one_score(model, theta, u0, inputs, config, seed):
    rng = as_generator(seed)
    traj = simulate(model, theta, inputs, rng, u0=u0)
    return estimate_score(model, theta, traj, config, rng)


def _replicate(model, theta, u0, inputs, config, seed, m):
    ss = derive_seed(seed, m)
    try:
        return _one_score(model, theta, u0, inputs, config, ss)
    except (ParticleCollapseError, ModelDivergenceError) as exc:
        logger.warning("replication %d failed (%s); retrying with a derived seed", m, exc)
        return _one_score(model, theta, u0, inputs, config, derive_seed(ss, 1))


def sample_scores(model: StateSpaceModel, theta, windows, config: SmootherConfig,
                  seed=0, threads: int = 1) -> np.ndarray:
    """Score estimates on fresh simulated data, one per ``(u0, inputs)`` window.

    Replication ``m`` uses the stream ``derive_seed(seed, m)`` so the result
    does not depend on ``threads``.
    """
    theta = model.check_theta(theta)
    jobs = [(u0, np.asarray(inp, dtype=float), m) for m, (u0, inp) in enumerate(windows)]

    def run(job):
        u0, inputs, m = job
        return _replicate(model, theta, u0, inputs, config, seed, m)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(run, jobs))
    else:
        out = [run(j) for j in jobs]
    scores = np.array(out)
    logger.debug("score sample mean %s (M=%d)", scores.mean(axis=0), len(scores))
    return scores


def basis_scores(model, theta, basis: BasisInput, horizon: int, M: int,
                 config: SmootherConfig, seed=0, threads: int = 1) -> np.ndarray:
    if M < 2:
        raise ValueError(f"M must be >= 2, got {M}")
    signal = basis.signal(horizon)
    return sample_scores(model, theta, [(signal[0], signal[1:])] * M, config, seed, threads)


def fim_for_basis(model, theta, basis: BasisInput, horizon: int, M: int,
                  config: SmootherConfig, seed=0, threads: int = 1) -> np.ndarray:
    """Information matrix of one basis input from ``M`` particle score estimates."""
    return estimate_fim(basis_scores(model, theta, basis, horizon, M, config, seed, threads))


def log_det(F) -> float:
    sign, val = np.linalg.slogdet(F)
    return float(val) if sign > 0 else -np.inf


def trace_inv(F) -> float:
    try:
        return float(np.trace(np.linalg.inv(F)))
    except np.linalg.LinAlgError:
        return np.inf


def bootstrap_halfwidths(scores, seed=0, n_boot: int = 200) -> tuple[float, float]:
    """95% half-widths of ``log det`` and ``tr(inv)`` of the estimate,
    by nonparametric bootstrap over the score samples."""
    S = np.asarray(scores, dtype=float)
    rng = np.random.default_rng(seed)
    M = len(S)
    ld, ti = np.empty(n_boot), np.empty(n_boot)
    for b in range(n_boot):
        F = estimate_fim(S[rng.integers(0, M, M)])
        ld[b], ti[b] = log_det(F), trace_inv(F)
    ok = np.isfinite(ld) & np.isfinite(ti)
    if ok.sum() < 2:
        return np.inf, np.inf
    return 1.96 * float(np.std(ld[ok], ddof=1)), 1.96 * float(np.std(ti[ok], ddof=1))
