"""Optimal weighting of basis inputs.

Maximises a concave, matrix-nondecreasing criterion of the mixed
information matrix ``sum_j gamma_j F_j`` over the probability simplex with
an away-step Frank-Wolfe method and exact line search, and wraps it in a
Monte Carlo loop that re-estimates the basis information matrices and
averages the resulting weights.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .infomat import check_info_matrix, fim_for_basis, mix_fim
from .utils import check_simplex, derive_seed

logger = logging.getLogger(__name__)


class Criterion(enum.Enum):
    D_OPT = "det"      # maximise log det F
    A_OPT = "trinv"    # maximise -tr(F^{-1})

    @classmethod
    def parse(cls, value) -> "Criterion":
        if isinstance(value, cls):
            return value
        for c in cls:
            if value in (c.value, c.name):
                return c
        raise ValueError(f"unknown criterion {value!r}; use 'det' or 'trinv'")


class InfeasibleDesignError(ValueError):
    """Every mixture of the supplied information matrices is singular."""


def _ridge(F):
    d = F.shape[0]
    return 1e-12 * max(np.trace(F) / d, 1e-300) * np.eye(d)


def _inv(F, ridge=False):
    if ridge:
        F = F + _ridge(F)
    return np.linalg.inv(F)


def _is_singular(F) -> bool:
    return np.linalg.cond(F) > 1e14


def objective(F, criterion: Criterion) -> float:
    """Criterion value of a single information matrix (``-inf`` if singular)."""
    F = np.asarray(F, dtype=float)
    if criterion is Criterion.D_OPT:
        sign, val = np.linalg.slogdet(F)
        return float(val) if sign > 0 and not _is_singular(F) else -np.inf
    if _is_singular(F):
        return -np.inf
    return -float(np.trace(np.linalg.inv(F)))


def design_objective(gamma, fims, criterion: Criterion) -> float:
    return objective(mix_fim(gamma, fims), Criterion.parse(criterion))


def _gradient(Minv, fims, criterion):
    if criterion is Criterion.D_OPT:
        return np.einsum("ij,kji->k", Minv, fims)
    Minv2 = Minv @ Minv
    return np.einsum("ij,kji->k", Minv2, fims)


def _directional(A, B, s, criterion, ridge=False):
    """Derivative of the criterion at ``A + s B`` along ``B``."""
    Minv = _inv(A + s * B, ridge)
    if criterion is Criterion.D_OPT:
        return float(np.trace(Minv @ B))
    return float(np.trace(Minv @ B @ Minv))


def _line_search(A, B, s_max, criterion):
    """Maximise the concave ``phi(s) = crit(A + s B)`` on ``[0, s_max]``."""
    def dphi(s):
        F = A + s * B
        return _directional(A, B, s, criterion, ridge=_is_singular(F))

    if dphi(0.0) <= 0.0:
        return 0.0
    if dphi(s_max) >= 0.0:
        return s_max
    return brentq(dphi, 0.0, s_max, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def solve_design(fims, criterion, tol: float = 1e-8, max_iter: int = 10_000) -> np.ndarray:
    """Weights on the simplex maximising the criterion of the mixed matrix.

    Frank-Wolfe with away steps from the uniform weighting; stops when the
    Frank-Wolfe duality gap drops below ``tol``.  When the objective is flat
    the uniform start is returned, so only objective-optimality is promised.
    """
    criterion = Criterion.parse(criterion)
    fims = np.stack([check_info_matrix(f) for f in fims])
    n = len(fims)
    if n == 0:
        raise ValueError("need at least one information matrix")
    gamma = np.full(n, 1.0 / n)
    if _is_singular(mix_fim(gamma, fims)):
        raise InfeasibleDesignError(
            "every mixture of the basis information matrices is singular; "
            f"criterion {criterion.value} is undefined"
        )
    if n == 1:
        return np.ones(1)

    for it in range(max_iter):
        M = mix_fim(gamma, fims)
        g = _gradient(_inv(M), fims, criterion)
        s = int(np.argmax(g))
        gap = g[s] - gamma @ g
        if gap <= tol:
            break
        active = np.flatnonzero(gamma > 0)
        a = active[np.argmin(g[active])]
        away_gain = gamma @ g - g[a]
        if gap >= away_gain or gamma[a] >= 1.0:
            direction = -gamma.copy()
            direction[s] += 1.0
            s_max = 1.0
        else:
            direction = gamma.copy()
            direction[a] -= 1.0
            s_max = gamma[a] / (1.0 - gamma[a])
        B = np.tensordot(direction, fims, axes=1)
        step = _line_search(M, B, s_max, criterion)
        if step == 0.0:
            break
        gamma = gamma + step * direction
        gamma[gamma < 1e-15] = 0.0
        gamma /= gamma.sum()
    else:
        logger.warning("design solver hit max_iter=%d with duality gap %.3g", max_iter, gap)
    return gamma


@dataclass(frozen=True)
class DesignResult:
    """Averaged weights over ``K`` Monte Carlo iterations.

    ``ci_halfwidth`` is ``None`` when ``K == 1``.
    """

    gamma_star: np.ndarray
    gamma_samples: np.ndarray
    ci_halfwidth: np.ndarray | None
    objective_trace: np.ndarray

    @property
    def K(self) -> int:
        return len(self.gamma_samples)


def summarize_weights(gammas) -> tuple[np.ndarray, np.ndarray | None]:
    """Sample mean and normal-approximation 95% half-widths, per coordinate."""
    G = np.atleast_2d(np.asarray(gammas, dtype=float))
    mean = G.mean(axis=0)
    mean /= mean.sum()
    if len(G) < 2:
        return mean, None
    return mean, 1.96 * G.std(axis=0, ddof=1) / np.sqrt(len(G))


def run_mc_design(model, theta, bases, criterion, K: int, M: int, horizon: int,
                  config, seed=0, threads: int = 1, fim_source=None) -> DesignResult:
    """Re-estimate every basis matrix, solve, repeat ``K`` times, average.

    ``fim_source(k, j, basis, seed)`` can replace the particle estimate of
    basis ``j`` at iteration ``k`` (used for deterministic checks).
    """
    criterion = Criterion.parse(criterion)
    if K < 1:
        raise ValueError("K must be >= 1")
    if M < 2:
        raise ValueError("M must be >= 2")
    gammas, trace = [], []
    for k in range(K):
        try:
            fims = []
            for j, basis in enumerate(bases):
                ss = derive_seed(seed, k, j)
                if fim_source is None:
                    fims.append(fim_for_basis(model, theta, basis, horizon, M, config, ss, threads))
                else:
                    fims.append(np.asarray(fim_source(k, j, basis, ss), dtype=float))
            gamma = solve_design(fims, criterion)
        except Exception as exc:
            raise RuntimeError(f"Monte Carlo design iteration {k}: {exc}") from exc
        gammas.append(gamma)
        trace.append(design_objective(gamma, fims, criterion))
        logger.info("iteration %d/%d: objective %.6g", k + 1, K, trace[-1])
    gamma_star, ci = summarize_weights(gammas)
    check_simplex(gamma_star)
    return DesignResult(gamma_star=gamma_star, gamma_samples=np.array(gammas),
                        ci_halfwidth=ci, objective_trace=np.array(trace))
