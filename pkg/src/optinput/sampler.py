"""Markov chains with a prescribed stationary pmf over input tuples.

The chain moves from tuple ``(a, z)`` to ``(z, v)`` with probability
``p(z, v) / sum_v' p(z, v')``.  Stationarity of ``p`` (equal leading and
trailing marginals) makes ``p`` an invariant distribution of this chain.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .graph import StationaryPmf, strongly_connected_components
from .utils import as_generator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChainSpec:
    """``transition[z]`` is the distribution of the next symbol given the
    last ``memory - 1`` symbols ``z`` (as alphabet indices)."""

    pmf: StationaryPmf
    transition: np.ndarray
    burn_in: int = 10_000
    length: int = 500

    @property
    def memory(self) -> int:
        return self.pmf.memory

    @property
    def alphabet(self):
        return self.pmf.alphabet


def build_chain(pmf: StationaryPmf, burn_in: int = 10_000, length: int = 500,
                tol: float = 1e-10) -> ChainSpec:
    pmf.check(tol)
    p = np.clip(pmf.probs, 0.0, None)
    c = pmf.alphabet.size
    # contexts with zero marginal are unreachable in steady state; any row works
    context_mass = p.sum(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        trans = np.where(context_mass > 0, p / context_mass, 1.0 / c)
    return ChainSpec(pmf=pmf, transition=trans, burn_in=burn_in, length=length)


def tuple_transition_matrix(chain: ChainSpec) -> np.ndarray:
    """Transition matrix over ``memory``-tuples in lexicographic index order."""
    c, m = chain.alphabet.size, chain.memory
    n = c**m
    P = np.zeros((n, n))
    for i, node in enumerate(itertools.product(range(c), repeat=m)):
        z = node[1:]
        for v in range(c):
            j = np.ravel_multi_index(z + (v,), (c,) * m)
            P[i, j] += chain.transition[z][v]
    return P


def support_classes(pmf: StationaryPmf) -> list[set]:
    """Communicating classes of the chain restricted to the pmf's support."""
    support = set(pmf.support())
    adj = {s: [s[1:] + (v,) for v in range(pmf.alphabet.size) if s[1:] + (v,) in support]
           for s in support}
    return strongly_connected_components(adj)


def sample_input(chain: ChainSpec, seed=None) -> np.ndarray:
    """Start from a tuple drawn from the pmf, run ``burn_in`` steps, then
    return the next ``length`` symbols as alphabet values."""
    if chain.burn_in < 0 or chain.length < 1:
        raise ValueError("burn_in must be >= 0 and length >= 1")
    classes = support_classes(chain.pmf)
    if len(classes) > 1:
        logger.warning(
            "optimal pmf splits into %d communicating classes; a single realisation "
            "stays in one of them and reproduces the pmf only in ensemble", len(classes))
    rng = as_generator(seed)
    c, m = chain.alphabet.size, chain.memory
    flat = chain.pmf.probs.ravel()
    start = int(np.searchsorted(np.cumsum(flat), rng.random() * flat.sum(), side="right"))
    state = list(np.unravel_index(min(start, flat.size - 1), (c,) * m))
    cdfs = np.cumsum(chain.transition, axis=-1)
    n_steps = chain.burn_in + chain.length
    draws = rng.random(n_steps)
    out = np.empty(chain.length, dtype=np.intp)
    ctx = tuple(state[1:])
    for k in range(n_steps):
        cdf = cdfs[ctx]
        v = min(int(np.searchsorted(cdf, draws[k] * cdf[-1], side="right")), c - 1)
        if m > 1:
            ctx = ctx[1:] + (v,)
        if k >= chain.burn_in:
            out[k - chain.burn_in] = v
    return np.asarray(chain.alphabet.values)[out]
