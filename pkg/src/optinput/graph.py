"""Memory graphs over a finite input alphabet and their cycles.

Nodes of the memory graph of order ``m`` are the ``m``-tuples over the
alphabet; each node ``(u_1, ..., u_m)`` has an edge to ``(u_2, ..., u_m, v)``
for every alphabet value ``v``.  The stationary pmfs over ``m``-tuples form
a polytope whose vertices are the uniform distributions on the prime cycles
of this graph.  Prime cycles of order ``m`` are generated from the
elementary cycles of the order ``m - 1`` graph by sliding a length-``m``
window over the periodic symbol sequence each cycle spells out.

Nodes are stored as tuples of alphabet *indices*; alphabet order therefore
defines node order and the canonical rotation of a cycle.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np

from .utils import check_simplex

DEFAULT_MAX_NODES = 10**5


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite set of admissible input values."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 2:
            raise ValueError("alphabet needs at least two values; a single value leaves nothing to design")
        if len(set(vals)) != len(vals):
            raise ValueError(f"alphabet values must be distinct: {vals}")
        if not all(np.isfinite(vals)):
            raise ValueError(f"alphabet values must be finite: {vals}")
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def format_node(self, node) -> str:
        return "(" + ",".join(f"{self.values[i]:g}" for i in node) + ")"


def _check_budget(alphabet: Alphabet, memory: int, max_nodes: int):
    if memory < 1:
        raise ValueError(f"memory must be >= 1, got {memory}")
    n = alphabet.size**memory
    if n > max_nodes:
        raise ValueError(
            f"memory graph would have {alphabet.size}^{memory} = {n} nodes, "
            f"above the node budget of {max_nodes}"
        )


@dataclass(frozen=True)
class StationaryGraph:
    alphabet: Alphabet
    memory: int

    @property
    def num_nodes(self) -> int:
        return self.alphabet.size**self.memory

    @property
    def num_edges(self) -> int:
        return self.num_nodes * self.alphabet.size

    def nodes(self) -> list[tuple]:
        return list(itertools.product(range(self.alphabet.size), repeat=self.memory))

    def successors(self, node) -> list[tuple]:
        return [tuple(node[1:]) + (v,) for v in range(self.alphabet.size)]

    def has_edge(self, a, b) -> bool:
        return tuple(a[1:]) == tuple(b[:-1])

    def adjacency(self) -> dict:
        return {v: self.successors(v) for v in self.nodes()}


def build_graph(alphabet: Alphabet, memory: int, max_nodes: int = DEFAULT_MAX_NODES) -> StationaryGraph:
    _check_budget(alphabet, memory, max_nodes)
    return StationaryGraph(alphabet, memory)


# ---------------------------------------------------------------------------
# cycle enumeration on arbitrary digraphs


def strongly_connected_components(adj: Mapping[Hashable, Iterable]) -> list[set]:
    """Tarjan's algorithm, iterative.  ``adj`` maps every node to its successors."""
    index, low = {}, {}
    on_stack, stack, comps = set(), [], []
    counter = 0
    for root in adj:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(adj[root]))]
        while work:
            v, it = work[-1]
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj[w])))
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            else:
                work.pop()
                if work:
                    parent = work[-1][0]
                    if low[v] < low[parent]:
                        low[parent] = low[v]
                if low[v] == index[v]:
                    comp = set()
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.add(w)
                        if w == v:
                            break
                    comps.append(comp)
    return comps


def _circuits_through(start, g):
    """All elementary circuits through ``start`` in the strongly connected ``g``."""
    path = [start]
    blocked = {start}
    B = defaultdict(set)
    closed = [False]
    stack = [(start, iter(g[start]))]
    while stack:
        v, nbrs = stack[-1]
        for w in nbrs:
            if w == start:
                yield tuple(path)
                closed[-1] = True
            elif w not in blocked:
                path.append(w)
                closed.append(False)
                stack.append((w, iter(g[w])))
                blocked.add(w)
                break
        else:
            stack.pop()
            path.pop()
            if closed.pop():
                if closed:
                    closed[-1] = True
                todo = [v]
                while todo:
                    n = todo.pop()
                    if n in blocked:
                        blocked.discard(n)
                        todo.extend(B[n])
                        B[n].clear()
            else:
                for w in g[v]:
                    B[w].add(v)


def canonical_rotation(cycle) -> tuple:
    cycle = tuple(cycle)
    k = min(range(len(cycle)), key=cycle.__getitem__)
    return cycle[k:] + cycle[:k]


def simple_cycles(adj: Mapping[Hashable, Iterable]) -> list[tuple]:
    """Every elementary cycle of a digraph, once, in canonical rotation.

    Johnson's circuit search run on one strongly connected component at a
    time: find all circuits through the smallest node, delete it, split the
    remainder into components again.  Output is sorted.
    """
    nodes = set(adj)
    for ws in adj.values():
        nodes.update(ws)
    succ = {v: set(adj.get(v, ())) for v in nodes}
    cycles = [(v,) for v in nodes if v in succ[v]]
    sub = {v: sorted(w for w in ws if w != v) for v, ws in succ.items()}
    pending = [c for c in strongly_connected_components(sub) if len(c) > 1]
    while pending:
        comp = pending.pop()
        start = min(comp)
        g = {v: [w for w in sub[v] if w in comp] for v in comp}
        cycles.extend(_circuits_through(start, g))
        rest = {v: [w for w in g[v] if w != start] for v in comp if v != start}
        pending.extend(c for c in strongly_connected_components(rest) if len(c) > 1)
    return sorted(canonical_rotation(c) for c in cycles)


# ---------------------------------------------------------------------------
# cycles of memory graphs


@dataclass(frozen=True)
class Cycle:
    """Cycle of a memory graph; ``nodes`` are index tuples in canonical rotation."""

    nodes: tuple
    alphabet: Alphabet = field(compare=False)

    @property
    def period(self) -> int:
        return len(self.nodes)

    @property
    def memory(self) -> int:
        return len(self.nodes[0])

    def __len__(self) -> int:
        return len(self.nodes)

    def node_values(self) -> list[tuple]:
        return [tuple(self.alphabet.values[i] for i in n) for n in self.nodes]

    def __str__(self) -> str:
        return ",".join(self.alphabet.format_node(n) for n in self.nodes)


def elementary_cycles(graph: StationaryGraph) -> list[Cycle]:
    return [Cycle(c, graph.alphabet) for c in simple_cycles(graph.adjacency())]


def _window_cycle(symbols: tuple, memory: int) -> tuple:
    L = len(symbols)
    nodes = [tuple(symbols[(k - memory + 1 + j) % L] for j in range(memory)) for k in range(L)]
    return canonical_rotation(nodes)


def prime_cycles(alphabet: Alphabet, memory: int, max_nodes: int = DEFAULT_MAX_NODES) -> list[Cycle]:
    """Prime cycles of the order-``memory`` graph, sorted canonically.

    Each elementary cycle of the order ``memory - 1`` graph spells a periodic
    symbol sequence (last component of each node); the windows of length
    ``memory`` over that sequence are the nodes of one prime cycle.  The
    order-0 graph is a single node with one self-loop per symbol, so for
    ``memory == 1`` the prime cycles are the constant self-loops.
    """
    _check_budget(alphabet, memory, max_nodes)
    if memory == 1:
        symbol_seqs = [(a,) for a in range(alphabet.size)]
    else:
        lower = build_graph(alphabet, memory - 1, max_nodes)
        symbol_seqs = [tuple(n[-1] for n in c.nodes) for c in elementary_cycles(lower)]
    cycles = sorted(_window_cycle(s, memory) for s in symbol_seqs)
    return [Cycle(c, alphabet) for c in cycles]


def basis_signal(cycle: Cycle, horizon: int) -> np.ndarray:
    """``u_{0:T}``: walk the cycle from its first node emitting each node's last value."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    last = np.array([cycle.alphabet.values[n[-1]] for n in cycle.nodes])
    return last[np.arange(horizon + 1) % cycle.period]


# ---------------------------------------------------------------------------
# stationary pmfs


@dataclass(frozen=True)
class StationaryPmf:
    """Pmf over ``memory``-tuples stored as an array of shape ``(c,) * memory``."""

    alphabet: Alphabet
    probs: np.ndarray

    @property
    def memory(self) -> int:
        return self.probs.ndim

    def __getitem__(self, node) -> float:
        return float(self.probs[tuple(node)])

    def stationarity_residual(self) -> float:
        """``max_z |sum_v p(v, z) - sum_v p(z, v)|``."""
        return float(np.max(np.abs(self.probs.sum(axis=0) - self.probs.sum(axis=-1))))

    def check(self, tol: float = 1e-12) -> "StationaryPmf":
        p = self.probs
        if p.shape != (self.alphabet.size,) * p.ndim:
            raise ValueError(f"pmf array has shape {p.shape}, expected {(self.alphabet.size,) * p.ndim}")
        if np.any(p < -tol):
            raise ValueError("pmf has negative entries")
        if abs(p.sum() - 1.0) > tol:
            raise ValueError(f"pmf sums to {p.sum()}, not 1")
        if self.stationarity_residual() > tol:
            raise ValueError(f"pmf is not stationary (residual {self.stationarity_residual():.3g})")
        return self

    def support(self) -> list[tuple]:
        return [tuple(int(i) for i in idx) for idx in zip(*np.nonzero(self.probs))]

    def as_dict(self) -> dict:
        return {tuple(self.alphabet.values[i] for i in idx): float(self.probs[idx])
                for idx in itertools.product(range(self.alphabet.size), repeat=self.memory)}


def extreme_pmf(cycle: Cycle) -> StationaryPmf:
    """Uniform distribution on the nodes of a prime cycle."""
    p = np.zeros((cycle.alphabet.size,) * cycle.memory)
    for n in cycle.nodes:
        p[n] = 1.0 / cycle.period
    return StationaryPmf(cycle.alphabet, p)


def mix_pmfs(gamma, bases: list[StationaryPmf]) -> StationaryPmf:
    gamma = check_simplex(gamma, len(bases))
    probs = np.tensordot(gamma, np.stack([b.probs for b in bases]), axes=1)
    return StationaryPmf(bases[0].alphabet, probs)


@dataclass(frozen=True)
class BasisInput:
    """One vertex of the stationary-pmf polytope and the periodic input it induces."""

    cycle: Cycle

    @property
    def period(self) -> int:
        return self.cycle.period

    def signal(self, horizon: int) -> np.ndarray:
        return basis_signal(self.cycle, horizon)

    @property
    def uniform_pmf(self) -> StationaryPmf:
        return extreme_pmf(self.cycle)


def basis_inputs(alphabet: Alphabet, memory: int, max_nodes: int = DEFAULT_MAX_NODES) -> list[BasisInput]:
    return [BasisInput(c) for c in prime_cycles(alphabet, memory, max_nodes)]


def dump_cycles(path, cycles: list[Cycle]) -> None:
    """One cycle per line, nodes written as comma-separated value tuples."""
    with open(path, "w") as fh:
        for c in cycles:
            fh.write(str(c) + "\n")
