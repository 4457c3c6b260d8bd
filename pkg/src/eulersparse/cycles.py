"""
Short cycle decompositions and cycle orientation.

The naive decomposer follows the constructive argument that every graph is
a union of edge-disjoint cycles of length at most ``2 log n`` plus at most
``2n`` extra edges:

1. vertices of degree 1 are peeled, their edge joins the leftover set;
2. vertices of degree 2 are spliced out, their two edges merged into one
   contracted "super-edge" that remembers the underlying path;
3. once every live vertex has degree >= 3, a BFS tree cannot stay acyclic
   beyond depth ``log n``, so the first non-tree edge closes a cycle of at
   most ``2 ceil(log2 n)`` super-edges.  The cycle is emitted (super-edges
   expanded back into original edges) and removed.

Expansion can make an emitted cycle longer than the combinatorial bound, so
the certificate records the measured maximum length rather than assuming it.
"""
from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from math import ceil, log2
from typing import Callable, Sequence

import numpy as np

from .errors import NotACycle
from .graph import DirectedMultigraph


def length_bound(n: int) -> int:
    """Combinatorial cycle-length bound ``2 ceil(log2 n)`` (at least 2)."""
    return max(2, 2 * ceil(log2(max(n, 2))))


@dataclass(frozen=True)
class CycleDecomposition:
    cycles: tuple[tuple[int, ...], ...]  # edge ids, consecutive edges share a vertex
    leftover: tuple[int, ...]
    m_hat: int  # certified bound on the leftover count
    L: int  # certified bound on cycle length (measured, after expansion)
    max_combinatorial_length: int = 0
    expanded: bool = False  # whether any emitted cycle used a contracted path

    @property
    def certificate(self) -> dict:
        return {"m_hat": self.m_hat, "L": self.L}

    def length_histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(len(c) for c in self.cycles).items()))


Decomposer = Callable[[DirectedMultigraph, int], CycleDecomposition]


class _SuperGraph:
    """Mutable undirected multigraph whose edges stand for paths of original edges."""

    def __init__(self, g: DirectedMultigraph):
        self.adj: list[dict[int, int]] = [dict() for _ in range(g.n)]
        self.ends: dict[int, tuple[int, int]] = {}
        self.path: dict[int, list[int]] = {}
        for e, (u, v) in enumerate(zip(g.tails.tolist(), g.heads.tolist())):
            self.ends[e] = (u, v)
            self.path[e] = [e]
            self.adj[u][e] = v
            self.adj[v][e] = u
        self.next_id = g.m
        self.original_edges = g.m

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def oriented(self, e: int, start: int) -> list[int]:
        """Original edge ids of super-edge ``e`` walked away from ``start``."""
        a, _ = self.ends[e]
        return self.path[e] if a == start else self.path[e][::-1]

    def remove(self, e: int) -> list[int]:
        a, b = self.ends.pop(e)
        del self.adj[a][e]
        del self.adj[b][e]
        p = self.path.pop(e)
        self.original_edges -= len(p)
        return p

    def splice(self, v: int) -> int:
        """Replace the two edges at degree-2 vertex ``v`` by one super-edge."""
        (e1, a), (e2, b) = self.adj[v].items()
        p = self.oriented(e1, a) + self.oriented(e2, v)
        self.remove(e1)
        self.remove(e2)
        e = self.next_id
        self.next_id += 1
        self.ends[e] = (a, b)
        self.path[e] = p
        self.adj[a][e] = b
        self.adj[b][e] = a
        self.original_edges += len(p)
        return e


def naive_short_cycle_decomposition(
    g: DirectedMultigraph, seed=0, leftover_budget: int | None = None
) -> CycleDecomposition:
    """Decompose the underlying unweighted undirected multigraph of ``g``.

    Directions and weights are ignored.  Peeling stops once the leftover
    edges plus the edges still alive fit in ``leftover_budget`` (default
    ``2n``); those edges all become leftover.
    """
    n = g.n
    budget = 2 * n if leftover_budget is None else leftover_budget
    rng = np.random.default_rng(seed)
    sg = _SuperGraph(g)
    cycles: list[tuple[int, ...]] = []
    leftover: list[int] = []
    max_comb = 0
    expanded = False

    stack = [v for v in range(n) if 0 < sg.degree(v) <= 2]

    def push(*vs):
        for v in vs:
            if 0 < sg.degree(v) <= 2:
                stack.append(v)

    def emit(walk: list[tuple[int, int]]):
        # walk: (super-edge id, vertex it is entered from)
        nonlocal max_comb, expanded
        edges: list[int] = []
        for e, start in walk:
            part = sg.oriented(e, start)
            if len(part) > 1:
                expanded = True
            edges.extend(part)
        ends = set()
        for e, _ in walk:
            ends.update(sg.ends[e])
            sg.remove(e)
        cycles.append(tuple(edges))
        max_comb = max(max_comb, len(walk))
        push(*ends)

    while True:
        while stack:
            v = stack.pop()
            d = sg.degree(v)
            if d == 0 or d > 2:
                continue
            if d == 1:
                (e, u), = sg.adj[v].items()
                leftover.extend(sg.remove(e))
                push(u)
            else:
                (e1, a), (e2, b) = sg.adj[v].items()
                if a == b:
                    emit([(e1, a), (e2, v)])
                else:
                    sg.splice(v)
        if sg.original_edges == 0:
            break
        if len(leftover) + sg.original_edges <= budget:
            for e in list(sg.ends):
                leftover.extend(sg.remove(e))
            break
        emit(_bfs_cycle(sg, _random_live_vertex(sg, rng)))

    lengths = [len(c) for c in cycles]
    return CycleDecomposition(
        cycles=tuple(cycles),
        leftover=tuple(sorted(leftover)),
        m_hat=len(leftover),
        L=max(lengths, default=0),
        max_combinatorial_length=max_comb,
        expanded=expanded,
    )


def _random_live_vertex(sg: _SuperGraph, rng: np.random.Generator) -> int:
    """Uniform over vertices with an incident edge (rejection sampling, then an exact fallback)."""
    n = len(sg.adj)
    for v in rng.integers(n, size=32):
        if sg.adj[v]:
            return int(v)
    live = [v for v in range(n) if sg.adj[v]]
    return live[int(rng.integers(len(live)))]


def _bfs_cycle(sg: _SuperGraph, root: int) -> list[tuple[int, int]]:
    """BFS from ``root`` until a non-tree edge appears; return the cycle it closes."""
    parent_edge = {root: -1}
    parent = {root: -1}
    depth = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        pe, du = parent_edge[u], depth[u] + 1
        for e, v in sg.adj[u].items():
            if e == pe:
                continue
            if v not in depth:
                depth[v] = du
                parent[v] = u
                parent_edge[v] = e
                queue.append(v)
                continue
            # non-tree edge u-v closes a cycle through their lowest common ancestor
            up_u, up_v = [], []
            a, b = u, v
            while depth[a] > depth[b]:
                up_u.append((parent_edge[a], parent[a]))
                a = parent[a]
            while depth[b] > depth[a]:
                up_v.append((parent_edge[b], b))
                b = parent[b]
            while a != b:
                up_u.append((parent_edge[a], parent[a]))
                a = parent[a]
                up_v.append((parent_edge[b], b))
                b = parent[b]
            # walk: lca -> ... -> u, then u -> v, then v -> ... -> lca
            return up_u[::-1] + [(e, u)] + up_v
    raise RuntimeError("BFS found no cycle in a graph of minimum degree 3")


# -- orientation ------------------------------------------------------------------


@dataclass(frozen=True)
class OrientedCycle:
    """A uniformly weighted cycle split into clockwise and counter-clockwise edges.

    Edges are listed in walk order.  ``reversed_[i]`` marks edges whose
    direction opposes the walk (the set S); walking direction defines F.
    """

    edge_ids: tuple[int, ...]
    tails: tuple[int, ...]
    heads: tuple[int, ...]
    reversed_: tuple[bool, ...]
    weight: int

    def __len__(self) -> int:
        return len(self.edge_ids)

    @property
    def original_edge_ids(self) -> tuple[int, ...]:
        return self.edge_ids

    @property
    def s_edge_ids(self) -> tuple[int, ...]:
        return tuple(e for e, r in zip(self.edge_ids, self.reversed_) if r)

    @property
    def f_edges(self) -> list[tuple[int, int]]:
        """Consistently oriented edges of F, in walk order."""
        return [(h, t) if r else (t, h) for t, h, r in zip(self.tails, self.heads, self.reversed_)]

    @property
    def vertices(self) -> tuple[int, ...]:
        """Vertices in walk order (tail of each F edge)."""
        return tuple(t for t, _ in self.f_edges)

    def clockwise(self) -> list[tuple[int, int]]:
        """Edges not in S, in their original direction."""
        return [(t, h) for t, h, r in zip(self.tails, self.heads, self.reversed_) if not r]

    def counter_clockwise(self) -> list[tuple[int, int]]:
        """Edges of S, in their original direction."""
        return [(t, h) for t, h, r in zip(self.tails, self.heads, self.reversed_) if r]

    def as_graph(self, n: int) -> DirectedMultigraph:
        return DirectedMultigraph(n, self.tails, self.heads, [self.weight] * len(self))


def correct_orientation(
    edges: Sequence[tuple[int, int, int]], weight: int
) -> OrientedCycle:
    """Give a cycle a consistent orientation, recording the edges reversed to do so.

    ``edges`` lists ``(edge_id, tail, head)`` in cycle order: consecutive
    entries share a vertex and the last one meets the first.  The walk starts
    at the edge with the lowest id, leaving from its tail.
    """
    k = len(edges)
    if k < 2:
        raise NotACycle("a cycle needs at least two edges")
    start = min(range(k), key=lambda i: edges[i][0])
    order = [edges[(start + i) % k] for i in range(k)]
    _, t0, h0 = order[0]
    nxt = order[1]
    if h0 not in (nxt[1], nxt[2]):
        # list runs the other way round the cycle
        order = [order[0]] + order[:0:-1]

    walk_vertices = [t0]
    cur = h0
    rev = [False]
    for eid, t, h in order[1:]:
        if t == cur:
            rev.append(False)
            walk_vertices.append(cur)
            cur = h
        elif h == cur:
            rev.append(True)
            walk_vertices.append(cur)
            cur = t
        else:
            raise NotACycle(f"edge {eid} does not continue the walk at vertex {cur}")
    if cur != t0:
        raise NotACycle("edge sequence does not close")
    if len(set(walk_vertices)) != k:
        raise NotACycle("walk revisits a vertex; cycle is not simple")
    return OrientedCycle(
        edge_ids=tuple(e for e, _, _ in order),
        tails=tuple(t for _, t, _ in order),
        heads=tuple(h for _, _, h in order),
        reversed_=tuple(rev),
        weight=weight,
    )


def orient_cycle(g: DirectedMultigraph, cycle: Sequence[int], id_map=None) -> OrientedCycle:
    """Orient a decomposition cycle of ``g``; ``id_map`` relabels edge ids."""
    ids = list(cycle)
    weights = {int(g.weights[e]) for e in ids}
    if len(weights) != 1:
        raise NotACycle("cycle is not uniformly weighted")
    labels = ids if id_map is None else [int(id_map[e]) for e in ids]
    edges = [(lab, int(g.tails[e]), int(g.heads[e])) for lab, e in zip(labels, ids)]
    return correct_orientation(edges, weights.pop())


# -- validation -------------------------------------------------------------------


@dataclass
class DecompositionReport:
    checks: dict[str, bool] = field(default_factory=dict)
    counterexamples: dict[str, list[int]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def _record(self, name: str, bad: list[int]) -> None:
        self.checks[name] = not bad
        self.counterexamples[name] = bad


def validate_decomposition(g: DirectedMultigraph, d: CycleDecomposition) -> DecompositionReport:
    """Check every structural invariant of a decomposition of ``g``.

    Counterexamples are edge ids, except for ``cycle_length`` and
    ``closed_walk`` which list offending cycle indices.
    """
    rep = DecompositionReport()
    all_ids = [e for c in d.cycles for e in c] + list(d.leftover)
    rep._record("ids_in_range", sorted({e for e in all_ids if not 0 <= e < g.m}))
    counts = Counter(all_ids)
    rep._record("edge_disjoint", sorted(e for e, c in counts.items() if c > 1))
    rep._record("cover", sorted(set(range(g.m)) - set(counts)))
    rep._record("cycle_length", [i for i, c in enumerate(d.cycles) if len(c) > d.L or len(c) < 2])
    rep._record("leftover_bound", [] if len(d.leftover) <= d.m_hat else list(d.leftover))

    bad_walks = []
    for i, c in enumerate(d.cycles):
        if any(not 0 <= e < g.m for e in c):
            bad_walks.append(i)
            continue
        try:
            correct_orientation([(e, int(g.tails[e]), int(g.heads[e])) for e in c], 1)
        except NotACycle:
            bad_walks.append(i)
    rep._record("closed_walk", bad_walks)
    return rep
