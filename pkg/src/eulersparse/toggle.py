"""
Randomised cycle-toggling sparsifier.

Each round sets aside high-leverage edges, splits the rest into uniformly
weighted levels, decomposes every level into short cycles, and for each
cycle keeps either its clockwise or its counter-clockwise edges at double
weight.  Both choices preserve every vertex's in/out degree difference, so
the graph stays Eulerian; the Laplacian moves by +-(L_F - L_S).
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from math import log2

import numpy as np

from .cycles import (
    CycleDecomposition,
    Decomposer,
    OrientedCycle,
    naive_short_cycle_decomposition,
    orient_cycle,
)
from .errors import InvalidParams, NonPowerOfTwoWeight, NotEulerian
from .graph import (
    DirectedMultigraph,
    binary_decompose,
    has_power_of_two_weights,
    is_eulerian,
    partition_by_weight,
)
from .linalg import ResistanceOracle, error_metric

# Frozen from the acceptance calibration (see tests/test_acceptance.py).
CALIBRATED_STOP_CONSTANT = 0.12


@dataclass(frozen=True)
class ToggleConfig:
    epsilon: float = 0.5
    leverage_threshold_factor: float = 4.0
    stop_constant: float = 1.0
    seed: int | None = 0
    resistances: str = "exact"  # or "sketch"
    verify: bool = False
    max_rounds: int = 64

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.5:
            raise InvalidParams(f"epsilon must lie in (0, 1/2], got {self.epsilon}")
        if self.leverage_threshold_factor <= 0 or self.stop_constant <= 0:
            raise InvalidParams("threshold factors must be positive")
        if self.resistances not in ("exact", "sketch"):
            raise InvalidParams(f"unknown resistance method {self.resistances!r}")


@dataclass
class ToggleRoundReport:
    edges_before: int
    edges_after: int
    heavy_edges_set_aside: int
    leftover_edges: int
    cycles_toggled: int
    max_cycle_length: int
    m_hat: int
    measured_round_error: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RoundTrace:
    """Everything needed to replay a round: which edges stayed and which cycles flipped."""

    heavy: np.ndarray
    leftover: np.ndarray
    cycles: list[OrientedCycle]
    coins: np.ndarray
    decompositions: list[CycleDecomposition] = field(default_factory=list)


def toggle_cycle(oc: OrientedCycle, coin: bool) -> list[tuple[int, int, int]]:
    """Edges kept for one cycle: clockwise ones if ``coin`` else the reversed set, at twice the weight."""
    kept = oc.clockwise() if coin else oc.counter_clockwise()
    return [(t, h, 2 * oc.weight) for t, h in kept]


def _edges_to_graph(n: int, edges: list[tuple[int, int, int]]) -> DirectedMultigraph:
    if not edges:
        return DirectedMultigraph.empty(n)
    t, h, w = zip(*edges)
    return DirectedMultigraph(n, t, h, np.asarray(w, dtype=np.int64))


def heavy_mask(g: DirectedMultigraph, r: np.ndarray, factor: float, m_ref: int) -> np.ndarray:
    """Edges with ``w_e r_e > factor * n / m_ref`` (strict)."""
    if g.m == 0:
        return np.zeros(0, dtype=bool)
    return g.weights * r > factor * g.n / m_ref


def decompose_levels(
    g: DirectedMultigraph, decomposer: Decomposer, rng: np.random.Generator
) -> tuple[list[OrientedCycle], np.ndarray, list[CycleDecomposition]]:
    """Decompose every weight level of ``g``; cycles carry ``g``'s edge ids.

    Returns the oriented cycles (levels in ascending weight order), the ids of
    edges left outside any cycle, and the raw per-level decompositions.
    """
    cycles: list[OrientedCycle] = []
    leftover: list[np.ndarray] = []
    decomps = []
    for lv in partition_by_weight(g).levels:
        d = decomposer(lv.graph, int(rng.integers(2**31)))
        decomps.append(d)
        leftover.append(lv.edge_ids[list(d.leftover)])
        for c in d.cycles:
            cycles.append(orient_cycle(lv.graph, c, id_map=lv.edge_ids))
    left = np.sort(np.concatenate(leftover)) if leftover else np.zeros(0, np.int64)
    return cycles, left, decomps


@dataclass
class RoundPlan:
    """A round up to (but excluding) the coin flips."""

    g: DirectedMultigraph
    heavy_ids: np.ndarray
    rest_ids: np.ndarray
    leftover_ids: np.ndarray  # ids in ``g``
    cycles: list[OrientedCycle]  # edge ids refer to ``g``
    decompositions: list[CycleDecomposition]

    @property
    def L(self) -> int:
        return max((d.L for d in self.decompositions), default=0)

    @property
    def m_hat(self) -> int:
        return max((d.m_hat for d in self.decompositions), default=0)


def plan_round(
    g: DirectedMultigraph,
    r: np.ndarray,
    cfg: "ToggleConfig",
    decomposer: Decomposer,
    rng: np.random.Generator,
) -> RoundPlan:
    if not is_eulerian(g):
        raise NotEulerian("sparsify_once needs an Eulerian graph")
    if not has_power_of_two_weights(g):
        raise NonPowerOfTwoWeight("sparsify_once needs power-of-two weights")
    g = g.as_integral()
    heavy = heavy_mask(g, np.asarray(r, dtype=np.float64), cfg.leverage_threshold_factor, max(g.m, 1))
    heavy_ids = np.flatnonzero(heavy)
    rest_ids = np.flatnonzero(~heavy)
    cycles, left_local, decomps = decompose_levels(g.subgraph(rest_ids), decomposer, rng)
    cycles = [
        OrientedCycle(tuple(int(rest_ids[e]) for e in oc.edge_ids), oc.tails, oc.heads, oc.reversed_, oc.weight)
        for oc in cycles
    ]
    return RoundPlan(g, heavy_ids, rest_ids, rest_ids[left_local], cycles, decomps)


def apply_round(plan: RoundPlan, coins: np.ndarray) -> tuple[DirectedMultigraph, ToggleRoundReport]:
    """Heavy edges first, then leftovers, then the kept side of every cycle."""
    g = plan.g
    toggled = [e for oc, coin in zip(plan.cycles, coins) for e in toggle_cycle(oc, bool(coin))]
    h = DirectedMultigraph.concat(
        g.n, [g.subgraph(plan.heavy_ids), g.subgraph(plan.leftover_ids), _edges_to_graph(g.n, toggled)]
    )
    report = ToggleRoundReport(
        edges_before=g.m,
        edges_after=h.m,
        heavy_edges_set_aside=len(plan.heavy_ids),
        leftover_edges=len(plan.leftover_ids),
        cycles_toggled=len(plan.cycles),
        max_cycle_length=plan.L,
        m_hat=plan.m_hat,
    )
    return h, report


def sparsify_once(
    g: DirectedMultigraph,
    r: np.ndarray,
    cfg: ToggleConfig = ToggleConfig(),
    decomposer: Decomposer = naive_short_cycle_decomposition,
    rng: np.random.Generator | None = None,
    return_trace: bool = False,
):
    """One toggling round.

    ``r`` holds (approximate) effective resistances of ``g``'s edges in the
    undirectification of the graph being sparsified.  Edges with
    ``w_e r_e > 4n/m`` are kept untouched; every cycle of the remaining
    levels keeps one side at double weight, chosen by a fair coin.  Coins
    are drawn after all decompositions, one per cycle in decomposition order.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    plan = plan_round(g, r, cfg, decomposer, rng)
    coins = rng.integers(0, 2, size=len(plan.cycles)).astype(bool)
    h, report = apply_round(plan, coins)
    if return_trace:
        trace = RoundTrace(plan.heavy_ids, plan.leftover_ids, plan.cycles, coins, plan.decompositions)
        return h, report, trace
    return h, report


def stopping_threshold(n: int, m_hat: int, L: int, eps: float, stop_constant: float) -> float:
    """Edge count below which toggling stops: ``c (m_hat log n + eps^-2 n L^2 log n)``."""
    lg = log2(max(n, 2))
    return stop_constant * (m_hat * lg + n * L * L * lg / eps**2)


@dataclass
class ToggleResult:
    graph: DirectedMultigraph
    rounds: list[ToggleRoundReport]
    edges_input: int
    edges_decomposed: int
    stalled: bool = False
    measured_error: float | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "method": "toggle",
            "edges_input": self.edges_input,
            "edges_decomposed": self.edges_decomposed,
            "edges_output": self.graph.m,
            "rounds": [r.to_dict() for r in self.rounds],
            "stalled": self.stalled,
            "measured_error": self.measured_error,
            "seconds": self.seconds,
        }


def sparsify(
    g: DirectedMultigraph,
    cfg: ToggleConfig = ToggleConfig(),
    decomposer: Decomposer = naive_short_cycle_decomposition,
) -> ToggleResult:
    """Repeat toggling rounds until the edge count drops below the stopping threshold.

    Resistances are computed once on the binary-decomposed input and looked up
    by endpoint pair in later rounds.  Each round is planned (filter and
    decompose) before the guard is evaluated, so the threshold uses the
    measured length and leftover certificates of the decomposition the round
    would apply.  The loop also ends after ``max_rounds`` rounds or when a
    round removes no edge (``stalled``).
    """
    t0 = time.perf_counter()
    if not is_eulerian(g):
        raise NotEulerian("input graph is not Eulerian")
    g0 = g
    cur = binary_decompose(g)
    m_decomposed = cur.m
    n = cur.n
    oracle = (
        ResistanceOracle.exact(cur)
        if cfg.resistances == "exact"
        else ResistanceOracle.sketched(cur, seed=cfg.seed)
    )
    rng = np.random.default_rng(cfg.seed)
    rounds: list[ToggleRoundReport] = []
    stalled = False
    while True:
        plan = plan_round(cur, oracle.for_graph(cur), cfg, decomposer, rng)
        if cur.m < stopping_threshold(n, plan.m_hat, plan.L, cfg.epsilon, cfg.stop_constant):
            break
        if len(rounds) >= cfg.max_rounds:
            stalled = True
            break
        coins = rng.integers(0, 2, size=len(plan.cycles)).astype(bool)
        h, rep = apply_round(plan, coins)
        if cfg.verify:
            rep.measured_round_error = error_metric(cur, h)
        rounds.append(rep)
        progressed = h.m < cur.m
        cur = h
        if not progressed:
            stalled = True
            break
    res = ToggleResult(cur, rounds, g0.m, m_decomposed, stalled)
    if cfg.verify:
        res.measured_error = error_metric(g0, cur)
    res.seconds = time.perf_counter() - t0
    return res
