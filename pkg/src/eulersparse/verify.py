"""
Certificates and numeric checks shared by both sparsifiers.

PSD inequalities ``A <= B`` are tested as ``min eig(B - A) >= -rtol * scale``
where ``scale`` is the larger operator norm of the two sides.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from itertools import product
from math import log2

import numpy as np

from .colouring import CycleFamily
from .cycles import Decomposer, OrientedCycle, naive_short_cycle_decomposition
from .errors import TooLarge
from .graph import DirectedMultigraph, degree_difference, has_power_of_two_weights, is_eulerian
from .linalg import (
    ResistanceOracle,
    error_metric,
    laplacian_directed,
    laplacian_undirected,
    loewner_gap,
    pseudo_inverse,
    spectral_factorization,
)
from .toggle import RoundPlan, ToggleConfig, apply_round, plan_round, sparsify_once

PSD_RTOL = 1e-8

# Constants re-derived for the cycle lemmas (rho is max w_e r_e over the cycle).
CYCLESPART_CONSTANT = 1.0  # L_S <= c L rho L_G
CYCLEFPART_CONSTANT = 2.0  # L_F^T L_G^+ L_F <= c L^2 rho L_C
CYCLEBOUNDS_CONSTANT = 8.0  # L^{+/2} Ltil^T L^+ Ltil L^{+/2} <= c L^2 rho L^{+/2} L_C L^{+/2}


@dataclass
class PSDCheck:
    name: str
    min_eigenvalue: float
    scale: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def psd_check(name: str, lower: np.ndarray, upper: np.ndarray, rtol: float = PSD_RTOL) -> PSDCheck:
    gap, scale = loewner_gap(lower, upper)
    return PSDCheck(name, gap, scale, bool(gap >= -rtol * max(scale, 1e-300)))


# --------------------------------------------------------------------------- #
# end-to-end certificate
# --------------------------------------------------------------------------- #


@dataclass
class ErrorCertificate:
    measured_error: float
    epsilon_target: float
    eulerian_ok: bool
    degrees_ok: bool
    weights_ok: bool
    edges_in: int
    edges_out: int
    lemma_checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (
            self.measured_error <= self.epsilon_target
            and self.eulerian_ok
            and self.degrees_ok
            and self.weights_ok
            and all(self.lemma_checks.values())
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _degrees_match(g: DirectedMultigraph, h: DirectedMultigraph) -> bool:
    a, b = degree_difference(g), degree_difference(h)
    if g.is_integral and h.is_integral:
        return bool(np.array_equal(a, b))
    scale = max(float(np.abs(g.weights).sum()), 1.0)
    return bool(np.abs(a - b).max(initial=0.0) <= 1e-9 * scale)


def certify(
    g0: DirectedMultigraph, h: DirectedMultigraph, eps: float, power_of_two: bool = False
) -> ErrorCertificate:
    """Measure ``h`` against ``g0``; with ``power_of_two`` the weights must also be integral powers of 2."""
    weights_ok = bool(np.all(np.isfinite(h.weights)) and np.all(h.weights > 0))
    if power_of_two:
        weights_ok = weights_ok and has_power_of_two_weights(h)
    return ErrorCertificate(
        measured_error=error_metric(g0, h),
        epsilon_target=eps,
        eulerian_ok=is_eulerian(h),
        degrees_ok=_degrees_match(g0, h),
        weights_ok=weights_ok,
        edges_in=g0.m,
        edges_out=h.m,
    )


# --------------------------------------------------------------------------- #
# cycle lemmas
# --------------------------------------------------------------------------- #


def _cycle_pieces(oc: OrientedCycle, n: int):
    w = float(oc.weight)
    f = np.asarray(oc.f_edges)
    l_f = np.zeros((n, n))
    np.add.at(l_f, (f[:, 0], f[:, 0]), w)
    np.add.at(l_f, (f[:, 1], f[:, 0]), -w)
    l_s = np.zeros((n, n))
    for t, h, rev in zip(oc.tails, oc.heads, oc.reversed_):
        if rev:
            l_s[t, t] += w
            l_s[h, h] += w
            l_s[t, h] -= w
            l_s[h, t] -= w
    l_c = laplacian_undirected(oc.as_graph(n))
    return l_f, l_s, l_c


def cycle_rho(oc: OrientedCycle, lplus: np.ndarray) -> float:
    """``max_e w_e r_e`` over the cycle's edges, resistances from ``lplus``."""
    t, h = np.asarray(oc.tails), np.asarray(oc.heads)
    r = lplus[t, t] + lplus[h, h] - 2.0 * lplus[t, h]
    return float(oc.weight * r.max())


def check_cycle_lemmas(g: DirectedMultigraph, oc: OrientedCycle, lplus: np.ndarray | None = None) -> list[PSDCheck]:
    """The three cycle inequalities for a cycle ``oc`` contained in ``g``."""
    n = g.n
    fac = spectral_factorization(laplacian_undirected(g))
    lplus = fac.apply_power(-1.0) if lplus is None else lplus
    p = fac.apply_power(-0.5)
    lg = fac.reconstruct()
    L = len(oc)
    rho = cycle_rho(oc, lplus)
    l_f, l_s, l_c = _cycle_pieces(oc, n)
    ltil = l_f - l_s
    out = [
        psd_check("cyclespart", l_s, CYCLESPART_CONSTANT * L * rho * lg),
        psd_check("cyclefpart", l_f.T @ lplus @ l_f, CYCLEFPART_CONSTANT * L * L * rho * l_c),
    ]
    rhs = CYCLEBOUNDS_CONSTANT * L * L * rho * (p @ l_c @ p)
    out.append(psd_check("cyclebounds", p @ ltil.T @ lplus @ ltil @ p, rhs))
    out.append(psd_check("cyclebounds_transpose", p @ ltil @ lplus @ ltil.T @ p, rhs))
    return out


@dataclass
class VarianceCertificate:
    sigma_sq_measured: float
    sigma_sq_bound: float
    frob_sq_measured: float
    frob_sq_bound: float
    rho: float
    L: int

    @property
    def passed(self) -> bool:
        tol = 1e-8 * max(self.sigma_sq_bound, 1e-300)
        return (
            self.sigma_sq_measured <= self.sigma_sq_bound + tol
            and self.frob_sq_measured <= self.frob_sq_bound + tol * max(self.L, 1)
        )


def variance_certificate(
    composite: DirectedMultigraph, family: CycleFamily, c_b: float = CYCLEBOUNDS_CONSTANT
) -> VarianceCertificate:
    """Compare the family's ``||sum A(C)^2||`` and ``sum ||A(C)||_F^2`` with ``c_b L^2 rho`` bounds.

    ``rho`` is the largest ``w_e r_e`` over the family's (scaled) cycles, with
    resistances measured in ``composite``.
    """
    lplus = pseudo_inverse(laplacian_undirected(composite))
    rho = max((cycle_rho(oc, lplus) for oc in family.cycles), default=0.0)
    L = int(family.lengths.max()) if len(family) else 0
    sig = c_b * L * L * rho
    return VarianceCertificate(
        sigma_sq_measured=family.variance(),
        sigma_sq_bound=sig,
        frob_sq_measured=float(family.frobenius_squares().sum()),
        frob_sq_bound=2.0 * (composite.n - 1) * sig,
        rho=rho,
        L=L,
    )


# --------------------------------------------------------------------------- #
# brute force over coin vectors
# --------------------------------------------------------------------------- #

MAX_BRUTE_FORCE_CYCLES = 10


@dataclass
class ToggleOutcome:
    coins: tuple[bool, ...]
    graph: DirectedMultigraph
    change: np.ndarray  # L_H - L_G (directed)
    error: float


@dataclass
class ToggleDistribution:
    plan: RoundPlan
    ltils: list[np.ndarray]
    outcomes: list[ToggleOutcome]

    def find(self, h: DirectedMultigraph) -> int | None:
        """Index of the outcome whose edge multiset equals ``h``'s."""
        key = h.edge_multiset()
        for i, o in enumerate(self.outcomes):
            if o.graph.edge_multiset() == key:
                return i
        return None


def _ltil(oc: OrientedCycle, n: int) -> np.ndarray:
    l_f, l_s, _ = _cycle_pieces(oc, n)
    return l_f - l_s


def brute_force_toggle_distribution(
    g: DirectedMultigraph,
    plan: RoundPlan | None = None,
    r: np.ndarray | None = None,
    cfg: ToggleConfig = ToggleConfig(),
    seed: int = 0,
    decomposer: Decomposer = naive_short_cycle_decomposition,
    with_error: bool = True,
) -> ToggleDistribution:
    """Enumerate every coin vector of one toggling round.

    Without an explicit ``plan`` the round is planned exactly as
    ``sparsify_once`` would plan it with ``rng = default_rng(seed)``.
    """
    if plan is None:
        if r is None:
            r = ResistanceOracle.exact(g).for_graph(g)
        plan = plan_round(g, r, cfg, decomposer, np.random.default_rng(seed))
    k = len(plan.cycles)
    if k > MAX_BRUTE_FORCE_CYCLES:
        raise TooLarge(f"{k} cycles exceed the brute-force limit of {MAX_BRUTE_FORCE_CYCLES}")
    base = laplacian_directed(plan.g)
    ltils = [_ltil(oc, g.n) for oc in plan.cycles]
    outcomes = []
    for coins in product((False, True), repeat=k):
        h, _ = apply_round(plan, np.asarray(coins, dtype=bool))
        change = laplacian_directed(h) - base
        err = error_metric(plan.g, h) if with_error else float("nan")
        outcomes.append(ToggleOutcome(coins, h, change, err))
    return ToggleDistribution(plan, ltils, outcomes)


@dataclass
class BruteForceReport:
    in_support: bool
    coins_match: bool
    max_change_residual: float
    outcomes: int

    @property
    def passed(self) -> bool:
        return self.in_support and self.coins_match and self.max_change_residual <= 1e-12


def check_against_brute_force(
    g: DirectedMultigraph, seed: int, cfg: ToggleConfig = ToggleConfig(), r: np.ndarray | None = None
) -> BruteForceReport:
    """Run ``sparsify_once`` with ``seed`` and locate its output in the enumerated distribution.

    Also checks that every outcome's Laplacian change is the signed sum of
    per-cycle ``L_F - L_S`` terms (plus sign when the clockwise side is kept).
    """
    if r is None:
        r = ResistanceOracle.exact(g).for_graph(g)
    dist = brute_force_toggle_distribution(g, r=r, cfg=cfg, seed=seed, with_error=False)
    h, _, trace = sparsify_once(g, r, cfg, rng=np.random.default_rng(seed), return_trace=True)
    idx = dist.find(h)
    # distinct coin vectors may give equal multisets, so compare at the traced coins
    by_coins = {o.coins: o for o in dist.outcomes}
    drawn = by_coins.get(tuple(bool(c) for c in trace.coins))
    coins_match = drawn is not None and drawn.graph.edge_multiset() == h.edge_multiset()
    worst = 0.0
    for o in dist.outcomes:
        expected = sum(
            ((1.0 if c else -1.0) * lt for c, lt in zip(o.coins, dist.ltils)), np.zeros((g.n, g.n))
        )
        worst = max(worst, float(np.abs(o.change - expected).max(initial=0.0)))
    return BruteForceReport(idx is not None, coins_match, worst, len(dist.outcomes))


# --------------------------------------------------------------------------- #
# concentration
# --------------------------------------------------------------------------- #


@dataclass
class ConcentrationReport:
    trials: int
    errors: list[float]
    quantiles: dict[str, float]
    scale: float  # sqrt(n L^2 log n / m)
    L: int

    def to_dict(self) -> dict:
        return asdict(self)


def concentration_probe(g: DirectedMultigraph, trials: int, cfg: ToggleConfig = ToggleConfig()) -> ConcentrationReport:
    """Round errors of ``sparsify_once`` over seeds ``0 .. trials-1``."""
    if trials <= 0:
        return ConcentrationReport(0, [], {}, float("nan"), 0)
    r = ResistanceOracle.exact(g).for_graph(g)
    errs, L = [], 0
    for t in range(trials):
        h, rep = sparsify_once(g, r, cfg, rng=np.random.default_rng(t))
        errs.append(error_metric(g, h))
        L = max(L, rep.max_cycle_length)
    q = np.quantile(errs, [0.5, 0.9, 0.99, 1.0])
    scale = float(np.sqrt(g.n * L * L * log2(max(g.n, 2)) / max(g.m, 1)))
    return ConcentrationReport(
        trials, errs, {"p50": q[0], "p90": q[1], "p99": q[2], "max": q[3]}, scale, L
    )
