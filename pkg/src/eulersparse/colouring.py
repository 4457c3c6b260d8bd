"""
Partial-colouring sparsifier.

Cycles are not toggled one coin at a time; instead a partial-colouring
oracle assigns every cycle a colour in [-1, 1] so that the signed sum of the
normalised cycle matrices stays small.  Cycles whose colour reaches +-1 are
resolved into the integral graph; the rest are carried between rounds as
(cycle, colour) pairs and only turned into real weights at the very end.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from math import ceil, log, log2
from typing import Protocol

import numpy as np

from .cycles import Decomposer, OrientedCycle, naive_short_cycle_decomposition
from .errors import BranchViolation, ColourOutOfRange, InvalidParams, NotEulerian, OracleStalled
from .graph import DirectedMultigraph, binary_decompose, is_eulerian
from .linalg import (
    ResistanceOracle,
    error_metric,
    laplacian_undirected,
    loewner_gap,
    spectral_factorization,
)
from .toggle import _edges_to_graph, decompose_levels, heavy_mask, toggle_cycle

# Frozen from the acceptance calibration (see tests/test_acceptance.py).
CALIBRATED_STOP_CONSTANT = 0.08

FULL_TOL = 1e-9  # |colour| >= 1 - FULL_TOL counts as fully coloured


# --------------------------------------------------------------------------- #
# cycle sets and CycleWeight
# --------------------------------------------------------------------------- #


@dataclass
class ColouredCycleSet:
    """Cycles carried between rounds with a colour strictly inside (-1, 1)."""

    cycles: list[OrientedCycle] = field(default_factory=list)
    colours: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        self.colours = np.asarray(self.colours, dtype=np.float64).reshape(-1)
        self.ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
        if not (len(self.cycles) == len(self.colours) == len(self.ids)):
            raise InvalidParams("cycles, colours and ids must have equal length")
        if len(self.colours) and np.abs(self.colours).max() >= 1.0:
            raise ColourOutOfRange("leftover colours must lie strictly inside (-1, 1)")

    def __len__(self) -> int:
        return len(self.cycles)

    @property
    def mass(self) -> int:
        """Edge count of ``CycleWeight`` of the set (no colour is +-1, so no edge vanishes)."""
        return int(sum(len(c) for c in self.cycles))

    def subset(self, idx) -> "ColouredCycleSet":
        idx = np.asarray(idx, dtype=np.int64)
        return ColouredCycleSet([self.cycles[i] for i in idx], self.colours[idx], self.ids[idx])

    @staticmethod
    def union(a: "ColouredCycleSet", b: "ColouredCycleSet") -> "ColouredCycleSet":
        return ColouredCycleSet(a.cycles + b.cycles, np.r_[a.colours, b.colours], np.r_[a.ids, b.ids])


def cycle_weight(cycles, x, n: int) -> DirectedMultigraph:
    """Clockwise edges at ``(1 + x_C) w``, counter-clockwise ones at ``(1 - x_C) w``; zeros dropped."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if len(x) != len(cycles):
        raise InvalidParams("one colour per cycle required")
    if len(x) and (not np.all(np.isfinite(x)) or np.abs(x).max() > 1.0):
        raise ColourOutOfRange("colours must lie in [-1, 1]")
    t, h, w = [], [], []
    for oc, xc in zip(cycles, x):
        for tail, head, rev in zip(oc.tails, oc.heads, oc.reversed_):
            wt = (1.0 - xc if rev else 1.0 + xc) * oc.weight
            if wt != 0.0:
                t.append(tail)
                h.append(head)
                w.append(wt)
    if not t:
        return DirectedMultigraph.empty(n)
    w = np.asarray(w)
    if np.all(w == np.round(w)):
        w = w.astype(np.int64)
    return DirectedMultigraph(n, t, h, w)


def _cw_edge_count(cycles, x) -> int:
    return int(sum(sum((not r) if xc > 0 else r for r in oc.reversed_) for oc, xc in zip(cycles, x)))


# --------------------------------------------------------------------------- #
# the matrix family A(C)
# --------------------------------------------------------------------------- #


def _local_cycle(oc: OrientedCycle) -> tuple[np.ndarray, np.ndarray]:
    """Walk-order vertices and the local ``k x k`` block of ``L_F - L_S``."""
    verts = np.asarray(oc.vertices, dtype=np.int64)
    k = len(verts)
    pos = {int(v): i for i, v in enumerate(verts)}
    if len(pos) != k:
        raise InvalidParams("cycle repeats a vertex")
    block = np.zeros((k, k))
    for t, h, rev in zip(oc.tails, oc.heads, oc.reversed_):
        s = -1.0 if rev else 1.0
        a, b = pos[t], pos[h]
        block[a, a] += s * oc.weight
        block[b, a] -= s * oc.weight
    return verts, block


class CycleFamily:
    """``A(C) = hlift(P s_C (L_F - L_S) P)`` for a list of cycles, kept in local form.

    ``P`` is ``L_{G'}^{+/2}``; ``s_C`` an optional per-cycle scale.  Cycles
    are grouped by length so every product vectorises over a stacked array of
    small blocks.  Hermitian lifts are never formed: the lift preserves the
    operator norm and squares into the two blocks ``X X^T`` and ``X^T X``.
    """

    def __init__(self, cycles, p: np.ndarray, scales=None, lplus: np.ndarray | None = None):
        self.cycles = list(cycles)
        self.p = p
        self.lplus = p @ p if lplus is None else lplus
        self.n = p.shape[0]
        m = len(self.cycles)
        self.scales = np.ones(m) if scales is None else np.asarray(scales, dtype=np.float64).reshape(-1)
        if len(self.scales) != m:
            raise InvalidParams("one scale per cycle required")
        self.lengths = np.array([len(c) for c in self.cycles], dtype=np.int64)
        by_len: dict[int, list[int]] = {}
        local = [_local_cycle(c) for c in self.cycles]
        for i, (v, _) in enumerate(local):
            by_len.setdefault(len(v), []).append(i)
        self.groups = []
        flat, vals, owner = [], [], []
        n = self.n
        for k, members in sorted(by_len.items()):
            members = np.asarray(members, dtype=np.int64)
            V = np.stack([local[i][0] for i in members])
            T = np.stack([local[i][1] for i in members])
            self.groups.append((members, V, T))
            nz = T != 0
            gi, a, b = np.nonzero(nz)
            flat.append(V[gi, a] * n + V[gi, b])
            vals.append(T[nz])
            owner.append(members[gi])
        self._flat = np.concatenate(flat) if flat else np.zeros(0, np.int64)
        self._vals = np.concatenate(vals) if vals else np.zeros(0)
        self._owner = np.concatenate(owner) if owner else np.zeros(0, np.int64)

    def __len__(self) -> int:
        return len(self.cycles)

    def subset(self, idx) -> "CycleFamily":
        idx = np.asarray(idx, dtype=np.int64)
        return CycleFamily([self.cycles[i] for i in idx], self.p, self.scales[idx], self.lplus)

    def signed_sum(self, coef) -> np.ndarray:
        """``sum_C coef_C s_C (L_F - L_S)`` as a dense ``n x n`` matrix."""
        c = np.asarray(coef, dtype=np.float64) * self.scales
        out = np.bincount(self._flat, weights=self._vals * c[self._owner], minlength=self.n * self.n)
        return out.reshape(self.n, self.n)

    def normalised_sum(self, coef) -> np.ndarray:
        """``P (sum coef_C s_C Ltil_C) P``; its norm is that of ``sum coef_C A(C)``."""
        return self.p @ self.signed_sum(coef) @ self.p

    def sum_norm(self, coef) -> float:
        x = self.normalised_sum(coef)
        return float(np.linalg.norm(x, 2)) if x.size else 0.0

    def bilinear(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``s_C a^T Ltil_C b`` for every cycle (pass ``a = P u`` and ``b = P v``)."""
        out = np.zeros(len(self))
        for members, V, T in self.groups:
            out[members] = np.einsum("ci,cij,cj->c", a[V], T, b[V])
        return out * self.scales

    def materialize(self, i: int) -> np.ndarray:
        """Dense ``P s_C Ltil_C P`` (unlifted) for one cycle."""
        coef = np.zeros(len(self))
        coef[i] = 1.0
        return self.normalised_sum(coef)

    def _gram_blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Scattered ``sum s^2 Ltil^T L+ Ltil`` and ``sum s^2 Ltil L+ Ltil^T`` plus per-cycle Frobenius squares."""
        n = self.n
        s1 = np.zeros(n * n)
        s2 = np.zeros(n * n)
        frob = np.zeros(len(self))
        for members, V, T in self.groups:
            lpl = self.lplus[V[:, :, None], V[:, None, :]]
            s2c = (self.scales[members] ** 2)[:, None, None]
            q1 = np.einsum("cji,cjk,ckl->cil", T, lpl, T) * s2c
            q2 = np.einsum("cij,cjk,clk->cil", T, lpl, T) * s2c
            idx = (V[:, :, None] * n + V[:, None, :]).ravel()
            s1 += np.bincount(idx, weights=q1.ravel(), minlength=n * n)
            s2 += np.bincount(idx, weights=q2.ravel(), minlength=n * n)
            # ||P Ltil P||_F^2 = tr(Ltil^T L+ Ltil L+); the lift doubles it
            frob[members] = 2.0 * np.einsum("cil,cli->c", q1, lpl)
        return s1.reshape(n, n), s2.reshape(n, n), frob

    def variance(self) -> float:
        """``|| sum_C A(C)^2 ||``: the larger of the two diagonal blocks of the lifted square."""
        if len(self) == 0:
            return 0.0
        s1, s2, _ = self._gram_blocks()
        p = self.p
        return float(max(np.linalg.eigvalsh(_sym(p @ s1 @ p))[-1], np.linalg.eigvalsh(_sym(p @ s2 @ p))[-1], 0.0))

    def frobenius_squares(self) -> np.ndarray:
        if len(self) == 0:
            return np.zeros(0)
        return self._gram_blocks()[2]


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def family_for_graph(composite: DirectedMultigraph, cycles, scales=None) -> CycleFamily:
    fac = spectral_factorization(laplacian_undirected(composite))
    return CycleFamily(cycles, fac.apply_power(-0.5), scales, fac.apply_power(-1.0))


@dataclass
class PartialColourContract:
    """Inputs and promised guarantee of one partial-colouring call."""

    family: CycleFamily
    sigma_sq: float
    frob_sq_sum: float
    fraction_guarantee: float
    norm_constant: float = 1.0

    @classmethod
    def measured(cls, family: CycleFamily, fraction_guarantee: float, norm_constant: float = 1.0):
        """Contract whose ``sigma_sq`` and Frobenius sum are computed exactly from the family."""
        if len(family) == 0:
            return cls(family, 0.0, 0.0, fraction_guarantee, norm_constant)
        s1, s2, frob = family._gram_blocks()
        p = family.p
        sig = max(np.linalg.eigvalsh(_sym(p @ s1 @ p))[-1], np.linalg.eigvalsh(_sym(p @ s2 @ p))[-1], 0.0)
        return cls(family, float(sig), float(frob.sum()), fraction_guarantee, norm_constant)

    @property
    def m(self) -> int:
        return len(self.family)

    @property
    def f(self) -> float:
        return float(np.sqrt(self.frob_sq_sum / self.m)) if self.m else 0.0

    def bound(self) -> float:
        """``c (sigma + log^{3/4}(dim) sqrt(sigma f))`` with ``dim = 2n`` for the lift."""
        sigma = np.sqrt(self.sigma_sq)
        return self.norm_constant * (sigma + log2(max(2 * self.family.n, 2)) ** 0.75 * np.sqrt(sigma * self.f))


# --------------------------------------------------------------------------- #
# oracles
# --------------------------------------------------------------------------- #


class ColouringOracle(Protocol):
    name: str
    fraction_guarantee: float

    def __call__(self, family: CycleFamily, y: np.ndarray, rng: np.random.Generator) -> np.ndarray: ...


class RandomSignOracle:
    """Round every coordinate to +-1 independently with mean ``y`` (full colouring)."""

    name = "random-sign"
    fraction_guarantee = 1.0

    def __call__(self, family, y, rng):
        y = np.asarray(y, dtype=np.float64)
        return np.where(rng.random(len(y)) < 0.5 * (1.0 + y), 1.0, -1.0)


class GaussianWalkOracle:
    """Gaussian random walk that freezes coordinates at +-1.

    Each step is projected off the directions that, to first order, grow the
    top ``k`` singular values of the running normalised signed sum.  The walk
    stops once ``ceil(fraction_guarantee * m)`` coordinates are frozen; if
    ``max_steps`` runs out first, the largest remaining coordinates are rounded.
    """

    name = "gaussian-walk"

    def __init__(self, step: float = 0.2, k: int = 8, fraction_guarantee: float = 0.5,
                 max_steps: int | None = None, power_iters: int = 2):
        if not 0.0 < fraction_guarantee < 1.0:
            raise InvalidParams("fraction_guarantee must lie in (0, 1)")
        if step <= 0 or k < 0:
            raise InvalidParams("step must be positive and k non-negative")
        self.step = step
        self.k = k
        self.fraction_guarantee = fraction_guarantee
        self.max_steps = max_steps if max_steps is not None else int(ceil(20.0 / step**2))
        self.power_iters = power_iters

    def __call__(self, family, y, rng):
        x = np.array(y, dtype=np.float64)
        m = len(x)
        if m == 0:
            return x
        need = min(m, max(1, ceil(self.fraction_guarantee * m)))
        frozen = np.abs(x) >= 1.0
        n = family.n
        acc = np.zeros((n, n))  # running sum of (x - y)_C s_C Ltil_C
        basis = np.linalg.qr(rng.standard_normal((n, max(self.k, 1))))[0]
        for _ in range(self.max_steps):
            if frozen.sum() >= need:
                break
            alive = np.flatnonzero(~frozen)
            d = rng.standard_normal(len(alive))
            kk = min(self.k, len(alive) // 2)
            if kk > 0 and np.any(acc):
                xm = family.p @ acc @ family.p
                for _ in range(self.power_iters):
                    basis = np.linalg.qr(xm.T @ (xm @ basis))[0]
                uu, _, wt = np.linalg.svd(xm @ basis, full_matrices=False)
                right = basis @ wt.T
                rows = np.stack([
                    family.bilinear(family.p @ uu[:, j], family.p @ right[:, j])[alive] for j in range(kk)
                ])
                coef, *_ = np.linalg.lstsq(rows @ rows.T, rows @ d, rcond=None)
                d = d - rows.T @ coef
            nd = np.linalg.norm(d)
            if nd == 0.0:
                continue
            d *= self.step * np.sqrt(len(alive)) / nd
            old = x[alive].copy()
            x[alive] = np.clip(old + d, -1.0, 1.0)
            delta = np.zeros(m)
            delta[alive] = x[alive] - old
            acc += family.signed_sum(delta)
            frozen = np.abs(x) >= 1.0
        if frozen.sum() < need:
            alive = np.flatnonzero(~frozen)
            order = alive[np.argsort(-np.abs(x[alive]), kind="stable")]
            pick = order[: need - int(frozen.sum())]
            x[pick] = np.where(x[pick] >= 0.0, 1.0, -1.0)
        x[np.abs(x) >= 1.0] = np.sign(x[np.abs(x) >= 1.0])
        return x


class FixedColourOracle:
    """Returns a caller-supplied colouring regardless of the matrices (adversarial testing)."""

    name = "fixed"

    def __init__(self, chooser, fraction_guarantee: float = 1.0):
        self.chooser = chooser
        self.fraction_guarantee = fraction_guarantee

    def __call__(self, family, y, rng):
        return np.asarray(self.chooser(family, np.asarray(y, dtype=np.float64), rng), dtype=np.float64)


def make_oracle(name: str, **kwargs) -> ColouringOracle:
    if name == "random-sign":
        return RandomSignOracle()
    if name == "gaussian-walk":
        return GaussianWalkOracle(**kwargs)
    raise InvalidParams(f"unknown oracle {name!r}")


# --------------------------------------------------------------------------- #
# PartialColour and ColourTarget
# --------------------------------------------------------------------------- #


@dataclass
class PartialColourResult:
    x: np.ndarray
    measured_norm: float
    bound: float
    fully_coloured: int


def partial_colour(
    contract: PartialColourContract, y, oracle: ColouringOracle, rng: np.random.Generator, measure: bool = True
) -> PartialColourResult:
    y = np.asarray(y, dtype=np.float64)
    if len(y) != contract.m:
        raise InvalidParams("start point has the wrong length")
    if len(y) and np.abs(y).max() >= 1.0:
        raise ColourOutOfRange("start point must be strictly interior")
    x = np.asarray(oracle(contract.family, y, rng), dtype=np.float64)
    if x.shape != y.shape or (len(x) and (not np.all(np.isfinite(x)) or np.abs(x).max() > 1.0)):
        raise ColourOutOfRange("oracle returned colours outside [-1, 1]")
    x = np.where(np.abs(x) >= 1.0 - FULL_TOL, np.sign(x), x)
    norm = contract.family.sum_norm(x - y) if measure else float("nan")
    return PartialColourResult(x, norm, contract.bound(), int((np.abs(x) == 1.0).sum()))


def oracle_call_bound(size: int, L: int, m_t: float, fraction: float) -> int:
    """``ceil(log_{1/(1-c')}(|S| L / m_t)) + 1`` (one call suffices for a full colouring)."""
    ratio = size * L / m_t
    if ratio <= 1.0:
        return 0
    if fraction >= 1.0:
        return 1
    return int(ceil(log(ratio) / -log(1.0 - fraction))) + 1


@dataclass
class ColourTargetResult:
    full: np.ndarray  # indices into the input family with |x| = 1
    x: np.ndarray  # their colours
    partial: np.ndarray  # indices with |x| < 1
    x_bar: np.ndarray
    calls: int
    call_norms: list[float] = field(default_factory=list)
    measured_norm: float | None = None  # || sum (x + x_bar - y) A ||


def colour_target(
    family: CycleFamily,
    y,
    m_t: float,
    oracle: ColouringOracle,
    rng: np.random.Generator,
    measure: bool = False,
) -> ColourTargetResult:
    """Call the oracle on the not-yet-full cycles while ``|S_bar| > m_t / L``."""
    if m_t <= 0:
        raise InvalidParams("m_t must be positive")
    y0 = np.asarray(y, dtype=np.float64).copy()
    x = y0.copy()
    L = int(family.lengths.max()) if len(family) else 1
    calls = 0
    norms = []
    while True:
        part = np.flatnonzero(np.abs(x) < 1.0)
        if len(part) <= m_t / L:
            break
        sub = family.subset(part)
        contract = PartialColourContract(sub, float("nan"), float("nan"), oracle.fraction_guarantee)
        res = partial_colour(contract, x[part], oracle, rng, measure=measure)
        calls += 1
        norms.append(res.measured_norm)
        if res.fully_coloured < ceil(oracle.fraction_guarantee * len(part) - 1e-12):
            raise OracleStalled(
                f"oracle fully coloured {res.fully_coloured} of {len(part)} entries, "
                f"promised {oracle.fraction_guarantee:.3g}"
            )
        x[part] = res.x
    full = np.flatnonzero(np.abs(x) == 1.0)
    out = ColourTargetResult(full, x[full], part, x[part], calls, norms)
    if measure:
        out.measured_norm = family.sum_norm(x - y0)
    return out


# --------------------------------------------------------------------------- #
# the pipeline
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class ColourConfig:
    epsilon: float = 0.5
    stop_constant: float = 1.0
    filter_factor: float = 16.0
    seed: int | None = 0
    oracle: str = "gaussian-walk"
    resistances: str = "exact"
    verify: bool = False
    max_rounds: int = 200

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.5:
            raise InvalidParams(f"epsilon must lie in (0, 1/2], got {self.epsilon}")
        if self.stop_constant <= 0 or self.filter_factor <= 0:
            raise InvalidParams("threshold factors must be positive")
        if self.oracle not in ("random-sign", "gaussian-walk"):
            raise InvalidParams(f"unknown oracle {self.oracle!r}")
        if self.resistances not in ("exact", "sketch"):
            raise InvalidParams(f"unknown resistance method {self.resistances!r}")


@dataclass
class SparsifierState:
    g: DirectedMultigraph
    bar: ColouredCycleSet = field(default_factory=ColouredCycleSet)
    next_id: int = 0

    @property
    def n(self) -> int:
        return self.g.n

    @property
    def m(self) -> int:
        return self.g.m

    @property
    def m_prime(self) -> int:
        return self.g.m + self.bar.mass

    def composite(self) -> DirectedMultigraph:
        """``G' = G + CycleWeight(S_bar, x_bar)`` with real weights."""
        return DirectedMultigraph.concat(self.n, [self.g, cycle_weight(self.bar.cycles, self.bar.colours, self.n)])


@dataclass
class ColourRoundReport:
    branch: str  # "pcg" or "pcc"
    m_in: int
    m_prime_in: int
    m_out: int
    m_prime_out: int
    heavy_edges: int
    cycles_considered: int
    cycles_fully_coloured: int
    oracle_calls: int
    flipped: bool
    leftover_cycles: int
    measured_norm: float | None = None
    coloured_fraction: float = 0.0
    sparsity_ok: bool = True  # pcg: m'_out <= 63/64 m'; pcc: that or 4 m_out >= m'_out

    def to_dict(self) -> dict:
        return asdict(self)


def _relabel(cycles, ids) -> list[OrientedCycle]:
    return [
        OrientedCycle(tuple(int(ids[e]) for e in oc.edge_ids), oc.tails, oc.heads, oc.reversed_, oc.weight)
        for oc in cycles
    ]


def pcg(
    state: SparsifierState,
    r: ResistanceOracle,
    oracle: ColouringOracle,
    rng: np.random.Generator,
    cfg: ColourConfig = ColourConfig(),
    decomposer: Decomposer = naive_short_cycle_decomposition,
    measure: bool = False,
) -> tuple[SparsifierState, ColourRoundReport]:
    """Round for the regime ``4m >= m'``: colour cycles of the integral graph."""
    g, n = state.g, state.n
    m, mp = state.m, state.m_prime
    if 4 * m < mp:
        raise BranchViolation(f"pcg needs 4m >= m' (m={m}, m'={mp})")
    heavy = heavy_mask(g, r.for_graph(g), cfg.filter_factor, max(mp, 1))
    heavy_ids = np.flatnonzero(heavy)
    rest_ids = np.flatnonzero(~heavy)
    cycles, left_local, _ = decompose_levels(g.subgraph(rest_ids), decomposer, rng)
    cycles = _relabel(cycles, rest_ids)
    parts = [g.subgraph(heavy_ids), g.subgraph(rest_ids[left_local])]
    new_bar = state.bar
    flipped = False
    calls, full_count, norm = 0, 0, None
    next_id = state.next_id
    if cycles:
        fam = family_for_graph(state.composite(), cycles)
        ct = colour_target(fam, np.zeros(len(cycles)), m / 8.0, oracle, rng, measure=measure)
        y, ybar = ct.x, ct.x_bar
        t_full = [cycles[i] for i in ct.full]
        if _cw_edge_count(t_full, y) > _cw_edge_count(t_full, -y):
            y, ybar, flipped = -y, -ybar, True
        parts.append(_edges_to_graph(n, [e for oc, yc in zip(t_full, y) for e in toggle_cycle(oc, yc > 0)]))
        fresh = ColouredCycleSet(
            [cycles[i] for i in ct.partial], ybar, np.arange(next_id, next_id + len(ct.partial))
        )
        next_id += len(ct.partial)
        new_bar = ColouredCycleSet.union(fresh, state.bar)
        calls, full_count, norm = ct.calls, len(ct.full), ct.measured_norm
    h = DirectedMultigraph.concat(n, parts)
    out = SparsifierState(h, new_bar, next_id)
    rep = ColourRoundReport(
        branch="pcg",
        m_in=m,
        m_prime_in=mp,
        m_out=out.m,
        m_prime_out=out.m_prime,
        heavy_edges=len(heavy_ids),
        cycles_considered=len(cycles),
        cycles_fully_coloured=full_count,
        oracle_calls=calls,
        flipped=flipped,
        leftover_cycles=len(out.bar),
        measured_norm=norm,
        coloured_fraction=full_count / len(cycles) if cycles else 0.0,
    )
    rep.sparsity_ok = out.m_prime <= 63 / 64 * mp
    return out, rep


def pcc(
    state: SparsifierState,
    r: ResistanceOracle,
    oracle: ColouringOracle,
    rng: np.random.Generator,
    cfg: ColourConfig = ColourConfig(),
    measure: bool = False,
) -> tuple[SparsifierState, ColourRoundReport]:
    """Round for the regime ``4m < m'``: push the leftover cycles' colours towards +-1."""
    g, n = state.g, state.n
    m, mp = state.m, state.m_prime
    if 4 * m >= mp:
        raise BranchViolation(f"pcc needs 4m < m' (m={m}, m'={mp})")
    bar = state.bar
    xbar = bar.colours
    scale = 1.0 - np.abs(xbar)
    fam = family_for_graph(state.composite(), bar.cycles, scales=scale)
    ct = colour_target(fam, np.zeros(len(bar)), mp / 4.0, oracle, rng, measure=measure)
    y = np.zeros(len(bar))
    y[ct.full] = ct.x
    y[ct.partial] = ct.x_bar
    lengths = fam.lengths[ct.full]
    plus = np.abs(xbar[ct.full] + scale[ct.full] * ct.x) >= 1.0 - FULL_TOL
    minus = np.abs(xbar[ct.full] - scale[ct.full] * ct.x) >= 1.0 - FULL_TOL
    flipped = bool(lengths[minus].sum() > lengths[plus].sum())
    if flipped:
        y = -y
    z = xbar + scale * y
    full = np.abs(z) >= 1.0 - FULL_TOL
    z[full] = np.sign(z[full])
    idx_full = np.flatnonzero(full)
    idx_part = np.flatnonzero(~full)
    t_full = [bar.cycles[i] for i in idx_full]
    h = DirectedMultigraph.concat(
        n, [g, _edges_to_graph(n, [e for i in idx_full for e in toggle_cycle(bar.cycles[i], z[i] > 0)])]
    )
    new_bar = ColouredCycleSet([bar.cycles[i] for i in idx_part], z[idx_part], bar.ids[idx_part])
    out = SparsifierState(h, new_bar, state.next_id)
    rep = ColourRoundReport(
        branch="pcc",
        m_in=m,
        m_prime_in=mp,
        m_out=out.m,
        m_prime_out=out.m_prime,
        heavy_edges=0,
        cycles_considered=len(bar),
        cycles_fully_coloured=len(t_full),
        oracle_calls=ct.calls,
        flipped=flipped,
        leftover_cycles=len(new_bar),
        measured_norm=ct.measured_norm,
        coloured_fraction=len(t_full) / len(bar) if len(bar) else 0.0,
    )
    rep.sparsity_ok = out.m_prime <= 63 / 64 * mp or 4 * out.m >= out.m_prime
    return out, rep


def colour_stopping_threshold(n: int, eps: float, stop_constant: float) -> float:
    """``c (n eps^-2 log^2 n (log log n)^2 + eps^{-4/3} n log^{8/3} n)``."""
    lg = log2(max(n, 4))
    llg = log2(lg)
    return stop_constant * (n * lg**2 * llg**2 / eps**2 + n * lg ** (8 / 3) / eps ** (4 / 3))


@dataclass
class ColourResult:
    graph: DirectedMultigraph
    rounds: list[ColourRoundReport]
    state: SparsifierState
    edges_input: int
    edges_decomposed: int
    oracle: str
    stalled: bool = False
    measured_error: float | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "method": "colour",
            "oracle": self.oracle,
            "edges_input": self.edges_input,
            "edges_decomposed": self.edges_decomposed,
            "edges_output": self.graph.m,
            "leftover_cycles": len(self.state.bar),
            "rounds": [r.to_dict() for r in self.rounds],
            "stalled": self.stalled,
            "measured_error": self.measured_error,
            "seconds": self.seconds,
        }


def pcs(
    g: DirectedMultigraph,
    cfg: ColourConfig = ColourConfig(),
    oracle: ColouringOracle | None = None,
    decomposer: Decomposer = naive_short_cycle_decomposition,
    on_round=None,
) -> ColourResult:
    """Alternate pcg / pcc rounds while ``m'`` is above the stopping threshold.

    The branch is chosen at the top of every round.  The loop also ends after
    ``max_rounds`` rounds or when two consecutive rounds fail to lower ``m'``
    (``stalled``).  ``on_round(state, report)`` is called after every round.
    """
    t0 = time.perf_counter()
    if not is_eulerian(g):
        raise NotEulerian("input graph is not Eulerian")
    if not g.is_integral:
        raise InvalidParams("pcs needs integral weights")
    oracle = oracle if oracle is not None else make_oracle(cfg.oracle)
    cur = binary_decompose(g)
    r = ResistanceOracle.exact(cur) if cfg.resistances == "exact" else ResistanceOracle.sketched(cur, seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    state = SparsifierState(cur)
    thr = colour_stopping_threshold(cur.n, cfg.epsilon, cfg.stop_constant)
    rounds: list[ColourRoundReport] = []
    stalled = False
    idle = 0
    while state.m_prime >= thr:
        if len(rounds) >= cfg.max_rounds:
            stalled = True
            break
        before = state.m_prime
        if 4 * state.m >= state.m_prime:
            state, rep = pcg(state, r, oracle, rng, cfg, decomposer, measure=cfg.verify)
        else:
            state, rep = pcc(state, r, oracle, rng, cfg, measure=cfg.verify)
        rounds.append(rep)
        if on_round is not None:
            on_round(state, rep)
        idle = idle + 1 if state.m_prime >= before else 0
        if idle >= 2:
            stalled = True
            break
    h = state.composite()
    res = ColourResult(h, rounds, state, g.m, cur.m, oracle.name, stalled)
    if cfg.verify:
        res.measured_error = error_metric(g, h)
    res.seconds = time.perf_counter() - t0
    return res


# --------------------------------------------------------------------------- #
# state checks
# --------------------------------------------------------------------------- #


@dataclass
class ScaleCheck:
    min_eigenvalue: float
    scale: float
    passed: bool


def lemma_scale_check(g: DirectedMultigraph, bar: ColouredCycleSet, rtol: float = 1e-8) -> ScaleCheck:
    """``L_G + sum (1 - |x_C|) L_C <= L_{G'}`` as a PSD test on the undirectifications."""
    lower = laplacian_undirected(g)
    for oc, xc in zip(bar.cycles, bar.colours):
        lower += (1.0 - abs(xc)) * laplacian_undirected(oc.as_graph(g.n))
    upper = laplacian_undirected(SparsifierState(g, bar).composite())
    gap, scale = loewner_gap(lower, upper)
    return ScaleCheck(gap, scale, gap >= -rtol * max(scale, 1.0))


@dataclass
class LeverageCheck:
    max_ratio: float  # max over leftover-cycle edges of w_e r_e m' / n
    factor: float
    passed: bool


def leverage_invariant(state: SparsifierState, r: ResistanceOracle, factor: float = 4.0) -> LeverageCheck:
    """Whether every leftover cycle edge has ``w_e r_e <= factor n / m'``."""
    worst = 0.0
    for oc in state.bar.cycles:
        lev = oc.weight * r(np.asarray(oc.tails), np.asarray(oc.heads))
        worst = max(worst, float(lev.max()))
    ratio = worst * state.m_prime / state.n if state.n else 0.0
    return LeverageCheck(ratio, factor, ratio <= factor)
