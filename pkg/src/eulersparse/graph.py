"""
Directed weighted multigraphs stored as edge lists.

Edges keep a stable id (their position in the edge arrays), so parallel
copies produced by binary decomposition stay distinguishable and cycles can
refer to edges rather than endpoint pairs.  Graphs are immutable; every
transformation returns a new graph.
"""
from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InvalidGraph, InvalidParams, NonPowerOfTwoWeight

MAX_WEIGHT = 1 << 62
SOFT_MAX_WEIGHT = 1 << 40

TSV_HEADER = "# directed-eulerian n={n} m={m}"
JSON_FORMAT = "directed-eulerian-json"


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class DirectedMultigraph:
    """Vertex-indexed directed multigraph with positive edge weights.

    Weights are stored as ``int64`` when integral and ``float64`` otherwise.
    Real weights only appear in materialised outputs of the colouring
    sparsifier; every algorithm that decomposes a graph requires integral
    weights.
    """

    __slots__ = ("n", "tails", "heads", "weights")

    def __init__(self, n: int, tails, heads, weights):
        n = int(n)
        if n < 0:
            raise InvalidGraph(f"vertex count must be non-negative, got {n}")
        tails = np.asarray(tails, dtype=np.int64).reshape(-1)
        heads = np.asarray(heads, dtype=np.int64).reshape(-1)
        weights = np.asarray(weights).reshape(-1)
        if not (len(tails) == len(heads) == len(weights)):
            raise InvalidGraph("tails, heads and weights must have equal length")
        if len(tails):
            lo = min(tails.min(), heads.min())
            hi = max(tails.max(), heads.max())
            if lo < 0 or hi >= n:
                raise InvalidGraph(f"vertex ids must lie in [0, {n})")
            loops = np.flatnonzero(tails == heads)
            if len(loops):
                raise InvalidGraph(f"self-loop at edge {int(loops[0])}")

        if weights.dtype.kind in "iub":
            weights = weights.astype(np.int64)
        elif weights.dtype.kind == "f":
            weights = weights.astype(np.float64)
            if len(weights) and not np.all(np.isfinite(weights)):
                raise InvalidGraph("weights must be finite")
        elif len(weights) == 0:
            weights = weights.astype(np.int64)
        else:
            raise InvalidGraph(f"unsupported weight dtype {weights.dtype}")

        if len(weights):
            if np.any(weights <= 0):
                raise InvalidGraph("weights must be strictly positive")
            wmax = weights.max()
            if wmax >= MAX_WEIGHT:
                raise InvalidGraph(f"weight {wmax} exceeds 2^62")
            if wmax > SOFT_MAX_WEIGHT:
                warnings.warn(
                    f"edge weight {wmax} exceeds 2^40; weights are assumed "
                    "polynomially bounded",
                    RuntimeWarning,
                    stacklevel=2,
                )

        self.n = n
        self.tails = _frozen(tails)
        self.heads = _frozen(heads)
        self.weights = _frozen(weights)

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence]) -> "DirectedMultigraph":
        edges = list(edges)
        if not edges:
            return cls.empty(n)
        tails, heads, weights = zip(*edges)
        w = np.asarray(weights)
        if w.dtype.kind == "f" and np.all(np.isfinite(w)) and np.all(w == np.round(w)) and np.abs(w).max() < 2.0**62:
            w = w.astype(np.int64)
        return cls(n, tails, heads, w)

    @classmethod
    def empty(cls, n: int) -> "DirectedMultigraph":
        return cls(n, np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64))

    @classmethod
    def concat(cls, n: int, parts: Iterable["DirectedMultigraph"]) -> "DirectedMultigraph":
        """Edge-list union of graphs on the same vertex set, ids renumbered in order."""
        parts = [p for p in parts if p.m]
        if not parts:
            return cls.empty(n)
        for p in parts:
            if p.n != n:
                raise InvalidGraph("cannot concatenate graphs on different vertex sets")
        weights = [p.weights for p in parts]
        if any(w.dtype.kind == "f" for w in weights):
            weights = [w.astype(np.float64) for w in weights]
        return cls(
            n,
            np.concatenate([p.tails for p in parts]),
            np.concatenate([p.heads for p in parts]),
            np.concatenate(weights),
        )

    def subgraph(self, edge_ids) -> "DirectedMultigraph":
        """Graph on the same vertices keeping the given edges (bool mask or ids)."""
        idx = np.asarray(edge_ids)
        return DirectedMultigraph(self.n, self.tails[idx], self.heads[idx], self.weights[idx])

    # -- basic properties -----------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.tails)

    @property
    def is_integral(self) -> bool:
        if self.weights.dtype.kind == "i":
            return True
        return bool(np.all(self.weights == np.round(self.weights)))

    @property
    def total_weight(self):
        return self.weights.sum()

    def edges(self) -> Iterator[tuple[int, int, int | float]]:
        for t, h, w in zip(self.tails.tolist(), self.heads.tolist(), self.weights.tolist()):
            yield t, h, w

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.tails, weights=self.weights, minlength=self.n).astype(self.weights.dtype)

    def in_degrees(self) -> np.ndarray:
        return np.bincount(self.heads, weights=self.weights, minlength=self.n).astype(self.weights.dtype)

    def degrees(self) -> "DegreeVector":
        return DegreeVector(self.out_degrees(), self.in_degrees())

    def as_integral(self) -> "DirectedMultigraph":
        if self.weights.dtype.kind == "i":
            return self
        if not self.is_integral:
            raise InvalidGraph("graph has non-integral weights")
        return DirectedMultigraph(self.n, self.tails, self.heads, self.weights.astype(np.int64))

    def edge_multiset(self) -> list[tuple]:
        return sorted(self.edges())

    def __eq__(self, other) -> bool:
        if not isinstance(other, DirectedMultigraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.tails, other.tails)
            and np.array_equal(self.heads, other.heads)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"DirectedMultigraph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class DegreeVector:
    out_degree: np.ndarray
    in_degree: np.ndarray

    @property
    def difference(self) -> np.ndarray:
        return self.out_degree - self.in_degree


@dataclass(frozen=True)
class WeightLevel:
    level: int
    graph: DirectedMultigraph
    edge_ids: np.ndarray  # ids of these edges in the partitioned graph


@dataclass(frozen=True)
class WeightLevelPartition:
    n: int
    levels: tuple[WeightLevel, ...]

    def reassemble(self) -> DirectedMultigraph:
        """Rebuild the partitioned graph, restoring the original edge order."""
        if not self.levels:
            return DirectedMultigraph.empty(self.n)
        ids = np.concatenate([lv.edge_ids for lv in self.levels])
        g = DirectedMultigraph.concat(self.n, [lv.graph for lv in self.levels])
        order = np.argsort(ids, kind="stable")
        return g.subgraph(order)


# -- operations -------------------------------------------------------------------


def degree_difference(g: DirectedMultigraph) -> np.ndarray:
    """Weighted out-degree minus weighted in-degree, per vertex."""
    return g.out_degrees() - g.in_degrees()


def is_eulerian(g: DirectedMultigraph, rtol: float = 1e-12) -> bool:
    """True iff every vertex has equal weighted in- and out-degree.

    Integral graphs are compared exactly; real-weighted graphs with a
    tolerance relative to the largest degree.
    """
    diff = degree_difference(g)
    if g.weights.dtype.kind == "i":
        return not np.any(diff)
    scale = max(float(np.abs(g.out_degrees()).max(initial=0.0)), 1.0)
    return bool(np.all(np.abs(diff) <= rtol * scale))


def _is_power_of_two(w: np.ndarray) -> np.ndarray:
    return (w > 0) & ((w & (w - 1)) == 0)


def binary_decompose(g: DirectedMultigraph) -> DirectedMultigraph:
    """Split each edge into one parallel copy per set bit of its weight.

    Copies of an edge are emitted consecutively, highest bit first.
    """
    if not g.is_integral:
        raise InvalidGraph("binary decomposition needs integral weights")
    w = g.as_integral().weights
    if g.m == 0:
        return g
    nbits = int(w.max()).bit_length()
    bits = (w[:, None] >> np.arange(nbits - 1, -1, -1)[None, :]) & 1
    rows, cols = np.nonzero(bits)  # row-major: edge order, then high bit first
    new_w = np.left_shift(np.int64(1), (nbits - 1 - cols).astype(np.int64))
    return DirectedMultigraph(g.n, g.tails[rows], g.heads[rows], new_w)


def partition_by_weight(g: DirectedMultigraph) -> WeightLevelPartition:
    """Group edges into uniformly weighted levels, level ``i`` holding weight ``2**i``."""
    if g.m == 0:
        return WeightLevelPartition(g.n, ())
    if not g.is_integral:
        raise NonPowerOfTwoWeight("non-integral weight present")
    w = g.as_integral().weights
    bad = np.flatnonzero(~_is_power_of_two(w))
    if len(bad):
        raise NonPowerOfTwoWeight(f"edge {int(bad[0])} has weight {int(w[bad[0]])}")
    exps = np.log2(w).round().astype(np.int64)
    levels = []
    for e in np.unique(exps):
        ids = np.flatnonzero(exps == e)
        levels.append(WeightLevel(int(e), g.subgraph(ids), _frozen(ids)))
    return WeightLevelPartition(g.n, tuple(levels))


def has_power_of_two_weights(g: DirectedMultigraph) -> bool:
    if not g.is_integral:
        return False
    return bool(np.all(_is_power_of_two(g.as_integral().weights)))


def generate_random_eulerian(
    n: int,
    k: int,
    max_len: int = 6,
    max_weight_exp: int = 0,
    seed=None,
    ensure_connected: bool = False,
) -> DirectedMultigraph:
    """Union of ``k`` random directed cycles.

    Each cycle visits a random sequence of distinct vertices of length
    ``3..max_len`` and carries a uniform weight ``2**j`` with ``j`` drawn from
    ``0..max_weight_exp``.  With ``ensure_connected`` the draw is repeated
    (from the same generator stream) until the underlying undirected graph
    is connected.
    """
    if n < 3 or k < 1 or max_len < 3 or max_weight_exp < 0:
        raise InvalidParams(
            f"need n >= 3, k >= 1, max_len >= 3, max_weight_exp >= 0 (got {n}, {k}, {max_len}, {max_weight_exp})"
        )
    rng = np.random.default_rng(seed)
    max_len = min(max_len, n)
    for _ in range(100):
        lengths = rng.integers(3, max_len + 1, size=k)
        exps = rng.integers(0, max_weight_exp + 1, size=k)
        tails, heads, weights = [], [], []
        for length, e in zip(lengths.tolist(), exps.tolist()):
            verts = rng.choice(n, size=length, replace=False)
            tails.append(verts)
            heads.append(np.roll(verts, -1))
            weights.append(np.full(length, 1 << e, dtype=np.int64))
        g = DirectedMultigraph(n, np.concatenate(tails), np.concatenate(heads), np.concatenate(weights))
        if not ensure_connected or is_connected(g):
            return g
    raise InvalidParams(f"could not draw a connected instance with n={n}, k={k}")


def is_connected(g: DirectedMultigraph) -> bool:
    """Whether the undirected graph underlying ``g`` is connected."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    if g.n <= 1:
        return True
    adj = coo_matrix((np.ones(g.m), (g.tails, g.heads)), shape=(g.n, g.n))
    ncomp, _ = connected_components(adj, directed=False)
    return ncomp == 1


# -- serialisation ---------------------------------------------------------------


def write_tsv(g: DirectedMultigraph, dest=None) -> str:
    """Write an integral graph in the TSV edge-list format; returns the text."""
    if not g.is_integral:
        raise InvalidGraph("TSV format holds integral weights only; use write_json")
    g = g.as_integral()
    buf = io.StringIO()
    buf.write(TSV_HEADER.format(n=g.n, m=g.m) + "\n")
    for t, h, w in g.edges():
        buf.write(f"{t}\t{h}\t{w}\n")
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text


def read_tsv(source) -> DirectedMultigraph:
    """Parse the TSV format from a path or from the text itself."""
    text = _read_text(source)
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# directed-eulerian"):
        raise InvalidGraph("missing '# directed-eulerian n=<n> m=<m>' header")
    fields = dict(tok.split("=", 1) for tok in lines[0].split()[2:])
    n, m = int(fields["n"]), int(fields["m"])
    edges = []
    for line in lines[1:]:
        if not line.strip():
            continue
        t, h, w = line.split("\t")
        edges.append((int(t), int(h), int(w)))
    if len(edges) != m:
        raise InvalidGraph(f"header declares m={m} but found {len(edges)} edges")
    if not edges:
        return DirectedMultigraph.empty(n)
    t, h, w = zip(*edges)
    return DirectedMultigraph(n, t, h, np.array(w, dtype=np.int64))


def to_json_dict(g: DirectedMultigraph) -> dict:
    return {
        "format": JSON_FORMAT,
        "n": g.n,
        "m": g.m,
        "edges": [[t, h, w] for t, h, w in g.edges()],
    }


def write_json(g: DirectedMultigraph, dest=None) -> str:
    text = json.dumps(to_json_dict(g))
    if dest is not None:
        Path(dest).write_text(text)
    return text


def from_json_dict(d: dict) -> DirectedMultigraph:
    if d.get("format") != JSON_FORMAT:
        raise InvalidGraph(f"expected format {JSON_FORMAT!r}")
    edges = d["edges"]
    if not edges:
        return DirectedMultigraph.empty(d["n"])
    t, h, w = zip(*edges)
    w = np.array(w)
    return DirectedMultigraph(d["n"], t, h, w)


def read_json(source) -> DirectedMultigraph:
    return from_json_dict(json.loads(_read_text(source)))


def read_graph(path) -> DirectedMultigraph:
    """Read either format, dispatching on content."""
    text = _read_text(path)
    if text.lstrip().startswith("{"):
        return from_json_dict(json.loads(text))
    return read_tsv(text)


def _read_text(source) -> str:
    if isinstance(source, Path):
        return source.read_text()
    if isinstance(source, str) and "\n" not in source and not source.startswith("#") and not source.startswith("{"):
        return Path(source).read_text()
    return source
