"""
Dense Laplacian algebra for verification and for the colouring oracles.

Everything here works on dense ``float64`` arrays; the verifier targets
desk-scale graphs (a few thousand vertices at most).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .errors import DimensionMismatch, Disconnected, NotPSD, NotSymmetric
from .graph import DirectedMultigraph

RANK_RTOL = 1e-10
SYM_RTOL = 1e-10
PSD_RTOL = 1e-10


@dataclass(frozen=True)
class SpectralFactorization:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, orthonormal
    rank_tol: float

    @property
    def nonzero(self) -> np.ndarray:
        return self.eigenvalues > self.rank_tol

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T

    def apply_power(self, power: float) -> np.ndarray:
        """``sum lam**power v v^T`` over the numerically nonzero spectrum."""
        keep = self.nonzero
        q = self.eigenvectors[:, keep]
        return (q * self.eigenvalues[keep] ** power) @ q.T


def laplacian_directed(g: DirectedMultigraph) -> np.ndarray:
    """``D_out - A^T``: column sums vanish; row sums vanish iff ``g`` is Eulerian."""
    lap = np.zeros((g.n, g.n))
    w = g.weights.astype(np.float64)
    np.add.at(lap, (g.tails, g.tails), w)
    np.add.at(lap, (g.heads, g.tails), -w)
    return lap


def laplacian_undirected(g: DirectedMultigraph) -> np.ndarray:
    """Laplacian of the undirectification: each directed edge contributes half its weight."""
    lap = np.zeros((g.n, g.n))
    w = 0.5 * g.weights.astype(np.float64)
    np.add.at(lap, (g.tails, g.tails), w)
    np.add.at(lap, (g.heads, g.heads), w)
    np.add.at(lap, (g.tails, g.heads), -w)
    np.add.at(lap, (g.heads, g.tails), -w)
    return lap


def _check_symmetric(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {a.shape}")
    scale = np.abs(a).max(initial=0.0)
    if np.abs(a - a.T).max(initial=0.0) > SYM_RTOL * max(scale, 1e-300):
        raise NotSymmetric("matrix is not symmetric")


def spectral_factorization(a: np.ndarray, psd: bool = True) -> SpectralFactorization:
    """Eigendecomposition of a symmetric matrix.

    With ``psd`` the input must have no eigenvalue below ``-1e-10 * ||A||``;
    small negative eigenvalues are clamped to zero.
    """
    a = np.asarray(a, dtype=np.float64)
    _check_symmetric(a)
    lam, q = np.linalg.eigh(0.5 * (a + a.T))
    scale = np.abs(lam).max(initial=0.0)
    if psd:
        if len(lam) and lam[0] < -PSD_RTOL * scale:
            raise NotPSD(f"smallest eigenvalue {lam[0]:.3e} below tolerance")
        lam = np.clip(lam, 0.0, None)
    return SpectralFactorization(lam, q, RANK_RTOL * scale)


def pseudo_inverse(a: np.ndarray) -> np.ndarray:
    return spectral_factorization(a).apply_power(-1.0)


def pseudo_inverse_sqrt(a: np.ndarray) -> np.ndarray:
    """``A^{+/2}`` of a symmetric PSD matrix."""
    return spectral_factorization(a).apply_power(-0.5)


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value."""
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hermitian_lift(a: np.ndarray) -> np.ndarray:
    """Symmetric embedding ``[[0, A], [A^T, 0]]``.

    Preserves the operator norm; the Frobenius norm grows by a factor sqrt(2).
    """
    a = np.asarray(a, dtype=np.float64)
    r, c = a.shape
    out = np.zeros((r + c, r + c))
    out[:r, r:] = a
    out[r:, :r] = a.T
    return out


def min_eigenvalue(a: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    return float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])


def loewner_gap(lower: np.ndarray, upper: np.ndarray) -> tuple[float, float]:
    """Return ``(min eig(upper - lower), scale)`` for testing ``lower <= upper``.

    ``scale`` is the larger operator norm of the two sides so callers can
    apply a relative tolerance.
    """
    gap = min_eigenvalue(upper - lower)
    scale = max(operator_norm(lower), operator_norm(upper))
    return gap, scale


def _require_connected(g: DirectedMultigraph) -> None:
    if g.n <= 1:
        return
    adj = sp.coo_matrix((np.ones(g.m), (g.tails, g.heads)), shape=(g.n, g.n))
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise Disconnected(f"undirected graph has {ncomp} components")


class ResistanceOracle:
    """Effective resistances of a fixed undirected graph, queried by endpoints.

    Resistance is a function of the endpoint pair, so one oracle built on the
    initial graph serves every later graph whose edges it is asked about.
    """

    def __init__(self, lplus: np.ndarray | None = None, sketch: np.ndarray | None = None):
        if (lplus is None) == (sketch is None):
            raise ValueError("provide exactly one of lplus or sketch")
        self.lplus = lplus
        self.sketch = sketch  # k x n embedding, r(u, v) = ||Z(e_u - e_v)||^2

    @classmethod
    def exact(cls, g: DirectedMultigraph) -> "ResistanceOracle":
        _require_connected(g)
        return cls(lplus=pseudo_inverse(laplacian_undirected(g)))

    @classmethod
    def sketched(
        cls, g: DirectedMultigraph, distortion: float = 0.3, failure: float = 1e-3, seed=None
    ) -> "ResistanceOracle":
        """Johnson-Lindenstrauss sketch of ``W^{1/2} B L^+`` using sparse solves.

        The number of probe vectors is chosen so that every vertex pair is
        estimated within ``1 +- distortion`` except with total probability
        ``failure``.
        """
        _require_connected(g)
        n = g.n
        rng = np.random.default_rng(seed)
        d = distortion
        k = ceil(2.0 * (log(2.0) + 2.0 * log(max(n, 2)) + log(1.0 / failure)) / (d * d / 2 - d**3 / 3))
        w = 0.5 * g.weights.astype(np.float64)
        q = rng.choice([-1.0, 1.0], size=(k, g.m)) / np.sqrt(k)
        b = sp.csr_matrix(
            (np.r_[np.ones(g.m), -np.ones(g.m)], (np.r_[np.arange(g.m), np.arange(g.m)], np.r_[g.tails, g.heads])),
            shape=(g.m, n),
        )
        y = (q * np.sqrt(w)) @ b  # k x n, rows sum to zero
        lap = sp.csc_matrix(
            (np.r_[w, w, -w, -w], (np.r_[g.tails, g.heads, g.tails, g.heads], np.r_[g.tails, g.heads, g.heads, g.tails])),
            shape=(n, n),
        )
        # Ground vertex 0; the grounded solve gives L^+ up to a constant shift per row,
        # which cancels in differences z_u - z_v.
        lu = splu(lap[1:, 1:].tocsc())
        z = np.zeros((k, n))
        z[:, 1:] = lu.solve(np.ascontiguousarray(y[:, 1:].T)).T
        return cls(sketch=z)

    def __call__(self, tails, heads) -> np.ndarray:
        tails = np.asarray(tails, dtype=np.int64)
        heads = np.asarray(heads, dtype=np.int64)
        if self.lplus is not None:
            p = self.lplus
            return p[tails, tails] + p[heads, heads] - 2.0 * p[tails, heads]
        diff = self.sketch[:, tails] - self.sketch[:, heads]
        return np.einsum("ij,ij->j", diff, diff)

    def for_graph(self, g: DirectedMultigraph) -> np.ndarray:
        return self(g.tails, g.heads)


def effective_resistances(g: DirectedMultigraph, method: str = "exact", seed=None) -> np.ndarray:
    """Per-edge effective resistance in the undirectification of ``g``."""
    if method == "exact":
        oracle = ResistanceOracle.exact(g)
    elif method == "sketch":
        oracle = ResistanceOracle.sketched(g, seed=seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    return oracle.for_graph(g)


def leverage_scores(g: DirectedMultigraph) -> np.ndarray:
    """Leverage of each edge in the undirectification (undirected weight ``w/2``)."""
    return 0.5 * g.weights * effective_resistances(g)


def normalized_difference(g: DirectedMultigraph, h: DirectedMultigraph) -> np.ndarray:
    """``L_G^{+/2} (L_H - L_G) L_G^{+/2}`` with ``L_G`` the undirected Laplacian of ``g``."""
    if g.n != h.n:
        raise DimensionMismatch(f"vertex counts differ: {g.n} vs {h.n}")
    _require_connected(g)
    p = pseudo_inverse_sqrt(laplacian_undirected(g))
    return p @ (laplacian_directed(h) - laplacian_directed(g)) @ p


def error_metric(g: DirectedMultigraph, h: DirectedMultigraph) -> float:
    """Eulerian approximation error of ``h`` measured against ``g``.

    Not symmetric: the normalising Laplacian always comes from the first
    argument.
    """
    return operator_norm(normalized_difference(g, h))
