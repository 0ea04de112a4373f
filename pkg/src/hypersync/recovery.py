"""Vertex-potential recovery from hyperedge data.

Hyperedge data is first reduced to pairwise data (``refine`` picks, for each
vertex pair, the covering hyperedge with the smallest estimated corruption;
``reduce_two_section_medoid`` takes the geodesic medoid of all covering
restrictions).  Vertex elements are then assigned along a minimum spanning
tree or read off the top eigenvectors of a weighted block connection matrix.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

from .chmp import CorruptionState
from .exceptions import ConvergenceError, DisconnectedError
from .group import (
    GroupElement,
    Variant,
    VertexPotential,
    compose_array,
    distance_array,
    identity_array,
    inverse_array,
    matrix_array,
    project_matrix_array,
)
from .hypergraph import UniformHypergraph, connected_components

__all__ = [
    "VertexPotential",
    "WeightedPairGraph",
    "refine",
    "recover_mst",
    "recover_gcw",
    "recover_spectral_baseline",
    "reduce_two_section_medoid",
    "block_power_iteration",
    "gcw_matrix",
]

POWER_TOL = 1e-10
POWER_MAX_ITER = 5000


@dataclass(eq=False)
class WeightedPairGraph:
    """Pairwise measurements ``meas[k] ~ g_i g_j^-1`` on edges ``i[k] < j[k]``.

    Attributes:
        m: Vertex count.
        variant: Group variant.
        i, j: Edge endpoints.
        meas: Edge measurements (angles for SO2, matrices for SO3).
        s: Edge corruption estimates in [0, 1].
        source: Hyperedge each edge measurement was taken from.
    """

    m: int
    variant: Variant
    i: np.ndarray
    j: np.ndarray
    meas: np.ndarray
    s: np.ndarray
    source: np.ndarray

    def __post_init__(self):
        self.variant = Variant.parse(self.variant)
        self.i = np.asarray(self.i, dtype=np.int64)
        self.j = np.asarray(self.j, dtype=np.int64)
        self.s = np.asarray(self.s, dtype=float)
        self.source = np.asarray(self.source, dtype=np.int64)
        self.meas = np.asarray(self.meas, dtype=float)
        if np.any(self.i >= self.j):
            raise ValueError("edges must satisfy i < j")
        keys = self.i * self.m + self.j
        if np.unique(keys).size != keys.size:
            raise ValueError("duplicate edges")

    @property
    def num_edges(self) -> int:
        return self.i.size

    @property
    def edges(self) -> list:
        """Edges as ``(i, j, measurement, s, source)`` tuples."""
        return [
            (int(a), int(b), GroupElement(self.variant, self.meas[k]), float(self.s[k]), int(self.source[k]))
            for k, (a, b) in enumerate(zip(self.i, self.j))
        ]

    def edge(self, a: int, b: int) -> int | None:
        a, b = min(a, b), max(a, b)
        hit = np.flatnonzero((self.i == a) & (self.j == b))
        return int(hit[0]) if hit.size else None

    def with_weights(self, s) -> "WeightedPairGraph":
        return WeightedPairGraph(self.m, self.variant, self.i, self.j, self.meas, np.asarray(s, float), self.source)


def _pair_table(H: UniformHypergraph):
    """Every (hyperedge, position pair) incidence with its vertex pair."""
    pos = np.array(list(itertools.combinations(range(H.n), 2)), dtype=np.int64)
    hid = np.repeat(np.arange(H.num_hyperedges), len(pos))
    pa = np.tile(pos[:, 0], H.num_hyperedges)
    pb = np.tile(pos[:, 1], H.num_hyperedges)
    vi = H.edges[hid, pa]
    vj = H.edges[hid, pb]
    return hid, pa, pb, vi, vj


def refine(H: UniformHypergraph, s) -> WeightedPairGraph:
    """Reduce to pairwise data using the least corrupted covering hyperedge.

    Ties go to the smallest hyperedge id.  ``s`` may be a ``CorruptionState``
    or a plain per-hyperedge array.
    """
    s = np.asarray(s.s if isinstance(s, CorruptionState) else s, dtype=float)
    if s.shape != (H.num_hyperedges,):
        raise ValueError("corruption estimates must cover every hyperedge")
    hid, pa, pb, vi, vj = _pair_table(H)
    key = vi * H.m + vj
    order = np.lexsort((hid, s[hid], key))
    key_sorted = key[order]
    first = np.concatenate([[True], key_sorted[1:] != key_sorted[:-1]]) if key.size else np.empty(0, bool)
    pick = order[first]
    meas = H.restrict_pairs(hid[pick], pa[pick], pb[pick])
    return WeightedPairGraph(H.m, H.variant, vi[pick], vj[pick], meas, s[hid[pick]], hid[pick])


def reduce_two_section_medoid(H: UniformHypergraph) -> WeightedPairGraph:
    """Pairwise data from the geodesic medoid of all covering restrictions.

    For each vertex pair the restriction minimizing the summed distance to
    the others is chosen, ties going to the smallest hyperedge id.  Edge
    weights are all 0.
    """
    hid, pa, pb, vi, vj = _pair_table(H)
    key = vi * H.m + vj
    order = np.lexsort((hid, key))
    key_sorted = key[order]
    meas_all = H.restrict_pairs(hid[order], pa[order], pb[order])
    bounds = np.flatnonzero(np.concatenate([[True], key_sorted[1:] != key_sorted[:-1], [True]]))
    picks = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        group = meas_all[lo:hi]
        if hi - lo == 1:
            picks.append(lo)
            continue
        if H.variant is Variant.SO2:
            dist = distance_array(H.variant, group[:, None], group[None, :])
        else:
            dist = distance_array(H.variant, group[:, None, :, :], group[None, :, :, :])
        picks.append(lo + int(np.argmin(dist.sum(axis=1))))
    picks = np.asarray(picks, dtype=np.int64)
    chosen = order[picks]
    return WeightedPairGraph(
        H.m, H.variant, vi[chosen], vj[chosen], meas_all[picks], np.zeros(picks.size), hid[chosen]
    )


def _require_connected(G: WeightedPairGraph):
    comps = connected_components(G.m, np.stack([G.i, G.j], axis=1)) if G.num_edges else [[v] for v in range(G.m)]
    if len(comps) > 1:
        raise DisconnectedError(f"pair graph has {len(comps)} components", comps)


def recover_mst(G: WeightedPairGraph) -> VertexPotential:
    """Assign vertex elements along a minimum spanning tree of the edge weights.

    Kruskal's algorithm orders edges by weight and then by edge index.
    Vertex 0 receives the identity and ``g_i = meas_ij g_j`` is propagated
    through the tree, inverting the measurement when walking from i to j.
    """
    _require_connected(G)
    parent = list(range(G.m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    adj = [[] for _ in range(G.m)]
    for k in np.argsort(G.s, kind="stable"):
        a, b = int(G.i[k]), int(G.j[k])
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            adj[a].append((b, int(k)))
            adj[b].append((a, int(k)))
    values = identity_array(G.variant, (G.m,))
    seen = np.zeros(G.m, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for w, k in adj[u]:
            if seen[w]:
                continue
            rel = G.meas[k]
            if G.i[k] == w:
                # g_w = meas g_u
                values[w] = compose_array(G.variant, rel, values[u])
            else:
                # u is the i endpoint: g_w = meas^-1 g_u
                values[w] = compose_array(G.variant, inverse_array(G.variant, rel), values[u])
            seen[w] = True
            queue.append(w)
    return VertexPotential(G.variant, values)


def gcw_matrix(G: WeightedPairGraph, beta_T: float, symmetric: bool = True) -> np.ndarray:
    """Weighted block connection matrix.

    Block (i, j) is ``w_ij R_ij`` and block (j, i) its transpose, with
    ``w_ij = exp(-beta_T s_ij)``.  The symmetric variant applies
    ``D^-1/2 W D^-1/2``; otherwise rows are normalized by ``D^-1``.
    """
    d = G.variant.dim
    s = G.s
    shift = s.min() if s.size else 0.0
    w = np.exp(-beta_T * (s - shift))
    mats = matrix_array(G.variant, G.meas)
    deg = np.bincount(G.i, weights=w, minlength=G.m) + np.bincount(G.j, weights=w, minlength=G.m)
    if np.any(deg == 0):
        raise DisconnectedError("pair graph has isolated vertices", None)
    if symmetric:
        scale_ij = w / np.sqrt(deg[G.i] * deg[G.j])
        scale_ji = scale_ij
    else:
        scale_ij = w / deg[G.i]
        scale_ji = w / deg[G.j]
    M = np.zeros((G.m, d, G.m, d))
    M[G.i, :, G.j, :] = scale_ij[:, None, None] * mats
    M[G.j, :, G.i, :] = scale_ji[:, None, None] * np.swapaxes(mats, -1, -2)
    return M.reshape(G.m * d, G.m * d)


def block_power_iteration(
    M: np.ndarray,
    d: int,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
    shift: float = 1.0,
    seed: int = 0,
) -> tuple:
    """Top-``d`` invariant subspace of ``M`` by orthogonalized subspace iteration.

    Iterates on ``M + shift I`` so a spectrum in [-shift, shift] becomes
    non-negative.  Convergence is measured by the component of the new basis
    outside the previous subspace.

    Returns:
        ``(X, eigenvalues, iterations)`` with orthonormal columns ``X``.

    Raises:
        ConvergenceError: when the residual is still above ``tol`` after ``max_iter`` steps.
    """
    N = M.shape[0]
    A = M + shift * np.eye(N)
    X, _ = np.linalg.qr(np.random.default_rng(seed).standard_normal((N, d)))
    res = np.inf
    for it in range(1, max_iter + 1):
        Y, _ = np.linalg.qr(A @ X)
        res = float(np.linalg.norm(Y - X @ (X.T @ Y)))
        X = Y
        if res < tol:
            break
    else:
        raise ConvergenceError(f"power iteration residual {res:.3e} after {max_iter} steps", res)
    evals = np.linalg.eigvals(X.T @ M @ X).real
    return X, np.sort(evals)[::-1], it


def _blocks_to_potential(variant: Variant, X: np.ndarray, m: int) -> VertexPotential:
    d = variant.dim
    blocks = X.reshape(m, d, d)
    if np.count_nonzero(np.linalg.det(blocks) < 0) * 2 > m:
        X = X.copy()
        X[:, -1] *= -1
        blocks = X.reshape(m, d, d)
    return VertexPotential(variant, project_matrix_array(variant, blocks))


def recover_gcw(G: WeightedPairGraph, beta_T: float, symmetric: bool = True) -> VertexPotential:
    """Spectral recovery from the weighted block connection matrix.

    Each vertex gets the SO(d) projection of its d x d block of the top-d
    eigenvectors.  When most blocks have negative determinant one
    eigenvector is negated first.
    """
    _require_connected(G)
    M = gcw_matrix(G, beta_T, symmetric)
    X, _, _ = block_power_iteration(M, G.variant.dim)
    return _blocks_to_potential(G.variant, X, G.m)


def recover_spectral_baseline(G: WeightedPairGraph, symmetric: bool = True) -> VertexPotential:
    """Block spectral recovery with every edge weighted equally."""
    return recover_gcw(G.with_weights(np.zeros(G.num_edges)), 0.0, symmetric)
