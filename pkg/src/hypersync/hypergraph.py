"""Uniform hypergraphs, the tau bijection, restriction maps and cycle machinery.

A hyperedge stores its vertices in increasing order together with a
measurement in G^(n-1): the tuple of consecutive ratios of any coset
representative, taken in that stored order.  Cycles in the set used by the
message passing (order n-1, length n+1) live on n+1 distinct base vertices;
window ``i`` consists of the n consecutive base vertices starting at ``i``
(wrapping around) and must itself be a hyperedge.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .exceptions import DisconnectedError, InconsistencyError, VariantMismatchError
from .group import (
    GroupElement,
    GroupTuple,
    Variant,
    VertexPotential,
    compose,
    compose_array,
    distance_to_identity_array,
    identity_array,
    inverse,
    ratio_array,
    tuple_distance,
    tuple_distance_array,
)

COMPATIBILITY_TOL = 1e-9


# ---------------------------------------------------------------------------
# tau and restriction
# ---------------------------------------------------------------------------


def tau(coset_rep: Sequence[GroupElement]) -> GroupTuple:
    """Consecutive ratios ``(g1 g2^-1, ..., g_{n-1} g_n^-1)`` of a representative."""
    reps = list(coset_rep)
    if len(reps) < 2:
        raise ValueError("tau needs at least two elements")
    return GroupTuple(tuple(compose(a, inverse(b)) for a, b in zip(reps[:-1], reps[1:])))


def tau_inverse(t: GroupTuple) -> list:
    """Representative of the coset whose tau-image is ``t``, ending in the identity."""
    out = [GroupElement.identity(t.variant)]
    for comp in reversed(t.elements):
        out.append(compose(comp, out[-1]))
    return out[::-1]


def tau_array(variant, reps) -> np.ndarray:
    """Batched tau over axis -1 (SO2) or -3 (SO3) of a representative stack."""
    if Variant.parse(variant) is Variant.SO2:
        return ratio_array(variant, reps[..., :-1], reps[..., 1:])
    return ratio_array(variant, reps[..., :-1, :, :], reps[..., 1:, :, :])


def tau_inverse_array(variant, t) -> np.ndarray:
    """Batched inverse of tau; the last representative element is the identity."""
    variant = Variant.parse(variant)
    t = np.asarray(t, dtype=float)
    if variant is Variant.SO2:
        k = t.shape[-1]
        out = np.empty(t.shape[:-1] + (k + 1,))
        out[..., k] = 0.0
        for i in range(k - 1, -1, -1):
            out[..., i] = compose_array(variant, t[..., i], out[..., i + 1])
        return out
    k = t.shape[-3]
    out = np.empty(t.shape[:-3] + (k + 1, 3, 3))
    out[..., k, :, :] = np.eye(3)
    for i in range(k - 1, -1, -1):
        out[..., i, :, :] = t[..., i, :, :] @ out[..., i + 1, :, :]
    return out


def restrict_ordered(h_vertices: Sequence[int], meas: GroupTuple, target: Sequence[int]) -> GroupTuple:
    """Restrict a hyperedge measurement to an ordered subset of its vertices.

    The measurement is lifted with ``tau_inverse``, the coordinates of the
    target vertices are picked in target order, and ``tau`` is reapplied.
    """
    h_vertices = list(h_vertices)
    if len(target) < 2:
        raise ValueError("restriction target needs at least two vertices")
    if meas.order != len(h_vertices) - 1:
        raise VariantMismatchError("measurement order does not match hyperedge size")
    index = {v: i for i, v in enumerate(h_vertices)}
    missing = [v for v in target if v not in index]
    if missing:
        raise ValueError(f"vertices {missing} are not in hyperedge {tuple(h_vertices)}")
    rep = tau_inverse(meas)
    return tau([rep[index[v]] for v in target])


def _select(variant, reps, positions) -> np.ndarray:
    """Gather representative components by per-row position arrays."""
    if Variant.parse(variant) is Variant.SO2:
        return np.take_along_axis(reps, positions, axis=-1)
    return np.take_along_axis(reps, positions[..., None, None], axis=-3)


# ---------------------------------------------------------------------------
# hypergraph
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class UniformHypergraph:
    """n-uniform hypergraph on vertices ``0..m-1`` with G^(n-1) measurements.

    ``edges`` is an ``(H, n)`` integer array whose rows are strictly
    increasing; ``measurements`` is ``(H, n-1)`` for SO2 or
    ``(H, n-1, 3, 3)`` for SO3, expressed in that row order.
    """

    m: int
    n: int
    variant: Variant
    edges: np.ndarray
    measurements: np.ndarray

    def __post_init__(self):
        self.variant = Variant.parse(self.variant)
        self.m = int(self.m)
        self.n = int(self.n)
        if self.n < 2:
            raise ValueError("hyperedges need at least two vertices")
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, self.n)
        self.measurements = np.asarray(self.measurements, dtype=float)
        e = self.edges
        if e.size and (e.min() < 0 or e.max() >= self.m):
            raise ValueError("vertex ids must lie in [0, m)")
        if e.shape[0] and self.n > 1 and np.any(np.diff(e, axis=1) <= 0):
            raise ValueError("hyperedge rows must list n distinct vertices in increasing order")
        expected = (e.shape[0], self.n - 1) + ((3, 3) if self.variant is Variant.SO3 else ())
        if self.measurements.shape != expected:
            raise VariantMismatchError(
                f"measurements have shape {self.measurements.shape}, expected {expected}"
            )
        keys = self.keys(e)
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        if np.any(sorted_keys[1:] == sorted_keys[:-1]):
            raise ValueError("duplicate hyperedges")
        self._key_order = order
        self._sorted_keys = sorted_keys

    @classmethod
    def from_unsorted(cls, m, variant, vertex_lists, measurements) -> "UniformHypergraph":
        """Build from hyperedges whose measurements follow arbitrary vertex orders."""
        variant = Variant.parse(variant)
        vertex_lists = [list(map(int, vs)) for vs in vertex_lists]
        n = len(vertex_lists[0])
        meas = np.asarray(measurements, dtype=float)
        reps = tau_inverse_array(variant, meas)
        perm = np.array([np.argsort(vs, kind="stable") for vs in vertex_lists], dtype=np.int64)
        sorted_reps = _select(variant, reps, perm)
        edges = np.sort(np.array(vertex_lists, dtype=np.int64), axis=1)
        out = tau_array(variant, sorted_reps)
        # rows already in increasing order keep their measurement bit for bit
        in_order = np.all(perm == np.arange(n), axis=1)
        out[in_order] = meas[in_order]
        return cls(m, n, variant, edges, out)

    @property
    def num_hyperedges(self) -> int:
        return self.edges.shape[0]

    def keys(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        weights = self.m ** np.arange(rows.shape[-1] - 1, -1, -1, dtype=np.int64)
        return rows @ weights

    def lookup(self, rows) -> np.ndarray:
        """Hyperedge ids for sorted vertex rows, ``-1`` where absent."""
        keys = np.atleast_1d(self.keys(rows))
        pos = np.searchsorted(self._sorted_keys, keys)
        pos_c = np.minimum(pos, max(len(self._sorted_keys) - 1, 0))
        if len(self._sorted_keys) == 0:
            return np.full(keys.shape, -1, dtype=np.int64)
        found = self._sorted_keys[pos_c] == keys
        return np.where(found, self._key_order[pos_c], -1)

    def edge_id(self, vertices) -> int | None:
        h = int(self.lookup(np.sort(np.asarray(vertices))[None, :])[0])
        return None if h < 0 else h

    def vertices(self, h: int) -> tuple:
        return tuple(int(v) for v in self.edges[h])

    def measurement(self, h: int) -> GroupTuple:
        return GroupTuple.from_array(self.variant, self.measurements[h])

    @cached_property
    def representatives(self) -> np.ndarray:
        """``tau_inverse`` of every measurement, shape ``(H, n, ...)``."""
        return tau_inverse_array(self.variant, self.measurements)

    def incident_hyperedges(self) -> list:
        inc = [[] for _ in range(self.m)]
        for h, row in enumerate(self.edges):
            for v in row:
                inc[v].append(h)
        return inc

    def restrict_pairs(self, h_ids, pos_a, pos_b) -> np.ndarray:
        """Ratio ``G_a G_b^-1`` of each hyperedge representative (batched)."""
        reps = self.representatives[np.asarray(h_ids)]
        pos = np.stack([np.asarray(pos_a), np.asarray(pos_b)], axis=-1)
        sel = _select(self.variant, reps, pos)
        if self.variant is Variant.SO2:
            return ratio_array(self.variant, sel[..., 0], sel[..., 1])
        return ratio_array(self.variant, sel[..., 0, :, :], sel[..., 1, :, :])


# ---------------------------------------------------------------------------
# cycles and the cycle-hyperedge graph
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cycle:
    """A cycle of order ``order`` on ``len(base_vertices)`` distinct base vertices.

    Hyperedge ``i`` contains base vertices ``i, i+1, ..., i+order`` (mod length).
    """

    order: int
    base_vertices: tuple
    hyperedge_ids: tuple

    def window(self, i: int) -> tuple:
        length = len(self.base_vertices)
        return tuple(self.base_vertices[(i + j) % length] for j in range(self.order + 1))


def canonical_rotation(base: Sequence[int]) -> tuple:
    """Lexicographically smallest sequence over rotations and reversals."""
    base = list(base)
    best = None
    for seq in (base, base[::-1]):
        for r in range(len(seq)):
            cand = tuple(seq[r:] + seq[:r])
            if best is None or cand < best:
                best = cand
    return best


def _cycle_templates(n: int):
    """Canonical cyclic orders of n+1 sorted slots and their window layout.

    Returns ``(orders, omitted, positions)`` where ``orders[t]`` lists slot
    indices in cycle order, ``omitted[t, i]`` is the slot missing from window
    ``i`` and ``positions[t, i, j]`` is the index of the j-th window vertex
    inside the (sorted) hyperedge that omits that slot.
    """
    L = n + 1
    orders, omitted, positions = [], [], []
    for perm in itertools.permutations(range(1, L)):
        if n >= 2 and perm[0] > perm[-1]:
            continue
        order = (0,) + perm
        om = []
        pos = []
        for i in range(L):
            k = order[(i - 1) % L]
            om.append(k)
            win = [order[(i + j) % L] for j in range(n)]
            pos.append([s - (s > k) for s in win])
        orders.append(order)
        omitted.append(om)
        positions.append(pos)
    return (
        np.array(orders, dtype=np.int64),
        np.array(omitted, dtype=np.int64),
        np.array(positions, dtype=np.int64),
    )


@dataclass(eq=False)
class CycleHyperedgeGraph:
    """Bipartite incidence between cycles and hyperedges.

    Cycles are stored as arrays: ``base[c]`` (canonical base-vertex order),
    ``hyperedges[c, i]`` (hyperedge of window ``i``) and ``positions[c, i, j]``
    (where the j-th window vertex sits inside that hyperedge's sorted row).
    Incidence is kept in CSR form grouped by hyperedge: for hyperedge ``h``
    the slice ``inc_ptr[h]:inc_ptr[h+1]`` of ``inc_cycle`` lists N_h.
    """

    n: int
    num_hyperedges: int
    base: np.ndarray
    hyperedges: np.ndarray
    positions: np.ndarray
    d: np.ndarray | None = None
    inc_ptr: np.ndarray = field(init=False)
    inc_cycle: np.ndarray = field(init=False)
    inc_hyperedge: np.ndarray = field(init=False)

    def __post_init__(self):
        flat_h = self.hyperedges.reshape(-1)
        flat_c = np.repeat(np.arange(self.hyperedges.shape[0]), self.n + 1)
        order = np.argsort(flat_h, kind="stable")
        self.inc_cycle = flat_c[order]
        self.inc_hyperedge = flat_h[order]
        counts = np.bincount(flat_h, minlength=self.num_hyperedges)
        self.inc_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    @property
    def num_cycles(self) -> int:
        return self.base.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        """|N_h| for every hyperedge."""
        return np.diff(self.inc_ptr)

    def incident(self, h: int) -> np.ndarray:
        return self.inc_cycle[self.inc_ptr[h] : self.inc_ptr[h + 1]]

    def cycle(self, c: int) -> Cycle:
        return Cycle(
            self.n - 1,
            tuple(int(v) for v in self.base[c]),
            tuple(int(h) for h in self.hyperedges[c]),
        )

    @property
    def cycles(self) -> list:
        return [self.cycle(c) for c in range(self.num_cycles)]

    def with_consistency(self, d) -> "CycleHyperedgeGraph":
        out = CycleHyperedgeGraph(self.n, self.num_hyperedges, self.base, self.hyperedges, self.positions, np.asarray(d, dtype=float))
        return out


def _find_simplices(H: UniformHypergraph):
    """All (n+1)-vertex sets whose n-subsets are all hyperedges.

    Returns ``(S, ids)`` with ``S`` sorted rows and ``ids[:, k]`` the
    hyperedge id of ``S`` minus its k-th vertex.
    """
    n, m = H.n, H.m
    e = H.edges
    if e.shape[0] == 0:
        return np.empty((0, n + 1), np.int64), np.empty((0, n + 1), np.int64)
    counts = m - 1 - e[:, -1]
    h_idx = np.repeat(np.arange(e.shape[0]), counts)
    starts = np.repeat(e[:, -1] + 1, counts)
    offsets = np.arange(h_idx.size) - np.repeat(np.cumsum(counts) - counts, counts)
    v = starts + offsets
    ids = np.empty((h_idx.size, n + 1), dtype=np.int64)
    ids[:, n] = h_idx
    keep = np.ones(h_idx.size, dtype=bool)
    rows = e[h_idx]
    for k in range(n):
        sub = np.concatenate([np.delete(rows, k, axis=1), v[:, None]], axis=1)
        found = H.lookup(sub)
        ids[:, k] = found
        keep &= found >= 0
    S = np.concatenate([rows, v[:, None]], axis=1)[keep]
    return S, ids[keep]


def enumerate_cycles(H: UniformHypergraph) -> CycleHyperedgeGraph:
    """Enumerate every (n-1)-cycle of length n+1, one per rotation/reversal class."""
    n = H.n
    S, ids = _find_simplices(H)
    orders, omitted, positions = _cycle_templates(n)
    T = orders.shape[0]
    K = S.shape[0]
    base = S[:, orders].reshape(K * T, n + 1)  # (K, T, n+1)
    hyper = np.take_along_axis(ids[:, None, :], np.broadcast_to(omitted, (K, T, n + 1)), axis=2)
    hyper = hyper.reshape(K * T, n + 1)
    pos = np.broadcast_to(positions, (K, T, n + 1, n)).reshape(K * T, n + 1, n)
    if K * T:
        order = np.lexsort(base.T[::-1])
        base, hyper, pos = base[order], hyper[order], pos[order]
    return CycleHyperedgeGraph(n, H.num_hyperedges, base, hyper, np.ascontiguousarray(pos))


def cycle_products(H: UniformHypergraph, chg: CycleHyperedgeGraph, chunk: int = 20000) -> np.ndarray:
    """Phi(C) for every cycle: the componentwise product of window restrictions."""
    n, variant = H.n, H.variant
    reps = H.representatives
    C = chg.num_cycles
    tail = (3, 3) if variant is Variant.SO3 else ()
    out = np.empty((C, n - 1) + tail)
    for lo in range(0, C, chunk):
        hi = min(C, lo + chunk)
        hid = chg.hyperedges[lo:hi]
        pos = chg.positions[lo:hi]
        sel = _select(variant, reps[hid], pos)  # (c, n+1, n, ...)
        if variant is Variant.SO2:
            factors = ratio_array(variant, sel[..., :-1], sel[..., 1:])
        else:
            factors = ratio_array(variant, sel[..., :-1, :, :], sel[..., 1:, :, :])
        prod = factors[:, 0]
        for i in range(1, n + 1):
            prod = compose_array(variant, prod, factors[:, i])
        out[lo:hi] = prod
    return out


def consistency_measures(H: UniformHypergraph, chg: CycleHyperedgeGraph) -> np.ndarray:
    """Vectorized d_C for every cycle."""
    phi = cycle_products(H, chg)
    d = distance_to_identity_array(H.variant, phi)
    return np.sqrt(np.mean(np.square(d), axis=-1))


def build_chg(H: UniformHypergraph) -> CycleHyperedgeGraph:
    """Enumerate cycles and attach their consistency measures."""
    chg = enumerate_cycles(H)
    return chg.with_consistency(consistency_measures(H, chg))


def cycle_consistency(H: UniformHypergraph, C: Cycle) -> float:
    """d_C for a single cycle, computed element by element."""
    k = C.order
    phi = GroupTuple.identity(H.variant, k)
    for i, h in enumerate(C.hyperedge_ids):
        window = C.window(i)
        phi = phi * restrict_ordered(H.vertices(h), H.measurement(h), window)
    return tuple_distance(phi, GroupTuple.identity(H.variant, k))


# ---------------------------------------------------------------------------
# connectivity
# ---------------------------------------------------------------------------


def connected_components(m: int, edges: np.ndarray) -> list:
    """Components of the 2-section (vertices sharing a hyperedge)."""
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for row in np.asarray(edges):
        r0 = find(int(row[0]))
        for v in row[1:]:
            r = find(int(v))
            if r != r0:
                parent[r] = r0
    groups = {}
    for v in range(m):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


def is_connected(H: UniformHypergraph) -> bool:
    return len(connected_components(H.m, H.edges)) <= 1


def is_k_connected(H: UniformHypergraph, k: int) -> bool:
    """Whether every vertex pair is joined by a k-path.

    The search walks over states made of the last k vertices; each step
    appends a vertex w such that the k+1 consecutive vertices lie in a
    common hyperedge.  Vertices are only required to be distinct within a
    window, so this explores the k-overlap walk structure.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if k == 1:
        return is_connected(H)
    if H.m <= 1:
        return True
    if H.n < k + 1:
        return False
    sets = [frozenset(int(v) for v in row) for row in H.edges]
    by_vertex = H.incident_hyperedges()

    def successors(state):
        cands = set(sets[h] for h in by_vertex[state[0]])
        out = set()
        for s in cands:
            if all(v in s for v in state):
                out.update(w for w in s if w not in state)
        return out

    for src in range(H.m):
        reached = set()
        seen = set()
        queue = deque()
        for h in by_vertex[src]:
            members = [v for v in sets[h] if v != src]
            for tail in itertools.permutations(members, k):
                # first window is (src, *tail); the last tail vertex ends a k-path
                reached.add(tail[-1])
                state = tail
                if state not in seen:
                    seen.add(state)
                    queue.append(state)
        while queue:
            state = queue.popleft()
            for w in successors(state):
                reached.add(w)
                nxt = state[1:] + (w,)
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        reached.discard(src)
        if len(reached) < H.m - 1:
            return False
    return True


# ---------------------------------------------------------------------------
# noiseless synchronization and the objective
# ---------------------------------------------------------------------------


def induced_measurements(H: UniformHypergraph, potential: VertexPotential) -> np.ndarray:
    """tau-images the vertex potential induces on every hyperedge."""
    vals = potential.values[H.edges]
    return tau_array(H.variant, vals)


def compatibility_residuals(H: UniformHypergraph, potential: VertexPotential) -> np.ndarray:
    return tuple_distance_array(H.variant, H.measurements, induced_measurements(H, potential))


def synchronize_noiseless(H: UniformHypergraph, tol: float = COMPATIBILITY_TOL) -> VertexPotential:
    """Constructive synchronization of noiseless data.

    Vertex 0 gets the identity; every other vertex is reached by a BFS over
    1-paths and assigned ``rho(w) = r^-1 rho(u)`` where ``r`` is the
    restriction of the connecting hyperedge to ``(u, w)``.  Every hyperedge
    is then checked for compatibility.

    Raises:
        DisconnectedError: if the hypergraph is not 1-connected.
        InconsistencyError: naming the first hyperedge whose residual exceeds ``tol``.
    """
    comps = connected_components(H.m, H.edges)
    if len(comps) > 1:
        raise DisconnectedError(f"hypergraph has {len(comps)} components", comps)
    variant = H.variant
    values = identity_array(variant, (H.m,))
    assigned = np.zeros(H.m, dtype=bool)
    assigned[0] = True
    by_vertex = H.incident_hyperedges()
    reps = H.representatives
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for h in by_vertex[u]:
            row = H.edges[h]
            pu = int(np.flatnonzero(row == u)[0])
            for pw, w in enumerate(row):
                w = int(w)
                if assigned[w]:
                    continue
                # r = G_u G_w^-1, rho(w) = r^-1 rho(u) = G_w G_u^-1 rho(u)
                r_inv = ratio_array(variant, reps[h, pw], reps[h, pu])
                values[w] = compose_array(variant, r_inv, values[u])
                assigned[w] = True
                queue.append(w)
    potential = VertexPotential(variant, values)
    res = compatibility_residuals(H, potential)
    bad = np.flatnonzero(res > tol)
    if bad.size:
        h = int(bad[0])
        raise InconsistencyError(
            f"hyperedge {h} {H.vertices(h)} is incompatible (residual {res[h]:.3e})",
            hyperedge=h,
            residual=float(res[h]),
            potential=potential,
        )
    return potential


def objective(H: UniformHypergraph, potential: VertexPotential) -> float:
    """Sum over hyperedges of the tuple distance to the induced measurement."""
    if len(potential) < H.m:
        raise ValueError("vertex potential does not cover every vertex")
    return float(np.sum(compatibility_residuals(H, potential)))


def num_cycles_per_simplex(n: int) -> int:
    """Distinct cycles on one (n+1)-vertex set: (n+1)! / (2(n+1))."""
    return max(1, math.factorial(n) // 2)
