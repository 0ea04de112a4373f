"""Synthetic instances: the uniform corruption model on random n-uniform hypergraphs.

Also holds ground-truth-aware cycle classification (good/bad cycles, the
lambda statistic) and the ground-truth-free mode estimator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DisconnectedError
from .group import (
    Variant,
    VertexPotential,
    haar_array,
    perturb_array,
    tuple_distance_array,
)
from .hypergraph import (
    CycleHyperedgeGraph,
    UniformHypergraph,
    connected_components,
    tau_array,
)

MAX_CONNECTIVITY_RETRIES = 100
FULL_ENUMERATION_LIMIT = 2_000_000
MODE_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Parameters of UCMH(n, m, p, q) with optional Gaussian noise."""

    n: int
    m: int
    p: float = 1.0
    q: float = 0.0
    sigma: float = 0.0
    seed: int = 0
    variant: Variant = Variant.SO3

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.m < self.n:
            raise ValueError("m must be at least n")
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")
        if not 0.0 <= self.q < 1.0:
            raise ValueError("q must lie in [0, 1)")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


@dataclass(eq=False)
class GroundTruth:
    """Ground truth of a synthetic instance.

    Attributes:
        vertex_potential: True vertex elements g_i*.
        true_measurements: Measurements the potential induces, same layout as
            ``UniformHypergraph.measurements``.
        bad: Boolean mask of corrupted hyperedges.
        s_star: Corruption level of every hyperedge.
    """

    vertex_potential: VertexPotential
    true_measurements: np.ndarray
    bad: np.ndarray
    s_star: np.ndarray

    @property
    def bad_set(self) -> set:
        return set(np.flatnonzero(self.bad).tolist())

    @property
    def good(self) -> np.ndarray:
        return ~self.bad


def unrank_combination(rank: int, m: int, n: int) -> tuple:
    """The ``rank``-th n-subset of ``range(m)`` in lexicographic order."""
    out = []
    x = 0
    for k in range(n, 0, -1):
        while True:
            c = math.comb(m - x - 1, k - 1)
            if rank < c:
                break
            rank -= c
            x += 1
        out.append(x)
        x += 1
    return tuple(out)


def _draw_hyperedges(rng: np.random.Generator, m: int, n: int, p: float) -> np.ndarray:
    total = math.comb(m, n)
    if total <= FULL_ENUMERATION_LIMIT:
        combos = np.fromiter(
            itertools.chain.from_iterable(itertools.combinations(range(m), n)),
            dtype=np.int64,
            count=total * n,
        ).reshape(total, n)
        if p >= 1.0:
            return combos
        return combos[rng.random(total) < p]
    k = int(rng.binomial(total, p))
    ranks = np.sort(rng.choice(total, size=k, replace=False))
    return np.array([unrank_combination(int(r), m, n) for r in ranks], dtype=np.int64).reshape(-1, n)


def build_instance(
    m: int,
    variant,
    edges,
    potential: np.ndarray,
    bad,
    rng: np.random.Generator,
    sigma: float = 0.0,
) -> tuple:
    """Measurements for given hyperedges, corrupting exactly the ``bad`` ones.

    Good hyperedges carry the induced measurement with every component
    perturbed at scale ``sigma``; bad ones get independent Haar components.
    """
    variant = Variant.parse(variant)
    edges = np.asarray(edges, dtype=np.int64)
    bad = np.asarray(bad, dtype=bool)
    n = edges.shape[1]
    true = tau_array(variant, potential[edges])
    observed = perturb_array(rng, variant, true, sigma)
    nbad = int(bad.sum())
    if nbad:
        observed[bad] = haar_array(rng, variant, (nbad, n - 1))
    H = UniformHypergraph(m, n, variant, edges, observed)
    s_star = tuple_distance_array(variant, observed, true)
    gt = GroundTruth(VertexPotential(variant, potential), true, bad, s_star)
    return H, gt


def generate_ucmh(params: ModelParams) -> tuple:
    """Sample a UCMH instance.

    The seed is split into independent streams for the vertex potential, the
    hyperedge draw and the measurements, so changing p leaves the potential
    unchanged.

    Raises:
        DisconnectedError: if no 1-connected hypergraph is drawn in 100 attempts.
    """
    pot_ss, struct_ss, meas_ss = np.random.SeedSequence(params.seed).spawn(3)
    variant = params.variant
    potential = haar_array(np.random.default_rng(pot_ss), variant, (params.m,))
    struct_rng = np.random.default_rng(struct_ss)
    for _ in range(MAX_CONNECTIVITY_RETRIES):
        edges = _draw_hyperedges(struct_rng, params.m, params.n, params.p)
        if edges.shape[0] and len(connected_components(params.m, edges)) == 1:
            break
    else:
        raise DisconnectedError(
            f"no 1-connected hypergraph after {MAX_CONNECTIVITY_RETRIES} draws "
            f"(m={params.m}, n={params.n}, p={params.p})"
        )
    meas_rng = np.random.default_rng(meas_ss)
    bad = meas_rng.random(edges.shape[0]) < params.q
    return build_instance(params.m, variant, edges, potential, bad, meas_rng, params.sigma)


@dataclass(eq=False)
class CycleClassification:
    """Good/bad split of every incidence plus per-hyperedge summaries.

    ``good`` is aligned with ``chg.inc_cycle``: incidence k is good when every
    other hyperedge of that cycle is uncorrupted.
    """

    good: np.ndarray
    n_good: np.ndarray
    n_bad: np.ndarray
    lam_h: np.ndarray
    lam: float
    gcc_holds: bool

    def violating(self) -> np.ndarray:
        return np.flatnonzero(self.n_good == 0)


def classify_cycles(chg: CycleHyperedgeGraph, gt: GroundTruth) -> CycleClassification:
    """Split each N_h into G_h and B_h and compute lambda.

    Hyperedges without incident cycles have lambda_h = nan and are ignored
    in the maximum; they violate the Good Cycle Condition.
    """
    bad = np.asarray(gt.bad, dtype=np.int64)
    bad_per_cycle = bad[chg.hyperedges].sum(axis=1)
    others_bad = bad_per_cycle[chg.inc_cycle] - bad[chg.inc_hyperedge]
    good = others_bad == 0
    H = chg.num_hyperedges
    n_good = np.bincount(chg.inc_hyperedge[good], minlength=H)
    deg = chg.degrees
    n_bad = deg - n_good
    with np.errstate(invalid="ignore", divide="ignore"):
        lam_h = np.where(deg > 0, n_bad / np.maximum(deg, 1), np.nan)
    finite = lam_h[~np.isnan(lam_h)]
    lam = float(finite.max()) if finite.size else 0.0
    return CycleClassification(good, n_good, n_bad, lam_h, lam, bool(np.all(n_good > 0)))


def mode_of(values, tol: float = MODE_TOL) -> float:
    """Representative of the most populated cluster of ``values``.

    Sorted values are split greedily into clusters of diameter at most
    ``tol``.  The largest cluster wins, ties go to the smaller value, and the
    cluster minimum is returned.
    """
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return float("nan")
    best_start, best_size = 0, 0
    i = 0
    while i < v.size:
        j = int(np.searchsorted(v, v[i] + tol, side="right"))
        if j - i > best_size:
            best_start, best_size = i, j - i
        i = j
    return float(v[best_start])


def mode_estimator(chg: CycleHyperedgeGraph, tol: float = MODE_TOL) -> np.ndarray:
    """Mode of D_h for every hyperedge; nan marks hyperedges with no cycle."""
    if chg.d is None:
        raise ValueError("cycle consistency measures have not been computed")
    d_inc = chg.d[chg.inc_cycle]
    out = np.full(chg.num_hyperedges, np.nan)
    ptr = chg.inc_ptr
    for h in range(chg.num_hyperedges):
        lo, hi = ptr[h], ptr[h + 1]
        if hi > lo:
            out[h] = mode_of(d_inc[lo:hi], tol)
    return out
