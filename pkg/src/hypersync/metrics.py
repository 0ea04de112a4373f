"""Error metrics: global alignment, corruption-estimation errors, trace statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chmp import CorruptionState
from .exceptions import VariantMismatchError
from .group import GroupElement, Variant, VertexPotential, matrix_array, normalize_angle, project_matrix_array
from .hypergraph import UniformHypergraph

LOG_FLOOR = math.log(1e-16)


def _check(est: VertexPotential, gt: VertexPotential):
    if est.variant is not gt.variant:
        raise VariantMismatchError("potentials belong to different groups")
    if len(est) != len(gt):
        raise ValueError(f"potential lengths differ ({len(est)} vs {len(gt)})")


def procrustes_residual(est: VertexPotential, gt: VertexPotential, q: GroupElement) -> float:
    """Mean squared Frobenius norm of ``R_i - R_i* Q``."""
    r = est.matrices()
    r_star = gt.matrices()
    diff = r - r_star @ q.matrix
    return float(np.mean(np.sum(diff * diff, axis=(-2, -1))))


def procrustes_rotation(est: VertexPotential, gt: VertexPotential) -> GroupElement:
    """Matrix route: ``Q`` is the SO(d) projection of ``sum_i R_i*^T R_i``."""
    _check(est, gt)
    acc = np.einsum("kji,kjl->il", gt.matrices(), est.matrices())
    return GroupElement(est.variant, project_matrix_array(est.variant, acc))


def circular_mean_rotation(est: VertexPotential, gt: VertexPotential) -> GroupElement:
    """SO(2) closed form: the circular mean of the angle differences."""
    _check(est, gt)
    if est.variant is not Variant.SO2:
        raise VariantMismatchError("circular mean alignment needs SO2 potentials")
    delta = est.values - gt.values
    return GroupElement(Variant.SO2, float(normalize_angle(math.atan2(np.sin(delta).sum(), np.cos(delta).sum()))))


def align_procrustes(est: VertexPotential, gt: VertexPotential, method: str = "auto") -> tuple:
    """Best global right action aligning ``gt`` to ``est`` and the residual error.

    Args:
        method: ``"matrix"``, ``"circular"`` (SO2 only) or ``"auto"``, which
            picks the circular mean for SO2.

    Returns:
        ``(Q, error)`` with ``error = mean_i ||R_i - R_i* Q||_F^2``.
    """
    _check(est, gt)
    if method == "auto":
        method = "circular" if est.variant is Variant.SO2 else "matrix"
    if method == "circular":
        q = circular_mean_rotation(est, gt)
    elif method == "matrix":
        q = procrustes_rotation(est, gt)
    else:
        raise ValueError(f"unknown alignment method {method!r}")
    return q, procrustes_residual(est, gt, q)


def pair_cover(H: UniformHypergraph) -> tuple:
    """Vertex pairs covered by some hyperedge, with the covering hyperedge ids.

    Returns ``(pair_index, hyperedge)`` incidence arrays where ``pair_index``
    numbers the distinct covered pairs in lexicographic order.
    """
    n = H.n
    a, b = np.triu_indices(n, 1)
    vi = H.edges[:, a].reshape(-1)
    vj = H.edges[:, b].reshape(-1)
    hid = np.repeat(np.arange(H.num_hyperedges), a.size)
    _, pair_index = np.unique(vi * H.m + vj, return_inverse=True)
    return pair_index.reshape(-1), hid


def corruption_errors(H: UniformHypergraph, s, s_star) -> tuple:
    """Mean absolute estimation error and its min-over-covers counterpart.

    The second value averages, over covered vertex pairs, the gap between
    the smallest estimate and the smallest true level among hyperedges
    containing the pair.
    """
    s = np.asarray(s.s if isinstance(s, CorruptionState) else s, dtype=float)
    s_star = np.asarray(s_star, dtype=float)
    chmp_error = float(np.mean(np.abs(s - s_star))) if s.size else 0.0
    pair_index, hid = pair_cover(H)
    if pair_index.size == 0:
        return chmp_error, 0.0
    P = int(pair_index.max()) + 1
    min_s = np.full(P, np.inf)
    min_star = np.full(P, np.inf)
    np.minimum.at(min_s, pair_index, s[hid])
    np.minimum.at(min_star, pair_index, s_star[hid])
    return chmp_error, float(np.mean(np.abs(min_s - min_star)))


def lower_median(x, axis=-1) -> np.ndarray:
    """Median taking the lower middle element for even counts."""
    x = np.sort(np.asarray(x, dtype=float), axis=axis)
    k = (x.shape[axis] - 1) // 2
    return np.take(x, k, axis=axis)


def trace_stats(trace, s_star) -> np.ndarray:
    """Per-iteration natural-log max, mean and median absolute errors.

    Zero errors are clamped to ``ln(1e-16)``.  Returns a ``(T+1, 3)`` array.
    """
    err = np.abs(np.atleast_2d(np.asarray(trace, dtype=float)) - np.asarray(s_star, dtype=float))
    stats = np.stack([err.max(axis=1), err.mean(axis=1), lower_median(err, axis=1)], axis=1)
    with np.errstate(divide="ignore"):
        logs = np.log(stats)
    return np.maximum(logs, LOG_FLOOR)


@dataclass
class EvalReport:
    """Summary of one pipeline run."""

    procrustes_error: float
    chmp_error: float
    chmp_min_error: float
    trace_stats: np.ndarray | None = None
