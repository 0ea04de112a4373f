"""Cycle-hyperedge message passing for estimating hyperedge corruption levels.

Each iteration reweights the cycles incident to a hyperedge by
``exp(-beta_t * sum of the other hyperedges' current estimates)`` and sets the
new estimate to the weighted mean of the cycle consistency measures.  All
updates are Jacobi style and computed in log space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import GoodCycleConditionError
from .hypergraph import CycleHyperedgeGraph

MAX_THEOREM_BETA0 = 1e6
MAX_THEOREM_RATE = 10.0
MIN_RATE = 1.0 + 1e-9


@dataclass(frozen=True)
class ChmpParams:
    """Inverse-temperature schedule ``beta_t = beta0 * rate**t`` for ``T`` steps."""

    T: int = 20
    beta0: float = 1.0
    rate: float = 1.2
    keep_trace: bool = False

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("T must be non-negative")
        if not self.beta0 > 0:
            raise ValueError("beta0 must be positive")
        if not self.rate > 1:
            raise ValueError("rate must exceed 1")

    def betas(self) -> np.ndarray:
        return self.beta0 * self.rate ** np.arange(self.T, dtype=float)


@dataclass(eq=False)
class CorruptionState:
    """Corruption estimates after ``t`` iterations.

    Attributes:
        s: Per-hyperedge estimates.
        t: Iteration index.
        trace: ``(t+1, H)`` history of estimates when tracing is enabled.
        uncovered: Hyperedges with no incident cycle; their estimate is pinned to 1.
    """

    s: np.ndarray
    t: int = 0
    trace: np.ndarray | None = None
    uncovered: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))


def _require_d(chg: CycleHyperedgeGraph) -> np.ndarray:
    if chg.d is None:
        raise ValueError("cycle consistency measures have not been computed")
    return chg.d


def chmp_init(chg: CycleHyperedgeGraph) -> CorruptionState:
    """Mean cycle consistency over each hyperedge's cycles."""
    d = _require_d(chg)
    deg = chg.degrees
    sums = np.bincount(chg.inc_hyperedge, weights=d[chg.inc_cycle], minlength=chg.num_hyperedges)
    uncovered = np.flatnonzero(deg == 0)
    s = np.ones(chg.num_hyperedges)
    covered = deg > 0
    s[covered] = sums[covered] / deg[covered]
    return CorruptionState(s, 0, None, uncovered)


def chmp_weights(chg: CycleHyperedgeGraph, s: np.ndarray, beta: float) -> np.ndarray:
    """Normalized cycle weights, aligned with ``chg.inc_cycle``.

    The exponent for incidence (h, C) is ``-beta`` times the cycle total of
    ``s`` minus h's own term, shifted by the per-hyperedge maximum.
    """
    s = np.asarray(s, dtype=float)
    if chg.inc_cycle.size == 0:
        return np.empty(0)
    totals = s[chg.hyperedges].sum(axis=1)
    others = totals[chg.inc_cycle] - s[chg.inc_hyperedge]
    logits = -beta * others if beta != 0 else np.zeros_like(others)
    starts = chg.inc_ptr[:-1][chg.degrees > 0]
    group_max = np.maximum.reduceat(logits, starts)
    shift = np.repeat(group_max, chg.degrees[chg.degrees > 0])
    w = np.exp(logits - shift)
    z = np.add.reduceat(w, starts)
    return w / np.repeat(z, chg.degrees[chg.degrees > 0])


def _update(chg: CycleHyperedgeGraph, s: np.ndarray, beta: float) -> np.ndarray:
    d = _require_d(chg)
    w = chmp_weights(chg, s, beta)
    new = np.bincount(chg.inc_hyperedge, weights=w * d[chg.inc_cycle], minlength=chg.num_hyperedges)
    new[chg.degrees == 0] = 1.0
    return np.clip(new, 0.0, 1.0)


def chmp_iterate(chg: CycleHyperedgeGraph, state: CorruptionState, params: ChmpParams) -> CorruptionState:
    """One message-passing step at ``beta_t = beta0 * rate**t``."""
    beta = params.beta0 * params.rate ** state.t
    return CorruptionState(_update(chg, state.s, beta), state.t + 1, None, state.uncovered)


def chmp_run(
    chg: CycleHyperedgeGraph,
    params: ChmpParams = ChmpParams(),
    betas=None,
) -> CorruptionState:
    """Run the message passing.

    Args:
        chg: Cycle-hyperedge graph with consistency measures attached.
        params: Schedule and tracing options.
        betas: Explicit inverse temperatures; overrides the geometric schedule
            and sets the number of iterations to ``len(betas)``.
    """
    schedule = params.betas() if betas is None else np.asarray(betas, dtype=float)
    state = chmp_init(chg)
    history = [state.s] if params.keep_trace else None
    s = state.s
    for beta in schedule:
        s = _update(chg, s, float(beta))
        if history is not None:
            history.append(s)
    trace = np.vstack(history) if history is not None else None
    return CorruptionState(s, len(schedule), trace, state.uncovered)


def ideal_weight_update(chg: CycleHyperedgeGraph, good_incidence: np.ndarray) -> np.ndarray:
    """Mean of d_C over the good cycles G_h of every hyperedge.

    Args:
        chg: Cycle-hyperedge graph with consistency measures.
        good_incidence: Boolean mask aligned with ``chg.inc_cycle``, as
            produced by ``classify_cycles(...).good``.

    Raises:
        GoodCycleConditionError: naming the first hyperedge with no good cycle.
    """
    d = _require_d(chg)
    good = np.asarray(good_incidence, dtype=bool)
    n_good = np.bincount(chg.inc_hyperedge[good], minlength=chg.num_hyperedges)
    empty = np.flatnonzero(n_good == 0)
    if empty.size:
        h = int(empty[0])
        raise GoodCycleConditionError(f"hyperedge {h} has no good cycle", hyperedge=h)
    sums = np.bincount(
        chg.inc_hyperedge[good], weights=d[chg.inc_cycle[good]], minlength=chg.num_hyperedges
    )
    return sums / n_good


def noiseless_theorem_params(lam: float, n: int, T: int, slack: float = 0.9) -> ChmpParams:
    """Schedule meeting the noiseless linear-convergence hypotheses for a measured lambda.

    ``beta0 = 1/(2 n lam)`` and ``rate = slack (1 - lam) / (2 n lam)``, with
    ``rate`` clipped just above 1 and both clipped from above when ``lam``
    is zero.
    """
    if lam > 0:
        beta0 = min(1.0 / (2 * n * lam), MAX_THEOREM_BETA0)
        rate = slack * (1 - lam) / (2 * n * lam)
    else:
        beta0, rate = MAX_THEOREM_BETA0, MAX_THEOREM_RATE
    rate = float(np.clip(rate, MIN_RATE, MAX_THEOREM_RATE))
    return ChmpParams(T=T, beta0=beta0, rate=rate)


def noisy_theorem_betas(lam: float, delta: float, n: int, T: int, margin: float = 1.01) -> np.ndarray | None:
    """Schedule for the noisy bound, or ``None`` when its hypotheses cannot hold.

    ``1/(2 n beta0)`` is set ``margin`` times above the required maximum and
    later steps follow ``1/beta_{t+1} = (2n^2+n) delta + 2 n lam / ((1-lam) beta_t)``
    with equality.
    """
    k = 2 * n + 1
    if not lam < 1.0 / k or delta <= 0:
        return None
    need = max(k * (1 - lam) * delta / (2 * (1 - k * lam)), lam + k * delta / 2)
    inv = [2 * n * need * margin]
    for _ in range(T - 1):
        nxt = (2 * n * n + n) * delta + 2 * n * lam * inv[-1] / (1 - lam)
        if not nxt < inv[-1]:
            return None
        inv.append(nxt)
    return 1.0 / np.asarray(inv[:T])
