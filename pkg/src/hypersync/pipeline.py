"""End-to-end experiment runs: corruption estimation, refinement, recovery, evaluation."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .chmp import ChmpParams, chmp_run
from .group import Variant, distance_array, ratio_array
from .hypergraph import UniformHypergraph, build_chg
from .metrics import EvalReport, align_procrustes, corruption_errors, trace_stats
from .model import GroundTruth, ModelParams, generate_ucmh
from .recovery import (
    WeightedPairGraph,
    recover_gcw,
    recover_mst,
    recover_spectral_baseline,
    reduce_two_section_medoid,
    refine,
)

MODES = ("mst", "gcw", "spectral-baseline", "medoid-cemp")
DEFAULT_GRID = tuple(round(0.1 * k, 1) for k in range(1, 11))
DEFAULT_Q_GRID = tuple(round(0.1 * k, 1) for k in range(0, 10))

RUN_COLUMNS = (
    "seed", "n", "m", "p", "q", "sigma", "variant", "mode",
    "chmp_error", "min_error", "procrustes_error",
    "init_time", "iter_time", "recover_time", "total_time",
)
ERROR_COLUMNS = ("chmp_error", "min_error", "procrustes_error")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """Everything a run or sweep needs.

    ``model.seed`` is ignored by sweeps, which iterate over ``seeds``.
    """

    model: ModelParams = field(default_factory=lambda: ModelParams(n=3, m=30, p=1.0, q=0.2))
    chmp: ChmpParams = field(default_factory=ChmpParams)
    mode: str = "gcw"
    p_grid: tuple = DEFAULT_GRID
    q_grid: tuple = DEFAULT_Q_GRID
    sigma_grid: tuple = (0.0,)
    seeds: tuple = tuple(range(10))
    out_dir: str = "."

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown recovery mode {self.mode!r}; choose from {', '.join(MODES)}")
        for name in ("p_grid", "q_grid", "sigma_grid", "seeds"):
            values = tuple(getattr(self, name))
            if not values:
                raise ConfigError(f"{name} must not be empty")
            setattr(self, name, values)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """Build from a JSON-style dict with optional ``model``, ``chmp`` and ``grid`` sections."""
        known = {"model", "chmp", "mode", "grid", "seeds", "out_dir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            model = ModelParams(**{"n": 3, "m": 30, "p": 1.0, "q": 0.2, **data.get("model", {})})
            chmp = ChmpParams(**data.get("chmp", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        grid = data.get("grid", {})
        extra = set(grid) - {"p", "q", "sigma"}
        if extra:
            raise ConfigError(f"unknown grid keys: {sorted(extra)}")
        return cls(
            model=model,
            chmp=chmp,
            mode=data.get("mode", "gcw"),
            p_grid=tuple(grid.get("p", DEFAULT_GRID)),
            q_grid=tuple(grid.get("q", DEFAULT_Q_GRID)),
            sigma_grid=tuple(grid.get("sigma", (0.0,))),
            seeds=tuple(data.get("seeds", range(10))),
            out_dir=data.get("out_dir", "."),
        )


@dataclass
class RunResult:
    report: EvalReport
    timings: dict
    pair_graph: WeightedPairGraph
    trace: np.ndarray | None = None


def beta_final(params: ChmpParams) -> float:
    return params.beta0 * params.rate ** params.T


def pair_hypergraph(G: WeightedPairGraph) -> UniformHypergraph:
    """The 2-uniform hypergraph carrying the pairwise measurements of ``G``."""
    meas = G.meas[:, None] if G.variant is Variant.SO2 else G.meas[:, None, :, :]
    return UniformHypergraph(G.m, 2, G.variant, np.stack([G.i, G.j], axis=1), meas)


def pair_corruption(G: WeightedPairGraph, gt: GroundTruth) -> np.ndarray:
    """Distance of each pairwise measurement from the induced ``g_i g_j^-1``."""
    vals = gt.vertex_potential.values
    true = ratio_array(G.variant, vals[G.i], vals[G.j])
    return distance_array(G.variant, G.meas, true)


def run_pipeline(
    H: UniformHypergraph,
    gt: GroundTruth,
    mode: str,
    chmp_params: ChmpParams = ChmpParams(),
    sigma: float | None = None,
) -> RunResult:
    """Estimate corruption, reduce to pairs, recover and evaluate.

    Args:
        mode: ``mst``, ``gcw``, ``spectral-baseline`` or ``medoid-cemp``.  The
            last reduces to the 2-section by geodesic medoid first and then
            runs the pairwise pipeline, recovering by spanning tree when
            ``sigma`` is 0 and by the weighted spectral method otherwise.
        sigma: Noise level, only consulted by ``medoid-cemp``.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown recovery mode {mode!r}")
    params = replace(chmp_params, keep_trace=True)
    t0 = time.perf_counter()
    if mode == "medoid-cemp":
        reduced = reduce_two_section_medoid(H)
        work_H = pair_hypergraph(reduced)
        s_star = pair_corruption(reduced, gt)
    else:
        work_H, s_star = H, gt.s_star
    chg = build_chg(work_H)
    t1 = time.perf_counter()
    state = chmp_run(chg, params)
    t2 = time.perf_counter()
    beta_T = beta_final(chmp_params)
    if mode == "spectral-baseline":
        G = refine(work_H, np.zeros(work_H.num_hyperedges))
        est = recover_spectral_baseline(G)
    else:
        G = refine(work_H, state)
        use_tree = mode == "mst" or (mode == "medoid-cemp" and not sigma)
        est = recover_mst(G) if use_tree else recover_gcw(G, beta_T)
    t3 = time.perf_counter()
    _, proc = align_procrustes(est, gt.vertex_potential)
    chmp_error, min_error = corruption_errors(work_H, state, s_star)
    report = EvalReport(proc, chmp_error, min_error, trace_stats(state.trace, s_star))
    timings = {"init_time": t1 - t0, "iter_time": t2 - t1, "recover_time": t3 - t2, "total_time": t3 - t0}
    return RunResult(report, timings, G, state.trace)


def run_row(params: ModelParams, mode: str, result: RunResult, H: UniformHypergraph | None = None) -> list:
    """CSV row for a run; ``H`` overrides the size and group fields of ``params``."""
    if H is not None:
        params = replace(params, n=H.n, m=H.m, variant=H.variant)
    r = result.report
    t = result.timings
    return [
        params.seed, params.n, params.m, float(params.p), float(params.q), float(params.sigma),
        params.variant.value, mode,
        r.chmp_error, r.chmp_min_error, r.procrustes_error,
        t["init_time"], t["iter_time"], t["recover_time"], t["total_time"],
    ]


def run_seed(params: ModelParams, mode: str, chmp_params: ChmpParams) -> tuple:
    """One generated instance through the pipeline, as ``(errors, None)`` or ``(None, reason)``."""
    try:
        H, gt = generate_ucmh(params)
        res = run_pipeline(H, gt, mode, chmp_params, params.sigma)
    except Exception as exc:  # recorded per cell, the sweep continues
        return None, f"{type(exc).__name__}: {exc}"
    r = res.report
    return (r.chmp_error, r.chmp_min_error, r.procrustes_error), None


def sweep_tasks(config: ExperimentConfig) -> list:
    """``(cell, seed)`` tasks over the Cartesian grid in deterministic order."""
    cells = list(itertools.product(config.p_grid, config.q_grid, config.sigma_grid))
    return [(cell, seed) for cell in cells for seed in config.seeds]


def _sweep_worker(args):
    base, mode, chmp_params, (p, q, sigma), seed = args
    try:
        params = replace(base, p=float(p), q=float(q), sigma=float(sigma), seed=int(seed))
    except ValueError as exc:
        return (p, q, sigma), seed, None, f"ValueError: {exc}"
    errors, reason = run_seed(params, mode, chmp_params)
    return (p, q, sigma), seed, errors, reason


def run_sweep(config: ExperimentConfig, threads: int = 1) -> list:
    """Mean errors per grid cell; failing cells get empty values and a reason."""
    tasks = [(config.model, config.mode, config.chmp, cell, seed) for cell, seed in sweep_tasks(config)]
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_worker, tasks, chunksize=1))
    else:
        results = [_sweep_worker(t) for t in tasks]
    by_cell = {}
    for cell, seed, errors, reason in results:
        by_cell.setdefault(cell, []).append((seed, errors, reason))
    rows = []
    for cell in sorted(by_cell):
        entries = sorted(by_cell[cell], key=lambda e: e[0])
        failures = [r for _, e, r in entries if e is None]
        p, q, sigma = cell
        if failures:
            rows.append([float(p), float(q), float(sigma), config.mode, len(entries), "", "", "", failures[0]])
            continue
        errs = np.array([e for _, e, _ in entries])
        means = [math.fsum(col) / len(col) for col in errs.T]
        rows.append([float(p), float(q), float(sigma), config.mode, len(entries), *means, ""])
    return rows


SWEEP_COLUMNS = ("p", "q", "sigma", "mode", "seeds", *ERROR_COLUMNS, "reason")
