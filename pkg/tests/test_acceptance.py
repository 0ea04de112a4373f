"""Acceptance criteria 1-11.

Each test prints one ``[PASS]``/``[FAIL]`` line (also collected into the
terminal summary) and then asserts the criterion at its stated tolerance.
Run standalone with ``python tests/test_acceptance.py``.
"""

import subprocess
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from hypersync import cli
from hypersync.chmp import ChmpParams, chmp_run, ideal_weight_update, noiseless_theorem_params, noisy_theorem_betas
from hypersync.group import VertexPotential, haar_array, perturb_array
from hypersync.hypergraph import build_chg
from hypersync.metrics import circular_mean_rotation, procrustes_rotation
from hypersync.model import ModelParams, classify_cycles, generate_ucmh, mode_estimator
from hypersync.pipeline import run_pipeline

pytestmark = pytest.mark.acceptance
TESTS = Path(__file__).resolve().parent


def record(number, name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


@lru_cache(maxsize=None)
def instance(n, m, q, sigma, seed, variant="SO3"):
    H, gt = generate_ucmh(ModelParams(n, m, 1.0, q, sigma, seed, variant))
    chg = build_chg(H)
    return H, gt, chg, classify_cycles(chg, gt)


def good_cycle_deviation(seed):
    _, gt, chg, cl = instance(3, 20, 0.2, 0.0, seed)
    dev = np.abs(chg.d[chg.inc_cycle] - gt.s_star[chg.inc_hyperedge])
    return float(dev[cl.good].max()) if cl.good.any() else 0.0


def test_01_good_cycle_identity():
    t0 = time.perf_counter()
    devs = [good_cycle_deviation(seed) for seed in range(20)]
    elapsed = time.perf_counter() - t0
    ok = sum(d <= 1e-10 for d in devs)
    passed = ok == 20 and elapsed <= 30
    record(1, "good-cycle identity", passed, f"{ok}/20 seeds within 1e-10, max deviation {max(devs):.3g}, {elapsed:.1f}s")
    assert passed


def test_02_corruption_bound():
    ok, worst = 0, 0.0
    for seed in range(20):
        _, gt, chg, _ = instance(3, 20, 0.2, 0.0, seed)
        others = gt.s_star[chg.hyperedges].sum(axis=1)[chg.inc_cycle] - gt.s_star[chg.inc_hyperedge]
        excess = np.abs(chg.d[chg.inc_cycle] - gt.s_star[chg.inc_hyperedge]) - others
        worst = max(worst, float(excess.max()))
        ok += bool(np.all(excess <= 1e-9))
    passed = ok == 20
    record(2, "corruption bound", passed, f"{ok}/20 seeds, worst excess over the bound {worst:.3g}")
    assert passed


def test_03_fixed_point():
    checked, ok, worst = 0, 0, 0.0
    for seed in range(20):
        _, gt, chg, cl = instance(3, 20, 0.2, 0.0, seed)
        if not cl.gcc_holds:
            continue
        checked += 1
        err = float(np.abs(ideal_weight_update(chg, cl.good) - gt.s_star).max())
        worst = max(worst, err)
        ok += err <= 1e-12
    passed = checked > 0 and ok == checked
    record(3, "fixed point", passed, f"{ok}/{checked} seeds satisfying the good cycle condition, max error {worst:.3g}")
    assert passed


def test_04_noiseless_linear_convergence():
    T, n = 15, 3
    t0 = time.perf_counter()
    lams, kept, ok = [], 0, 0
    for seed in range(10):
        _, gt, chg, cl = instance(n, 20, 0.05, 0.0, seed)
        lams.append(cl.lam)
        if not cl.lam < 1 / 7:
            continue
        kept += 1
        params = noiseless_theorem_params(cl.lam, n, T)
        trace = chmp_run(chg, ChmpParams(T, params.beta0, params.rate, keep_trace=True)).trace
        bound = 1 / (2 * n * params.beta0 * params.rate ** np.arange(T + 1))
        ok += bool(np.all(np.abs(trace - gt.s_star).max(axis=1) <= bound))
    elapsed = time.perf_counter() - t0
    passed = kept >= 7 and ok == kept and elapsed <= 120
    detail = f"{kept}/10 seeds with lambda < 1/7 (measured {min(lams):.3f}..{max(lams):.3f}), {ok}/{kept} within the bound, {elapsed:.1f}s"
    record(4, "linear convergence", passed, detail)
    assert passed


def test_05_noisy_bound():
    T, n = 15, 3
    lams, hyp, ok = [], 0, 0
    for seed in range(10):
        _, gt, chg, cl = instance(n, 20, 0.05, 0.02, seed)
        lams.append(cl.lam)
        delta = float(gt.s_star[~gt.bad].max())
        betas = noisy_theorem_betas(cl.lam, delta, n, T + 1)
        if betas is None:
            continue
        hyp += 1
        trace = chmp_run(chg, ChmpParams(keep_trace=True), betas=betas[:-1]).trace
        bound = 1 / (2 * n * betas) - delta / 2
        ok += bool(np.all(np.abs(trace - gt.s_star).max(axis=1) <= bound + 1e-9))
    passed = hyp >= 5 and ok == hyp
    detail = f"{hyp}/10 seeds meet the hypotheses (lambda {min(lams):.3f}..{max(lams):.3f}, need < {1/7:.3f}), {ok}/{hyp} within the bound"
    record(5, "noisy bound", passed, detail)
    assert passed


def test_06_mode_exactness():
    used, ok, worst, seed = 0, 0, 0.0, 0
    while used < 10 and seed < 50:
        _, gt, chg, cl = instance(3, 20, 0.05, 0.0, seed)
        seed += 1
        if not np.all(cl.n_good >= 2):
            continue
        used += 1
        err = float(np.abs(mode_estimator(chg) - gt.s_star).max())
        worst = max(worst, err)
        ok += err <= 1e-9
    passed = used == 10 and ok == 10
    record(6, "mode estimator", passed, f"{ok}/{used} verified seeds exact within 1e-9, max error {worst:.3g}")
    assert passed


def exact_recovery(variant):
    lines, all_ok = [], True
    for q in (0.1, 0.3, 0.5):
        t0 = time.perf_counter()
        errs = []
        for seed in range(10):
            H, gt = generate_ucmh(ModelParams(3, 30, 1.0, q, 0.0, seed, variant))
            errs.append(run_pipeline(H, gt, "mst").report.procrustes_error)
        elapsed = time.perf_counter() - t0
        ok = sum(e <= 1e-6 for e in errs)
        all_ok &= ok >= 9 and elapsed <= 300
        lines.append(f"q={q}: {ok}/10 ({elapsed:.0f}s)")
    return all_ok, ", ".join(lines)


def noisy_ordering(variant):
    lines, all_ok = [], True
    for q in (0.2, 0.4):
        wins = 0
        ratios = []
        for seed in range(10):
            H, gt = generate_ucmh(ModelParams(3, 30, 1.0, q, 0.05, seed, variant))
            gcw = run_pipeline(H, gt, "gcw").report.procrustes_error
            base = run_pipeline(H, gt, "spectral-baseline").report.procrustes_error
            wins += gcw <= base
            ratios.append(gcw / base)
        all_ok &= wins >= 8
        lines.append(f"q={q}: {wins}/10 (median error ratio {np.median(ratios):.3g})")
    return all_ok, ", ".join(lines)


def test_07_noiseless_exact_recovery():
    passed, detail = exact_recovery("SO3")
    record(7, "noiseless CHMP+MST recovery", passed, detail)
    assert passed


def test_08_noisy_ordering():
    passed, detail = noisy_ordering("SO3")
    record(8, "CHMP+GCW vs spectral baseline", passed, detail)
    assert passed


def test_09_so2_suite():
    rec_ok, rec = exact_recovery("SO2")
    ord_ok, order = noisy_ordering("SO2")
    rng = np.random.default_rng(2024)
    agree = 0
    for _ in range(1000):
        m = int(rng.integers(2, 30))
        gt = VertexPotential("SO2", haar_array(rng, "SO2", (m,)))
        est = VertexPotential("SO2", perturb_array(rng, "SO2", haar_array(rng, "SO2") + gt.values, 0.5))
        a = circular_mean_rotation(est, gt).value
        b = procrustes_rotation(est, gt).value
        agree += abs(np.remainder(a - b + np.pi, 2 * np.pi) - np.pi) <= 1e-9
    passed = rec_ok and ord_ok and agree == 1000
    record(9, "SO(2) suite", passed, f"recovery [{rec}]; ordering [{order}]; circular vs matrix {agree}/1000")
    assert passed


def test_10_property_suite():
    t0 = time.perf_counter()
    out = subprocess.run(
        [sys.executable, "-m", "pytest", str(TESTS / "test_properties.py"), "-q", "-p", "no:cacheprovider"],
        capture_output=True,
        text=True,
        cwd=TESTS.parent,
    )
    summary = out.stdout.strip().splitlines()[-1] if out.stdout.strip() else out.stderr.strip()
    passed = out.returncode == 0
    record(10, "property suite", passed, f"{summary} ({time.perf_counter() - t0:.0f}s)")
    assert passed, out.stdout[-3000:]


def test_11_sweep_determinism(tmp_path):
    import json

    config = {
        "model": {"n": 3, "m": 12},
        "grid": {"p": [0.8, 1.0], "q": [0.0, 0.2], "sigma": [0.0, 0.05]},
        "seeds": [0, 1, 2],
        "mode": "gcw",
    }
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(config))
    outputs = {}
    for threads in (1, 4):
        for rep in (0, 1):
            out = tmp_path / f"t{threads}_{rep}"
            code = cli.main(
                ["sweep", "--config", str(cfg), "--out-dir", str(out), "--no-timestamp", "--threads", str(threads)]
            )
            assert code == 0
            outputs[(threads, rep)] = (out / "sweep.csv").read_bytes()
    reference = outputs[(1, 0)]
    same = sum(v == reference for v in outputs.values())
    passed = same == len(outputs)
    record(11, "sweep determinism", passed, f"{same}/{len(outputs)} outputs byte-identical across threads 1 and 4")
    assert passed


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
