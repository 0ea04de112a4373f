import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import complete_instance
from hypersync import model
from hypersync.exceptions import DisconnectedError
from hypersync.hypergraph import build_chg, enumerate_cycles, synchronize_noiseless
from hypersync.metrics import align_procrustes
from hypersync.model import (
    GroundTruth,
    ModelParams,
    build_instance,
    classify_cycles,
    generate_ucmh,
    mode_estimator,
    mode_of,
    unrank_combination,
)

# lambda per seed for UCMH(3, m, 1, 0.05), computed by counting corrupted
# 4-sets around each hyperedge (see lambda_oracle) and frozen here
LAMBDA_M20 = ["7/17", "8/17", "7/17", "8/17", "7/17", "7/17", "8/17", "8/17", "7/17", "9/17"]
LAMBDA_M50 = ["18/47", "17/47", "17/47", "18/47", "19/47", "18/47", "19/47", "17/47", "17/47", "16/47"]


def lambda_oracle(edges, bad, m):
    """Exact lambda for a complete 3-uniform hypergraph without cycle enumeration."""
    bad_rows = {tuple(e) for e, b in zip(edges.tolist(), bad) if b}
    worst = Fraction(0)
    for e in edges.tolist():
        count = 0
        for x in range(m):
            if x in e:
                continue
            s = sorted(e + [x])
            if any(tuple(sorted(set(s) - {v})) in bad_rows for v in e):
                count += 1
        worst = max(worst, Fraction(count, m - 3))
    return worst


class TestParams:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(n=1, m=5), dict(n=3, m=2), dict(n=3, m=5, p=0.0), dict(n=3, m=5, q=1.0), dict(n=3, m=5, sigma=-1)],
    )
    def test_ranges(self, kwargs):
        with pytest.raises(ValueError):
            ModelParams(**kwargs)


class TestGenerate:
    def test_complete_clean_instance(self, variant):
        H, gt = generate_ucmh(ModelParams(3, 8, 1.0, 0.0, 0.0, 1, variant))
        assert H.num_hyperedges == math.comb(8, 3)
        assert np.all(gt.s_star == 0) and not gt.bad.any()

    def test_clean_data_synchronizes(self, variant):
        H, gt = generate_ucmh(ModelParams(3, 10, 0.6, 0.0, 0.0, 4, variant))
        _, err = align_procrustes(synchronize_noiseless(H), gt.vertex_potential)
        assert err < 1e-10

    def test_bad_fraction(self):
        fractions = [generate_ucmh(ModelParams(3, 50, 1.0, 0.2, 0.0, s))[1].bad.mean() for s in range(10)]
        assert abs(np.mean(fractions) - 0.2) <= 0.02

    def test_bad_fraction_within_three_standard_errors(self):
        counts = [generate_ucmh(ModelParams(3, 20, 1.0, 0.3, 0.0, s))[1].bad for s in range(20)]
        flat = np.concatenate(counts)
        se = math.sqrt(0.3 * 0.7 / flat.size)
        assert abs(flat.mean() - 0.3) <= 3 * se

    def test_s_star_matches_measurements(self, variant):
        from hypersync.group import tuple_distance_array

        H, gt = generate_ucmh(ModelParams(3, 9, 1.0, 0.3, 0.05, 2, variant))
        assert np.allclose(gt.s_star, tuple_distance_array(variant, H.measurements, gt.true_measurements))
        assert np.all(gt.s_star[gt.bad] > 1e-12)

    def test_deterministic(self):
        a = generate_ucmh(ModelParams(3, 12, 0.5, 0.2, 0.1, 9))
        b = generate_ucmh(ModelParams(3, 12, 0.5, 0.2, 0.1, 9))
        assert np.array_equal(a[0].edges, b[0].edges)
        assert np.array_equal(a[0].measurements, b[0].measurements)

    def test_potential_independent_of_density(self):
        a = generate_ucmh(ModelParams(3, 12, 0.5, 0.2, 0.0, 9))[1]
        b = generate_ucmh(ModelParams(3, 12, 1.0, 0.2, 0.0, 9))[1]
        assert np.array_equal(a.vertex_potential.values, b.vertex_potential.values)

    def test_connectivity_failure(self):
        with pytest.raises(DisconnectedError):
            generate_ucmh(ModelParams(2, 40, 0.001, 0.0, 0.0, 0))

    def test_sampling_path(self, monkeypatch):
        monkeypatch.setattr(model, "FULL_ENUMERATION_LIMIT", 0)
        H, _ = generate_ucmh(ModelParams(3, 15, 0.4, 0.0, 0.0, 3))
        assert np.all(np.diff(H.edges, axis=1) > 0)
        assert len({tuple(r) for r in H.edges.tolist()}) == H.num_hyperedges
        assert abs(H.num_hyperedges - 0.4 * math.comb(15, 3)) < 5 * math.sqrt(math.comb(15, 3) * 0.24)

    def test_unrank_matches_lexicographic_order(self):
        combos = list(itertools.combinations(range(7), 3))
        assert [unrank_combination(r, 7, 3) for r in range(len(combos))] == combos


class TestClassify:
    def test_clean_instance(self):
        H, gt = generate_ucmh(ModelParams(3, 8, 1.0, 0.0, 0.0, 0))
        cl = classify_cycles(enumerate_cycles(H), gt)
        assert cl.lam == 0 and np.all(cl.n_bad == 0) and cl.gcc_holds

    def test_all_bad(self, rng):
        H, g = complete_instance("SO2", 6, 3, rng)
        bad = np.ones(H.num_hyperedges, bool)
        H, gt = build_instance(6, "SO2", H.edges, g, bad, rng)
        cl = classify_cycles(enumerate_cycles(H), gt)
        assert not cl.gcc_holds and np.all(cl.n_good == 0) and cl.lam == 1.0

    def test_counts_match_incidence(self):
        H, gt = generate_ucmh(ModelParams(3, 9, 1.0, 0.2, 0.0, 5))
        chg = enumerate_cycles(H)
        cl = classify_cycles(chg, gt)
        assert np.array_equal(cl.n_good + cl.n_bad, chg.degrees)

    @pytest.mark.parametrize("seed", range(10))
    def test_lambda_matches_oracle_m20(self, seed):
        H, gt = generate_ucmh(ModelParams(3, 20, 1.0, 0.05, 0.0, seed))
        cl = classify_cycles(enumerate_cycles(H), gt)
        assert cl.lam == pytest.approx(float(Fraction(LAMBDA_M20[seed])), abs=1e-15)
        assert lambda_oracle(H.edges, gt.bad, 20) == Fraction(LAMBDA_M20[seed])

    def test_lambda_at_m50(self):
        lams = []
        for seed in range(10):
            H, gt = generate_ucmh(ModelParams(3, 50, 1.0, 0.05, 0.0, seed))
            lams.append(classify_cycles(enumerate_cycles(H), gt).lam)
        assert lams == pytest.approx([float(Fraction(x)) for x in LAMBDA_M50], abs=1e-15)
        # the mean per-hyperedge ratio sits near 1 - 0.95**3, so the maximum
        # over ~2e4 hyperedges lands far above 1/7
        assert sum(lam < 1 / 7 for lam in lams) == 0


class TestGoodCycles:
    def test_identity_on_triangles(self, variant):
        H, gt = generate_ucmh(ModelParams(2, 15, 1.0, 0.2, 0.0, 1, variant))
        chg = build_chg(H)
        cl = classify_cycles(chg, gt)
        dev = np.abs(chg.d[chg.inc_cycle] - gt.s_star[chg.inc_hyperedge])
        assert dev[cl.good].max() <= 1e-12

    def test_corruption_bound_on_triangles(self, variant):
        H, gt = generate_ucmh(ModelParams(2, 15, 1.0, 0.3, 0.0, 2, variant))
        chg = build_chg(H)
        others = gt.s_star[chg.hyperedges].sum(axis=1)[chg.inc_cycle] - gt.s_star[chg.inc_hyperedge]
        dev = np.abs(chg.d[chg.inc_cycle] - gt.s_star[chg.inc_hyperedge])
        assert np.all(dev <= others + 1e-9)

    def test_good_hyperedges_have_zero_consistency_on_good_cycles(self):
        H, gt = generate_ucmh(ModelParams(3, 12, 1.0, 0.2, 0.0, 3))
        chg = build_chg(H)
        cl = classify_cycles(chg, gt)
        mask = cl.good & ~gt.bad[chg.inc_hyperedge]
        assert chg.d[chg.inc_cycle[mask]].max() <= 1e-12


class TestMode:
    def test_majority(self):
        assert mode_of([0.0, 0.0, 0.37]) == 0.0

    def test_singleton(self):
        assert mode_of([0.2]) == 0.2

    def test_empty(self):
        assert math.isnan(mode_of([]))

    def test_ties_prefer_smaller(self):
        assert mode_of([0.5, 0.5, 0.1, 0.1]) == 0.1

    def test_cluster_tolerance(self):
        assert mode_of([0.3, 0.3 + 5e-10, 0.9]) == 0.3

    def test_uncovered_hyperedge(self):
        from hypersync.hypergraph import UniformHypergraph

        H = UniformHypergraph(3, 3, "SO2", [[0, 1, 2]], [[0.1, 0.2]])
        assert math.isnan(mode_estimator(build_chg(H))[0])

    def test_exact_on_triangles(self, variant):
        H, gt = generate_ucmh(ModelParams(2, 20, 1.0, 0.15, 0.0, 4, variant))
        chg = build_chg(H)
        assert np.all(classify_cycles(chg, gt).n_good >= 2)
        assert np.abs(mode_estimator(chg) - gt.s_star).max() <= 1e-9


def test_ground_truth_bad_set():
    gt = GroundTruth(None, None, np.array([True, False, True]), np.zeros(3))
    assert gt.bad_set == {0, 2}
    assert gt.good.tolist() == [False, True, False]
