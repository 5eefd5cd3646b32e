"""Histogram, distance, tail-fit, and waiting-time statistics."""

import numpy as np
import pytest

from prefatt import (
    DegreeHistogram,
    ModelSpec,
    collect_descendant_waiting_times,
    collect_waiting_times,
    concentration_scan,
    fit_exponential_rate,
    histogram,
    histogram_from_checkpoint,
    iipa_run,
    ks_statistic,
    make_rng,
    simon_run,
    simon_run_with_genealogy,
    tail_slope,
    theory_pmf,
    total_variation,
)
from prefatt.theory import enumerate_exact


class TestHistogram:
    def test_simon_initial_state(self):
        h = histogram(simon_run(1, 0.5, make_rng(0)))
        assert h.as_dict() == {1: 1}
        assert h.n_vertices == 1 and h.kind == "in-degree"

    def test_iipa_forced_self_attach(self):
        h = histogram(iipa_run(1, 2, make_rng(0)))
        assert h.as_dict() == {3: 1}

    def test_totals_conserve(self):
        run = simon_run(50_000, 0.5, make_rng(1))
        h = histogram(run)
        h.check_totals()
        assert int(h.counts.sum()) == run.state.n_vertices
        ks = np.arange(len(h.counts))
        assert int((ks * h.counts).sum()) == run.state.t

    def test_support_matches_enumeration(self):
        # every multiset observed over many tiny runs has positive exact mass
        from prefatt import _kernels
        dist = enumerate_exact("simon", t_target=6, alpha=0.5)
        packed = dist.packed()
        keys = np.empty(50_000, dtype=np.int64)
        _kernels.simon_mc_kernel(make_rng(2, purpose="support"), 50_000, 6, 0.5, keys)
        for key in np.unique(keys):
            assert packed.get(int(key), 0.0) > 0.0

    def test_checkpoint_histogram(self):
        run = simon_run(1_000, 0.5, make_rng(3), checkpoint_times=[10, 1_000])
        h10 = histogram_from_checkpoint(run, 0)
        assert h10.t == 10
        ks = np.arange(len(h10.counts))
        assert int((ks * h10.counts).sum()) == 10


class TestTotalVariation:
    def test_zero_against_itself_and_symmetry(self):
        a = theory_pmf("simon", alpha=0.5)
        b = theory_pmf("iipa", m=1)  # identical distribution
        assert total_variation(a, b, k_cap=100).value == pytest.approx(0.0, abs=1e-12)
        h1 = histogram(simon_run(5_000, 0.5, make_rng(4)))
        h2 = histogram(simon_run(5_000, 0.5, make_rng(5)))
        assert total_variation(h1, h2, 100).value == pytest.approx(
            total_variation(h2, h1, 100).value, abs=1e-15)
        assert total_variation(h1, h1, 100).value == 0.0

    def test_truncated_theory_has_only_tail_remainder(self):
        # counts exactly proportional to the pmf on k <= cap, nothing beyond:
        # the head matches except for the missing tail mass
        pmf = theory_pmf("simon", alpha=0.5)
        cap = 50
        ks = np.arange(1, cap + 1)
        counts = np.zeros(cap + 1)
        counts[1:] = pmf.pmf(ks)
        h = DegreeHistogram(counts / counts.sum(), 1, None, "in-degree")
        rep = total_variation(h, pmf, k_cap=cap)
        tail = pmf.tail_mass(cap)
        assert rep.value == pytest.approx(tail, rel=1e-9)
        assert rep.detail["remainder"] == pytest.approx(tail / 2, rel=1e-9)

    def test_empty_histogram_rejected(self):
        h = DegreeHistogram(np.zeros(3), 0, None, "in-degree")
        with pytest.raises(ValueError):
            total_variation(h, theory_pmf("simon", alpha=0.5))

    def test_threshold_gate(self):
        h = histogram(simon_run(200_000, 0.5, make_rng(6)))
        rep = total_variation(h, theory_pmf("simon", alpha=0.5), 200, threshold=0.02)
        assert rep.passed is True
        rep = total_variation(h, theory_pmf("simon", alpha=0.25), 200, threshold=0.02)
        assert rep.passed is False


class TestTailSlope:
    def test_exact_power_law_recovers_minus_three(self):
        ks = np.arange(1, 200)
        counts = np.zeros(200)
        counts[1:] = 2.0 / (ks ** 3)
        h = DegreeHistogram(counts, 1, None, "degree")
        rep = tail_slope(h, 10, 100)
        assert rep.value == pytest.approx(-3.0, abs=1e-6)

    def test_yule_rho_one_slope_near_minus_two(self):
        pmf = theory_pmf("yule", rho=1.0)
        ks = np.arange(1, 2_000)
        counts = np.zeros(2_000)
        counts[1:] = pmf.pmf(ks)
        h = DegreeHistogram(counts, 1, None, "size")
        rep = tail_slope(h, 100, 1_000)
        assert -2.05 <= rep.value <= -1.95

    def test_too_few_occupied_bins(self):
        counts = np.zeros(30)
        counts[[10, 12, 14]] = 5
        h = DegreeHistogram(counts, 15, None, "degree")
        with pytest.raises(ValueError):
            tail_slope(h, 10, 20)


class TestKsStatistic:
    def test_null_exponential_samples(self):
        rng = make_rng(7, purpose="ks-null")
        z = rng.exponential(1.0 / 0.5, size=1_000)
        rep = ks_statistic(z, 0.5)
        assert rep.value <= 0.05

    def test_degenerate_atom(self):
        rate, c = 1.3, 0.7
        rep = ks_statistic(np.full(500, c), rate)
        assert rep.value >= 1.0 - np.exp(-rate * c) - 1e-12

    def test_small_sample_rejected(self):
        with pytest.raises(ValueError):
            ks_statistic(np.ones(99), 1.0)

    def test_fit_rate(self):
        rng = make_rng(8, purpose="fit")
        z = rng.exponential(1.0 / 2.0, size=200_000)
        assert abs(fit_exponential_rate(z) - 2.0) < 0.02


class TestWaitingTimes:
    def test_invariants_and_rates(self):
        run = simon_run(100_000, 0.5, make_rng(9))
        w = collect_waiting_times(run, 0.5, 2_000)
        assert np.all(w["x"] >= 1)
        assert np.all(w["z"] > 0)
        assert np.all(w["rate"] == 0.5 * w["k"])
        births = np.asarray(run.state.birth_time)
        assert np.all(births[w["vertex"]] >= 2_000)
        # epochs of level k >= 2 lie strictly after the vertex birth
        later = w["k"] >= 2
        assert np.all(w["epoch"][later] > births[w["vertex"][later]])

    def test_vertex_without_growth_emits_nothing(self):
        run = simon_run(5_000, 0.5, make_rng(10))
        w = collect_waiting_times(run, 0.5, 2)
        grown = set(w["vertex"].tolist())
        indeg = np.asarray(run.state.in_degree)
        for v in np.flatnonzero(indeg == 1):
            assert v not in grown

    def test_transform_is_increasing_in_x(self):
        x = np.arange(1, 1_000)
        z = np.log1p(x / (500.0 - 1.0))
        assert np.all(np.diff(z) > 0)

    def test_rate_ordering_by_level(self):
        # z at level 1 is stochastically larger than at level 2
        run = simon_run(1_000_000, 0.5, make_rng(11))
        w = collect_waiting_times(run, 0.5, 10_000)
        z1 = np.sort(w["z"][w["k"] == 1])
        z2 = np.sort(w["z"][w["k"] == 2])
        grid = np.linspace(0.05, 3.0, 50)
        f1 = np.searchsorted(z1, grid) / len(z1)
        f2 = np.searchsorted(z2, grid) / len(z2)
        slack = 3.0 / np.sqrt(min(len(z1), len(z2)))
        assert np.all(f1 <= f2 + slack)

    def test_descendant_waits(self):
        run = simon_run_with_genealogy(200_000, 0.5, make_rng(12))
        w = collect_descendant_waiting_times(run, 5_000)
        assert np.all(w["rate"] == w["k"])
        assert np.all(w["x"] >= 1)
        # level-1 epochs all anchor at t_star
        assert np.all(w["epoch"][w["k"] == 1] == 5_000)

    def test_root_without_descendants_absent(self):
        run = simon_run_with_genealogy(10_000, 0.2, make_rng(13))
        w = collect_descendant_waiting_times(run, 9_990)
        roots_with = set(w["vertex"].tolist())
        births = np.asarray(run.state.birth_time)
        n_desc = np.zeros(run.state.n_vertices, dtype=int)
        from prefatt import _kernels
        root = np.empty(run.state.n_vertices, dtype=np.int32)
        _kernels.resolve_roots_kernel(run.parent, births, 9_990, root)
        for v in np.flatnonzero(births > 9_990):
            n_desc[root[v]] += 1
        for r_ in np.flatnonzero((births <= 9_990)):
            assert (n_desc[r_] > 0) == (r_ in roots_with)

    def test_requires_genealogy_run(self):
        run = simon_run(1_000, 0.5, make_rng(14))
        with pytest.raises(ValueError):
            collect_descendant_waiting_times(run, 10)


class TestConcentration:
    def test_forced_branch_has_zero_spread(self):
        # alpha so close to 1 that every step creates a vertex: N_1(t)/t == 1
        scan = concentration_scan(ModelSpec("simon", alpha=1 - 1e-12), 1,
                                  [500, 1_000], 50, seed=0)
        assert scan[0][1] == 0.0 and scan[1][1] == 0.0

    def test_sqrt_t_scaling(self):
        scan = concentration_scan(ModelSpec("simon", alpha=0.5), 1,
                                  [2_000, 8_000], 80, seed=1)
        ratio = scan[1][1] / scan[0][1]
        assert 0.3 <= ratio <= 0.7

    def test_below_log_envelope(self):
        scan = concentration_scan(ModelSpec("simon", alpha=0.5), 1,
                                  [10_000], 60, seed=2)
        t, std = scan[0]
        assert std < np.sqrt(np.log(t) / t)

    def test_seed_floor(self):
        with pytest.raises(ValueError):
            concentration_scan(ModelSpec("simon", alpha=0.5), 1, [100], 10)
