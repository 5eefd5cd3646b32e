"""Growth-process mechanics: invariants, trivial branches, determinism,
step/kernel agreement, and small-scale law checks."""

from collections import defaultdict

import numpy as np
import pytest

from prefatt import (
    EventKind,
    ModelSpec,
    ba_init,
    ba_run_identified,
    ba_run_rescaled,
    ba_run_single,
    ba_step_single,
    check_state_invariants,
    iipa_run,
    make_rng,
    price_init,
    price_run,
    price_step,
    run_coupled_m1,
    simon_init,
    simon_run,
    simon_run_with_genealogy,
    simon_step,
)
from prefatt import _kernels


class QueuedRNG:
    """Deterministic stand-in yielding prescribed uniforms."""

    def __init__(self, values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


class TestModelSpec:
    def test_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            ModelSpec("simon", alpha=1.5)
        with pytest.raises(ValueError):
            ModelSpec("simon", alpha=0.0)

    def test_rejects_fractional_m_for_integer_models(self):
        with pytest.raises(ValueError):
            ModelSpec("iipa", m=1.5)
        with pytest.raises(ValueError):
            ModelSpec("ba", m=0)

    def test_price_laws(self):
        ModelSpec("price", m=2.5, out_degree_law="geometric")
        with pytest.raises(ValueError):
            ModelSpec("price", m=2.5, out_degree_law="constant")
        with pytest.raises(ValueError):
            ModelSpec("price", m=2, out_degree_law="uniform")

    def test_yule_rates(self):
        ModelSpec("yule", beta=1.0, lam=2.0)
        with pytest.raises(ValueError):
            ModelSpec("yule", beta=0.0, lam=1.0)


class TestSimonSteps:
    def test_forced_new_vertex(self):
        state = simon_init()
        simon_step(state, 0.5, QueuedRNG([0.0]))
        assert state.t == 2 and state.n_vertices == 2
        assert state.in_degree == [1, 1]
        assert state.last_vertex == 1
        assert state.birth_time == [1, 2]

    def test_forced_edge_targets_the_only_vertex(self):
        state = simon_init()
        simon_step(state, 0.5, QueuedRNG([0.99, 0.7]))
        assert state.n_vertices == 1
        assert state.in_degree == [2]
        assert state.endpoint_pool == [0, 0]

    def test_step_matches_kernel_trajectory(self):
        run = simon_run(400, 0.3, make_rng(7))
        state = simon_init()
        rng = make_rng(7)
        for _ in range(399):
            simon_step(state, 0.3, rng)
        assert np.array_equal(np.asarray(state.in_degree),
                              np.asarray(run.state.in_degree))
        assert np.array_equal(np.asarray(state.endpoint_pool),
                              np.asarray(run.state.endpoint_pool))
        assert state.last_vertex == run.state.last_vertex

    def test_conservation_and_pool(self):
        for seed, alpha in ((1, 0.2), (2, 0.5), (3, 0.9)):
            run = simon_run(30_000, alpha, make_rng(seed))
            check_state_invariants(run)
            assert int(np.asarray(run.state.in_degree).sum()) == run.state.t

    def test_determinism_bitwise(self):
        a = simon_run(10_000, 0.4, make_rng(11))
        b = simon_run(10_000, 0.4, make_rng(11))
        assert np.array_equal(a.events.actor, b.events.actor)
        assert np.array_equal(a.events.is_new, b.events.is_new)

    def test_event_log_contract(self):
        run = simon_run(200, 0.5, make_rng(5))
        records = list(run.events)
        assert len(records) == 200
        assert [r.t for r in records] == list(range(1, 201))
        n_new = sum(r.kind is EventKind.NEW_VERTEX for r in records)
        assert n_new == run.state.n_vertices
        last = 0
        indeg = defaultdict(int)
        for r in records:
            if r.kind is EventKind.NEW_VERTEX:
                last = r.source
                indeg[r.target] += 1
            else:
                assert r.source == last
                assert (r.kind is EventKind.LOOP) == (r.source == r.target)
                indeg[r.target] += 1
        got = np.asarray([indeg[v] for v in range(run.state.n_vertices)])
        assert np.array_equal(got, np.asarray(run.state.in_degree))


class TestIIPA:
    def test_single_vertex_forced_self_attach(self):
        run = iipa_run(1, 2, make_rng(0))
        assert run.state.n_vertices == 1
        assert list(run.state.in_degree) == [3]
        assert run.state.t == 3

    def test_second_vertex_first_edge_law(self):
        # at the first edge of v2 the in-degrees are (2,1): P(target v1)=2/3
        reps = 200_000
        keys = np.empty(reps, dtype=np.int64)
        _kernels.iipa_mc_kernel(make_rng(21, purpose="iipa-law"), reps, 2, 1, keys)
        from prefatt import pack_multiset
        freq_13 = float((keys == pack_multiset((1, 3))).mean())
        se = np.sqrt((2 / 3) * (1 / 3) / reps)
        assert abs(freq_13 - 2 / 3) < 4 * se

    def test_conservation(self):
        for m in (1, 2, 5):
            run = iipa_run(5_000, m, make_rng(m))
            check_state_invariants(run)
            assert int(np.asarray(run.state.in_degree).sum()) == 5_000 * (m + 1)

    def test_checkpoints_at_complete_counts(self):
        run = iipa_run(100, 2, make_rng(4), checkpoint_nverts=[1, 10, 100])
        cp = run.checkpoints
        assert list(cp.times) == [1, 10, 100]
        assert list(cp.vcounts) == [1, 10, 100]
        # snapshot count masses equal n(m+1) at each checkpoint
        karr = np.arange(cp.counts.shape[1])
        for i, n in enumerate((1, 10, 100)):
            assert int((karr[:-1] * cp.counts[i, :-1]).sum()) == 3 * n


class TestBarabasiAlbert:
    def test_first_step_probabilities(self):
        reps = 200_000
        keys = np.empty(reps, dtype=np.int64)
        _kernels.ba_single_mc_kernel(make_rng(31, purpose="ba-law"), reps, 2, keys)
        from prefatt import pack_multiset
        freq = float((keys == pack_multiset((1, 3))).mean())
        se = np.sqrt((2 / 3) * (1 / 3) / reps)
        assert abs(freq - 2 / 3) < 4 * se

    def test_step_matches_kernel(self):
        run = ba_run_single(300, make_rng(9))
        state = ba_init()
        rng = make_rng(9)
        for _ in range(299):
            ba_step_single(state, rng)
        assert np.array_equal(np.asarray(state.degree), np.asarray(run.state.degree))

    def test_degree_sum_conserved(self):
        run = ba_run_single(20_000, make_rng(12))
        check_state_invariants(run)
        assert int(np.asarray(run.state.degree).sum()) == 2 * 20_000

    def test_identified_m1_is_identity(self):
        a = ba_run_identified(2_000, 1, make_rng(13))
        b = ba_run_single(2_000, make_rng(13))
        assert np.array_equal(np.asarray(a.state.degree), np.asarray(b.state.degree))

    def test_identified_degree_sum(self):
        run = ba_run_identified(1_000, 3, make_rng(14))
        check_state_invariants(run)  # pool remapped to merged vertex ids
        assert int(np.asarray(run.state.degree).sum()) == 2 * 3 * 1_000
        assert run.state.n_vertices == 1_000

    def test_identified_collapsed_law_vs_bruteforce(self):
        # m=2, n=2: collapsed degree of the first vertex is d(v1')+d(v2')
        # from the 4-step single-edge tree
        def enum_vectors(t_target):
            out = defaultdict(float)

            def rec(degs, prob):
                t = len(degs)
                if t == t_target:
                    out[tuple(degs)] += prob
                    return
                denom = 2 * t + 1
                rec(degs + [2], prob / denom)  # newborn self-loop
                for j in range(t):
                    child = list(degs)
                    child[j] += 1
                    rec(child + [1], prob * degs[j] / denom)

            rec([2], 1.0)
            return out

        law = defaultdict(float)
        for degs, p in enum_vectors(4).items():
            law[degs[0] + degs[1]] += p
        reps = 30_000
        samples = np.empty(reps, dtype=np.int64)
        for r in range(reps):
            run = ba_run_identified(2, 2, make_rng(15, replica=r))
            samples[r] = run.state.degree[0]
        for value, p in law.items():
            se = max(np.sqrt(p * (1 - p) / reps), 1e-9)
            assert abs(float((samples == value).mean()) - p) < 4 * se

    def test_rescaled_single_vertex(self):
        run = ba_run_rescaled(1, 1, make_rng(16))
        assert list(run.state.degree) == [2]  # one forced self-loop

    def test_rescaled_degree_sum(self):
        for m in (1, 2, 4):
            run = ba_run_rescaled(3_000, m, make_rng(m + 40))
            check_state_invariants(run)
            assert int(np.asarray(run.state.degree).sum()) == 2 * m * 3_000


class TestPrice:
    def _spec(self, m=1, k0=1, law="constant"):
        return ModelSpec("price", m=m, k0=k0, out_degree_law=law)

    def test_single_old_vertex_forced_target(self):
        spec = self._spec(m=1, k0=1)
        state = price_init(spec, make_rng(0))
        assert state.in_degree == [2]  # M1 + k0 loops
        price_step(state, spec, make_rng(1))
        assert state.in_degree == [3, 1]

    def test_step_matches_kernel(self):
        spec = self._spec(m=2, k0=2)
        run = price_run(200, spec, make_rng(17))
        rng = make_rng(17)
        # the kernel pre-draws all out-degrees, then consumes target draws
        state = price_init(spec, rng)
        # constant law: re-drawing per step consumes no randomness
        for _ in range(199):
            price_step(state, spec, rng)
        assert np.array_equal(np.asarray(state.in_degree),
                              np.asarray(run.state.in_degree))
        assert np.array_equal(np.asarray(state.endpoint_pool),
                              np.asarray(run.state.endpoint_pool))

    def test_truncation_counter(self):
        spec = self._spec(m=5, k0=1)
        run = price_run(3, spec, make_rng(18))
        assert run.truncated_batches == 2  # batches at n=1 and n=2
        check_state_invariants(run)

    def test_batch_targets_distinct(self):
        spec = self._spec(m=3, k0=1)
        run = price_run(2_000, spec, make_rng(19))
        check_state_invariants(run)
        # every vertex beyond the cold start gains at most m+per-batch 1 unit
        # per batch; with k0=1 the in-degree never exceeds 1 + (n-1) edges
        assert int(np.asarray(run.state.in_degree).max()) < 2_000

    def test_geometric_law_mean(self):
        spec = self._spec(m=2, law="geometric")
        run = price_run(50_000, spec, make_rng(20))
        check_state_invariants(run)
        # total in-degree = n*k0 + edges; edges/n ~ E min(M, n) ~ 2
        edges = len(run.state.endpoint_pool) - 50_000 * spec.k0
        assert abs(edges / 50_000 - 2.0) < 0.05


class TestGenealogy:
    def test_marginal_vertex_growth_is_binomial(self):
        # V_t - 1 ~ Bin(t-1, alpha) exactly; the mean alpha*t claim holds to
        # a vanishing (1-alpha)/t relative offset
        t, reps, alpha = 3_000, 30_000, 0.5
        counts = np.empty(reps, dtype=np.int64)
        _kernels.simon_vcount_mc_kernel(
            make_rng(23, purpose="vt"), reps, t, alpha, counts)
        exact_mean = 1 + (t - 1) * alpha
        se = np.sqrt((t - 1) * alpha * (1 - alpha) / reps)
        assert abs(counts.mean() - exact_mean) < 3 * se
        assert abs(exact_mean - alpha * t) / (alpha * t) < 1e-3

    def test_genealogy_marginal_matches_simon_law(self):
        t, reps, alpha = 2_000, 400, 0.5
        v_gen = np.array([simon_run_with_genealogy(t, alpha, make_rng(24, replica=r)
                                                   ).state.n_vertices
                          for r in range(reps)])
        exact_mean = 1 + (t - 1) * alpha
        se = np.sqrt((t - 1) * alpha * (1 - alpha) / reps)
        assert abs(v_gen.mean() - exact_mean) < 3 * se

    def test_all_spawn_when_alpha_near_one(self):
        run = simon_run_with_genealogy(1_000, 1 - 1e-12, make_rng(25))
        assert run.state.n_vertices == 1_000
        assert np.all(run.parent[1:] >= 0)

    def test_descendants_partition_vertices(self):
        run = simon_run_with_genealogy(50_000, 0.4, make_rng(26))
        birth = np.asarray(run.state.birth_time)
        t_star = 1_000
        root = np.empty(run.state.n_vertices, dtype=np.int32)
        _kernels.resolve_roots_kernel(run.parent, birth, t_star, root)
        roots = np.flatnonzero(birth <= t_star)
        # every vertex resolves to a root alive at t_star, and descendant
        # counts (self included) partition the vertex set
        assert set(np.unique(root)) <= set(roots.tolist())
        sizes = np.bincount(root, minlength=run.state.n_vertices)
        assert int(sizes[roots].sum()) == run.state.n_vertices
        assert np.all(sizes[roots] >= 1)

    def test_graph_invariants_hold(self):
        run = simon_run_with_genealogy(20_000, 0.6, make_rng(27))
        check_state_invariants(run)

    def test_marginal_graph_law_matches_plain_form(self):
        # duplication form and plain form share the graph law: their
        # histograms at equal (alpha, t) agree within sampling noise
        from prefatt import histogram, total_variation
        ha = histogram(simon_run_with_genealogy(200_000, 0.5, make_rng(28)))
        hb = histogram(simon_run(200_000, 0.5, make_rng(29)))
        assert total_variation(ha, hb, k_cap=200).value < 0.01


class TestCoupling:
    def test_m1_checkpoint_histograms_identical(self):
        for seed in (0, 1, 2):
            a, b = run_coupled_m1(2_000, seed, checkpoint_nverts=[10, 300, 2_000])
            for i in range(3):
                assert np.array_equal(a.checkpoints.counts[i],
                                      b.checkpoints.counts[i])
                assert a.checkpoints.vcounts[i] == b.checkpoints.vcounts[i]

    def test_final_weights_equal(self):
        a, b = run_coupled_m1(5_000, 9)
        assert np.array_equal(np.asarray(a.state.in_degree),
                              np.asarray(b.state.degree))
