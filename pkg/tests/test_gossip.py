import numpy as np
import pytest

from opiniondyn import (
    DWHeterogeneous,
    DeffuantWeisbuch,
    DegrootGossip,
    FJSpec,
    GossipFJ,
    OpinionState,
    RngSeed,
    SymmetricPairGossip,
    bernoulli_convolution,
    build_gammas,
    cesaro,
    dw_run_exact,
    fj_fixed_point,
    gossip_step,
    make_rng,
    simulate_gossip,
)
from opiniondyn.presets import FJ4_LAMBDA, FJ4_U, FJ4_W


def ring_matrix(n):
    p = np.zeros((n, n))
    for k in range(n):
        p[k, (k + 1) % n] = 0.5
        p[k, (k - 1) % n] = 0.5
    return p


class TestBuildGammas:
    def test_full_susceptibility_kills_prejudice_factor(self):
        w = ring_matrix(4)
        g1, g2 = build_gammas(np.ones(4), w)
        assert np.array_equal(g1, w)
        assert np.max(np.abs(g2)) == 0

    def test_zero_susceptibility_kills_opinion_factor(self):
        w = ring_matrix(4)
        g1, g2 = build_gammas(np.zeros(4), w)
        assert np.max(np.abs(g1)) == 0
        assert np.array_equal(g2, w)

    def test_half_half_swap(self):
        w = np.array([[0.0, 1.0], [1.0, 0.0]])
        g1, g2 = build_gammas(np.array([0.5, 0.5]), w)
        expected = np.array([[0.0, 0.5], [0.5, 0.0]])
        assert np.array_equal(g1, expected)
        assert np.array_equal(g2, expected)


class TestGossipStep:
    def test_pair_average_moves_both_to_midpoint(self):
        model = SymmetricPairGossip(np.array([[0.0, 1.0], [1.0, 0.0]]))
        out, event = gossip_step(OpinionState([0.0, 1.0]), model, rng=0)
        i, j, interacted = event
        assert interacted and {i, j} == {0, 1}
        assert np.array_equal(out.values[:, 0], [0.5, 0.5])

    def test_dw_within_bound_meets_halfway(self):
        model = DeffuantWeisbuch(d=0.5, mu=0.5)
        x = OpinionState([0.0, 0.4])
        out, event = gossip_step(x, model, rng=1)
        assert event[2]
        assert np.array_equal(out.values[:, 0], [0.2, 0.2])

    def test_dw_beyond_bound_unchanged(self):
        model = DeffuantWeisbuch(d=0.5, mu=0.5)
        x = OpinionState([0.0, 0.6])
        out, event = gossip_step(x, model, rng=1)
        assert not event[2]
        assert np.array_equal(out.values, x.values)

    def test_fj_stubborn_agent_at_prejudice_never_moves(self):
        # zero susceptibility and opinion already at the prejudice
        lam = np.array([0.0, 0.8])
        w = np.array([[0.5, 0.5], [0.5, 0.5]])
        u = np.array([0.3, 0.9])
        model = GossipFJ.from_fj(lam, w, u)
        x = OpinionState([0.3, 0.1])
        for seed in range(20):
            out, (i, j, _) = gossip_step(x, model, rng=seed)
            if i == 0:
                assert out.values[0, 0] == 0.3

    def test_only_designated_agents_change(self):
        rng = np.random.default_rng(3)
        x0 = OpinionState(rng.uniform(0, 1, size=8))
        models = [
            DegrootGossip(ring_matrix(8), np.full(8, 0.4)),
            SymmetricPairGossip(ring_matrix(8)),
            DeffuantWeisbuch(d=0.3, mu=0.4, mode="symmetric"),
            DeffuantWeisbuch(d=0.3, mu=0.4, mode="asymmetric"),
            DWHeterogeneous(d=rng.uniform(0.1, 0.5, size=8), mu=0.4),
        ]
        for model in models:
            for seed in range(10):
                out, (i, j, _) = gossip_step(x0, model, rng=seed)
                untouched = [a for a in range(8) if a not in (i, j)]
                assert np.array_equal(out.values[untouched], x0.values[untouched])
                if isinstance(model, DeffuantWeisbuch) and model.mode == "asymmetric":
                    assert out.values[j, 0] == x0.values[j, 0]

    def test_heterogeneous_bounds_one_sided_move(self):
        # gap 0.4: inside agent 0's bound, outside agent 1's
        model = DWHeterogeneous(d=np.array([0.5, 0.3]), mu=0.5)
        x = OpinionState([0.0, 0.4])
        moved = set()
        for seed in range(10):
            out, (i, j, interacted) = gossip_step(x, model, rng=seed)
            assert interacted
            if i == 0 or j == 0:
                moved.add((out.values[0, 0], out.values[1, 0]))
        assert moved == {(0.2, 0.4)}


class TestSimulateGossip:
    def test_reproducible_and_seed_sensitive(self):
        model = DeffuantWeisbuch(d=0.4, mu=0.5)
        x0 = OpinionState(np.linspace(0, 1, 12))
        a = simulate_gossip(model, x0, steps=3000, seed=7)
        b = simulate_gossip(model, x0, steps=3000, seed=7)
        c = simulate_gossip(model, x0, steps=3000, seed=8)
        assert np.array_equal(a.array, b.array)
        assert a.events == b.events
        assert not np.array_equal(a.array, c.array)

    def test_stream_index_gives_independent_runs(self):
        model = DeffuantWeisbuch(d=0.4, mu=0.5)
        x0 = OpinionState(np.linspace(0, 1, 6))
        a = simulate_gossip(model, x0, steps=500, seed=RngSeed(7, stream=0))
        b = simulate_gossip(model, x0, steps=500, seed=RngSeed(7, stream=1))
        assert not np.array_equal(a.array, b.array)

    def test_event_replay_reproduces_states(self):
        # replaying the recorded pair sequence through the update formulas
        # must give the same trajectory as the simulator's internal loop
        rng = np.random.default_rng(4)
        x0 = OpinionState(rng.uniform(0, 1, size=6))
        gains = np.full(6, 0.3)
        for model in (
            DegrootGossip(ring_matrix(6), gains),
            SymmetricPairGossip(ring_matrix(6)),
            GossipFJ.from_fj(np.full(6, 0.7), ring_matrix(6), rng.uniform(0, 1, 6)),
            DeffuantWeisbuch(d=0.3, mu=0.4),
        ):
            traj = simulate_gossip(model, x0, steps=400, seed=11)
            x = list(x0.flat)
            for k, (i, j, interacted) in enumerate(traj.events):
                if isinstance(model, DegrootGossip):
                    x[i] = x[i] + gains[i] * (x[j] - x[i])
                elif isinstance(model, SymmetricPairGossip):
                    mid = 0.5 * (x[i] + x[j])
                    x[i] = mid
                    x[j] = mid
                elif isinstance(model, GossipFJ):
                    x[i] = (
                        x[i]
                        + model.gamma1[i, j] * (x[j] - x[i])
                        + model.gamma2[i, j] * (model.u[i] - x[i])
                    )
                elif interacted:
                    t = model.mu * (x[j] - x[i])
                    x[i] = x[i] + t
                    x[j] = x[j] - t
                assert np.array_equal(np.array(x), traj.array[k + 1, :, 0]), type(model)

    def test_hull_never_expands(self):
        rng = np.random.default_rng(5)
        x0 = OpinionState(rng.uniform(0, 1, size=10))
        for model in (
            DegrootGossip(ring_matrix(10), np.full(10, 0.6)),
            SymmetricPairGossip(ring_matrix(10)),
            DeffuantWeisbuch(d=0.4, mu=0.3),
        ):
            traj = simulate_gossip(model, x0, steps=2000, seed=9)
            mins = traj.array[:, :, 0].min(axis=1)
            maxs = traj.array[:, :, 0].max(axis=1)
            eps = 4 * np.finfo(float).eps
            assert np.all(np.diff(mins) >= -eps)
            assert np.all(np.diff(maxs) <= eps)

    def test_degroot_gossip_consensus_with_spanning_tree(self):
        model = DegrootGossip(ring_matrix(5), np.full(5, 0.5))
        rng = np.random.default_rng(6)
        x0 = OpinionState(rng.uniform(0, 1, size=5))
        for seed in range(50):
            traj = simulate_gossip(model, x0, steps=20_000, seed=seed, thin=20_000,
                                   record_events=False)
            assert traj.final.diameter() < 1e-6

    def test_dw_symmetric_sum_drift_is_roundoff_only(self):
        model = DeffuantWeisbuch(d=0.3, mu=0.5)
        rng = np.random.default_rng(7)
        x0 = OpinionState(rng.uniform(0, 1, size=20))
        traj = simulate_gossip(model, x0, steps=50_000, seed=3, thin=50_000)
        assert abs(traj.final.values.sum() - x0.values.sum()) < 1e-10

    def test_thinning_keeps_first_and_last(self):
        model = DeffuantWeisbuch(d=0.3, mu=0.5)
        x0 = OpinionState(np.linspace(0, 1, 5))
        traj = simulate_gossip(model, x0, steps=1003, seed=1, thin=100)
        assert traj.stamps[0] == 0
        assert traj.stamps[-1] == 1003
        full = simulate_gossip(model, x0, steps=1003, seed=1)
        assert np.array_equal(traj.array[-1], full.array[-1])


class TestExactPairDynamics:
    def test_symmetric_variant_conserves_sum_exactly(self):
        model = DeffuantWeisbuch(d=0.25, mu=0.5)
        rng = np.random.default_rng(8)
        x0 = OpinionState(rng.uniform(0, 1, size=12))
        res = dw_run_exact(model, x0, steps=20_000, seed=21)
        assert sum(res.initial_exact) == sum(res.final_exact)

    def test_sum_conserved_at_every_recorded_state(self):
        from fractions import Fraction

        model = DeffuantWeisbuch(d=0.4, mu=0.5)
        rng = np.random.default_rng(9)
        x0 = OpinionState(rng.uniform(0, 1, size=6))
        res = dw_run_exact(model, x0, steps=300, seed=2, thin=1, record_events=True)
        # replay in Fractions, checking the sum after every single step
        x = [Fraction(v) for v in x0.flat.tolist()]
        total = sum(x)
        mu, d = Fraction(model.mu), Fraction(model.d)
        for i, j, interacted in res.trajectory.events:
            gap = x[j] - x[i]
            assert interacted == (abs(gap) <= d)
            if interacted:
                shift = mu * gap
                x[i] += shift
                x[j] -= shift
            assert sum(x) == total
        assert tuple(x) == res.final_exact

    def test_exact_and_float_runs_share_pair_draws(self):
        model = DeffuantWeisbuch(d=0.3, mu=0.5)
        x0 = OpinionState(np.linspace(0, 1, 9))
        fl = simulate_gossip(model, x0, steps=500, seed=5)
        ex = dw_run_exact(model, x0, steps=500, seed=5, record_events=True)
        assert [(i, j) for i, j, _ in fl.events] == [(i, j) for i, j, _ in ex.trajectory.events]


class TestCesaro:
    def test_constant_trajectory(self):
        from opiniondyn import trajectory_from_states

        traj = trajectory_from_states([[1.0, 2.0]] * 5)
        avg = cesaro(traj)
        assert np.array_equal(avg[-1][:, 0], [1.0, 2.0])

    def test_alternating_sequence_approaches_half(self):
        from opiniondyn import trajectory_from_states

        states = [[float(k % 2)] for k in range(10_001)]
        avg = cesaro(trajectory_from_states(states))
        assert avg[-1][0, 0] == pytest.approx(0.5, abs=1e-4)

    def test_gossip_fj_cesaro_tracks_fixed_point(self):
        # the acceptance suite runs the full 20-seed version
        model = GossipFJ.from_fj(FJ4_LAMBDA, FJ4_W, FJ4_U)
        xbar = fj_fixed_point(FJSpec(lam=FJ4_LAMBDA, w=FJ4_W, u=FJ4_U)).values[:, 0]
        hits = 0
        for seed in range(5):
            traj = simulate_gossip(
                model, OpinionState(FJ4_U), steps=200_000, seed=seed, record_events=False
            )
            avg = cesaro(traj)[-1][:, 0]
            if np.max(np.abs(avg - xbar)) <= 2.0:
                hits += 1
        assert hits >= 4

    def test_fj_expected_update_recursion_matches_monte_carlo(self):
        # across many independent runs the mean trajectory follows the
        # one-step expected affine map within Monte Carlo error
        lam = np.array([0.6, 0.9, 0.3])
        w = np.array([[0.2, 0.5, 0.3], [0.4, 0.2, 0.4], [0.1, 0.6, 0.3]])
        u = np.array([0.0, 1.0, 0.5])
        model = GossipFJ.from_fj(lam, w, u)
        n, arcs = 3, model.arcs
        m = np.eye(n)
        b = np.zeros(n)
        for i, j in arcs:
            e_i = np.zeros(n)
            e_i[i] = 1.0
            m[i, i] -= (model.gamma1[i, j] + model.gamma2[i, j]) / len(arcs)
            m[i, j] += model.gamma1[i, j] / len(arcs)
            b[i] += model.gamma2[i, j] * u[i] / len(arcs)
        checkpoints = (100, 1000)
        samples = {k: [] for k in checkpoints}
        for seed in range(500):
            traj = simulate_gossip(
                model, OpinionState(u), steps=1000, seed=seed, record_events=False
            )
            for k in checkpoints:
                samples[k].append(traj.array[k, :, 0])
        expected = u.copy()
        for k in range(1, 1001):
            expected = m @ expected + b
            if k in checkpoints:
                sample = np.array(samples[k])
                mean = sample.mean(axis=0)
                se = sample.std(axis=0, ddof=1) / np.sqrt(len(sample))
                assert np.all(np.abs(mean - expected) <= 3 * np.maximum(se, 1e-12))


class TestBernoulliConvolution:
    def test_all_zero_bits(self):
        assert bernoulli_convolution(0.5, 10, rng=0, bits=np.zeros(10, dtype=int)) == 0.0

    def test_all_one_bits_geometric_sum(self):
        val = bernoulli_convolution(0.5, 60, rng=0, bits=np.ones(60, dtype=int))
        assert val == pytest.approx(1.0, abs=1e-15)

    def test_uniform_moments_at_half(self):
        rng = make_rng(123)
        samples = np.array([bernoulli_convolution(0.5, 60, rng) for _ in range(100_000)])
        assert abs(samples.mean() - 0.5) <= 0.01
        assert abs(samples.var() - 1.0 / 12.0) <= 0.005


class TestMoreGossipSurfaces:
    def test_fj_prejudice_override(self):
        from opiniondyn.presets import FJ4_LAMBDA, FJ4_U, FJ4_W

        model = GossipFJ.from_fj(FJ4_LAMBDA, FJ4_W, FJ4_U)
        x = OpinionState(FJ4_U)
        base, (i, j, _) = gossip_step(x, model, rng=2)
        override, (i2, j2, _) = gossip_step(x, model, rng=2, u=FJ4_U + 10.0)
        assert (i, j) == (i2, j2)
        if model.gamma2[i, j] > 0:
            assert not np.array_equal(base.values, override.values)

    def test_empty_arc_list_rejected(self):
        with pytest.raises(ValueError):
            GossipFJ(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros(2), arcs=())

    def test_dw_dichotomy_at_long_horizon(self):
        # per-pair gaps settle to coincidence or distrust at horizon 1e5 * n
        model = DeffuantWeisbuch(d=0.3, mu=0.5)
        rng = np.random.default_rng(11)
        for trial in range(3):
            n = 5
            x0 = OpinionState(rng.uniform(0, 1, size=n))
            traj = simulate_gossip(model, x0, steps=100_000 * n, seed=trial,
                                   thin=100_000 * n, record_events=False)
            f = traj.final.values[:, 0]
            gaps = np.abs(f[:, None] - f[None, :])[np.triu_indices(n, 1)]
            assert np.all((gaps < 1e-6) | (gaps >= model.d - 1e-6))
