"""Tests for the adaptive-filter kernels, the network engine, and op counts."""

import numpy as np
import pytest

from diffusion_lms.filters import (
    COUNTABLE,
    DLMS,
    DPLMS,
    DSE_LMS,
    SIMULATABLE,
    VARIANCE_FLOOR,
    FilterHyperparams,
    NetworkState,
    NodeFilterState,
    OpCounter,
    adapt_all,
    combine_all,
    diffusion_combine,
    dlms_adapt,
    dplms_adapt,
    dse_lms_adapt,
    initial_states,
    normalize_algorithm,
    op_counts,
    plms_alpha,
    plms_step,
    plms_variance_update,
    run_network_iteration,
)
from diffusion_lms.network import NetworkTopology, uniform_combination


def full_topology(n):
    adj = np.ones((n, n), dtype=bool)
    np.fill_diagonal(adj, False)
    return NetworkTopology(node_count=n, adjacency=adj)


class TestProbabilisticKernel:
    def test_gain_oracle(self):
        # (0.5 + 0.1) / ((0.5 + 0.1) * 2 + 0.01) = 60/121
        x = np.array([1.0, 1.0])
        alpha = plms_alpha(0.5, 0.1, 0.01, x, "plus")
        assert alpha == pytest.approx(0.49586776859504134, rel=1e-14)

    def test_gain_oracle_minus_sign(self):
        # numerator keeps the summed prediction; only the bracketed base
        # flips: (0.5 + 0.1) / ((0.5 - 0.1) * 2 + 0.01) = 20/27
        x = np.array([1.0, 1.0])
        alpha = plms_alpha(0.5, 0.1, 0.01, x, "minus")
        assert alpha == pytest.approx(0.7407407407407407, rel=1e-14)
        nxt = plms_variance_update(0.5, 0.1, alpha, x, 2, "minus")
        assert nxt == pytest.approx(0.1037037037037037, rel=1e-13)

    def test_variance_oracle(self):
        x = np.array([1.0, 1.0])
        alpha = plms_alpha(0.5, 0.1, 0.01, x, "plus")
        nxt = plms_variance_update(0.5, 0.1, alpha, x, 2, "plus")
        assert nxt == pytest.approx(0.30247933884297523, rel=1e-14)

    def test_variance_oracle_chained(self):
        # second application on the previous output
        x = np.array([1.0, 1.0])
        a1 = plms_alpha(0.5, 0.1, 0.01, x, "plus")
        v1 = plms_variance_update(0.5, 0.1, a1, x, 2, "plus")
        a2 = plms_alpha(v1, 0.1, 0.01, x, "plus")
        v2 = plms_variance_update(v1, 0.1, a2, x, 2, "plus")
        assert a2 == pytest.approx(0.4938647196024744, rel=1e-13)
        assert v2 == pytest.approx(0.20370899301949996, rel=1e-13)

    def test_scalar_step_by_hand(self):
        # M=1, x=1, prior variance 1, assumed noise 1: gain 1/2, then the
        # variance halves and the weight moves half the error.
        state = NodeFilterState(
            weights=np.zeros(1),
            posterior_variance=1.0,
            process_noise_var=0.0,
            observation_noise_var=1.0,
        )
        out = plms_step(state, np.array([1.0]), d=1.0, tau=1.0)
        assert out.weights[0] == pytest.approx(0.5, abs=1e-15)
        assert out.posterior_variance == pytest.approx(0.5, abs=1e-15)

    def test_variance_floor(self):
        # a full-length step zeroes the bracket; the floor must hold
        x = np.array([1.0])
        nxt = plms_variance_update(1.0, 0.0, 1.0, x, 1, "plus")
        assert nxt == VARIANCE_FLOOR

    def test_variance_stays_positive(self):
        rng = np.random.default_rng(0)
        variance = 1.0
        for _ in range(1000):
            x = rng.standard_normal(4)
            alpha = plms_alpha(variance, 0.0, 0.01, x, "plus")
            variance = plms_variance_update(variance, 0.0, alpha, x, 4, "plus")
            assert variance >= VARIANCE_FLOOR

    def test_gain_bounded_by_energy_inverse(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            x = rng.standard_normal(8)
            variance = float(rng.uniform(1e-6, 10.0))
            alpha = plms_alpha(variance, 0.0, 0.01, x, "plus")
            assert 0.0 < alpha < 1.0 / float(x @ x)

    def test_gain_is_exact_inverse_without_assumed_noise(self):
        x = np.array([2.0, 1.0])
        alpha = plms_alpha(0.3, 0.0, 0.0, x, "plus")
        assert alpha == pytest.approx(1.0 / 5.0, rel=1e-15)

    def test_annealing_without_process_noise(self):
        # with zero process noise the variance shrinks monotonically
        rng = np.random.default_rng(2)
        variance = 1.0
        for _ in range(200):
            x = rng.standard_normal(6)
            alpha = plms_alpha(variance, 0.0, 0.05, x, "plus")
            nxt = plms_variance_update(variance, 0.0, alpha, x, 6, "plus")
            assert nxt < variance or nxt == VARIANCE_FLOOR
            variance = nxt

    def test_zero_denominator_raises(self):
        with pytest.raises(ValueError):
            plms_alpha(0.5, 0.0, 0.0, np.zeros(3), "plus")

    def test_state_validation(self):
        with pytest.raises(ValueError):
            NodeFilterState(weights=np.zeros(2), posterior_variance=-1.0)
        with pytest.raises(ValueError):
            NodeFilterState(weights=np.zeros(2), variance_sign="sideways")


class TestBaselineKernels:
    def test_dlms_by_hand(self):
        state = NodeFilterState(weights=np.array([0.1]))
        out = dlms_adapt(state, np.array([1.0]), d=0.3, mu=0.5)
        # 0.1 + 0.5 * (0.3 - 0.1) * 1
        assert out.intermediate[0] == pytest.approx(0.2, abs=1e-15)
        assert out.weights[0] == pytest.approx(0.1, abs=1e-15)

    def test_dse_lms_by_hand(self):
        state = NodeFilterState(weights=np.array([0.1]))
        out = dse_lms_adapt(state, np.array([1.0]), d=0.3, mu=0.1)
        # 0.1 + 0.1 * sign(0.2) * 1
        assert out.intermediate[0] == pytest.approx(0.2, abs=1e-15)

    def test_dse_lms_sign_of_zero(self):
        state = NodeFilterState(weights=np.array([0.5]))
        out = dse_lms_adapt(state, np.array([1.0]), d=0.5, mu=0.7)
        assert out.intermediate[0] == 0.5

    def test_dse_lms_update_ignores_error_magnitude(self):
        x = np.array([0.3, -1.2])
        a = dse_lms_adapt(NodeFilterState(weights=np.zeros(2)), x, 5.0, 0.2)
        b = dse_lms_adapt(NodeFilterState(weights=np.zeros(2)), x, 0.01, 0.2)
        assert np.array_equal(a.intermediate, b.intermediate)

    def test_dplms_adapt_defers_commit(self):
        state = NodeFilterState(weights=np.array([0.2, -0.1]), posterior_variance=0.5)
        out = dplms_adapt(state, np.array([1.0, 1.0]), d=1.0, mu=0.8)
        assert np.array_equal(out.weights, state.weights)
        assert not np.array_equal(out.intermediate, state.weights)
        assert out.posterior_variance < 0.5 + 1e-12


class TestCombination:
    def test_weighted_average_by_hand(self):
        weights = np.array(
            [
                [0.5, 0.0, 0.0],
                [0.3, 1.0, 0.0],
                [0.2, 0.0, 1.0],
            ]
        )
        from diffusion_lms.network import CombinationMatrix

        matrix = CombinationMatrix(weights=weights)
        phis = np.array([[1.0], [2.0], [3.0]])
        out = diffusion_combine(phis, matrix, 0)
        assert out[0] == pytest.approx(0.5 * 1 + 0.3 * 2 + 0.2 * 3, abs=1e-15)

    def test_combine_all_matches_per_node(self):
        rng = np.random.default_rng(3)
        topo = full_topology(4)
        matrix = uniform_combination(topo)
        phis = rng.standard_normal((4, 3))
        stacked = combine_all(phis, matrix)
        for node in range(4):
            np.testing.assert_allclose(
                stacked[node], diffusion_combine(phis, matrix, node), atol=1e-14
            )


class TestNetworkIteration:
    def _setup(self, n=6, m=4, seed=0):
        rng = np.random.default_rng(seed)
        from diffusion_lms.network import gen_random_topology

        topo = gen_random_topology(n, 0.5, seed=seed)
        matrix = uniform_combination(topo)
        states = initial_states(n, m, observation_noise_var=0.01)
        for s in states:
            s.weights = rng.standard_normal(m)
        x = rng.standard_normal((n, m))
        d = rng.standard_normal(n)
        return topo, matrix, states, x, d

    def test_processing_order_is_irrelevant(self):
        import copy

        topo, matrix, states, x, d = self._setup()
        forward = run_network_iteration(
            copy.deepcopy(states), DPLMS, topo, matrix, x, d, mu=0.3
        )
        shuffled = run_network_iteration(
            copy.deepcopy(states), DPLMS, topo, matrix, x, d, mu=0.3,
            order=[4, 0, 5, 2, 1, 3],
        )
        for a, b in zip(forward, shuffled):
            assert np.array_equal(a.weights, b.weights)
            assert a.posterior_variance == b.posterior_variance

    def test_hand_chained_scalar_network(self):
        # N=3 ring (complete for N=3), M=1, two iterations chained by hand
        topo = full_topology(3)
        matrix = uniform_combination(topo)
        states = initial_states(3, 1, observation_noise_var=0.1)
        x = np.array([[1.0], [2.0], [-1.0]])
        d = np.array([0.5, -0.2, 0.3])
        mu = 0.4

        w = [0.0, 0.0, 0.0]
        var = [1.0, 1.0, 1.0]
        phi = [0.0, 0.0, 0.0]
        for _ in range(2):
            for n in range(3):
                xn = x[n, 0]
                alpha = var[n] / (var[n] * xn * xn + 0.1)
                err = d[n] - xn * w[n]
                phi[n] = w[n] + mu * alpha * err * xn
                var[n] = max((1 - alpha * xn * xn) * var[n], VARIANCE_FLOOR)
            avg = sum(phi) / 3.0
            w = [avg, avg, avg]

        out = states
        for _ in range(2):
            out = run_network_iteration(out, DPLMS, topo, matrix, x, d, mu=mu)
        for n in range(3):
            assert out[n].weights[0] == pytest.approx(w[n], rel=1e-12)
            assert out[n].posterior_variance == pytest.approx(var[n], rel=1e-12)

    def test_vectorized_engine_matches_per_node(self):
        topo, matrix, states, x, d = self._setup(n=5, m=3, seed=7)
        net = NetworkState(
            weights=np.stack([s.weights for s in states]),
            variances=np.array([s.posterior_variance for s in states]),
        )
        hyper = FilterHyperparams.broadcast(5, 0.0, 0.01)
        for algorithm in SIMULATABLE:
            import copy

            per_node = run_network_iteration(
                copy.deepcopy(states), algorithm, topo, matrix, x, d, mu=0.3
            )
            phi, variances, _ = adapt_all(
                NetworkState(net.weights.copy(), net.variances.copy()),
                x, d, algorithm, 0.3, hyper=hyper,
            )
            combined = combine_all(phi, matrix)
            expected_w = np.stack([s.weights for s in per_node])
            np.testing.assert_allclose(combined, expected_w, atol=1e-12)
            if algorithm == DPLMS:
                expected_v = np.array([s.posterior_variance for s in per_node])
                np.testing.assert_allclose(variances, expected_v, atol=1e-14)

    def test_gain_ignores_measurements(self):
        # the probabilistic gain is driven by regressor energy alone
        rng = np.random.default_rng(9)
        x = rng.standard_normal((4, 3))
        hyper = FilterHyperparams.broadcast(4, 0.0, 0.01)
        state_a = NetworkState.zeros(4, 3)
        state_b = NetworkState.zeros(4, 3)
        _, var_a, alpha_a = adapt_all(state_a, x, np.zeros(4), DPLMS, 0.5, hyper=hyper)
        _, var_b, alpha_b = adapt_all(
            state_b, x, rng.standard_normal(4) * 100, DPLMS, 0.5, hyper=hyper
        )
        assert np.array_equal(alpha_a, alpha_b)
        assert np.array_equal(var_a, var_b)

    def test_frozen_gain_skips_variance_update(self):
        rng = np.random.default_rng(10)
        state = NetworkState.zeros(3, 2)
        pinned = np.array([0.1, 0.2, 0.3])
        phi, variances, alpha = adapt_all(
            state, rng.standard_normal((3, 2)), rng.standard_normal(3),
            DPLMS, 0.4, frozen_alpha=pinned,
        )
        assert np.array_equal(alpha, pinned)
        assert np.array_equal(variances, state.variances)

    def test_noiseless_projection(self):
        # zero assumed noise and tau=1 lands the estimate on the data plane
        rng = np.random.default_rng(11)
        for _ in range(1000):
            m = int(rng.integers(1, 9))
            x = rng.standard_normal(m)
            state = NodeFilterState(
                weights=rng.standard_normal(m),
                posterior_variance=float(rng.uniform(0.01, 5.0)),
            )
            d = float(rng.standard_normal())
            out = plms_step(state, x, d, tau=1.0)
            assert float(x @ out.weights) == pytest.approx(d, abs=1e-12)

    def test_published_only_algorithms_cannot_run(self):
        topo, matrix, states, x, d = self._setup(n=6, m=4)
        with pytest.raises(ValueError):
            run_network_iteration(states, "DLLAD", topo, matrix, x, d, mu=0.1)
        with pytest.raises(ValueError):
            adapt_all(NetworkState.zeros(6, 4), x, d, "DRVSSLMS", 0.1)


class TestAlgorithmNames:
    def test_normalization(self):
        assert normalize_algorithm("dplms") == DPLMS
        assert normalize_algorithm("dse_lms") == DSE_LMS
        assert normalize_algorithm("DSELMS") == DSE_LMS
        assert normalize_algorithm("dlms") == DLMS

    def test_known_sets(self):
        assert set(SIMULATABLE) <= set(COUNTABLE)
        assert "DLLAD" in COUNTABLE and "DRVSSLMS" in COUNTABLE


class TestOperationCounts:
    def test_counts_are_closed_form(self):
        for m, n in [(1, 1), (4, 3), (8, 5), (16, 20)]:
            c = op_counts(DPLMS, m, n)
            assert c.multiplications == 2 * m * n + m + n * m
            assert c.additions == (3 * m - 1) * n + (n - 1) * m
            assert (c.absolutes, c.signs, c.lower_bound) == (0, 0, False)

            c = op_counts(DSE_LMS, m, n)
            assert c.multiplications == (2 * m + 1) * n + m + n * m
            assert c.additions == (3 * m - 1) * n + (n - 1) * m
            assert (c.absolutes, c.signs) == (0, n)

            c = op_counts("DLLAD", m, n)
            assert c.multiplications == 2 * m * n + m + n * m
            assert c.absolutes == n

            c = op_counts("DRVSSLMS", m, n)
            assert c.multiplications == 2 * ((3 * m + 1) * n + m) + n * m
            assert c.additions == 2 * (3 * m - 1) * n + (n - 1) * m
            assert c.signs == n
            assert c.lower_bound

    def test_reference_network_size(self):
        assert tuple(op_counts(DPLMS, 16, 20))[:2] == (976, 1244)
        assert tuple(op_counts(DSE_LMS, 16, 20))[:2] == (996, 1244)
        assert tuple(op_counts("DRVSSLMS", 16, 20))[:2] == (2312, 2184)

    def test_unknown_algorithm_raises(self):
        with pytest.raises(ValueError):
            op_counts("NLMS", 4, 4)

    def test_instrumented_kernels_match_closed_form(self):
        rng = np.random.default_rng(12)
        from diffusion_lms.network import gen_random_topology

        for m, n in [(2, 3), (5, 4), (16, 20)]:
            topo = gen_random_topology(n, 0.5, seed=1)
            matrix = uniform_combination(topo)
            for algorithm in SIMULATABLE:
                counter = OpCounter()
                states = initial_states(n, m, observation_noise_var=0.01)
                iterations = 3
                for _ in range(iterations):
                    states = run_network_iteration(
                        states, algorithm, topo, matrix,
                        rng.standard_normal((n, m)), rng.standard_normal(n),
                        mu=0.1, counter=counter,
                    )
                expected = op_counts(algorithm, m, n)
                assert counter.multiplications == iterations * expected.multiplications
                assert counter.additions == iterations * expected.additions
                assert counter.absolutes == iterations * expected.absolutes
                assert counter.signs == iterations * expected.signs

    def test_vectorized_engine_charges_identically(self):
        rng = np.random.default_rng(13)
        n, m = 6, 5
        topo = full_topology(n)
        matrix = uniform_combination(topo)
        hyper = FilterHyperparams.broadcast(n, 0.0, 0.01)
        for algorithm in SIMULATABLE:
            counter = OpCounter()
            state = NetworkState.zeros(n, m)
            phi, variances, _ = adapt_all(
                state, rng.standard_normal((n, m)), rng.standard_normal(n),
                algorithm, 0.2, hyper=hyper, counter=counter,
            )
            combine_all(phi, matrix, counter=counter)
            expected = op_counts(algorithm, m, n)
            assert counter.as_tuple() == (
                expected.multiplications,
                expected.additions,
                expected.absolutes,
                expected.signs,
            )
