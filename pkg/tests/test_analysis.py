"""Tests for MSD accounting, the mean-error recursion, and stability bounds."""

import numpy as np
import pytest

from diffusion_lms.analysis import (
    MeanRecursionModel,
    MsdCurve,
    mean_error_matrix,
    msd,
    spectral_radius,
    stability_bound,
)


class TestMsd:
    def test_single_node_by_hand(self):
        true = np.array([1.0, 0.0])
        est = np.array([[0.7, 0.4]])
        # (0.3^2 + 0.4^2) = 0.25
        assert msd(true, est) == pytest.approx(0.25, abs=1e-15)

    def test_network_average(self):
        true = np.array([1.0, 0.0])
        est = np.array([[0.7, 0.4], [1.3, -0.4], [1.0, 0.0]])
        assert msd(true, est) == pytest.approx((0.25 + 0.25 + 0.0) / 3, abs=1e-15)

    def test_one_dimensional_estimate(self):
        assert msd(np.array([2.0]), np.array([1.0])) == pytest.approx(1.0)

    def test_curve_db_conversion(self):
        curve = MsdCurve(values=np.array([1.0, 0.01, 1e-6]))
        np.testing.assert_allclose(curve.values_db, [0.0, -20.0, -60.0], atol=1e-12)

    def test_curve_steady_state(self):
        values = np.concatenate([np.ones(100), np.full(50, 0.01)])
        curve = MsdCurve(values=values)
        assert curve.steady_state_db(tail=50) == pytest.approx(-20.0, abs=1e-12)

    def test_curve_csv_round_trip(self, tmp_path):
        values = np.array([1.0, 0.123456789012345678, 3.7e-11])
        curve = MsdCurve(values=values)
        path = tmp_path / "curve.csv"
        curve.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "iteration,msd_linear,msd_db"
        assert len(lines) == 4
        for i, line in enumerate(lines[1:]):
            idx, linear, db = line.split(",")
            assert int(idx) == i
            # shortest-repr floats restore the exact binary value
            assert float(linear) == values[i]
            assert float(db) == 10.0 * np.log10(values[i])


class TestSpectralRadius:
    def test_diagonal(self):
        assert spectral_radius(np.diag([3.0, -5.0, 2.0])) == pytest.approx(5.0, rel=1e-9)

    def test_zero_matrix(self):
        assert spectral_radius(np.zeros((4, 4))) == 0.0

    def test_matches_characteristic_roots(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            a = rng.standard_normal((6, 6))
            a = a + a.T  # symmetric: power iteration converges cleanly
            expected = np.max(np.abs(np.roots(np.poly(a))))
            assert spectral_radius(a) == pytest.approx(expected, rel=1e-8)

    def test_rotation_does_not_converge(self):
        # a pure rotation has a complex dominant pair; the real iteration
        # cannot settle and must say so rather than return garbage
        rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
        with pytest.raises(RuntimeError):
            spectral_radius(rotation)

    def test_iteration_cap_respected(self):
        matrix = np.array([[1.0, 1e-9], [0.0, 0.999]])
        with pytest.raises(RuntimeError):
            spectral_radius(matrix, max_iterations=1)


def triangle_weights():
    return np.full((3, 3), 1 / 3)


class TestMeanErrorMatrix:
    def test_scalar_network_closed_form(self):
        # N=1, M=1: the whole recursion collapses to 1 - mu*alpha*r
        model = MeanRecursionModel(
            combination=np.array([[1.0]]),
            adaptation_weights=np.array([[1.0]]),
            step_size=0.3,
            alpha=np.array([0.5]),
            input_covariances=np.array([[[2.0]]]),
        )
        b = mean_error_matrix(model)
        assert b.shape == (1, 1)
        assert b[0, 0] == pytest.approx(1.0 - 0.3 * 0.5 * 2.0, abs=1e-15)

    def test_block_structure_matches_elementwise_assembly(self):
        rng = np.random.default_rng(8)
        n, m = 3, 2
        a = triangle_weights()
        c = np.eye(n)
        alpha = rng.uniform(0.1, 1.0, size=n)
        covs = []
        for _ in range(n):
            g = rng.standard_normal((m, m))
            covs.append(g @ g.T + m * np.eye(m))
        covs = np.stack(covs)
        mu = 0.07
        model = MeanRecursionModel(a, c, mu, alpha, covs)
        b = mean_error_matrix(model)

        # independent assembly from the definition, loop by loop
        expected = np.zeros((n * m, n * m))
        for node in range(n):
            d_node = np.zeros((m, m))
            for l in range(n):
                d_node += alpha[l] * c[l, node] * covs[l]
            block = np.eye(m) - mu * d_node
            for l in range(n):
                expected[l * m:(l + 1) * m, node * m:(node + 1) * m] += (
                    a[node, l] * block
                )
        # the combination acts on stacked blocks: row-block l of the result
        # collects a[n->l] times the adapted block of node n
        assert b.shape == (n * m, n * m)
        np.testing.assert_allclose(b, expected, atol=1e-13)

    def test_update_blocks_with_shared_measurements(self):
        rng = np.random.default_rng(15)
        n, m = 4, 3
        c = rng.uniform(0.0, 1.0, size=(n, n))
        c /= c.sum(axis=0, keepdims=True)
        alpha = rng.uniform(0.05, 0.5, size=n)
        covs = np.stack([np.diag(rng.uniform(0.5, 2.0, size=m)) for _ in range(n)])
        model = MeanRecursionModel(np.eye(n), c, 0.1, alpha, covs)
        blocks = model.update_blocks()
        for node in range(n):
            expected = sum(alpha[l] * c[l, node] * covs[l] for l in range(n))
            np.testing.assert_allclose(blocks[node], expected, atol=1e-14)


class TestStabilityBound:
    def test_uniform_sharing_triangle(self):
        # white inputs 0.5/1.0/1.5, unit gains, uniform sharing: every
        # aggregate block is the identity, so the bound is exactly 2
        covs = np.stack([v * np.eye(2) for v in (0.5, 1.0, 1.5)])
        bound = stability_bound(np.ones(3), triangle_weights(), covs)
        assert bound == pytest.approx(2.0, rel=1e-9)

    def test_own_data_only(self):
        # without sharing the busiest node rules: 2 / 1.5
        covs = np.stack([v * np.eye(2) for v in (0.5, 1.0, 1.5)])
        bound = stability_bound(np.ones(3), np.eye(3), covs)
        assert bound == pytest.approx(2.0 / 1.5, rel=1e-9)

    def test_literal_diagonal_variant(self):
        # literal reading sums every node's covariance weighted by the
        # sharing matrix diagonal; with the identity that is the full sum
        covs = np.stack([v * np.eye(2) for v in (0.5, 1.0, 1.5)])
        bound = stability_bound(
            np.ones(3), np.eye(3), covs, literal_diagonal=True
        )
        assert bound == pytest.approx(2.0 / 3.0, rel=1e-9)

    def test_gain_scaling(self):
        covs = np.stack([np.eye(2) for _ in range(3)])
        full = stability_bound(np.ones(3), np.eye(3), covs)
        halved = stability_bound(np.full(3, 0.5), np.eye(3), covs)
        assert halved == pytest.approx(2 * full, rel=1e-9)

    def test_near_tied_leading_eigenvalues(self):
        # regression: per-tap variance draws produce diagonal covariances
        # whose top two entries nearly tie, which stalled the old
        # power-iteration path; the bound is still exactly 2 / max entry
        covs = np.stack(
            [
                np.diag([1.0, 1.0 - 1e-6, 0.5, 0.4]),
                np.diag([0.9, 0.9 - 1e-9, 0.9 - 2e-9, 0.3]),
            ]
        )
        bound = stability_bound(np.ones(2), np.eye(2), covs)
        assert bound == pytest.approx(2.0, rel=1e-12)
        literal = stability_bound(
            np.ones(2), np.eye(2), covs, literal_diagonal=True
        )
        assert literal == pytest.approx(2.0 / 1.9, rel=1e-12)

    def test_validation(self):
        covs = np.stack([np.eye(2) for _ in range(2)])
        with pytest.raises(ValueError):
            stability_bound(np.array([1.0, -1.0]), np.eye(2), covs)
        lopsided = covs.copy()
        lopsided[0, 0, 1] = 0.5  # asymmetric
        with pytest.raises(ValueError):
            stability_bound(np.ones(2), np.eye(2), lopsided)
        indefinite = np.stack([np.diag([1.0, -0.5]), np.eye(2)])
        with pytest.raises(ValueError):
            stability_bound(np.ones(2), np.eye(2), indefinite)

    def test_predicted_contraction_inside_bound(self):
        # doubly stochastic combining on ring and complete graphs keeps the
        # recursion contractive for any step inside the bound
        rng = np.random.default_rng(20)
        for n, m, complete in [(3, 1, True), (4, 2, False), (5, 4, False)]:
            if complete:
                a = np.full((n, n), 1 / n)
            else:
                a = np.zeros((n, n))
                for i in range(n):
                    a[i, i] = a[i, (i + 1) % n] = a[i, (i - 1) % n] = 1 / 3
            alpha = rng.uniform(0.1, 2.0, size=n)
            covs = np.stack(
                [rng.uniform(0.2, 3.0) * np.eye(m) for _ in range(n)]
            )
            c = np.eye(n)
            bound = stability_bound(alpha, c, covs)
            model = MeanRecursionModel(a, c, 0.9 * bound, alpha, covs)
            assert spectral_radius(mean_error_matrix(model)) < 1.0 - 1e-10
