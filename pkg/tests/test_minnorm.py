import numpy as np
import pytest

from mograd.minnorm import (
    FwConfig,
    combination_norm_sq,
    frank_wolfe_min_norm,
    fw_line_search,
    gram_matrix,
)


def random_psd(rng, T):
    A = rng.standard_normal((T, rng.integers(1, T + 3)))
    return gram_matrix(A)


class TestGramMatrix:
    def test_orthonormal_basis(self):
        M = gram_matrix([(1, 0), (0, 1)])
        assert np.array_equal(M, np.eye(2))

    def test_single_vector(self):
        assert np.array_equal(gram_matrix([(1, 0)]), np.array([[1.0]]))

    def test_hand_inner_products(self):
        M = gram_matrix([(2, 0), (1, 0)])
        assert np.array_equal(M, np.array([[4.0, 2.0], [2.0, 1.0]]))

    def test_exactly_symmetric(self):
        rng = np.random.default_rng(0)
        M = gram_matrix(rng.standard_normal((6, 40)))
        assert np.array_equal(M, M.T)

    def test_unit_vectors_have_unit_diagonal(self):
        rng = np.random.default_rng(1)
        G = rng.standard_normal((5, 9))
        U = G / np.linalg.norm(G, axis=1, keepdims=True)
        assert np.all(np.abs(np.diag(gram_matrix(U)) - 1.0) <= 1e-12)

    def test_positive_semidefinite_on_random_simplex_points(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            M = random_psd(rng, int(rng.integers(1, 7)))
            w = rng.dirichlet(np.ones(M.shape[0]))
            assert w @ M @ w >= -1e-12

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            gram_matrix([np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0])])


class TestCombinationNormSq:
    def test_orthonormal_half_half(self):
        assert combination_norm_sq(np.eye(2), np.array([0.5, 0.5])) == pytest.approx(0.5)

    def test_single(self):
        assert combination_norm_sq(np.array([[1.0]]), np.array([1.0])) == 1.0

    def test_antipodal_midpoint_is_zero(self):
        M = np.array([[1.0, -1.0], [-1.0, 1.0]])
        assert combination_norm_sq(M, np.array([0.5, 0.5])) == 0.0

    def test_tiny_negative_clamped(self):
        M = np.array([[1.0, -1.0], [-1.0, 1.0 - 1e-17]])
        assert combination_norm_sq(M, np.array([0.5, 0.5])) >= 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            combination_norm_sq(np.eye(2), np.ones(3) / 3)


class TestLineSearch:
    def test_orthonormal_from_vertex(self):
        # minimize (1-eta)^2 + eta^2 over eta
        assert fw_line_search(np.eye(2), np.array([1.0, 0.0]), 1) == pytest.approx(0.5)

    def test_already_optimal(self):
        assert fw_line_search(np.eye(2), np.array([0.5, 0.5]), 0) == 0.0

    def test_dominating_vertex_takes_full_step(self):
        M = np.array([[100.0, 10.0], [10.0, 1.0]])
        assert fw_line_search(M, np.array([1.0, 0.0]), 1) == 1.0

    def test_bad_target_rejected(self):
        with pytest.raises(ValueError):
            fw_line_search(np.eye(2), np.array([0.5, 0.5]), 2)

    def test_matches_grid_search_on_random_psd(self):
        # all three closed-form regimes must appear across the instances
        rng = np.random.default_rng(3)
        etas = np.arange(0.0, 1.0 + 1e-12, 1e-4)
        seen = {0.0: 0, 1.0: 0, -1.0: 0}
        for _ in range(200):
            T = int(rng.integers(2, 6))
            M = random_psd(rng, T)
            w = rng.dirichlet(np.ones(T))
            target = int(rng.integers(0, T))
            eta = fw_line_search(M, w, target)
            seen[eta if eta in (0.0, 1.0) else -1.0] += 1

            e = np.zeros(T)
            e[target] = 1.0
            pts = np.outer(1 - etas, w) + np.outer(etas, e)
            values = np.einsum("ij,jk,ik->i", pts, M, pts)
            eta_grid = etas[int(np.argmin(values))]
            assert abs(eta - eta_grid) <= 1e-3
        assert all(count > 0 for count in seen.values())


class TestFrankWolfe:
    def test_orthonormal_pair_splits_evenly(self):
        res = frank_wolfe_min_norm(gram_matrix([(1, 0), (0, 1)]))
        assert np.allclose(res.weights, [0.5, 0.5], atol=1e-12)

    def test_colinear_pair_picks_shorter(self):
        res = frank_wolfe_min_norm(gram_matrix([(10, 0), (1, 0)]))
        assert np.allclose(res.weights, [0.0, 1.0], atol=1e-12)

    def test_single_vector_immediate(self):
        res = frank_wolfe_min_norm(np.array([[1.0]]))
        assert np.array_equal(res.weights, np.array([1.0]))
        assert res.iterations == 0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            frank_wolfe_min_norm(np.empty((0, 0)))

    def test_weights_satisfy_simplex_invariants(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            M = random_psd(rng, int(rng.integers(1, 8)))
            w = frank_wolfe_min_norm(M).weights
            assert np.all(w >= 0)
            assert abs(w.sum() - 1.0) <= 1e-12

    def test_objective_never_increases(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            M = random_psd(rng, int(rng.integers(2, 8)))
            res = frank_wolfe_min_norm(M)
            assert np.all(np.diff(res.objectives) <= 1e-15)

    def test_two_vector_unit_pair_closed_form(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            u = rng.standard_normal(5)
            v = rng.standard_normal(5)
            u /= np.linalg.norm(u)
            v /= np.linalg.norm(v)
            res = frank_wolfe_min_norm(gram_matrix([u, v]))
            assert np.max(np.abs(res.weights - 0.5)) <= 1e-6

    def test_grid_oracle_t2_t3(self):
        rng = np.random.default_rng(7)
        b1 = np.arange(0.0, 1.0 + 1e-12, 1e-3)
        grid2 = np.stack([b1, 1 - b1], axis=1)
        grid3 = np.array(
            [
                (a, b, 1 - a - b)
                for a in np.arange(0.0, 1.0 + 1e-12, 1e-2)
                for b in np.arange(0.0, 1.0 - a + 1e-12, 1e-2)
            ]
        )
        for trial in range(30):
            T = 2 if trial % 2 == 0 else 3
            M = random_psd(rng, T)
            obj = combination_norm_sq(M, frank_wolfe_min_norm(M).weights)
            grid = grid2 if T == 2 else grid3
            grid_min = float(np.min(np.einsum("ij,jk,ik->i", grid, M, grid)))
            assert obj <= grid_min + 1e-4

    def test_deterministic_bitwise(self):
        rng = np.random.default_rng(8)
        M = random_psd(rng, 6)
        cfg = FwConfig(tolerance=1e-10, max_iters=500)
        a = frank_wolfe_min_norm(M, cfg)
        b = frank_wolfe_min_norm(M, cfg)
        assert np.array_equal(a.weights, b.weights)
        assert a.last_eta == b.last_eta
        assert a.iterations == b.iterations

    def test_exposes_last_step_size(self):
        res = frank_wolfe_min_norm(gram_matrix([(1, 0), (0, 1)]))
        assert res.last_eta <= FwConfig().tolerance


class TestFwConfig:
    def test_rejects_nonpositive_tolerance(self):
        with pytest.raises(ValueError):
            FwConfig(tolerance=0.0)

    def test_rejects_zero_iterations(self):
        with pytest.raises(ValueError):
            FwConfig(max_iters=0)
