import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectradiag import (
    correlation_ci,
    hierarchical_cluster,
    mean_pairwise_hamming,
    pairwise_correlation,
    partial_correlation,
    redundancy_flags,
    score_matrix,
    stratified_correlation,
    tetrachoric,
    tetrachoric_ed,
)
from spectradiag.association import save_corr_csv


class TestPairwise:
    def test_affine_pearson(self):
        x = np.arange(10.0)
        c = pairwise_correlation(np.vstack([x, 2 * x + 1]), method="pearson")
        assert math.isclose(c.values[0, 1], 1.0)

    def test_monotone_nonlinear_spearman(self):
        x = np.linspace(-2, 2, 15)
        c_s = pairwise_correlation(np.vstack([x, x**3]), method="spearman")
        c_p = pairwise_correlation(np.vstack([x, x**3]), method="pearson")
        assert math.isclose(c_s.values[0, 1], 1.0)
        assert c_p.values[0, 1] < 1.0

    def test_full_reversal_kendall(self):
        c = pairwise_correlation(
            np.array([[1.0, 2, 3], [3.0, 2, 1]]), method="kendall"
        )
        assert math.isclose(c.values[0, 1], -1.0)

    def test_zero_variance_flagged(self):
        c = pairwise_correlation(np.array([[1.0, 1, 1], [1.0, 2, 3]]), ids=["flat", "up"])
        assert c.degenerate_ids == ("flat",)
        assert np.isnan(c.values[0, 1])
        assert c.has_undefined

    def test_too_few_observations(self):
        with pytest.raises(ValueError):
            pairwise_correlation(np.array([[1.0, 2], [2.0, 1]]))

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(-50, 50), min_size=5, max_size=20, unique=True))
    def test_rank_methods_invariant_under_monotone_transform(self, xs):
        x = np.asarray(xs, dtype=float)
        rng = np.random.default_rng(0)
        y = rng.permutation(x)
        for method in ("spearman", "kendall"):
            base = pairwise_correlation(np.vstack([x, y]), method=method).values[0, 1]
            warp_x = pairwise_correlation(
                np.vstack([x**3, y]), method=method
            ).values[0, 1]
            warp_y = pairwise_correlation(
                np.vstack([x, 2.0 * y + 5.0]), method=method
            ).values[0, 1]
            assert math.isclose(base, warp_x, abs_tol=1e-12)
            assert math.isclose(base, warp_y, abs_tol=1e-12)


class TestCorrelationCi:
    def test_perfect_line_collapses(self):
        x = np.linspace(0, 1, 50)
        low, high = correlation_ci(x, x, iterations=200, seed=0)
        assert low > 0.999 and high == 1.0

    def test_independent_noise_contains_zero(self):
        hits = 0
        for seed in range(100, 120):
            rng = np.random.default_rng(seed)
            x, y = rng.standard_normal((2, 200))
            low, high = correlation_ci(x, y, iterations=300, seed=seed)
            hits += low <= 0.0 <= high
        assert hits >= 18

    def test_seed_reproducible(self):
        rng = np.random.default_rng(1)
        x, y = rng.standard_normal((2, 40))
        assert correlation_ci(x, y, iterations=100, seed=7) == correlation_ci(
            x, y, iterations=100, seed=7
        )


class TestPartial:
    def test_independent_confound_preserves_raw(self):
        rng = np.random.default_rng(0)
        x, y, z = rng.standard_normal((3, 500))
        x = x + 0.5 * y
        raw = pairwise_correlation(np.vstack([x, y])).values[0, 1]
        part = partial_correlation(x, y, z)
        assert abs(raw - part) < 0.05

    def test_perfect_confounder_vanishes(self):
        rng = np.random.default_rng(1)
        z = rng.standard_normal(100)
        part = partial_correlation(z, z, z + 0.0)
        assert part == 0.0

    def test_shared_confounder_drops(self):
        rng = np.random.default_rng(2)
        z = rng.standard_normal(400)
        x = z + 0.05 * rng.standard_normal(400)
        y = z + 0.05 * rng.standard_normal(400)
        raw = pairwise_correlation(np.vstack([x, y])).values[0, 1]
        part = partial_correlation(x, y, z)
        assert raw > 0.9
        assert abs(part) < 0.3

    def test_exact_negation(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(50)
        z = rng.standard_normal(50)
        assert math.isclose(partial_correlation(x, -x, z), -1.0, abs_tol=1e-9)

    def test_constant_z_rejected(self):
        x = np.arange(12.0)
        with pytest.raises(ValueError, match="constant"):
            partial_correlation(x, x, np.ones(12))


class TestStratified:
    def test_simpson_reversal(self):
        rng = np.random.default_rng(4)
        n = 120
        # two anti-correlated clouds shifted so the pooled trend is positive
        x1 = rng.standard_normal(n)
        y1 = -x1 + 0.2 * rng.standard_normal(n)
        x2 = x1 + 6.0
        y2 = -x2 + 12.0 + 0.2 * rng.standard_normal(n)
        x = np.concatenate([x1, x2])
        y = np.concatenate([y1, y2])
        strata = np.array(["a"] * n + ["b"] * n)
        per = stratified_correlation(x, y, strata)
        pooled = pairwise_correlation(np.vstack([x, y])).values[0, 1]
        assert pooled > 0.3
        assert all(rho < -0.8 for (_, _, rho, _) in per)

    def test_single_stratum_equals_pairwise(self):
        rng = np.random.default_rng(5)
        x, y = rng.standard_normal((2, 30))
        per = stratified_correlation(x, y, np.zeros(30, dtype=int))
        pooled = pairwise_correlation(np.vstack([x, y])).values[0, 1]
        assert math.isclose(per[0][2], pooled, abs_tol=1e-12)

    def test_small_group_flagged(self):
        rng = np.random.default_rng(6)
        x, y = rng.standard_normal((2, 8))
        strata = np.array(["s"] * 4 + ["l"] * 4)
        per = stratified_correlation(x, y, strata)
        assert all(not reliable for (_, n, _, reliable) in per)

    def test_empty_level_omitted_with_warning(self):
        rng = np.random.default_rng(7)
        x, y = rng.standard_normal((2, 12))
        strata = np.array(["a"] * 12)
        with pytest.warns(UserWarning, match="empty"):
            per = stratified_correlation(x, y, strata, levels=["a", "ghost"])
        assert [rec[0] for rec in per] == ["a"]


class TestTetrachoric:
    def test_independence(self):
        assert tetrachoric([[25, 25], [25, 25]]) == 0.0

    def test_zero_threshold_oracle(self):
        # equal marginals 1/2: rho = sin(2 pi (p11 - 1/4))
        assert abs(tetrachoric([[12, 6], [6, 12]]) - 0.5) < 1e-3
        assert abs(tetrachoric([[9, 9], [9, 9]]) - 0.0) < 1e-3

    def test_zero_marginal_rejected(self):
        with pytest.raises(ValueError, match="marginal"):
            tetrachoric([[0, 0], [10, 10]])

    def test_zero_cell_clamps(self):
        assert tetrachoric([[10, 0], [5, 10]]) == 0.999
        assert tetrachoric([[0, 10], [10, 5]]) == -0.999

    @pytest.mark.parametrize("true_rho", [-0.5, 0.0, 0.5, 0.9])
    def test_recovery_from_thresholded_normals(self, true_rho):
        rng = np.random.default_rng(42)
        z = rng.multivariate_normal([0, 0], [[1, true_rho], [true_rho, 1]], size=100_000)
        x = z[:, 0] > 0.4
        y = z[:, 1] > -0.3
        table = [
            [np.sum(x & y), np.sum(x & ~y)],
            [np.sum(~x & y), np.sum(~x & ~y)],
        ]
        assert abs(tetrachoric(table) - true_rho) < 0.05


class TestTetrachoricEd:
    def test_needs_three_models(self):
        m = score_matrix(["t1", "t2"], ["a", "b"], [[1, 0], [0, 1]])
        with pytest.raises(ValueError):
            tetrachoric_ed(m)

    def test_identical_columns_collapse_to_one(self):
        col = np.array([1.0, 0, 1, 0, 1])
        m = score_matrix(
            [f"t{i}" for i in range(5)], ["a", "b", "c"], np.column_stack([col] * 3)
        )
        # the +/-0.999 zero-cell clamp keeps this marginally above exactly 1
        assert math.isclose(tetrachoric_ed(m), 1.0, abs_tol=0.01)

    def test_independent_columns_stay_high(self):
        rng = np.random.default_rng(0)
        vals = (rng.random((400, 8)) < 0.5).astype(float)
        m = score_matrix(
            [f"t{i}" for i in range(400)], [f"m{j}" for j in range(8)], vals
        )
        assert tetrachoric_ed(m) > 5.0

    def test_below_pearson_ed_on_irt(self, irt_k5):
        sub = irt_k5.subset_models(irt_k5.model_ids[:40])
        ed_t = tetrachoric_ed(sub)
        # model-side Pearson ED for the same axis convention
        from spectradiag import ed_of_correlation

        pearson_model_corr = np.corrcoef(sub.dense_values(), rowvar=False)
        ed_p = ed_of_correlation(pearson_model_corr)
        assert ed_t < ed_p
        assert 0.2 < ed_t / ed_p < 1.0


class TestClustering:
    def test_identical_series_merge_first_at_zero(self):
        base = np.array([1.0, 2, 3, 4, 1])
        rows = np.vstack([base, base, base[::-1] * 0.5])
        c = pairwise_correlation(rows, ids=["a", "b", "c"], method="pearson")
        g = hierarchical_cluster(c, n_groups=2)
        assert g.merges[0][0] == ("a",) and g.merges[0][1] == ("b",)
        assert abs(g.merges[0][2]) < 1e-12
        assert ("a", "b") in g.groups

    def test_cut_at_zero_gives_singletons(self):
        rng = np.random.default_rng(1)
        rows = rng.standard_normal((4, 12))
        c = pairwise_correlation(rows, method="pearson")
        g = hierarchical_cluster(c, cut_height=0.0)
        assert len(g.groups) == 4
        assert all(len(grp) == 1 for grp in g.groups)

    def test_block_structure_recovered(self):
        rng = np.random.default_rng(2)
        f1, f2 = rng.standard_normal((2, 60))
        rows = np.vstack(
            [
                f1 + 0.2 * rng.standard_normal(60),
                f1 + 0.2 * rng.standard_normal(60),
                f2 + 0.2 * rng.standard_normal(60),
                f2 + 0.2 * rng.standard_normal(60),
            ]
        )
        c = pairwise_correlation(rows, ids=["a1", "a2", "b1", "b2"], method="pearson")
        g = hierarchical_cluster(c, n_groups=2)
        assert sorted(g.groups) == [("a1", "a2"), ("b1", "b2")]

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        rows = rng.standard_normal((5, 20))
        ids = ["v", "w", "x", "y", "z"]
        c1 = pairwise_correlation(rows, ids=ids, method="pearson")
        perm = [3, 0, 4, 1, 2]
        c2 = pairwise_correlation(rows[perm], ids=[ids[i] for i in perm], method="pearson")
        g1 = hierarchical_cluster(c1, n_groups=2)
        g2 = hierarchical_cluster(c2, n_groups=2)
        assert g1.groups == g2.groups
        assert [m[:2] for m in g1.merges] == [m[:2] for m in g2.merges]

    def test_undefined_entries_rejected(self):
        c = pairwise_correlation(np.array([[1.0, 1, 1], [0.0, 1, 2]]))
        with pytest.raises(ValueError, match="undefined"):
            hierarchical_cluster(c, n_groups=1)

    def test_merge_heights_nondecreasing(self):
        rng = np.random.default_rng(8)
        rows = rng.standard_normal((7, 25))
        c = pairwise_correlation(rows, method="pearson")
        g = hierarchical_cluster(c, n_groups=1)
        heights = [h for _, _, h in g.merges]
        assert heights == sorted(heights)


class TestRedundancyFlags:
    def test_threshold_logic(self):
        ids = ["a", "b", "c"]
        vals = np.array(
            [
                [1.0, 0.96, -0.64],
                [0.96, 1.0, 0.75],
                [-0.64, 0.75, 1.0],
            ]
        )
        c = pairwise_correlation(np.eye(3), ids=ids)  # placeholder, rebuilt below
        from spectradiag import CorrMatrix

        c = CorrMatrix(tuple(ids), vals, "spearman")
        flags = redundancy_flags(c)
        assert [(p[0], p[1]) for p in flags.redundant] == [("a", "b")]
        assert [(p[0], p[1]) for p in flags.vet_fail] == [("a", "b"), ("b", "c")]
        assert [(p[0], p[1]) for p in flags.complementary] == [("a", "c")]


class TestHamming:
    def test_identical_and_complementary(self):
        col = np.array([1.0, 0, 1])
        same = score_matrix(["t1", "t2", "t3"], ["a", "b"], np.column_stack([col, col]))
        assert mean_pairwise_hamming(same) == 0.0
        flip = score_matrix(
            ["t1", "t2", "t3"], ["a", "b"], np.column_stack([col, 1 - col])
        )
        assert mean_pairwise_hamming(flip) == 1.0

    def test_hand_count(self):
        m = score_matrix(
            ["t1", "t2", "t3"], ["a", "b"], np.array([[0.0, 1], [1, 1], [1, 0]])
        )
        assert math.isclose(mean_pairwise_hamming(m), 2 / 3)


class TestSerialization:
    def test_square_csv(self, tmp_path):
        rows = np.random.default_rng(0).standard_normal((3, 10))
        c = pairwise_correlation(rows, ids=["x", "y", "z"])
        path = tmp_path / "corr.csv"
        save_corr_csv(c, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "id,x,y,z"
        assert len(lines) == 4
