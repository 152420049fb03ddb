import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bmallows.partition import (AlphaRangeError, LogPartitionTable, build_table,
                                distance_distribution, evaluate_log_partition,
                                exact_log_partition, fit_log_partition, grid_convergence_check,
                                import_table, importance_sample_log_partition,
                                kendall_log_partition, reference_log_z)

from .oracles import brute_log_z, log_factorial


class TestKendallClosedForm:
    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    @pytest.mark.parametrize("alpha", [0.0, 0.3, 2.0, 15.0])
    def test_against_brute_force(self, n, alpha):
        assert kendall_log_partition(n, alpha) == pytest.approx(
            brute_log_z(n, alpha, "kendall"), rel=1e-12, abs=1e-14)

    def test_n2_by_hand(self):
        # Z = 1 + exp(-alpha / 2)
        assert kendall_log_partition(2, 1.0) == pytest.approx(math.log1p(math.exp(-0.5)),
                                                              rel=1e-15)

    def test_rejects_negative_alpha(self):
        with pytest.raises(ValueError):
            kendall_log_partition(4, -1.0)

    @given(st.integers(2, 60), st.floats(0.01, 50))
    def test_decreasing_in_alpha(self, n, alpha):
        assert kendall_log_partition(n, alpha * 1.1) < kendall_log_partition(n, alpha)


class TestEnumeration:
    @pytest.mark.parametrize("metric", ["footrule", "spearman", "kendall"])
    def test_histogram_counts_all_permutations(self, metric):
        for n in range(1, 8):
            assert distance_distribution(n, metric).sum() == math.factorial(n)

    def test_footrule_histogram_n3(self):
        # distances from (1,2,3): 0, 2, 2, 4, 4, 4
        np.testing.assert_array_equal(distance_distribution(3, "footrule"), [1, 0, 2, 0, 3])

    @pytest.mark.parametrize("metric", ["footrule", "spearman", "kendall"])
    def test_right_invariance_of_histogram(self, metric):
        np.testing.assert_array_equal(distance_distribution(5, metric, [3, 1, 5, 2, 4]),
                                      distance_distribution(5, metric))

    @pytest.mark.parametrize("metric", ["footrule", "spearman", "kendall"])
    def test_alpha_zero_is_log_factorial(self, metric):
        for n in range(1, 9):
            assert exact_log_partition(n, 0.0, metric) == pytest.approx(log_factorial(n),
                                                                        rel=1e-14)

    @pytest.mark.parametrize("metric", ["footrule", "spearman"])
    def test_against_brute_force(self, metric):
        for n in (3, 5):
            for alpha in (0.5, 4.0):
                assert exact_log_partition(n, alpha, metric) == pytest.approx(
                    brute_log_z(n, alpha, metric), rel=1e-12)

    def test_cap(self):
        with pytest.raises(ValueError, match="capped"):
            exact_log_partition(11, 1.0, "footrule")


class TestImportanceSampling:
    def test_alpha_zero_exact_and_zero_variance(self):
        est, se = importance_sample_log_partition(12, 0.0, "footrule", K=1000, seed=3)
        assert est == log_factorial(12)
        assert se == 0.0

    def test_kendall_refused(self):
        with pytest.raises(ValueError, match="per-element"):
            importance_sample_log_partition(5, 1.0, "kendall", K=10, seed=1)

    @pytest.mark.parametrize("metric", ["footrule", "spearman"])
    def test_all_exact_when_tail_covers_n(self, metric):
        est, se = importance_sample_log_partition(6, 2.0, metric, K=10, seed=1, exact_tail=6)
        assert est == pytest.approx(exact_log_partition(6, 2.0, metric), rel=1e-12)

    @pytest.mark.parametrize("metric", ["footrule", "spearman"])
    def test_plain_sampler_within_standard_errors(self, metric):
        # the plain sequential sampler without any variance reduction
        est, se = importance_sample_log_partition(6, 3.0, metric, K=40_000, seed=5,
                                                  exact_tail=1, qmc=False)
        assert abs(est - exact_log_partition(6, 3.0, metric)) < 4 * se

    def test_unbiased_on_linear_scale(self):
        # mean of Z estimates over many seeds approaches the exact Z
        exact = math.exp(exact_log_partition(5, 6.0, "footrule"))
        ests = [math.exp(importance_sample_log_partition(5, 6.0, "footrule", K=50, seed=s,
                                                         exact_tail=1, qmc=False)[0])
                for s in range(400)]
        sem = np.std(ests, ddof=1) / math.sqrt(len(ests))
        assert abs(np.mean(ests) - exact) < 4 * sem

    def test_independent_of_workers_and_batching_stream(self):
        a = importance_sample_log_partition(9, 2.0, "footrule", K=3000, seed=2, batch_size=1000)
        b = importance_sample_log_partition(9, 2.0, "footrule", K=3000, seed=2, batch_size=1000,
                                            workers=3)
        assert a == b

    def test_seed_changes_estimate(self):
        a = importance_sample_log_partition(12, 2.0, "footrule", K=2000, seed=1)
        b = importance_sample_log_partition(12, 2.0, "footrule", K=2000, seed=2)
        assert a != b

    def test_reduced_sampler_accurate(self):
        for alpha in (0.5, 5.0, 20.0):
            est, _ = importance_sample_log_partition(8, alpha, "footrule", K=5000, seed=1)
            assert est == pytest.approx(exact_log_partition(8, alpha, "footrule"), rel=5e-3)

    def test_argument_checks(self):
        with pytest.raises(ValueError):
            importance_sample_log_partition(5, 1.0, "footrule", K=0, seed=1)
        with pytest.raises(ValueError):
            importance_sample_log_partition(5, -1.0, "footrule", K=5, seed=1)


class TestFitAndTable:
    def test_polynomial_recovered(self):
        a = np.linspace(0, 5, 30)
        coef, resid = fit_log_partition(a, 2 - a + 0.25 * a ** 2, degree=3)
        np.testing.assert_allclose(coef, [2, -1, 0.25, 0], atol=1e-9)
        assert resid < 1e-9

    def test_anchor_pins_constant(self):
        a = np.linspace(0.1, 5, 30)
        coef, _ = fit_log_partition(a, np.exp(-a), degree=4, anchor=1.0)
        assert coef[0] == 1.0

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="grid points"):
            fit_log_partition([0, 1, 2], [1, 2, 3], degree=10)

    @pytest.mark.parametrize("metric", ["footrule", "spearman", "kendall"])
    def test_small_table_accuracy(self, metric):
        t = build_table(6, metric)
        for alpha in (0.0, 0.77, 3.3, 19.9):
            assert t(alpha) == pytest.approx(exact_log_partition(6, alpha, metric), abs=2e-3)
        assert t(0.0) == pytest.approx(log_factorial(6), rel=1e-14)

    def test_method_choice(self):
        assert build_table(5, "kendall").method == "closed_form"
        assert build_table(5, "footrule").method == "exact_enum"
        t = build_table(11, "footrule", K=500, alphas=np.linspace(0.1, 4, 20), degree=4)
        assert t.method == "importance_sampling" and t.std_error is not None

    def test_range_error(self):
        t = build_table(4, "footrule")
        with pytest.raises(AlphaRangeError):
            evaluate_log_partition(t, t.alpha_max + 0.1)
        with pytest.raises(AlphaRangeError):
            t(-0.5)

    def test_save_load_round_trip(self, tmp_path):
        t = build_table(11, "spearman", K=300, alphas=np.linspace(0.1, 3, 15), degree=4)
        t.save(tmp_path / "t.json")
        u = LogPartitionTable.load(tmp_path / "t.json")
        assert u == t
        np.testing.assert_array_equal(u.std_error, t.std_error)
        assert u(1.234) == t(1.234)

    def test_import_table(self):
        a = np.linspace(1, 10, 40)
        t = import_table(30, "footrule", a, 50 - 2 * a)
        assert t.method == "imported" and t.alpha_min == 1 and t(5.0) == pytest.approx(40)

    def test_bad_grid(self):
        with pytest.raises(ValueError, match="increasing"):
            LogPartitionTable(3, "footrule", "imported", np.array([1.0, 0.5]), np.zeros(2),
                              np.zeros(1), 0.0, 1.0, 0.0)

    def test_convergence_check(self):
        assert grid_convergence_check([1.0, 2.0], [1.1, 2.0]) == pytest.approx(0.1)
        with pytest.raises(ValueError):
            grid_convergence_check([1.0], [1.0, 2.0])

    def test_reference(self):
        assert reference_log_z(20, "footrule", [1.0]) is None
        np.testing.assert_allclose(reference_log_z(20, "kendall", [0.0]), [log_factorial(20)])
