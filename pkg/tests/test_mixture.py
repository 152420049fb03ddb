import math

import numpy as np
import pytest
from scipy import stats

from bmallows.mixture import (Classification, MixturePriors, best_label_accuracy, classify,
                              cluster_probabilities, gibbs_tau, gibbs_z, leave_one_out,
                              mh_alpha_cluster, mh_rho_cluster, run_mixture_chain,
                              within_cluster_ss)
from bmallows.partition import build_table, exact_log_partition
from bmallows.ranking import distances_to
from bmallows.rng import make_rng
from bmallows.sampler import Priors, Tuning, generate_by_perturbation, run_chain


def two_cluster_data(n=6, per=20, leaps=2, seed=1):
    a = generate_by_perturbation(np.arange(1, n + 1), per, leaps, 1, seed)
    b = generate_by_perturbation(np.arange(n, 0, -1), per, leaps, 1, seed + 1)
    return np.vstack([a, b]), np.repeat([0, 1], per)


class TestTau:
    def test_dirichlet_moments(self):
        z = np.array([0] * 7 + [1] * 2 + [2] * 11)
        psi = 2.0
        rng = make_rng(3)
        draws = np.array([gibbs_tau(z, psi, 3, rng) for _ in range(20_000)])
        a = psi + np.bincount(z, minlength=3)
        mean = a / a.sum()
        var = a * (a.sum() - a) / (a.sum() ** 2 * (a.sum() + 1))
        se = np.sqrt(var / len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - mean) < 3 * se)
        np.testing.assert_allclose(draws.var(axis=0), var, rtol=0.05)

    def test_empty_cluster(self):
        tau = gibbs_tau(np.zeros(5, dtype=int), 1.0, 3, make_rng(1))
        assert tau.shape == (3,) and tau.sum() == pytest.approx(1.0)


class TestLabels:
    def test_symmetric_micro_case(self):
        tab = build_table(3, "footrule")
        p = cluster_probabilities([1, 2, 3], [0.5, 0.5], [[2, 1, 3], [1, 3, 2]], [1.0, 1.0],
                                  tab, "footrule")
        np.testing.assert_allclose(p, [0.5, 0.5])

    def test_probabilities_by_hand(self):
        tab = build_table(3, "kendall")
        R = [1, 2, 3]
        rhos = [[1, 2, 3], [3, 2, 1]]
        alphas = [2.0, 1.0]
        tau = [0.3, 0.7]
        lw = [math.log(0.3) - tab(2.0), math.log(0.7) - tab(1.0) - 1.0 / 3 * 3]
        expect = np.exp(lw) / np.exp(lw).sum()
        np.testing.assert_allclose(cluster_probabilities(R, tau, rhos, alphas, tab, "kendall"),
                                   expect, rtol=1e-12)

    def test_gibbs_z_frequencies(self):
        tab = build_table(4, "footrule")
        args = ([1, 2, 3, 4], [0.4, 0.6], [[1, 2, 3, 4], [2, 1, 3, 4]], [1.0, 3.0], tab,
                "footrule")
        p = cluster_probabilities(*args)
        rng = make_rng(5)
        draws = np.array([gibbs_z(*args, rng) for _ in range(20_000)])
        assert stats.binomtest(int((draws == 1).sum()), 20_000, p[1]).pvalue > 0.01

    def test_mh_rho_cluster_uses_members_only(self):
        data = np.array([[1, 2, 3], [3, 2, 1]])
        rhos = np.array([[2, 1, 3], [1, 2, 3]])
        rng = make_rng(2)
        rho = rhos[0]
        for _ in range(300):
            rho, _ = mh_rho_cluster(0, data, [1, 0], np.array([rho, rhos[1]]), [50.0, 1.0],
                                    "footrule", 1, rng)
        np.testing.assert_array_equal(rho, [3, 2, 1])


class TestOrderedAlpha:
    @staticmethod
    def conditional_mean(lo, hi, n_obs, tot, n, lam, metric):
        a = np.linspace(lo, hi, 4001)
        lz = np.array([exact_log_partition(n, x, metric) for x in a])
        w = np.exp(-n_obs * lz - lam * a - a / n * tot)
        return np.trapezoid(a * w, a) / np.trapezoid(w, a)

    @pytest.mark.parametrize("c", [0, 1])
    def test_corrected_mode_matches_quadrature(self, c):
        # mass of alpha_1 sits away from zero, where the Beta(5, 2) proposal is thin
        data = np.array([[1, 2, 3, 4], [1, 2, 3, 4], [2, 1, 3, 4], [1, 2, 4, 3], [4, 3, 2, 1]])
        z = np.array([0, 0, 0, 1, 1])
        rhos = np.array([[1, 2, 3, 4], [1, 2, 3, 4]])
        tab = build_table(4, "footrule")
        alphas = np.array([1.5, 3.0])
        members = np.nonzero(z == c)[0]
        tot = distances_to(data[members], rhos[c], "footrule").sum()
        lo, hi = (0.0, 3.0) if c == 0 else (1.5, 20.0)
        expect = self.conditional_mean(lo, hi, members.size, tot, 4, 0.5, "footrule")
        rng = make_rng(10 + c)
        draws = []
        for _ in range(40_000):
            alphas, code = mh_alpha_cluster(c, data, z, rhos, alphas, 0.5, tab, "footrule", rng,
                                            corrected=True)
            assert alphas[0] < alphas[1]
            draws.append(alphas[c])
        assert np.mean(draws[2000:]) == pytest.approx(expect, rel=0.03)

    def test_width_skip(self):
        tab = build_table(3, "footrule")
        alphas, code = mh_alpha_cluster(0, [[1, 2, 3]], [0], [[1, 2, 3], [1, 2, 3]],
                                        [1e-9, 2e-9], 0.1, tab, "footrule", make_rng(0))
        assert code == -3

    def test_single_cluster_uses_gaussian_walk(self):
        tab = build_table(3, "footrule")
        alphas, code = mh_alpha_cluster(0, [[1, 2, 3]], [0], [[1, 2, 3]], [0.0], 0.1, tab,
                                        "footrule", make_rng(0), sigma=10.0)
        assert code in (-1, 0, 1)


class TestMixtureChain:
    def test_recovery_two_clusters(self):
        data, truth = two_cluster_data()
        s = run_mixture_chain(data, 2, "footrule", MixturePriors(1.0, 2.0),
                              Tuning(iterations=10_000, burn_in=2000, seed=1),
                              build_table(6, "footrule"))
        assert best_label_accuracy(s.map_labels(), truth, 2) == 1.0
        truth_centers = np.array([np.arange(1, 7), np.arange(6, 0, -1)])
        d = np.array([[np.abs(c - t).sum() for t in truth_centers] for c in s.map_centers()])
        assert d.min(axis=1).max() <= 2 and set(d.argmin(axis=1)) == {0, 1}
        assert np.all(np.diff(s.alpha, axis=1) > 0)
        np.testing.assert_allclose(s.tau.sum(axis=1), 1.0)

    @pytest.mark.parametrize("mode", ["free", "shared"])
    def test_modes(self, mode):
        data, truth = two_cluster_data(seed=3)
        s = run_mixture_chain(data, 2, "footrule", MixturePriors(1.0, 2.0),
                              Tuning(iterations=6000, burn_in=1000, seed=2),
                              build_table(6, "footrule"), alpha_mode=mode)
        if mode == "shared":
            np.testing.assert_array_equal(s.alpha[:, 0], s.alpha[:, 1])
        assert best_label_accuracy(s.map_labels(), truth, 2) == 1.0

    def test_bad_mode(self):
        with pytest.raises(ValueError, match="alpha_mode"):
            run_mixture_chain([[1, 2, 3]], 1, "footrule", table=build_table(3, "footrule"),
                              alpha_mode="loose")

    def test_one_cluster_matches_single_population(self):
        data = generate_by_perturbation(np.arange(1, 6), 12, 3, 1, 3)
        tab = build_table(5, "footrule")
        t = Tuning(iterations=60_000, burn_in=2000, thinning=50, sigma_alpha=0.5)
        a = run_mixture_chain(data, 1, "footrule", MixturePriors(1.0), t, tab).alpha[:, 0]
        b = run_chain(data, "footrule", Priors(1.0), t, tab, stream=5).alpha
        assert stats.ks_2samp(a, b).pvalue > 0.01

    def test_within_cluster_ss_drops_with_right_c(self):
        data, _ = two_cluster_data(seed=5)
        tab = build_table(6, "footrule")
        t = Tuning(iterations=5000, burn_in=1000, seed=1)
        ss = [within_cluster_ss(run_mixture_chain(data, C, "footrule", MixturePriors(1.0), t,
                                                  tab), data).mean() for C in (1, 2)]
        assert ss[1] < 0.5 * ss[0]

    def test_deterministic(self):
        data, _ = two_cluster_data()
        tab = build_table(6, "footrule")
        t = Tuning(iterations=2000, burn_in=100, seed=9)
        a = run_mixture_chain(data, 2, "footrule", table=tab, tuning=t)
        b = run_mixture_chain(data, 2, "footrule", table=tab, tuning=t)
        np.testing.assert_array_equal(a.z, b.z)
        np.testing.assert_array_equal(a.alpha, b.alpha)


class TestClassification:
    def test_generated_classes_recovered(self):
        data, truth = two_cluster_data(per=15, seed=7)
        train = np.r_[0:10, 15:25]
        test = np.r_[10:15, 25:30]
        res = classify(data[train], truth[train], data[test], "footrule", MixturePriors(1.0),
                       Tuning(iterations=6000, burn_in=1000, seed=3), build_table(6, "footrule"))
        assert isinstance(res, Classification)
        np.testing.assert_array_equal(res.map_labels, truth[test])
        np.testing.assert_allclose(res.probabilities.sum(axis=1), 1.0)
        # training labels never move
        assert np.all(res.samples.z[:, :20] == truth[train])

    def test_label_count_checked(self):
        with pytest.raises(ValueError, match="one label"):
            classify([[1, 2, 3]], [0, 1], [[1, 2, 3]], "footrule",
                     table=build_table(3, "footrule"))

    def test_leave_one_out(self):
        data, truth = two_cluster_data(per=6, seed=11)
        pred = leave_one_out(list(data), truth, "footrule", MixturePriors(1.0),
                             Tuning(iterations=2000, burn_in=500, seed=1),
                             build_table(6, "footrule"))
        assert np.mean(pred == truth) >= 0.9

    def test_best_label_accuracy(self):
        assert best_label_accuracy([1, 1, 0], [0, 0, 1], 2) == 1.0
        assert best_label_accuracy([0, 1, 2], [0, 0, 0], 3) == pytest.approx(1 / 3)
