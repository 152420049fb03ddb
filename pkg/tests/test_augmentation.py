import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from bmallows import _kernels as K
from bmallows.augmentation import (MISSING, PartialRanking, TieSet, constrained_leap,
                                   gibbs_augment_partial, infer_n, init_fill_in, pack,
                                   preference_augment, random_linear_extension, resample_ties,
                                   run_chain_partial, truncate_top, validate_augmented)
from bmallows.partition import build_table, exact_log_partition, import_table
from bmallows.ranking import is_consistent, transitive_closure
from bmallows.rng import make_rng
from bmallows.sampler import Priors, Tuning, run_chain

from .oracles import NAIVE, all_perms, empirical, tv


def partial_rankings(max_n=8):
    @st.composite
    def build(draw):
        n = draw(st.integers(2, max_n))
        full = np.array(draw(st.permutations(list(range(1, n + 1)))))
        mask = np.array(draw(st.lists(st.booleans(), min_size=n, max_size=n)))
        return PartialRanking(np.where(mask, MISSING, full))
    return build()


class TestPartialRanking:
    def test_sets(self):
        p = PartialRanking.from_values([2, None, 1, float("nan")])
        np.testing.assert_array_equal(p.observed_items, [0, 2])
        np.testing.assert_array_equal(p.missing_items, [1, 3])
        np.testing.assert_array_equal(p.unused_ranks, [3, 4])
        assert not p.is_complete()

    def test_all_missing_is_fully_latent(self):
        p = PartialRanking.from_values([None] * 4)
        assert p.missing_items.size == 4 and p.unused_ranks.size == 4

    def test_validation(self):
        with pytest.raises(ValueError, match="duplicate"):
            PartialRanking(np.array([1, 1, 0]))
        with pytest.raises(ValueError, match="1..3"):
            PartialRanking(np.array([4, 0, 0]))

    def test_admits(self):
        p = PartialRanking(np.array([0, 1, 0]))
        assert p.admits([2, 1, 3]) and not p.admits([1, 2, 3])

    @given(partial_rankings(), st.integers(0, 2**32 - 1))
    def test_fill_in_is_consistent(self, p, seed):
        assert p.admits(init_fill_in(p, make_rng(seed)))

    @given(partial_rankings(), st.integers(0, 2**32 - 1))
    def test_gibbs_keeps_observed(self, p, seed):
        rng = make_rng(seed)
        row = init_fill_in(p, rng)
        rho = np.arange(1, p.n + 1)
        for _ in range(5):
            row = gibbs_augment_partial(row, p, 1.0, rho, "footrule", rng)
            assert p.admits(row)

    def test_gibbs_rejects_inconsistent_start(self):
        p = PartialRanking(np.array([1, 0, 0]))
        with pytest.raises(ValueError):
            gibbs_augment_partial([2, 1, 3], p, 1.0, [1, 2, 3], "footrule", make_rng(0))

    def test_gibbs_stationary_distribution(self):
        # fill-ins of missing items follow exp(-alpha/n d(R, rho)) restricted to the set
        p = PartialRanking(np.array([1, 0, 0, 0, 0]))
        rho = np.array([2, 1, 3, 5, 4])
        alpha = 3.0
        rng = make_rng(7)
        row = init_fill_in(p, rng)
        draws = []
        for _ in range(60_000):
            row = gibbs_augment_partial(row, p, alpha, rho, "kendall", rng)
            draws.append(row.copy())
        P = np.array([q for q in all_perms(5) if q[0] == 1])
        w = np.exp(-alpha / 5 * np.array([NAIVE["kendall"](q, rho) for q in P]))
        assert tv(empirical(np.array(draws), P), w / w.sum()) < 0.03

    def test_truncate_top(self):
        out = truncate_top([[3, 1, 4, 2]], 2)
        np.testing.assert_array_equal(out[0].entries, [0, 1, 0, 2])


class TestTies:
    def test_from_scores(self):
        t = TieSet.from_scores([2, 1, 2, 3])
        assert t.groups == ((1,), (0, 2), (3,))
        np.testing.assert_array_equal(t.block_starts(), [1, 2, 4])
        assert t.has_ties()

    def test_invalid_groups(self):
        with pytest.raises(ValueError):
            TieSet(((0, 1), (1, 2)))

    def test_resample_admits_and_uniform(self):
        t = TieSet.from_scores([1, 1, 1, 2])
        rng = make_rng(3)
        draws = np.array([resample_ties(t, rng) for _ in range(12_000)])
        assert all(t.admits(d) for d in draws[:200])
        _, counts = np.unique(draws, axis=0, return_counts=True)
        assert len(counts) == 6 and stats.chisquare(counts).pvalue > 0.01


class TestPreferences:
    def test_linear_extension_consistent(self):
        c = transitive_closure([(0, 1), (1, 4), (3, 4)])
        rng = make_rng(1)
        for _ in range(200):
            assert is_consistent(random_linear_extension(6, c, rng), c)

    def test_linear_extension_bad_item(self):
        with pytest.raises(ValueError):
            random_linear_extension(3, transitive_closure([(0, 5)]), make_rng(0))

    def test_constrained_leap_stays_consistent(self):
        c = transitive_closure([(0, 1), (1, 2), (4, 3)])
        rng = make_rng(2)
        row = random_linear_extension(6, c, rng)
        for _ in range(2000):
            prop, u, r = constrained_leap(row, c, rng)
            assert is_consistent(prop, c) and prop[u] == r
            row = prop

    def test_constrained_leap_symmetric(self):
        # exhaustive transition probabilities over the consistent set
        c = transitive_closure([(0, 1), (2, 1)])
        n = 4
        pairs = c.as_array()
        states = [p for p in all_perms(n) if is_consistent(p, c)]
        index = {tuple(p): i for i, p in enumerate(states)}
        T = np.zeros((len(states), len(states)))
        out = np.empty(n, dtype=np.int64)
        for i, s in enumerate(states):
            for u in range(n):
                lo, hi = K.rank_bounds(s, pairs, u)
                for r in range(lo + 1, hi):
                    K.shift_into(s, u, r, out)
                    T[i, index[tuple(out)]] += 1 / (n * (hi - lo - 1))
        np.testing.assert_allclose(T.sum(axis=1), 1.0)
        np.testing.assert_allclose(T, T.T, atol=1e-15)

    def test_preference_chain_targets_restricted_mallows(self):
        c = transitive_closure([(0, 1), (1, 3)])
        rho = np.array([1, 2, 3, 4])
        alpha = 2.0
        rng = make_rng(5)
        row = random_linear_extension(4, c, rng)
        draws = []
        for _ in range(60_000):
            row = preference_augment(row, c, alpha, rho, "footrule", rng)
            draws.append(row.copy())
        P = np.array([p for p in all_perms(4) if is_consistent(p, c)])
        w = np.exp(-alpha / 4 * np.array([NAIVE["footrule"](p, rho) for p in P]))
        assert tv(empirical(np.array(draws), P), w / w.sum()) < 0.03

    def test_inconsistent_start(self):
        c = transitive_closure([(0, 1)])
        with pytest.raises(ValueError):
            constrained_leap([1, 2, 3], c, make_rng(0))


class TestPackAndRun:
    def test_infer_n(self):
        assert infer_n([transitive_closure([(0, 1)]), [1, 2, 3]]) == 3
        with pytest.raises(ValueError, match="pass n"):
            infer_n([transitive_closure([(0, 1)])])

    def test_pack_layout(self):
        data = [PartialRanking(np.array([1, 0, 0])), transitive_closure([(0, 2)]),
                TieSet.from_scores([1, 1, 2]), np.array([3, 2, 1])]
        p = pack(data, 3, make_rng(1))
        np.testing.assert_array_equal(p.kind, [1, 2, 3, 0])
        np.testing.assert_array_equal(p.miss_idx, [1, 2])
        np.testing.assert_array_equal(p.pairs, [[0, 2]])
        np.testing.assert_array_equal(p.aug[3], [3, 2, 1])
        validate_augmented(p.aug[None], data)

    def test_pack_size_mismatch(self):
        with pytest.raises(ValueError, match="expected 4"):
            pack([np.array([1, 2, 3])], 4, make_rng(0))

    def test_debug_run_mixed_data(self):
        tab = build_table(5, "footrule")
        data = [PartialRanking(np.array([1, 2, 0, 0, 0])), transitive_closure([(4, 0), (3, 4)]),
                TieSet.from_scores([1, 1, 2, 2, 3]), np.array([1, 2, 3, 4, 5])]
        s = run_chain_partial(data, "footrule", Priors(1.0),
                              Tuning(iterations=3000, burn_in=500, thinning=5, seed=2), tab,
                              debug=True)
        assert s.augmented.shape == (len(s), 4, 5)
        assert s.diagnostics["augmentation_acceptance"] is not None

    def test_validate_detects_violation(self):
        data = [PartialRanking(np.array([1, 0, 0]))]
        with pytest.raises(AssertionError, match="inconsistent"):
            validate_augmented(np.array([[[2, 1, 3]]]), data)

    def test_complete_data_same_as_run_chain(self):
        # with nothing missing the augmentation chain is the plain chain
        data = np.array([[1, 2, 3, 4], [2, 1, 3, 4], [1, 2, 4, 3]])
        tab = build_table(4, "kendall")
        t = Tuning(iterations=4000, burn_in=100, seed=3)
        a = run_chain(data, "kendall", Priors(1.0), t, tab)
        b = run_chain_partial([PartialRanking(r) for r in data], "kendall", Priors(1.0), t, tab)
        np.testing.assert_array_equal(a.alpha, b.alpha)
        np.testing.assert_array_equal(a.rho, b.rho)

    def test_missing_data_posterior_matches_enumeration(self):
        # latent fill-ins marginalize out: compare rho marginal to a brute-force sum
        obs = [np.array([1, 2, 0, 0]), np.array([0, 0, 1, 2]), np.array([1, 2, 3, 4])]
        alpha = 2.0
        P = all_perms(4)
        lw = np.zeros(len(P))
        logz = math.log(sum(math.exp(-alpha / 4 * NAIVE["footrule"](q, np.arange(1, 5)))
                            for q in P))
        for o in obs:
            fills = [q for q in P if all(q[i] == o[i] for i in range(4) if o[i])]
            lw += np.log([sum(math.exp(-alpha / 4 * NAIVE["footrule"](f, p)) for f in fills)
                          for p in P]) - logz
        w = np.exp(lw - lw.max())
        # alpha held fixed by a narrow table range around it
        grid = np.linspace(alpha - 1e-9, alpha, 12)
        tab = import_table(4, "footrule", grid,
                           [exact_log_partition(4, a, "footrule") for a in grid], degree=2)
        s = run_chain_partial([PartialRanking(o) for o in obs], "footrule", Priors(1.0),
                              Tuning(iterations=150_000, burn_in=2000, thinning=2,
                                     alpha_init=alpha, seed=4), tab)
        assert np.all(s.alpha == alpha)
        assert tv(empirical(s.rho, P), w / w.sum()) < 0.03
