"""Data augmentation for partial rankings, pairwise preferences and ties.

Each assessor carries a latent complete ranking consistent with what was
observed. The chain alternates between updating these latent rankings given
(alpha, rho) and updating (alpha, rho) given the latent rankings.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import _kernels as K
from .partition import LogPartitionTable
from .ranking import (Metric, PreferenceConstraintSet, as_metric, check_ranking,
                      is_consistent, is_permutation)
from .rng import as_rng, make_rng
from .sampler import (Packed, PosteriorSamples, Priors, Tuning, _resolve_table,
                      run_packed)

log = logging.getLogger(__name__)

MISSING = 0


@dataclass(frozen=True, eq=False)
class PartialRanking:
    """Rank vector with ``MISSING`` (0) marking unobserved items."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 1 or e.size == 0:
            raise ValueError("a partial ranking is a non-empty 1-D vector")
        e = e.astype(np.int64)
        n = e.size
        obs = e[e != MISSING]
        if np.any((obs < 1) | (obs > n)):
            raise ValueError(f"observed ranks must lie in 1..{n}: {obs.tolist()}")
        vals, counts = np.unique(obs, return_counts=True)
        if np.any(counts > 1):
            raise ValueError(f"duplicate observed ranks: {vals[counts > 1].tolist()}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @classmethod
    def from_values(cls, values) -> "PartialRanking":
        """Build from a sequence where None or NaN marks a missing rank."""
        out = []
        for v in values:
            if v is None or (isinstance(v, float) and np.isnan(v)):
                out.append(MISSING)
            else:
                out.append(int(v))
        return cls(np.array(out, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.entries.size

    @property
    def observed_items(self) -> np.ndarray:
        return np.nonzero(self.entries != MISSING)[0]

    @property
    def missing_items(self) -> np.ndarray:
        return np.nonzero(self.entries == MISSING)[0]

    @property
    def unused_ranks(self) -> np.ndarray:
        return np.setdiff1d(np.arange(1, self.n + 1), self.entries)

    def is_complete(self) -> bool:
        return self.missing_items.size == 0

    def admits(self, ranks) -> bool:
        """True if ``ranks`` is a permutation agreeing with every observed rank."""
        r = np.asarray(ranks)
        obs = self.observed_items
        return bool(is_permutation(r) and np.array_equal(r[obs], self.entries[obs]))


@dataclass(frozen=True)
class TieSet:
    """Weak ordering: groups of tied items, best group first."""

    groups: tuple

    def __post_init__(self):
        groups = tuple(tuple(int(i) for i in g) for g in self.groups)
        if any(len(g) == 0 for g in groups):
            raise ValueError("tie groups must be non-empty")
        items = [i for g in groups for i in g]
        if sorted(items) != list(range(len(items))):
            raise ValueError("tie groups must partition the items 0..n-1")
        object.__setattr__(self, "groups", groups)

    @classmethod
    def from_scores(cls, values) -> "TieSet":
        """Group items sharing a value; smaller values rank first."""
        v = np.asarray(values)
        return cls(tuple(tuple(np.nonzero(v == x)[0].tolist()) for x in np.unique(v)))

    @property
    def n(self) -> int:
        return sum(len(g) for g in self.groups)

    def block_starts(self) -> np.ndarray:
        sizes = np.array([len(g) for g in self.groups], dtype=np.int64)
        return 1 + np.concatenate([[0], np.cumsum(sizes)[:-1]])

    def has_ties(self) -> bool:
        return any(len(g) > 1 for g in self.groups)

    def admits(self, ranks) -> bool:
        r = np.asarray(ranks)
        if not is_permutation(r):
            return False
        for g, start in zip(self.groups, self.block_starts()):
            if sorted(r[list(g)].tolist()) != list(range(start, start + len(g))):
                return False
        return True


# ---------------------------------------------------------------- single operations


def init_fill_in(partial: PartialRanking, rng) -> np.ndarray:
    """Observed ranks kept; unused ranks given to missing items in random order."""
    rng = as_rng(rng)
    out = partial.entries.copy()
    miss = partial.missing_items
    out[miss] = rng.permutation(partial.unused_ranks)
    return out


def gibbs_augment_partial(current, partial: PartialRanking, alpha: float, rho,
                          metric: Metric | str, rng) -> np.ndarray:
    """One MH update of a latent fill-in with a uniform proposal over fill-ins."""
    row = check_ranking(current).copy()
    if not partial.admits(row):
        raise ValueError("current ranking does not agree with the observed ranks")
    rho = check_ranking(rho)
    prop = np.empty_like(row)
    K.partial_step(row, partial.missing_items.astype(np.int64), float(alpha), rho,
                   as_metric(metric).code, as_rng(rng), prop)
    return row


def constrained_leap(current, constraints: PreferenceConstraintSet, rng
                     ) -> tuple[np.ndarray, int, int]:
    """Leap within the bounds set by the constraints, then shift.

    An item u is drawn uniformly; its new rank is uniform on l+1..r-1 where
    (l, r) come from :func:`ranking.rank_bounds` (0 and n+1 when u is
    unconstrained). Returns (proposal, u, new_rank).
    """
    row = check_ranking(current)
    if not is_consistent(row, constraints):
        raise ValueError("current ranking violates the preference constraints")
    out = np.empty_like(row)
    u, r = K.constrained_leap_into(row, constraints.as_array(), as_rng(rng), out)
    return out, int(u), int(r)


def preference_augment(current, constraints: PreferenceConstraintSet, alpha: float, rho,
                       metric: Metric | str, rng) -> np.ndarray:
    """One MH update of a latent ranking under pairwise constraints."""
    row = check_ranking(current).copy()
    if not is_consistent(row, constraints):
        raise ValueError("current ranking violates the preference constraints")
    prop = np.empty_like(row)
    K.preference_step(row, constraints.as_array(), float(alpha), check_ranking(rho),
                      as_metric(metric).code, as_rng(rng), prop)
    return row


def resample_ties(ties: TieSet, rng) -> np.ndarray:
    """Random complete ranking consistent with the weak ordering."""
    rng = as_rng(rng)
    out = np.empty(ties.n, dtype=np.int64)
    for g, start in zip(ties.groups, ties.block_starts()):
        out[list(g)] = start + rng.permutation(len(g))
    return out


def random_linear_extension(n: int, constraints: PreferenceConstraintSet, rng) -> np.ndarray:
    """A ranking consistent with the constraints, built by a randomized topological sort."""
    rng = as_rng(rng)
    above = {i: set() for i in range(n)}
    for p in constraints.pairs:
        if not (0 <= p.lower < n and 0 <= p.upper < n):
            raise ValueError(f"preference pair {p} refers to an item outside 0..{n - 1}")
        above[p.lower].add(p.upper)
    ranks = np.zeros(n, dtype=np.int64)
    placed = set()
    for k in range(1, n + 1):
        ready = sorted(i for i in range(n) if i not in placed and above[i] <= placed)
        pick = ready[rng.integers(len(ready))]
        ranks[pick] = k
        placed.add(pick)
    return ranks


def truncate_top(rankings, t: int) -> list[PartialRanking]:
    """Keep only ranks 1..t of each complete ranking."""
    arr = np.atleast_2d(np.asarray(rankings, dtype=np.int64))
    return [PartialRanking(np.where(row <= t, row, MISSING)) for row in arr]


# ---------------------------------------------------------------- packing


def infer_n(data: Sequence) -> int:
    for x in data:
        if isinstance(x, PartialRanking) or isinstance(x, TieSet):
            return x.n
        if not isinstance(x, PreferenceConstraintSet):
            return int(np.asarray(x).size)
    raise ValueError("cannot infer n from preference data alone; pass n explicitly")


def pack(data: Sequence, n: int, rng) -> Packed:
    """Flatten mixed observations and draw an initial consistent latent ranking for each."""
    rng = as_rng(rng)
    N = len(data)
    aug = np.empty((N, n), dtype=np.int64)
    kind = np.zeros(N, dtype=np.int64)
    miss_ptr = [0]
    miss_idx: list = []
    pair_ptr = [0]
    pairs: list = []
    tie_ptr = [0]
    group_ptr = [0]
    group_items: list = []
    group_start: list = []
    for j, x in enumerate(data):
        if isinstance(x, PartialRanking):
            if x.n != n:
                raise ValueError(f"assessor {j}: expected {n} items, got {x.n}")
            aug[j] = init_fill_in(x, rng)
            if not x.is_complete():
                kind[j] = 1
                miss_idx.extend(x.missing_items.tolist())
        elif isinstance(x, PreferenceConstraintSet):
            aug[j] = random_linear_extension(n, x, rng)
            kind[j] = 2
            pairs.extend(sorted((p.lower, p.upper) for p in x.pairs))
        elif isinstance(x, TieSet):
            if x.n != n:
                raise ValueError(f"assessor {j}: expected {n} items, got {x.n}")
            aug[j] = resample_ties(x, rng)
            if x.has_ties():
                kind[j] = 3
                for g, start in zip(x.groups, x.block_starts()):
                    group_items.extend(g)
                    group_ptr.append(len(group_items))
                    group_start.append(int(start))
        else:
            r = check_ranking(x)
            if r.size != n:
                raise ValueError(f"assessor {j}: expected {n} items, got {r.size}")
            aug[j] = r
        miss_ptr.append(len(miss_idx))
        pair_ptr.append(len(pairs))
        tie_ptr.append(len(group_start))
    i64 = lambda v: np.array(v, dtype=np.int64)  # noqa: E731
    return Packed(aug, kind, i64(miss_ptr), i64(miss_idx), i64(pair_ptr),
                  i64(pairs).reshape(-1, 2), i64(tie_ptr), i64(group_ptr),
                  i64(group_items), i64(group_start))


def validate_augmented(aug_samples: np.ndarray, data: Sequence) -> None:
    """Raise if any stored latent ranking breaks its observation."""
    for s, state in enumerate(np.asarray(aug_samples)):
        for j, x in enumerate(data):
            row = state[j]
            ok = (x.admits(row) if isinstance(x, (PartialRanking, TieSet))
                  else is_consistent(row, x) if isinstance(x, PreferenceConstraintSet)
                  else np.array_equal(row, np.asarray(x)))
            if not ok:
                raise AssertionError(f"sample {s}, assessor {j}: latent ranking {row.tolist()} "
                                     "is inconsistent with the data")


def run_chain_partial(data: Sequence, metric: Metric | str, priors: Priors = Priors(),
                      tuning: Tuning = Tuning(), table: LogPartitionTable | None = None, *,
                      n: int | None = None, rho_init=None, stream: int = 0,
                      debug: bool = False) -> PosteriorSamples:
    """Posterior samples of (alpha, rho) from partial, pairwise or tied data.

    ``data`` may mix complete rank vectors, :class:`PartialRanking`,
    :class:`~bmallows.ranking.PreferenceConstraintSet` and :class:`TieSet`
    entries. Every ``tuning.aug_frequency`` iterations each latent ranking
    gets one MH update; tied rankings are redrawn every ``tuning.tie_interval``
    iterations. With ``debug`` the stored latent rankings are checked against
    their observations.
    """
    m = as_metric(metric)
    n = infer_n(data) if n is None else n
    table = _resolve_table(table, n, m)
    if debug and not tuning.save_augmented:
        tuning = replace(tuning, save_augmented=True)
    packed = pack(data, n, make_rng(tuning.seed, stream, 1))
    out = run_packed(packed, m, priors, tuning, table, rho_init, model="static",
                     stream=stream)
    if debug:
        validate_augmented(out.augmented, data)
    return out
