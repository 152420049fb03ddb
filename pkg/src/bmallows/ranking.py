"""Permutations, right-invariant distances and pairwise preference constraints.

Rankings are stored item-wise: ``ranks[i]`` is the rank (1 = best) given to
item ``i``. The ordering representation (items listed best to worst) only
appears at I/O boundaries, via :func:`ordering_to_ranks` and
:func:`ranks_to_ordering`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K


class Metric(str, enum.Enum):
    FOOTRULE = "footrule"
    SPEARMAN = "spearman"
    KENDALL = "kendall"

    @property
    def code(self) -> int:
        return {"footrule": K.FOOTRULE, "spearman": K.SPEARMAN, "kendall": K.KENDALL}[self.value]

    @property
    def has_element_distance(self) -> bool:
        return self is not Metric.KENDALL

    def element_distance(self, r, p):
        """Per-item distance |r - p| or (r - p)**2; Kendall has none."""
        if self is Metric.KENDALL:
            raise ValueError("the Kendall distance has no per-element form")
        d = np.asarray(r) - np.asarray(p)
        return np.abs(d) if self is Metric.FOOTRULE else d * d


def as_metric(metric: Metric | str) -> Metric:
    try:
        return Metric(metric)
    except ValueError:
        raise ValueError(f"unknown metric {metric!r}; expected one of "
                         f"{[m.value for m in Metric]}") from None


@dataclass(frozen=True)
class ItemCatalog:
    """Ordered item labels with a label -> index lookup."""

    labels: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if not labels:
            raise ValueError("an item catalog needs at least one item")
        if len(set(labels)) != len(labels):
            dup = sorted({x for x in labels if labels.count(x) > 1})
            raise ValueError(f"duplicate item labels: {dup}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "index", {x: i for i, x in enumerate(labels)})

    @classmethod
    def default(cls, n: int) -> "ItemCatalog":
        return cls(tuple(f"A{i + 1}" for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, label: str) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise KeyError(f"unknown item {label!r}") from None


def is_permutation(ranks) -> bool:
    r = np.asarray(ranks)
    if r.ndim != 1 or r.size == 0:
        return False
    return bool(np.array_equal(np.sort(r), np.arange(1, r.size + 1)))


def check_ranking(ranks) -> np.ndarray:
    """Return ``ranks`` as an int64 array, raising if it is not in P_n."""
    r = np.asarray(ranks)
    if r.ndim != 1 or r.size == 0:
        raise ValueError(f"not a rank vector: {ranks!r}")
    if not np.issubdtype(r.dtype, np.integer):
        if not np.all(np.isfinite(r)) or not np.all(r == np.round(r)):
            raise ValueError(f"ranks must be integers: {r.tolist()}")
    r = r.astype(np.int64)
    if not is_permutation(r):
        raise ValueError(f"not a permutation of 1..{r.size}: {r.tolist()}")
    return r


def check_rankings(data) -> np.ndarray:
    """Validate a 2-D array of complete rankings, one assessor per row."""
    arr = np.atleast_2d(np.asarray(data))
    if arr.ndim != 2:
        raise ValueError("rankings must be a 2-D array")
    arr = arr.astype(np.int64)
    for j, row in enumerate(arr):
        if not is_permutation(row):
            raise ValueError(f"row {j} is not a permutation of 1..{arr.shape[1]}")
    return arr


def ordering_to_ranks(ordering: Sequence[int]) -> np.ndarray:
    """Item indices listed best-first -> rank vector."""
    order = np.asarray(ordering, dtype=np.int64)
    ranks = np.empty_like(order)
    ranks[order] = np.arange(1, order.size + 1)
    return check_ranking(ranks)


def ranks_to_ordering(ranks) -> np.ndarray:
    return np.argsort(check_ranking(ranks), kind="stable")


def _pair(R, P):
    R = check_ranking(R)
    P = check_ranking(P)
    if R.shape != P.shape:
        raise ValueError(f"dimension mismatch: {R.size} vs {P.size}")
    return R, P


def footrule_distance(R, P) -> int:
    R, P = _pair(R, P)
    return int(np.abs(R - P).sum())


def spearman_distance(R, P) -> int:
    R, P = _pair(R, P)
    return int(((R - P) ** 2).sum())


def kendall_distance(R, P) -> int:
    """Number of discordant item pairs, counted by merge sort in O(n log n)."""
    R, P = _pair(R, P)
    return int(K.kendall(R, P))


_DISTANCES = {
    Metric.FOOTRULE: footrule_distance,
    Metric.SPEARMAN: spearman_distance,
    Metric.KENDALL: kendall_distance,
}


def distance(R, P, metric: Metric | str) -> int:
    return _DISTANCES[as_metric(metric)](R, P)


def distances_to(data, rho, metric: Metric | str) -> np.ndarray:
    """Distance from each row of ``data`` to ``rho``."""
    m = as_metric(metric)
    arr = check_rankings(data)
    rho = check_ranking(rho)
    if arr.shape[1] != rho.size:
        raise ValueError(f"dimension mismatch: {arr.shape[1]} vs {rho.size}")
    return np.array([K.dist(row, rho, m.code) for row in arr], dtype=np.int64)


# ------------------------------------------------------------------ preferences


class PreferenceCycleError(ValueError):
    """Raised when an assessor's stated preferences cannot all hold at once."""

    def __init__(self, cycle, assessor=None):
        self.cycle = list(cycle)
        self.assessor = assessor
        chain = " < ".join(str(x) for x in self.cycle)
        who = f"assessor {assessor}: " if assessor is not None else ""
        super().__init__(f"{who}incompatible preferences, cycle {chain}")


@dataclass(frozen=True, order=True)
class PreferencePair:
    """``upper`` is preferred to ``lower``, i.e. gets the smaller rank."""

    lower: int
    upper: int

    def __post_init__(self):
        if self.lower == self.upper:
            raise ValueError(f"an item cannot be preferred to itself: {self.lower}")


@dataclass(frozen=True)
class PreferenceConstraintSet:
    assessor: object
    pairs: frozenset

    @property
    def constrained_items(self) -> frozenset:
        return frozenset(x for p in self.pairs for x in (p.lower, p.upper))

    def as_array(self) -> np.ndarray:
        """Sorted (lower, upper) rows, the layout the compiled samplers use."""
        rows = sorted((p.lower, p.upper) for p in self.pairs)
        return np.array(rows, dtype=np.int64).reshape(-1, 2)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return pair in self.pairs


def _find_cycle(succ: dict) -> list | None:
    state: dict = {}
    for start in sorted(succ):
        if start in state:
            continue
        stack = [(start, iter(sorted(succ.get(start, ()))))]
        path = [start]
        state[start] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
                path.pop()
            elif state.get(nxt) == 1:
                return path[path.index(nxt):] + [nxt]
            elif nxt not in state:
                state[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(sorted(succ.get(nxt, ())))))
    return None


def transitive_closure(pairs: Iterable, assessor=None) -> PreferenceConstraintSet:
    """Close a set of preferences under transitivity.

    ``pairs`` holds :class:`PreferencePair` objects or ``(lower, upper)``
    tuples. A cycle raises :class:`PreferenceCycleError` naming one witness
    cycle, listed from least to most preferred.
    """
    ps = {p if isinstance(p, PreferencePair) else PreferencePair(*p) for p in pairs}
    succ: dict = {}
    for p in ps:
        succ.setdefault(p.lower, set()).add(p.upper)
        succ.setdefault(p.upper, set())
    cycle = _find_cycle(succ)
    if cycle is not None:
        raise PreferenceCycleError(cycle, assessor)
    closed = set()
    for start in succ:
        seen = set()
        todo = list(succ[start])
        while todo:
            x = todo.pop()
            if x in seen:
                continue
            seen.add(x)
            todo.extend(succ[x])
        closed.update(PreferencePair(start, x) for x in seen)
    return PreferenceConstraintSet(assessor, frozenset(closed))


def is_consistent(R, C: PreferenceConstraintSet) -> bool:
    R = check_ranking(R)
    return all(R[p.upper] < R[p.lower] for p in C.pairs)


def rank_bounds(C: PreferenceConstraintSet, R, u: int) -> tuple[int, int]:
    """Open interval (l, r) of ranks item ``u`` may take without breaking ``C``.

    l is the largest current rank among items preferred to ``u`` (0 if none),
    r the smallest current rank among items ``u`` is preferred to (n + 1 if
    none).
    """
    R = check_ranking(R)
    if not 0 <= u < R.size:
        raise IndexError(f"item {u} out of range for n={R.size}")
    lo, hi = K.rank_bounds(R, C.as_array(), u)
    return int(lo), int(hi)
