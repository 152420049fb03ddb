"""Posterior summaries of sampled rankings.

Functions take a (samples, n) array of rank vectors, or any samples object
with a ``rho`` attribute of that shape.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np


def _rho(samples) -> np.ndarray:
    rho = np.asarray(getattr(samples, "rho", samples))
    if rho.ndim == 1:
        rho = rho[None, :]
    if rho.ndim != 2 or rho.shape[0] == 0:
        raise ValueError("expected a non-empty (samples, n) array of rankings")
    return rho


def marginal_rank_matrix(samples) -> np.ndarray:
    """M[i, k-1] = posterior probability that item i has rank k."""
    rho = _rho(samples)
    S, n = rho.shape
    M = np.zeros((n, n))
    for i in range(n):
        M[i] = np.bincount(rho[:, i] - 1, minlength=n) / S
    return M


def trace_statistic(M, rho_true) -> float:
    """Expected number of items placed at their true rank."""
    M = np.asarray(M)
    r = np.asarray(rho_true, dtype=np.int64)
    return float(M[np.arange(r.size), r - 1].sum())


def cp_ordering(M, labels: Sequence | None = None) -> list[tuple]:
    """Greedy cumulative-probability ordering.

    Step k picks, among unchosen items, the one with the largest
    P(rank <= k); ties go to the lowest item index. Returns (item, CP) pairs,
    with labels in place of indices when given.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    cum = np.cumsum(M, axis=1)
    chosen: list = []
    free = np.ones(n, dtype=bool)
    for k in range(n):
        cand = np.where(free, cum[:, k], -np.inf)
        i = int(np.argmax(cand))
        free[i] = False
        chosen.append((labels[i] if labels is not None else i, float(cum[i, k])))
    return chosen


@dataclass(frozen=True)
class DiscreteCredibleSet:
    item: object
    level: float
    ranks: tuple
    mass: float

    @property
    def interval(self) -> tuple[int, int]:
        return min(self.ranks), max(self.ranks)


def hpdi(rank_marginal, level: float = 0.9, item=None) -> DiscreteCredibleSet:
    """Highest-probability set of ranks reaching ``level``.

    ``rank_marginal[k-1]`` is P(rank = k). Ranks enter in decreasing
    probability (ties to the smaller rank) until the mass reaches ``level``.
    """
    p = np.asarray(rank_marginal, dtype=float)
    if not 0 < level <= 1:
        raise ValueError("level must lie in (0, 1]")
    order = sorted(range(p.size), key=lambda k: (-p[k], k))
    ranks: list = []
    mass = 0.0
    for k in order:
        ranks.append(k + 1)
        mass += p[k]
        # tolerance for rounding in sample frequencies
        if mass >= level - 1e-12:
            break
    return DiscreteCredibleSet(item, level, tuple(sorted(ranks)), float(min(mass, 1.0)))


def top_t_probability(samples, t: int) -> np.ndarray:
    """P(rho_i <= t) for every item."""
    return (_rho(samples) <= t).mean(axis=0)


def dominance_matrix(samples) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise P(rho_i < rho_j) and stochastic dominance flags.

    ``flags[i, j]`` is True when P(rho_i <= r) >= P(rho_j <= r) for every r
    and the two rank distributions differ.
    """
    rho = _rho(samples)
    n = rho.shape[1]
    P = (rho[:, :, None] < rho[:, None, :]).mean(axis=0)
    cdf = np.cumsum(marginal_rank_matrix(rho), axis=1)
    ge = np.all(cdf[:, None, :] >= cdf[None, :, :] - 1e-12, axis=2)
    same = np.all(np.abs(cdf[:, None, :] - cdf[None, :, :]) <= 1e-12, axis=2)
    flags = ge & ~same
    flags[np.arange(n), np.arange(n)] = False
    return P, flags


def preference_predictive(aug_samples, j: int, a: int, b: int) -> float:
    """P(item b is preferred to item a by assessor j), i.e. rank_j(b) < rank_j(a)."""
    if a == b:
        raise ValueError("a preference needs two distinct items")
    aug = np.asarray(aug_samples)
    if aug.ndim == 2:
        aug = aug[:, None, :]
    return float((aug[:, j, b] < aug[:, j, a]).mean())


def roc_triplets(scores, truth) -> list[tuple[float, float, float]]:
    """(threshold, TPR, FPR) for a binary classifier score, thresholds descending."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(truth, dtype=bool)
    P = max(int(y.sum()), 1)
    N = max(int((~y).sum()), 1)
    out = [(float("inf"), 0.0, 0.0)]
    for thr in np.unique(s)[::-1]:
        pred = s >= thr
        out.append((float(thr), float((pred & y).sum() / P), float((pred & ~y).sum() / N)))
    return out


# ---------------------------------------------------------------- output


def heat_triplets(M) -> str:
    """gnuplot-style 'item rank probability' lines with blank lines between items."""
    M = np.asarray(M)
    lines = []
    for i in range(M.shape[0]):
        for k in range(M.shape[1]):
            lines.append(f"{i + 1} {k + 1} {float(M[i, k])!r}")
        lines.append("")
    return "\n".join(lines) + "\n"


def cdf_pairs(rank_marginal) -> str:
    c = np.cumsum(np.asarray(rank_marginal, dtype=float))
    return "".join(f"{k + 1} {float(v)!r}\n" for k, v in enumerate(c))


def summary_table(samples, labels: Sequence, *, top_t: int | None = None,
                  level: float = 0.9, rho_true=None) -> dict:
    """Everything a report needs, as plain JSON-compatible values."""
    M = marginal_rank_matrix(samples)
    out: dict = {
        "labels": list(labels),
        "marginal_rank_matrix": M.tolist(),
        "cp_ordering": [[lab, cp] for lab, cp in cp_ordering(M, list(labels))],
        "hpdi": {lab: {"interval": list(h.interval), "ranks": list(h.ranks), "mass": h.mass}
                 for lab, h in ((lab, hpdi(M[i], level)) for i, lab in enumerate(labels))},
        "posterior_mean_rank": (M @ np.arange(1, M.shape[0] + 1)).tolist(),
    }
    if top_t is not None:
        out["top_t"] = top_t
        out["top_t_probability"] = dict(zip(labels, top_t_probability(samples, top_t).tolist()))
    if rho_true is not None:
        out["trace"] = trace_statistic(M, rho_true)
    alpha = getattr(samples, "alpha", None)
    if alpha is not None:
        a = np.asarray(alpha)
        out["alpha_mean"] = a.mean(axis=0).tolist() if a.ndim > 1 else float(a.mean())
    return out


def to_csv(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def to_json(obj) -> str:
    if hasattr(obj, "__dataclass_fields__"):
        obj = asdict(obj)
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
