"""Log partition function log Z_n(alpha) for right-invariant metrics.

Z_n(alpha) = sum over all permutations R of exp(-(alpha / n) d(R, id)). Three
routes compute it: the Kendall closed form, brute-force enumeration for small
n, and a sequential importance sampler for footrule and Spearman. Values on an
alpha grid are packed into a :class:`LogPartitionTable` together with a
degree-10 polynomial fit, which is what the samplers evaluate. Spearman
tables fit the polynomial in u = log(1 + s alpha) rather than alpha, because
log Z falls too steeply near alpha = 0 for a polynomial in alpha to follow.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.special import logsumexp
from scipy.stats import qmc as stats_qmc

from . import _kernels as K
from .ranking import Metric, as_metric, check_ranking
from .rng import make_rng

log = logging.getLogger(__name__)

DEFAULT_GRID = (0.01, 20.0, 100)
DEFAULT_DEGREE = 10
ENUMERATION_CAP = 10
METHODS = ("closed_form", "exact_enum", "importance_sampling", "imported")


class AlphaRangeError(ValueError):
    """alpha lies outside the range a partition table was fitted on."""


def default_grid(lo: float = DEFAULT_GRID[0], hi: float = DEFAULT_GRID[1],
                 num: int = DEFAULT_GRID[2], scale: float = 0.0) -> np.ndarray:
    """Grid uniform in alpha, or in log(1 + scale alpha) when scale > 0."""
    if scale > 0:
        return np.expm1(np.linspace(np.log1p(scale * lo), np.log1p(scale * hi), num)) / scale
    return np.linspace(lo, hi, num)


def default_scale(n: int, metric: Metric | str) -> float:
    """Fit coordinate scale: 0 (plain alpha) except for Spearman."""
    return max(1.0, n / 4) if as_metric(metric) is Metric.SPEARMAN else 0.0


def fit_coordinate(alpha, scale: float):
    return np.log1p(scale * np.asarray(alpha, dtype=float)) if scale > 0 else alpha


def _check_alpha(alpha):
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError(f"alpha must be a finite nonnegative number, got {alpha}")


def kendall_log_partition(n: int, alpha: float) -> float:
    """log prod_{i=1}^n sum_{j=0}^{i-1} exp(-alpha j / n), evaluated in log space."""
    _check_alpha(alpha)
    if n < 1:
        raise ValueError("n must be positive")
    if alpha == 0:
        return math.lgamma(n + 1)
    c = alpha / n
    q = math.exp(-c)
    total = 0.0
    for i in range(2, n + 1):
        # geometric sum (1 - q^i) / (1 - q); log1p keeps precision when q is small
        if q < 0.5:
            total += math.log1p(-q ** i) - math.log1p(-q)
        else:
            total += math.log(-math.expm1(-c * i)) - math.log(-math.expm1(-c))
    return total


# ---------------------------------------------------------------- enumeration


def _max_distance(n: int, metric: Metric) -> int:
    if metric is Metric.FOOTRULE:
        return n * n // 2
    if metric is Metric.SPEARMAN:
        return n * (n * n - 1) // 3
    return n * (n - 1) // 2


@njit(cache=True)
def _distance_histogram(ref, metric, size):
    n = ref.shape[0]
    counts = np.zeros(size, dtype=np.int64)
    perm = np.arange(1, n + 1)
    c = np.zeros(n, dtype=np.int64)
    counts[K.dist(perm, ref, metric)] += 1
    i = 0
    # Heap's algorithm
    while i < n:
        if c[i] < i:
            if i % 2 == 0:
                a = 0
            else:
                a = c[i]
            tmp = perm[a]
            perm[a] = perm[i]
            perm[i] = tmp
            counts[K.dist(perm, ref, metric)] += 1
            c[i] += 1
            i = 0
        else:
            c[i] = 0
            i += 1
    return counts


@lru_cache(maxsize=64)
def _histogram(n: int, metric: Metric, ref: tuple) -> np.ndarray:
    ref_arr = np.array(ref, dtype=np.int64)
    return _distance_histogram(ref_arr, metric.code, _max_distance(n, metric) + 1)


def distance_distribution(n: int, metric: Metric | str, reference=None) -> np.ndarray:
    """counts[d] = number of permutations at distance d from ``reference``."""
    m = as_metric(metric)
    ref = np.arange(1, n + 1) if reference is None else check_ranking(reference)
    if ref.size != n:
        raise ValueError("reference permutation has the wrong length")
    return _histogram(n, m, tuple(int(x) for x in ref)).copy()


def exact_log_partition(n: int, alpha: float, metric: Metric | str, *,
                        cap: int = ENUMERATION_CAP, reference=None) -> float:
    """log Z_n(alpha) by summing over all n! permutations."""
    _check_alpha(alpha)
    if n < 1:
        raise ValueError("n must be positive")
    if n > cap:
        raise ValueError(f"exact enumeration capped at n={cap}, got n={n}")
    counts = distance_distribution(n, metric, reference)
    d = np.nonzero(counts)[0]
    terms = np.log(counts[d]) - alpha / n * d
    if alpha == 0:
        return float(logsumexp(terms))
    # leading term pulled out so that log Z near zero keeps full precision
    return float(terms[0] + np.log1p(np.exp(terms[1:] - terms[0]).sum()))


# ---------------------------------------------------------------- importance sampling


DEFAULT_EXACT_TAIL = 7
IDENTITY_THRESHOLD = 0.01


@njit(cache=True, nogil=True)
def _offset_weights(n, alpha, metric):
    # w[o] is the unnormalized conditional weight of an offset o = |r - i|
    w = np.empty(n)
    for o in range(n):
        w[o] = math.exp(-alpha / n * K.elem_dist(o, 0, metric))
    return w


@njit(cache=True, nogil=True)
def _identity_proposal_prob(n, alpha, metric):
    w = _offset_weights(n, alpha, metric)
    logq = 0.0
    for i in range(n, 1, -1):
        total = 0.0
        for r in range(1, i + 1):
            total += w[i - r]
        logq -= math.log(total)
    return math.exp(logq)


@njit(cache=True, nogil=True)
def _tail_sum(rem, w, f):
    """Sum over all assignments of the ranks in ``rem`` to positions 1..m.

    Dynamic program over subsets: f[S] sums the weights of placing the ranks
    in S on positions 1..|S|. All terms are positive, so nothing cancels.
    """
    m = rem.shape[0]
    f[0] = 1.0
    for mask in range(1, 1 << m):
        t = 0
        x = mask
        while x:
            t += x & 1
            x >>= 1
        acc = 0.0
        for s in range(m):
            if mask >> s & 1:
                acc += f[mask ^ (1 << s)] * w[abs(rem[s] - t)]
        f[mask] = acc
    return f[(1 << m) - 1]


@njit(cache=True, nogil=True)
def _is_log_weights(n, alpha, metric, U, tail, drop_identity):
    # row s of U holds the uniforms driving the sequential draws of sample s
    k = U.shape[0]
    w = _offset_weights(n, alpha, metric)
    used = np.zeros(n + 1, dtype=np.bool_)
    rem = np.empty(tail, dtype=np.int64)
    f = np.empty(1 << tail)
    out = np.empty(k)
    for s in range(k):
        used[:] = False
        lw = 0.0
        ident = True
        for i in range(n, tail, -1):
            total = 0.0
            for r in range(1, n + 1):
                if not used[r]:
                    total += w[abs(r - i)]
            target = U[s, n - i] * total
            acc = 0.0
            pick = 0
            for r in range(1, n + 1):
                if not used[r]:
                    pick = r
                    acc += w[abs(r - i)]
                    if acc > target:
                        break
            used[pick] = True
            if pick != i:
                ident = False
            # weight/q telescopes to the normalizers times the tail factor
            lw += math.log(total)
        m = 0
        for r in range(1, n + 1):
            if not used[r]:
                rem[m] = r
                m += 1
        tail_total = _tail_sum(rem, w, f)
        if drop_identity and ident:
            # the identity completion is added back exactly by the caller
            tail_total -= 1.0
        out[s] = lw + math.log(tail_total) if tail_total > 0.0 else -np.inf
    return out


def _batch_moments(lw: np.ndarray):
    m = float(lw.max())
    if not np.isfinite(m):
        return 0.0, 0.0, 0.0, lw.size
    e = np.exp(lw - m)
    return m, float(e.sum()), float((e * e).sum()), lw.size


def _merge_moments(parts):
    m = max(p[0] for p in parts)
    s1 = sum(p[1] * math.exp(p[0] - m) for p in parts)
    s2 = sum(p[2] * math.exp(2 * (p[0] - m)) for p in parts)
    k = sum(p[3] for p in parts)
    return m, s1, s2, k


def importance_sample_log_partition(n: int, alpha: float, metric: Metric | str,
                                    K: int, seed: int, *, key: tuple = (),
                                    batch_size: int = 2**16, workers: int = 1,
                                    exact_tail: int = DEFAULT_EXACT_TAIL,
                                    qmc: bool = True) -> tuple[float, float]:
    """Importance-sampling estimate of log Z_n(alpha).

    Rankings are drawn item by item from n down to 1, each conditional
    proportional to exp(-(alpha/n) d(r, i)) over the still unused ranks.
    Returns ``(log_estimate, std_error)``; the standard error is that of the
    log estimate, obtained by the delta method from the weight variance on
    the linear scale. Batches use streams keyed by ``(seed, *key, batch)``
    and are merged in batch order, so the result does not depend on
    ``workers``.

    Three variance reductions keep the estimator unbiased:

    * the last ``exact_tail`` positions are summed over exactly instead of
      sampled (``exact_tail=1`` is the plain sequential sampler);
    * the uniforms behind the sequential draws come from an Owen-scrambled
      Sobol set per batch rather than independent draws (``qmc=False``
      restores plain Monte Carlo). The reported standard error still uses
      the i.i.d. formula, which overstates the error of the scrambled set;
    * when the proposal puts at least ``IDENTITY_THRESHOLD`` mass on the
      identity, its known contribution exp(0) = 1 is added exactly and
      removed from the weights.

    At alpha = 0 every weight equals n!, so the estimate is exact.
    """
    m = as_metric(metric)
    _check_alpha(alpha)
    if not m.has_element_distance:
        raise ValueError("importance sampling needs a per-element distance; "
                         "use the closed form for Kendall")
    if K < 1:
        raise ValueError("K must be at least 1")
    if n < 1:
        raise ValueError("n must be positive")
    if exact_tail < 1:
        raise ValueError("exact_tail must be at least 1")
    if alpha == 0:
        # every weight equals n!
        return math.lgamma(n + 1), 0.0
    tail = min(exact_tail, n)
    alpha = float(alpha)
    drop = bool(alpha > 0 and _identity_proposal_prob(n, alpha, m.code) >= IDENTITY_THRESHOLD)
    sizes = [batch_size] * (K // batch_size)
    if K % batch_size:
        sizes.append(K % batch_size)

    dim = n - tail

    def run(b):
        rng = make_rng(seed, *key, b)
        if dim == 0:
            U = np.empty((sizes[b], 0))
        elif qmc:
            with warnings.catch_warnings():
                # prefixes that are not powers of two are still unbiased
                warnings.simplefilter("ignore", UserWarning)
                U = stats_qmc.Sobol(dim, scramble=True, seed=rng).random(sizes[b])
        else:
            U = rng.random((sizes[b], dim))
        return _batch_moments(_is_log_weights(n, alpha, m.code, U, tail, drop))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    mx, s1, s2, k = _merge_moments(parts)
    offset = 1.0 if drop else 0.0
    if s1 == 0.0:
        return math.log(offset) if drop else -math.inf, 0.0
    mean = s1 / k
    if drop:
        # log(1 + e^mx * mean), stable for either sign of mx
        estimate = float(np.logaddexp(0.0, mx + math.log(mean)))
    else:
        estimate = mx + math.log(mean)
    if k < 2:
        return estimate, math.inf
    var = max(s2 / k - mean * mean, 0.0) * k / (k - 1)
    return estimate, math.sqrt(var / k) * math.exp(mx - estimate)


def grid_convergence_check(table_old, table_new) -> float:
    """Maximum relative change max |new - old| / |old| over a shared grid.

    Accepts :class:`LogPartitionTable` objects or plain arrays of log Z values.
    """
    old = table_old.log_z if isinstance(table_old, LogPartitionTable) else np.asarray(table_old, float)
    new = table_new.log_z if isinstance(table_new, LogPartitionTable) else np.asarray(table_new, float)
    if isinstance(table_old, LogPartitionTable) and isinstance(table_new, LogPartitionTable):
        if not np.array_equal(table_old.alphas, table_new.alphas):
            raise ValueError("tables are on different alpha grids")
    if old.shape != new.shape:
        raise ValueError("grids differ in length")
    return float(np.max(np.abs(new - old) / np.abs(old)))


# ---------------------------------------------------------------- polynomial fit


def fit_log_partition(alphas, log_z, *, degree: int = DEFAULT_DEGREE,
                      anchor: float | None = None, scale: float = 0.0
                      ) -> tuple[np.ndarray, float]:
    """Least-squares polynomial; returns power-basis coefficients and max residual.

    The polynomial variable is alpha, or log(1 + scale alpha) when
    ``scale > 0``. With ``anchor`` the constant term is pinned to that value,
    which is how tables force log Z(0) = log n! exactly.
    """
    a = np.asarray(alphas, dtype=float)
    y = np.asarray(log_z, dtype=float)
    if a.shape != y.shape or a.ndim != 1:
        raise ValueError("alphas and log_z must be 1-D and of equal length")
    if a.size < degree + 2:
        raise ValueError(f"need at least {degree + 2} grid points for a degree-{degree} fit")
    a = fit_coordinate(a, scale)
    scale = float(np.max(np.abs(a))) or 1.0
    x = a / scale
    first = 0 if anchor is None else 1
    V = np.vander(x, degree + 1, increasing=True)[:, first:]
    target = y if anchor is None else y - anchor
    sol, *_ = np.linalg.lstsq(V, target, rcond=None)
    coef = np.zeros(degree + 1)
    coef[first:] = sol / scale ** np.arange(first, degree + 1)
    if anchor is not None:
        coef[0] = anchor
    fitted = np.polynomial.polynomial.polyval(a, coef)
    return coef, float(np.max(np.abs(fitted - y)))


# ---------------------------------------------------------------- tables


@dataclass(frozen=True, eq=False)
class LogPartitionTable:
    """Grid of log Z values for one (n, metric) with its polynomial fit.

    ``alpha_min``/``alpha_max`` bound where :func:`evaluate_log_partition`
    answers; tables built here include alpha = 0, where the fit is pinned to
    log n!.
    """

    n: int
    metric: Metric
    method: str
    alphas: np.ndarray
    log_z: np.ndarray
    poly: np.ndarray
    alpha_min: float
    alpha_max: float
    fit_residual: float
    K: int | None = None
    seed: int | None = None
    scale: float = 0.0
    std_error: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown table method {self.method!r}")
        object.__setattr__(self, "metric", as_metric(self.metric))
        a = np.asarray(self.alphas, dtype=float)
        if a.size and np.any(np.diff(a) <= 0):
            raise ValueError("alpha grid must be strictly increasing")

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogPartitionTable):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None

    def __call__(self, alpha: float) -> float:
        return evaluate_log_partition(self, alpha)

    @property
    def coef(self) -> np.ndarray:
        return np.asarray(self.poly, dtype=float)

    def kernel_args(self):
        """(scale followed by the coefficients, alpha_min, alpha_max) for the kernels."""
        return (np.concatenate([[float(self.scale)], self.coef]), float(self.alpha_min),
                float(self.alpha_max))

    def to_dict(self) -> dict:
        d = {
            "n": int(self.n),
            "metric": self.metric.value,
            "method": self.method,
            "grid": [[float(a), float(z)] for a, z in zip(self.alphas, self.log_z)],
            "poly": [float(c) for c in self.poly],
            "alpha_min": float(self.alpha_min),
            "alpha_max": float(self.alpha_max),
            "fit_residual": float(self.fit_residual),
            "K": self.K,
            "seed": self.seed,
            "scale": float(self.scale),
        }
        if self.std_error is not None:
            d["std_error"] = [float(s) for s in self.std_error]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LogPartitionTable":
        grid = np.array(d["grid"], dtype=float).reshape(-1, 2)
        se = d.get("std_error")
        return cls(n=int(d["n"]), metric=as_metric(d["metric"]), method=d["method"],
                   alphas=grid[:, 0].copy(), log_z=grid[:, 1].copy(),
                   poly=np.array(d["poly"], dtype=float),
                   alpha_min=float(d["alpha_min"]), alpha_max=float(d["alpha_max"]),
                   fit_residual=float(d["fit_residual"]), K=d.get("K"),
                   seed=d.get("seed"), scale=float(d.get("scale", 0.0)),
                   std_error=None if se is None else np.array(se, dtype=float))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "LogPartitionTable":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def evaluate_log_partition(table: LogPartitionTable, alpha: float) -> float:
    if not table.alpha_min <= alpha <= table.alpha_max:
        raise AlphaRangeError(
            f"alpha={alpha} outside the fitted range [{table.alpha_min}, {table.alpha_max}] "
            f"of the n={table.n} {table.metric.value} table")
    return float(np.polynomial.polynomial.polyval(fit_coordinate(alpha, table.scale),
                                                  table.coef))


def _pick_method(n: int, metric: Metric, method: str) -> str:
    if method != "auto":
        return method
    if metric is Metric.KENDALL:
        return "closed_form"
    return "exact_enum" if n <= ENUMERATION_CAP else "importance_sampling"


def build_table(n: int, metric: Metric | str, *, method: str = "auto", alphas=None,
                K: int = 10**5, seed: int = 1, degree: int = DEFAULT_DEGREE,
                workers: int = 1, exact_tail: int = DEFAULT_EXACT_TAIL,
                scale: float | None = None) -> LogPartitionTable:
    """Compute log Z on a grid and fit the polynomial used by the samplers.

    Importance-sampling tables reuse the same random streams at every grid
    point (common random numbers), which keeps the estimated curve smooth in
    alpha. ``scale=None`` picks :func:`default_scale`; the default grid is
    then uniform in the fit coordinate.
    """
    m = as_metric(metric)
    scale = default_scale(n, m) if scale is None else float(scale)
    a = default_grid(scale=scale) if alphas is None else np.asarray(alphas, dtype=float)
    method = _pick_method(n, m, method)
    se = None
    if method == "closed_form":
        if m is not Metric.KENDALL:
            raise ValueError("the closed form exists only for the Kendall distance")
        z = np.array([kendall_log_partition(n, x) for x in a])
    elif method == "exact_enum":
        z = np.array([exact_log_partition(n, x, m) for x in a])
    elif method == "importance_sampling":
        res = [importance_sample_log_partition(n, x, m, K, seed, workers=workers,
                                               exact_tail=exact_tail)
               for x in a]
        z = np.array([r[0] for r in res])
        se = np.array([r[1] for r in res])
    else:
        raise ValueError(f"cannot build a table with method {method!r}")
    if np.any(np.diff(z) >= 0):
        log.warning("log Z estimates are not strictly decreasing on the grid "
                    "(n=%d, %s); consider a larger K", n, m.value)
    coef, resid = fit_log_partition(a, z, degree=degree, anchor=math.lgamma(n + 1),
                                    scale=scale)
    return LogPartitionTable(
        n=n, metric=m, method=method, alphas=a, log_z=z, poly=coef,
        alpha_min=0.0, alpha_max=float(a.max()), fit_residual=resid,
        K=K if method == "importance_sampling" else None,
        seed=seed if method == "importance_sampling" else None, scale=scale, std_error=se)


def import_table(n: int, metric: Metric | str, alphas, log_z, *,
                 degree: int = DEFAULT_DEGREE, scale: float = 0.0) -> LogPartitionTable:
    """Wrap externally computed values, e.g. large-n asymptotic approximations."""
    a = np.asarray(alphas, dtype=float)
    z = np.asarray(log_z, dtype=float)
    coef, resid = fit_log_partition(a, z, degree=degree, scale=scale)
    return LogPartitionTable(n=n, metric=as_metric(metric), method="imported", alphas=a,
                             log_z=z, poly=coef, alpha_min=float(a.min()),
                             alpha_max=float(a.max()), fit_residual=resid, scale=scale)


def reference_log_z(n: int, metric: Metric | str, alphas) -> np.ndarray | None:
    """Exact log Z on a grid when it is cheaply available, else None."""
    m = as_metric(metric)
    if m is Metric.KENDALL:
        return np.array([kendall_log_partition(n, x) for x in alphas])
    if n <= ENUMERATION_CAP:
        return np.array([exact_log_partition(n, x, m) for x in alphas])
    return None
