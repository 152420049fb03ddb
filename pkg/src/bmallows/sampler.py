"""Metropolis-Hastings inference for the Mallows model with complete data.

The posterior over the consensus ranking rho and the dispersion alpha is
explored by alternating a leap-and-shift update of rho with a Gaussian
random-walk update of alpha. The same compiled driver also serves the
augmentation and mixture modules.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from . import _chains as CH
from . import _kernels as K
from .partition import LogPartitionTable, build_table
from .ranking import Metric, as_metric, check_ranking, check_rankings
from .rng import as_rng, make_rng

log = logging.getLogger(__name__)

RANGE_WARN_FRACTION = 0.01


@dataclass(frozen=True)
class Priors:
    """alpha ~ Exponential(lam); rho is uniform on permutations."""

    lam: float = 0.1

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be positive, got {self.lam}")


def default_sigma_alpha(metric: Metric | str) -> float:
    return 0.0016 if as_metric(metric) is Metric.SPEARMAN else 0.04


@dataclass(frozen=True)
class Tuning:
    """MCMC settings.

    ``sigma_alpha=None`` picks the metric default (0.04, or 0.0016 for
    Spearman). ``exact_ratio`` switches on the diagnostic mode that multiplies
    the acceptance by the leap-and-shift transition ratio.
    """

    iterations: int = 100_000
    burn_in: int = 10_000
    thinning: int = 10
    L: int = 1
    sigma_alpha: float | None = None
    seed: int = 1
    alpha_init: float = 1.0
    exact_ratio: bool = False
    aug_frequency: int = 1
    tie_interval: int = 10
    save_augmented: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must lie in [0, iterations)")
        if self.thinning < 1:
            raise ValueError("thinning must be positive")
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.sigma_alpha is not None and not self.sigma_alpha > 0:
            raise ValueError("sigma_alpha must be positive")
        if self.alpha_init < 0:
            raise ValueError("alpha_init must be nonnegative")
        if self.aug_frequency < 1 or self.tie_interval < 1:
            raise ValueError("aug_frequency and tie_interval must be positive")

    def sigma_for(self, metric) -> float:
        return self.sigma_alpha if self.sigma_alpha is not None else default_sigma_alpha(metric)

    def check_leap(self, n: int):
        if n >= 2 and self.L > math.ceil(n / 2):
            raise ValueError(f"L={self.L} exceeds ceil(n/2)={math.ceil(n / 2)}")

    @property
    def n_samples(self) -> int:
        return (self.iterations - self.burn_in) // self.thinning


@dataclass
class ChainState:
    alpha: float
    rho: np.ndarray
    iteration: int = 0
    rho_accepted: int = 0
    rho_proposed: int = 0
    alpha_accepted: int = 0
    alpha_proposed: int = 0
    range_rejected: int = 0

    def copy(self) -> "ChainState":
        return replace(self, rho=self.rho.copy())


@dataclass
class PosteriorSamples:
    """Thinned draws of a single-population chain.

    ``rho`` has shape (samples, n); ``augmented`` (samples, N, n) is filled
    when augmentation ran with ``save_augmented``.
    """

    alpha: np.ndarray
    rho: np.ndarray
    iteration: np.ndarray
    metric: Metric
    priors: Priors
    tuning: Tuning
    diagnostics: dict = field(default_factory=dict)
    augmented: np.ndarray | None = None
    model: str = "static"

    @property
    def n(self) -> int:
        return self.rho.shape[-1]

    def __len__(self) -> int:
        return self.alpha.shape[0]


# ---------------------------------------------------------------- proposal


def leap_and_shift(rho, L: int, rng) -> tuple[np.ndarray, int, int]:
    """One leap-and-shift proposal; returns (rho', u, r) with u a 0-based item."""
    rho = check_ranking(rho)
    if rho.size < 2:
        raise ValueError("leap-and-shift needs n >= 2")
    out = np.empty_like(rho)
    u, r = K.leap_and_shift_into(rho, int(L), as_rng(rng), out)
    return out, int(u), int(r)


def leap_support(rho_u: int, n: int, L: int) -> np.ndarray:
    """Ranks the leap can move an item currently at ``rho_u`` to."""
    lo, hi = K.leap_support(int(rho_u), int(n), int(L))
    s = np.arange(lo, hi + 1)
    return s[s != rho_u]


def leap_pmf(rho, rho_star, L: int) -> float:
    """Probability of the leap step taking rho to rho_star.

    ``rho_star`` differs from ``rho`` in one coordinate u (it is generally not
    a permutation); the mass is (1/n) / |S_u| if rho_star[u] lies in the
    support S_u, else 0.
    """
    rho = check_ranking(rho)
    star = np.asarray(rho_star, dtype=np.int64)
    if star.shape != rho.shape:
        raise ValueError("dimension mismatch")
    diff = np.nonzero(star != rho)[0]
    if diff.size != 1:
        return 0.0
    u = int(diff[0])
    s = leap_support(rho[u], rho.size, L)
    return 1.0 / (rho.size * s.size) if star[u] in s else 0.0


def proposal_prob(rho, rho_prime, L: int) -> float:
    """Probability that one full leap-and-shift move takes rho to rho_prime."""
    rho = check_ranking(rho)
    rp = check_ranking(rho_prime)
    return float(K.transition_prob(rho, rp, int(L)))


# ---------------------------------------------------------------- single steps


def _resolve_table(table, n: int, metric: Metric) -> LogPartitionTable:
    if table is None:
        log.info("no partition table given; building one for n=%d, %s", n, metric.value)
        return build_table(n, metric)
    if table.n != n or table.metric is not metric:
        raise ValueError(f"partition table is for n={table.n}, {table.metric.value}; "
                         f"data need n={n}, {metric.value}")
    return table


def mh_step_rho(state: ChainState, data, metric: Metric | str, L: int, rng, *,
                exact: bool = False) -> ChainState:
    m = as_metric(metric)
    arr = check_rankings(data)
    new = state.copy()
    prop = np.empty_like(new.rho)
    acc = K.rho_step(new.rho, prop, float(new.alpha), arr, np.arange(arr.shape[0]),
                     m.code, int(L), exact, as_rng(rng))
    new.rho_proposed += 1
    new.rho_accepted += int(acc)
    return new


def mh_step_alpha(state: ChainState, data, metric: Metric | str, table: LogPartitionTable,
                  lam: float, sigma: float, rng) -> ChainState:
    m = as_metric(metric)
    arr = check_rankings(data)
    total = int(K.total_dist(arr, state.rho, m.code))
    coef, amin, amax = table.kernel_args()
    a, code = K.alpha_step(float(state.alpha), arr.shape[0], total, state.rho.size,
                           float(lam), float(sigma), coef, amin, amax, as_rng(rng))
    new = state.copy()
    new.alpha = float(a)
    new.alpha_proposed += 1
    new.alpha_accepted += int(code == 1)
    if code == K.RANGE_REJECT:
        new.range_rejected += 1
        log.debug("alpha proposal outside table range [%g, %g]", amin, amax)
    return new


# ---------------------------------------------------------------- packed data


@dataclass
class Packed:
    """Flat array layout of a data set for the compiled drivers.

    ``kind`` per assessor: 0 complete, 1 partial (missing items listed in
    ``miss_idx``), 2 pairwise preferences (rows of ``pairs``), 3 ties.
    """

    aug: np.ndarray
    kind: np.ndarray
    miss_ptr: np.ndarray
    miss_idx: np.ndarray
    pair_ptr: np.ndarray
    pairs: np.ndarray
    tie_ptr: np.ndarray
    group_ptr: np.ndarray
    group_items: np.ndarray
    group_start: np.ndarray

    @classmethod
    def complete(cls, data) -> "Packed":
        arr = np.array(data, dtype=np.int64, copy=True)
        N = arr.shape[0]
        z = np.zeros(N + 1, dtype=np.int64)
        return cls(arr, np.zeros(N, dtype=np.int64), z, np.zeros(0, np.int64), z.copy(),
                   np.zeros((0, 2), np.int64), z.copy(), np.zeros(1, np.int64),
                   np.zeros(0, np.int64), np.zeros(0, np.int64))

    def kernel_args(self):
        return (self.aug, self.kind, self.miss_ptr, self.miss_idx, self.pair_ptr, self.pairs,
                self.tie_ptr, self.group_ptr, self.group_items, self.group_start)

    @property
    def n_assessors(self) -> int:
        return self.aug.shape[0]


def mean_rank_start(aug: np.ndarray) -> np.ndarray:
    """Ranking of items by mean rank, a cheap starting point for rho."""
    if aug.shape[0] == 0:
        return np.arange(1, aug.shape[1] + 1, dtype=np.int64)
    order = np.argsort(aug.mean(axis=0), kind="stable")
    rho = np.empty(aug.shape[1], dtype=np.int64)
    rho[order] = np.arange(1, aug.shape[1] + 1)
    return rho


def diagnostics_from(counters: np.ndarray) -> dict:
    c = [int(x) for x in counters]

    def rate(a, b):
        return c[a] / c[b] if c[b] else None

    return {
        "rho_acceptance": rate(CH.RHO_ACC, CH.RHO_TRIED),
        "alpha_acceptance": rate(CH.ALPHA_ACC, CH.ALPHA_TRIED),
        "augmentation_acceptance": rate(CH.AUG_ACC, CH.AUG_TRIED),
        "beta_acceptance": rate(CH.BETA_ACC, CH.BETA_TRIED),
        "alpha_proposals": c[CH.ALPHA_TRIED],
        "range_rejections": c[CH.RANGE],
        "negative_rejections": c[CH.SUPPORT],
        "narrow_width_skips": c[CH.WIDTH],
    }


def warn_range(diag: dict, table: LogPartitionTable):
    tried = diag["alpha_proposals"]
    if tried and diag["range_rejections"] > RANGE_WARN_FRACTION * tried:
        log.warning("%d of %d alpha proposals fell outside the partition table range "
                    "[%g, %g]; rebuild the table on a wider grid",
                    diag["range_rejections"], tried, table.alpha_min, table.alpha_max)


def run_packed(packed: Packed, metric: Metric, priors: Priors, tuning: Tuning,
               table: LogPartitionTable, rho_init=None, model: str = "static",
               stream: int = 0) -> PosteriorSamples:
    n = packed.aug.shape[1]
    tuning.check_leap(n)
    rng = make_rng(tuning.seed, stream)
    rho0 = mean_rank_start(packed.aug) if rho_init is None else check_ranking(rho_init).copy()
    if rho0.size != n:
        raise ValueError("rho_init has the wrong length")
    coef, amin, amax = table.kernel_args()
    N = packed.n_assessors
    out_alpha, out_rho, _, _, out_aug, counters = CH.mixture_chain(
        *packed.kernel_args(),
        rho0[None, :].copy(), np.array([float(tuning.alpha_init)]), np.ones(1),
        np.zeros(N, dtype=np.int64), np.ones(N, dtype=np.bool_),
        metric.code, tuning.L, tuning.exact_ratio, float(priors.lam), 1.0,
        float(tuning.sigma_for(metric)), CH.FREE, True,
        coef, amin, amax, tuning.iterations, tuning.burn_in, tuning.thinning,
        tuning.aug_frequency, tuning.tie_interval, tuning.save_augmented, rng)
    diag = diagnostics_from(counters)
    warn_range(diag, table)
    k = out_alpha.shape[0]
    return PosteriorSamples(
        alpha=out_alpha[:, 0].copy(), rho=out_rho[:, 0, :].copy(),
        iteration=tuning.burn_in + tuning.thinning * np.arange(1, k + 1),
        metric=metric, priors=priors, tuning=tuning, diagnostics=diag,
        augmented=out_aug if tuning.save_augmented else None, model=model)


def run_chain(data, metric: Metric | str, priors: Priors = Priors(),
              tuning: Tuning = Tuning(), table: LogPartitionTable | None = None, *,
              rho_init=None, stream: int = 0) -> PosteriorSamples:
    """Posterior samples of (alpha, rho) from complete rankings.

    Each iteration performs one leap-and-shift update of rho and one
    random-walk update of alpha. Retained iterations are those with
    ``iteration > burn_in`` and ``(iteration - burn_in) % thinning == 0``
    (1-based). ``stream`` selects an independent random stream for the
    same seed, for running several chains.
    """
    m = as_metric(metric)
    arr = check_rankings(data)
    table = _resolve_table(table, arr.shape[1], m)
    return run_packed(Packed.complete(arr), m, priors, tuning, table, rho_init, stream=stream)


# ---------------------------------------------------------------- data generation


def generate_by_perturbation(rho_true, N: int, n_leap: int, L: int, seed) -> np.ndarray:
    """N rankings, each obtained from rho_true by ``n_leap`` leap-and-shift moves."""
    rho = check_ranking(rho_true)
    if N < 0 or n_leap < 0:
        raise ValueError("N and n_leap must be nonnegative")
    rng = as_rng(seed)
    out = np.empty((N, rho.size), dtype=np.int64)
    buf = np.empty_like(rho)
    for j in range(N):
        cur = rho.copy()
        for _ in range(n_leap):
            K.leap_and_shift_into(cur, int(L), rng, buf)
            cur, buf = buf, cur
        out[j] = cur
    return out


@njit(cache=True)
def _mallows_draws(rho, alpha, metric, N, burn, thin, L, rng):
    n = rho.shape[0]
    cur = rho.copy()
    prop = np.empty(n, dtype=np.int64)
    out = np.empty((N, n), dtype=np.int64)
    one = np.zeros(1, dtype=np.int64)
    # a chain over R with fixed centre: rho_step against the single "datum" rho
    data = rho[None, :]
    for it in range(burn + N * thin):
        K.rho_step(cur, prop, alpha, data, one, metric, L, False, rng)
        if it >= burn and (it - burn + 1) % thin == 0:
            out[(it - burn) // thin] = cur
    return out


def sample_mallows(rho, alpha: float, metric: Metric | str, N: int, seed, *,
                   burn_in: int = 1000, thinning: int = 100, L: int = 1) -> np.ndarray:
    """N approximately independent draws from Mallows(rho, alpha).

    A Metropolis chain over rankings with leap-and-shift proposals is run to
    ``burn_in`` and then read every ``thinning`` steps.
    """
    rho = check_ranking(rho)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if N < 0:
        raise ValueError("N must be nonnegative")
    if rho.size < 2:
        return np.ones((N, rho.size), dtype=np.int64)
    return _mallows_draws(rho, float(alpha), as_metric(metric).code, int(N),
                          int(burn_in), int(thinning), int(L), as_rng(seed))
