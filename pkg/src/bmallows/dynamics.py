"""Time-dependent Mallows model.

Consensus rankings rho^(0..T) follow a Mallows chain with dispersion beta,
rho^(t) | rho^(t-1) ~ Mallows(rho^(t-1), beta); dispersions follow a
positive Gaussian random walk alpha^(t) ~ N(alpha^(t-1), sigma2) with an
inverse-gamma prior IG(a, b) on sigma2. alpha^(0) and beta get exponential
priors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _chains as CH
from . import _kernels as K
from .augmentation import infer_n, pack
from .partition import LogPartitionTable
from .ranking import Metric, as_metric, check_ranking
from .rng import as_rng, make_rng
from .sampler import Tuning, _resolve_table, diagnostics_from, mean_rank_start, warn_range


@dataclass(frozen=True)
class DynamicPriors:
    """Rates for alpha^(0) and beta (beta defaults to the same rate) and IG(a, b)."""

    lam: float = 0.1
    lam_beta: float | None = None
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not self.lam > 0 or (self.lam_beta is not None and not self.lam_beta > 0):
            raise ValueError("rates must be positive")
        if not (self.a > 0 and self.b > 0):
            raise ValueError("a and b must be positive")

    @property
    def beta_rate(self) -> float:
        return self.lam if self.lam_beta is None else self.lam_beta


@dataclass(frozen=True)
class TimedData:
    """Observations per time point; a slice may be empty."""

    slices: tuple

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(tuple(s) for s in self.slices))
        if not self.slices:
            raise ValueError("need at least one time point")

    @property
    def T(self) -> int:
        return len(self.slices) - 1

    @property
    def counts(self) -> tuple:
        return tuple(len(s) for s in self.slices)

    def flat(self) -> list:
        return [x for s in self.slices for x in s]


@dataclass
class DynamicSamples:
    alpha: np.ndarray  # (samples, T+1)
    rho: np.ndarray  # (samples, T+1, n)
    beta: np.ndarray
    sigma2: np.ndarray
    iteration: np.ndarray
    metric: Metric
    priors: DynamicPriors
    tuning: Tuning
    diagnostics: dict = field(default_factory=dict)
    model: str = "dynamic"

    @property
    def n(self) -> int:
        return self.rho.shape[-1]

    def __len__(self) -> int:
        return self.alpha.shape[0]

    def mean_rank_trajectories(self) -> np.ndarray:
        """(T+1, n) posterior mean rank of every item at every time."""
        return self.rho.mean(axis=0)


# ---------------------------------------------------------------- single updates


def _slice_arrays(data_by_t: Sequence):
    rows = [check_ranking(r) for s in data_by_t for r in s]
    ptr = np.cumsum([0] + [len(s) for s in data_by_t]).astype(np.int64)
    n = rows[0].size if rows else None
    return (np.array(rows, dtype=np.int64) if rows else None), ptr, n


def mh_rho_t(rho, t: int, alpha, beta: float, data_by_t: Sequence, metric, L: int, rng
             ) -> tuple[np.ndarray, bool]:
    """Leap-and-shift update of rho^(t) given complete data per time point."""
    rho = np.array(rho, dtype=np.int64)
    n = rho.shape[1]
    aug, ptr, _ = _slice_arrays(data_by_t)
    if aug is None:
        aug = np.zeros((0, n), dtype=np.int64)
    prop = np.empty(n, dtype=np.int64)
    acc = CH.dyn_rho_step(rho, t, prop, float(alpha[t]), float(beta), aug, ptr[t], ptr[t + 1],
                          as_metric(metric).code, int(L), as_rng(rng))
    return rho, bool(acc)


def mh_alpha_t(alpha, t: int, rho, data_by_t: Sequence, metric, table: LogPartitionTable,
               sigma2: float, lam: float, step: float, rng) -> tuple[np.ndarray, int]:
    m = as_metric(metric)
    alpha = np.array(alpha, dtype=float)
    rho = np.asarray(rho, dtype=np.int64)
    rows = [check_ranking(r) for r in data_by_t[t]]
    d_t = sum(int(K.dist(r, rho[t], m.code)) for r in rows)
    coef, amin, amax = table.kernel_args()
    code = CH.dyn_alpha_step(alpha, t, len(rows), d_t, rho.shape[1], float(sigma2), float(lam),
                             float(step), coef, amin, amax, as_rng(rng))
    return alpha, int(code)


def mh_beta(beta: float, rho, metric, table: LogPartitionTable, lam: float, step: float,
            rng) -> tuple[float, int]:
    rho = np.asarray(rho, dtype=np.int64)
    coef, amin, amax = table.kernel_args()
    b, code = CH.beta_step(float(beta), rho, rho.shape[1], float(lam), float(step),
                           as_metric(metric).code, coef, amin, amax, as_rng(rng))
    return float(b), int(code)


def gibbs_sigma_alpha(alpha, a: float, b: float, rng) -> float:
    """Draw sigma2 ~ IG(a + T/2, b + sum of squared increments / 2)."""
    return float(CH.sigma2_draw(np.asarray(alpha, dtype=float), float(a), float(b),
                                as_rng(rng)))


# ---------------------------------------------------------------- chain


def run_dynamic_chain(data: TimedData, metric: Metric | str,
                      priors: DynamicPriors = DynamicPriors(), tuning: Tuning = Tuning(),
                      table: LogPartitionTable | None = None, *, n: int | None = None,
                      step_beta: float = 0.04, beta_init: float = 1.0,
                      sigma2_init: float = 1.0, alpha_init=None, rho_init=None,
                      update_alpha: bool = True, update_beta: bool = True,
                      update_sigma: bool = True, stream: int = 0) -> DynamicSamples:
    """Posterior samples of the time-dependent model.

    A sweep updates every rho^(t), every alpha^(t), beta and sigma2 in that
    order. Observations may be complete rankings, partial rankings,
    preference sets or tie sets. The ``update_*`` flags hold a parameter at
    its initial value.
    """
    m = as_metric(metric)
    flat = data.flat()
    n = infer_n(flat) if n is None else n
    table = _resolve_table(table, n, m)
    tuning.check_leap(n)
    packed = pack(flat, n, make_rng(tuning.seed, stream, 1))
    slice_ptr = np.cumsum([0, *data.counts]).astype(np.int64)
    T1 = data.T + 1
    if rho_init is None:
        rho = np.array([mean_rank_start(packed.aug[slice_ptr[t]:slice_ptr[t + 1]])
                        for t in range(T1)], dtype=np.int64)
    else:
        rho = np.array([check_ranking(r) for r in rho_init], dtype=np.int64)
    alpha = (np.full(T1, float(tuning.alpha_init)) if alpha_init is None
             else np.array(alpha_init, dtype=float))
    if rho.shape != (T1, n) or alpha.shape != (T1,):
        raise ValueError("initial values have the wrong shape")
    coef, amin, amax = table.kernel_args()
    step = float(tuning.sigma_for(m))
    out_alpha, out_rho, out_beta, out_sigma2, counters = CH.dynamic_chain(
        *packed.kernel_args(), slice_ptr, rho, alpha, float(beta_init), float(sigma2_init),
        m.code, tuning.L, float(priors.lam), float(priors.beta_rate), step, float(step_beta),
        float(priors.a), float(priors.b), coef, amin, amax,
        update_alpha, update_beta, update_sigma,
        tuning.iterations, tuning.burn_in, tuning.thinning, tuning.aug_frequency,
        tuning.tie_interval, make_rng(tuning.seed, stream))
    diag = diagnostics_from(counters)
    warn_range(diag, table)
    k = out_alpha.shape[0]
    return DynamicSamples(out_alpha, out_rho, out_beta, out_sigma2,
                          tuning.burn_in + tuning.thinning * np.arange(1, k + 1),
                          m, priors, tuning, diag)
