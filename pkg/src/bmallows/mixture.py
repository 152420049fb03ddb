"""Finite mixtures of Mallows models and fixed-label classification.

Assessor j belongs to cluster z_j with probability tau_{z_j}; cluster c has
its own consensus rho_c and dispersion alpha_c. By default the dispersions
are kept ordered, alpha_1 < ... < alpha_C, which makes clusters identifiable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _chains as CH
from . import _kernels as K
from .augmentation import infer_n, pack
from .partition import LogPartitionTable
from .ranking import Metric, as_metric, check_ranking, check_rankings
from .rng import as_rng, make_rng
from .sampler import (Packed, Tuning, _resolve_table, diagnostics_from, mean_rank_start,
                      warn_range)

ALPHA_MODES = {"ordered": CH.ORDERED, "free": CH.FREE, "shared": CH.SHARED}


@dataclass(frozen=True)
class MixturePriors:
    """Exponential(lam) on every alpha_c and a symmetric Dirichlet(psi) on tau."""

    lam: float = 0.1
    psi: float = 2.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if not self.psi > 0:
            raise ValueError("psi must be positive")


@dataclass
class MixtureSamples:
    alpha: np.ndarray  # (samples, C)
    rho: np.ndarray  # (samples, C, n)
    tau: np.ndarray  # (samples, C)
    z: np.ndarray  # (samples, N)
    iteration: np.ndarray
    metric: Metric
    priors: MixturePriors
    tuning: Tuning
    alpha_mode: str = "ordered"
    corrected: bool = False
    diagnostics: dict = field(default_factory=dict)
    model: str = "mixture"

    @property
    def C(self) -> int:
        return self.alpha.shape[1]

    @property
    def n(self) -> int:
        return self.rho.shape[-1]

    def __len__(self) -> int:
        return self.alpha.shape[0]

    def assignment_probabilities(self) -> np.ndarray:
        """(N, C) posterior frequencies of each label."""
        return np.stack([(self.z == c).mean(axis=0) for c in range(self.C)], axis=1)

    def map_labels(self) -> np.ndarray:
        return np.argmax(self.assignment_probabilities(), axis=1)

    def map_centers(self) -> np.ndarray:
        """Most frequent sampled ranking per cluster; ties go to the first seen."""
        out = np.empty((self.C, self.n), dtype=np.int64)
        for c in range(self.C):
            rows = [tuple(r) for r in self.rho[:, c, :]]
            counts: dict = {}
            for r in rows:
                counts[r] = counts.get(r, 0) + 1
            best = max(counts.values())
            out[c] = next(r for r in rows if counts[r] == best)
        return out


# ---------------------------------------------------------------- single updates


def gibbs_tau(z, psi: float, C: int, rng) -> np.ndarray:
    """Draw tau ~ Dirichlet(psi + n_1, ..., psi + n_C)."""
    counts = np.bincount(np.asarray(z, dtype=np.int64), minlength=C)[:C]
    return as_rng(rng).dirichlet(psi + counts)


def cluster_log_weights(R, tau, rhos, alphas, table: LogPartitionTable,
                        metric: Metric | str) -> np.ndarray:
    m = as_metric(metric)
    R = check_ranking(R)
    n = R.size
    out = np.empty(len(alphas))
    with np.errstate(divide="ignore"):
        lt = np.log(np.asarray(tau, dtype=float))
    for c, (rho, a) in enumerate(zip(rhos, alphas)):
        d = K.dist(R, check_ranking(rho), m.code)
        out[c] = lt[c] - table(a) - a / n * d
    return out


def cluster_probabilities(R, tau, rhos, alphas, table, metric) -> np.ndarray:
    """Normalized P(z_j = c | tau, rho, alpha, R_j)."""
    lw = cluster_log_weights(R, tau, rhos, alphas, table, metric)
    lw = lw - lw.max()
    p = np.exp(lw)
    return p / p.sum()


def gibbs_z(R, tau, rhos, alphas, table, metric, rng) -> int:
    p = cluster_probabilities(R, tau, rhos, alphas, table, metric)
    return int(as_rng(rng).choice(p.size, p=p))


def mh_rho_cluster(c: int, data, z, rhos, alphas, metric, L: int, rng, *,
                   exact: bool = False) -> tuple[np.ndarray, bool]:
    """Leap-and-shift update of rho_c against the members of cluster c."""
    arr = check_rankings(data)
    rho = check_ranking(rhos[c]).copy()
    members = np.nonzero(np.asarray(z) == c)[0].astype(np.int64)
    prop = np.empty_like(rho)
    acc = K.rho_step(rho, prop, float(alphas[c]), arr, members, as_metric(metric).code,
                     int(L), exact, as_rng(rng))
    return rho, bool(acc)


def mh_alpha_cluster(c: int, data, z, rhos, alphas, lam: float, table: LogPartitionTable,
                     metric, rng, *, corrected: bool = False,
                     sigma: float = 0.04) -> tuple[np.ndarray, int]:
    """Update alpha_c; returns the new alpha vector and an outcome code.

    Codes: 1 accepted, 0 rejected, -1 negative proposal, -2 outside the
    table, -3 proposal interval narrower than the minimum width (skipped).
    With one cluster this is the Gaussian random walk of the base sampler.
    """
    m = as_metric(metric)
    arr = check_rankings(data)
    alphas = np.array(alphas, dtype=float)
    members = np.nonzero(np.asarray(z) == c)[0].astype(np.int64)
    rho = check_ranking(rhos[c])
    tot = int(K.subset_dist(arr, members, rho, m.code))
    coef, amin, amax = table.kernel_args()
    rng = as_rng(rng)
    if alphas.size == 1:
        a, code = K.alpha_step(alphas[0], members.size, tot, rho.size, float(lam),
                               float(sigma), coef, amin, amax, rng)
        alphas[0] = a
        return alphas, int(code)
    code = K.ordered_alpha_step(alphas, c, members.size, tot, rho.size, float(lam),
                                coef, amin, amax, corrected, rng)
    return alphas, int(code)


# ---------------------------------------------------------------- chains


def _init_labels(aug: np.ndarray, C: int, metric: Metric, rng) -> np.ndarray:
    # farthest-point seeding on the initial latent rankings
    N = aug.shape[0]
    if N == 0:
        return np.zeros(0, dtype=np.int64)
    centers = [int(rng.integers(N))]
    d = np.array([K.dist(aug[j], aug[centers[0]], metric.code) for j in range(N)], float)
    while len(centers) < min(C, N):
        nxt = int(np.argmax(d))
        centers.append(nxt)
        d = np.minimum(d, [K.dist(aug[j], aug[nxt], metric.code) for j in range(N)])
    dist = np.array([[K.dist(aug[j], aug[c], metric.code) for c in centers]
                     for j in range(N)])
    return np.argmin(dist, axis=1).astype(np.int64)


def _run(packed: Packed, C: int, metric: Metric, priors: MixturePriors, tuning: Tuning,
         table: LogPartitionTable, alpha_mode: str, corrected: bool, z_init, z_fixed,
         stream: int, alpha_init=None) -> MixtureSamples:
    if alpha_mode not in ALPHA_MODES:
        raise ValueError(f"alpha_mode must be one of {sorted(ALPHA_MODES)}")
    if C < 1:
        raise ValueError("C must be at least 1")
    n = packed.aug.shape[1]
    N = packed.n_assessors
    tuning.check_leap(n)
    rng = make_rng(tuning.seed, stream)
    z = (_init_labels(packed.aug, C, metric, rng) if z_init is None
         else np.array(z_init, dtype=np.int64))
    if z.shape != (N,) or (N and (z.min() < 0 or z.max() >= C)):
        raise ValueError("labels must be N integers in 0..C-1")
    rho = np.empty((C, n), dtype=np.int64)
    for c in range(C):
        members = packed.aug[z == c]
        rho[c] = mean_rank_start(members) if len(members) else rng.permutation(n) + 1
    if alpha_init is None:
        alpha = tuning.alpha_init * (1.0 + np.arange(C)) if alpha_mode == "ordered" \
            else np.full(C, tuning.alpha_init)
    else:
        alpha = np.array(alpha_init, dtype=float)
    if alpha_mode == "ordered" and np.any(np.diff(alpha) <= 0):
        raise ValueError("ordered mode needs strictly increasing initial alphas")
    tau = np.full(C, 1.0 / C)
    fixed = np.zeros(N, dtype=np.bool_) if z_fixed is None else np.asarray(z_fixed, np.bool_)
    coef, amin, amax = table.kernel_args()
    out_alpha, out_rho, out_tau, out_z, _, counters = CH.mixture_chain(
        *packed.kernel_args(), rho, alpha, tau, z, fixed,
        metric.code, tuning.L, tuning.exact_ratio, float(priors.lam), float(priors.psi),
        float(tuning.sigma_for(metric)), ALPHA_MODES[alpha_mode], corrected,
        coef, amin, amax, tuning.iterations, tuning.burn_in, tuning.thinning,
        tuning.aug_frequency, tuning.tie_interval, False, rng)
    diag = diagnostics_from(counters)
    warn_range(diag, table)
    k = out_alpha.shape[0]
    return MixtureSamples(out_alpha, out_rho, out_tau, out_z,
                          tuning.burn_in + tuning.thinning * np.arange(1, k + 1),
                          metric, priors, tuning, alpha_mode, corrected, diag)


def run_mixture_chain(data: Sequence, C: int, metric: Metric | str,
                      priors: MixturePriors = MixturePriors(), tuning: Tuning = Tuning(),
                      table: LogPartitionTable | None = None, *, alpha_mode: str = "ordered",
                      corrected: bool = False, n: int | None = None, z_init=None,
                      alpha_init=None, stream: int = 0) -> MixtureSamples:
    """Posterior samples of a C-component Mallows mixture.

    One sweep updates every (rho_c, alpha_c), then tau, then every z_j; with
    partial or pairwise data a latent-ranking sweep comes first. ``corrected``
    adds the proposal-density ratio for the asymmetric ordered-alpha
    proposals; the default follows the published acceptance rule.
    """
    m = as_metric(metric)
    n = infer_n(data) if n is None else n
    table = _resolve_table(table, n, m)
    packed = pack(data, n, make_rng(tuning.seed, stream, 1))
    return _run(packed, C, m, priors, tuning, table, alpha_mode, corrected, z_init, None,
                stream, alpha_init)


def within_cluster_ss(samples: MixtureSamples, data, metric: Metric | str | None = None
                      ) -> np.ndarray:
    """Per draw, the sum over assessors of d(R_j, rho_{z_j}) squared."""
    m = as_metric(metric or samples.metric)
    arr = check_rankings(data)
    out = np.empty(len(samples))
    for s in range(len(samples)):
        rho = samples.rho[s]
        z = samples.z[s]
        out[s] = sum(float(K.dist(arr[j], rho[z[j]], m.code)) ** 2 for j in range(arr.shape[0]))
    return out


# ---------------------------------------------------------------- classification


@dataclass
class Classification:
    probabilities: np.ndarray  # (N_test, C)
    samples: MixtureSamples

    @property
    def map_labels(self) -> np.ndarray:
        return np.argmax(self.probabilities, axis=1)


def classify(train: Sequence, labels, test: Sequence, metric: Metric | str,
             priors: MixturePriors = MixturePriors(), tuning: Tuning = Tuning(),
             table: LogPartitionTable | None = None, *, C: int | None = None,
             alpha_mode: str = "shared", n: int | None = None,
             stream: int = 0) -> Classification:
    """Class probabilities for test assessors given labelled training assessors.

    Training labels stay fixed; only the test labels are sampled. A single
    alpha shared by all classes is the default (``alpha_mode="free"`` gives
    each class its own, unconstrained).
    """
    m = as_metric(metric)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size != len(train):
        raise ValueError("one label per training assessor is required")
    C = int(labels.max()) + 1 if C is None else C
    data = list(train) + list(test)
    n = infer_n(data) if n is None else n
    table = _resolve_table(table, n, m)
    packed = pack(data, n, make_rng(tuning.seed, stream, 1))
    fixed = np.r_[np.ones(len(train), bool), np.zeros(len(test), bool)]
    # test assessors start at the closest training-class centre
    centers = [mean_rank_start(packed.aug[: len(train)][labels == c]) for c in range(C)]
    z0 = labels.tolist()
    for j in range(len(train), len(data)):
        z0.append(int(np.argmin([K.dist(packed.aug[j], ctr, m.code) for ctr in centers])))
    out = _run(packed, C, m, priors, tuning, table, alpha_mode, True, np.array(z0), fixed,
               stream, None)
    probs = out.assignment_probabilities()[len(train):]
    return Classification(probs, out)


def leave_one_out(data: Sequence, labels, metric: Metric | str,
                  priors: MixturePriors = MixturePriors(), tuning: Tuning = Tuning(),
                  table: LogPartitionTable | None = None, **kw) -> np.ndarray:
    """MAP class of each assessor when classified from all the others."""
    labels = np.asarray(labels, dtype=np.int64)
    C = int(labels.max()) + 1
    pred = np.empty(len(data), dtype=np.int64)
    for j in range(len(data)):
        keep = np.arange(len(data)) != j
        res = classify([d for i, d in enumerate(data) if i != j], labels[keep], [data[j]],
                       metric, priors, tuning, table, C=C, stream=j, **kw)
        pred[j] = res.map_labels[0]
    return pred


def best_label_accuracy(pred, truth, C: int) -> float:
    """Accuracy maximized over relabelings of the predicted clusters."""
    from itertools import permutations
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    return max(float(np.mean(np.asarray(p)[pred] == truth)) for p in permutations(range(C)))
