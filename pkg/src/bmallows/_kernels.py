"""Compiled inner loops shared by the samplers.

Everything here works on 1-based rank vectors stored as int64 arrays, with
metric codes ``FOOTRULE``, ``SPEARMAN`` and ``KENDALL``. Random draws come from
a ``numpy.random.Generator`` passed in explicitly, so every kernel is
reproducible given the generator state.
"""

import math

import numpy as np
from numba import njit

FOOTRULE = 0
SPEARMAN = 1
KENDALL = 2

RANGE_REJECT = -2
SUPPORT_REJECT = -1


@njit(cache=True)
def elem_dist(a, b, metric):
    d = a - b
    if metric == FOOTRULE:
        return abs(d)
    return d * d


@njit(cache=True)
def kendall(x, y):
    """Discordant pairs, counted as inversions by a bottom-up merge sort."""
    n = x.shape[0]
    seq = np.empty(n, dtype=np.int64)
    for i in range(n):
        seq[y[i] - 1] = x[i]
    buf = np.empty(n, dtype=np.int64)
    count = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if seq[i] <= seq[j]:
                    buf[k] = seq[i]
                    i += 1
                else:
                    buf[k] = seq[j]
                    count += mid - i
                    j += 1
                k += 1
            while i < mid:
                buf[k] = seq[i]
                i += 1
                k += 1
            while j < hi:
                buf[k] = seq[j]
                j += 1
                k += 1
        seq, buf = buf, seq
        width *= 2
    return count


@njit(cache=True)
def dist(x, y, metric):
    if metric == KENDALL:
        return kendall(x, y)
    total = 0
    for i in range(x.shape[0]):
        total += elem_dist(x[i], y[i], metric)
    return total


@njit(cache=True)
def total_dist(data, rho, metric):
    total = 0
    for j in range(data.shape[0]):
        total += dist(data[j], rho, metric)
    return total


@njit(cache=True)
def subset_dist(data, members, rho, metric):
    total = 0
    for j in members:
        total += dist(data[j], rho, metric)
    return total


@njit(cache=True)
def log_z(coef, amin, amax, alpha):
    """Fitted log partition function, NaN off-range.

    ``coef[0]`` is the fit-coordinate scale s (the polynomial variable is
    alpha when s = 0, else log1p(s alpha)); ``coef[1:]`` are the power-basis
    coefficients, evaluated by Horner's rule.
    """
    if alpha < amin or alpha > amax:
        return np.nan
    s = coef[0]
    x = alpha if s == 0.0 else math.log1p(s * alpha)
    acc = 0.0
    for k in range(coef.shape[0] - 1, 0, -1):
        acc = acc * x + coef[k]
    return acc


# ---------------------------------------------------------------- leap & shift


@njit(cache=True)
def leap_support(rho_u, n, L):
    """Inclusive bounds of the leap window; rho_u itself is excluded by callers.

    Cases are tried in order and clipped to 1..n, which makes the overlapping
    cases agree when 2L >= n.
    """
    if L + 1 <= rho_u <= n - L:
        lo = rho_u - L
        hi = rho_u + L
    elif rho_u <= L:
        lo = 1
        hi = 2 * L
    else:
        lo = n - 2 * L + 1
        hi = n
    if lo < 1:
        lo = 1
    if hi > n:
        hi = n
    return lo, hi


@njit(cache=True)
def shift_into(rho, u, r, out):
    old = rho[u]
    for i in range(rho.shape[0]):
        v = rho[i]
        if i == u:
            out[i] = r
        elif old < v <= r:
            out[i] = v - 1
        elif r <= v < old:
            out[i] = v + 1
        else:
            out[i] = v


@njit(cache=True)
def draw_leap(rho, L, rng):
    n = rho.shape[0]
    u = rng.integers(0, n)
    lo, hi = leap_support(rho[u], n, L)
    r = lo + rng.integers(0, hi - lo)
    if r >= rho[u]:
        r += 1
    return u, r


@njit(cache=True)
def leap_and_shift_into(rho, L, rng, out):
    u, r = draw_leap(rho, L, rng)
    shift_into(rho, u, r, out)
    return u, r


@njit(cache=True)
def _is_shift_of(rho, u, r, prop):
    old = rho[u]
    for i in range(rho.shape[0]):
        v = rho[i]
        if i == u:
            w = r
        elif old < v <= r:
            w = v - 1
        elif r <= v < old:
            w = v + 1
        else:
            w = v
        if w != prop[i]:
            return False
    return True


@njit(cache=True)
def transition_prob(rho, prop, L):
    """Probability that one leap-and-shift move takes rho to prop."""
    n = rho.shape[0]
    total = 0.0
    for u in range(n):
        if prop[u] == rho[u]:
            continue
        lo, hi = leap_support(rho[u], n, L)
        if lo <= prop[u] <= hi and _is_shift_of(rho, u, prop[u], prop):
            total += 1.0 / (n * (hi - lo))
    return total


# ---------------------------------------------------------------- MH updates


@njit(cache=True)
def rho_step(rho, prop, alpha, data, members, metric, L, exact, rng):
    """One leap-and-shift MH update of rho against data[members]; 1 if accepted."""
    n = rho.shape[0]
    if n < 2:
        return 0
    leap_and_shift_into(rho, L, rng, prop)
    delta = 0
    for j in members:
        delta += dist(data[j], prop, metric) - dist(data[j], rho, metric)
    log_ratio = -alpha / n * delta
    if exact:
        fwd = transition_prob(rho, prop, L)
        bwd = transition_prob(prop, rho, L)
        if bwd == 0.0:
            return 0
        log_ratio += math.log(bwd) - math.log(fwd)
    if log_ratio >= 0.0 or math.log(rng.random()) < log_ratio:
        rho[:] = prop
        return 1
    return 0


@njit(cache=True)
def alpha_target(a, n_obs, total_d, n, lam, coef, amin, amax):
    """Log posterior kernel of one dispersion; NaN when a leaves the table."""
    if n_obs == 0:
        return -lam * a
    lz = log_z(coef, amin, amax, a)
    return -n_obs * lz - lam * a - a / n * total_d


@njit(cache=True)
def alpha_step(alpha, n_obs, total_d, n, lam, sigma, coef, amin, amax, rng):
    """Gaussian random-walk MH for alpha.

    Returns (new_alpha, code) with code 1 accepted, 0 rejected,
    SUPPORT_REJECT for a negative proposal and RANGE_REJECT when the proposal
    leaves the partition table.
    """
    prop = alpha + sigma * rng.normal()
    if prop < 0.0:
        return alpha, SUPPORT_REJECT
    t_new = alpha_target(prop, n_obs, total_d, n, lam, coef, amin, amax)
    if np.isnan(t_new):
        return alpha, RANGE_REJECT
    t_old = alpha_target(alpha, n_obs, total_d, n, lam, coef, amin, amax)
    log_ratio = t_new - t_old
    if log_ratio >= 0.0 or math.log(rng.random()) < log_ratio:
        return prop, 1
    return alpha, 0


# ---------------------------------------------------------------- augmentation


@njit(cache=True)
def partial_step(row, miss, alpha, rho, metric, rng, prop):
    """Uniform-on-fill-in proposal for the missing items ``miss`` of one row."""
    m = miss.shape[0]
    if m < 2:
        return 0
    n = row.shape[0]
    prop[:] = row
    # Fisher-Yates over the ranks currently held by the missing items
    for k in range(m - 1, 0, -1):
        s = rng.integers(0, k + 1)
        a = miss[k]
        b = miss[s]
        tmp = prop[a]
        prop[a] = prop[b]
        prop[b] = tmp
    delta = dist(prop, rho, metric) - dist(row, rho, metric)
    log_ratio = -alpha / n * delta
    if log_ratio >= 0.0 or math.log(rng.random()) < log_ratio:
        row[:] = prop
        return 1
    return 0


@njit(cache=True)
def rank_bounds(row, pairs, u):
    """(l, r): max rank of items preferred to u and min rank of items below u."""
    n = row.shape[0]
    lo = 0
    hi = n + 1
    for p in range(pairs.shape[0]):
        lower = pairs[p, 0]
        upper = pairs[p, 1]
        if lower == u:
            if row[upper] > lo:
                lo = row[upper]
        elif upper == u:
            if row[lower] < hi:
                hi = row[lower]
    return lo, hi


@njit(cache=True)
def constrained_leap_into(row, pairs, rng, out):
    n = row.shape[0]
    u = rng.integers(0, n)
    lo, hi = rank_bounds(row, pairs, u)
    r = rng.integers(lo + 1, hi)
    shift_into(row, u, r, out)
    return u, r


@njit(cache=True)
def preference_step(row, pairs, alpha, rho, metric, rng, prop):
    n = row.shape[0]
    constrained_leap_into(row, pairs, rng, prop)
    delta = dist(prop, rho, metric) - dist(row, rho, metric)
    log_ratio = -alpha / n * delta
    if log_ratio >= 0.0 or math.log(rng.random()) < log_ratio:
        row[:] = prop
        return 1
    return 0


@njit(cache=True)
def augment_row(j, kind, aug, miss_ptr, miss_idx, pair_ptr, pairs, alpha, rho,
                metric, rng, prop):
    """Dispatch one augmentation update for assessor j; returns (tried, accepted)."""
    if kind[j] == 1:
        miss = miss_idx[miss_ptr[j]:miss_ptr[j + 1]]
        if miss.shape[0] < 2:
            return 0, 0
        return 1, partial_step(aug[j], miss, alpha, rho, metric, rng, prop)
    if kind[j] == 2:
        sub = pairs[pair_ptr[j]:pair_ptr[j + 1]]
        return 1, preference_step(aug[j], sub, alpha, rho, metric, rng, prop)
    return 0, 0


@njit(cache=True)
def shuffle_blocks(row, group_ptr, group_items, group_start, rng):
    """Assign each tie group's rank block to its members in uniform random order."""
    for g in range(group_ptr.shape[0] - 1):
        a = group_ptr[g]
        b = group_ptr[g + 1]
        m = b - a
        for k in range(m):
            row[group_items[a + k]] = group_start[g] + k
        for k in range(m - 1, 0, -1):
            s = rng.integers(0, k + 1)
            x = group_items[a + k]
            y = group_items[a + s]
            tmp = row[x]
            row[x] = row[y]
            row[y] = tmp


# ---------------------------------------------------------------- ordered mixture alpha

WIDTH_SKIP = -3
MIN_WIDTH = 1e-6


@njit(cache=True)
def _log_beta52(x):
    # log density of Beta(5, 2) up to its constant
    if x <= 0.0 or x >= 1.0:
        return -np.inf
    return 4.0 * math.log(x) + math.log1p(-x)


@njit(cache=True)
def ordered_alpha_step(alpha, c, n_obs, total_d, n, lam, coef, amin, amax,
                       corrected, rng):
    """Update alpha[c] in place under alpha_1 < ... < alpha_C; returns a code.

    c = 0 proposes alpha_2 * Beta(5, 2), interior c a uniform draw between
    the neighbours and the last cluster U(alpha_{C-1}, alpha_C + 1). With
    ``corrected`` the proposal-density ratio enters the acceptance.
    """
    C = alpha.shape[0]
    cur = alpha[c]
    log_q = 0.0
    if c == 0:
        hi = alpha[1]
        if hi < MIN_WIDTH:
            return WIDTH_SKIP
        b = rng.beta(5.0, 2.0)
        prop = hi * b
        if corrected:
            log_q = _log_beta52(cur / hi) - _log_beta52(b)
    elif c < C - 1:
        lo = alpha[c - 1]
        hi = alpha[c + 1]
        if hi - lo < MIN_WIDTH:
            return WIDTH_SKIP
        prop = rng.uniform(lo, hi)
    else:
        lo = alpha[c - 1]
        if cur + 1.0 - lo < MIN_WIDTH:
            return WIDTH_SKIP
        prop = rng.uniform(lo, cur + 1.0)
        if corrected:
            if cur >= prop + 1.0:
                # the reverse move cannot reach the current value
                return 0
            log_q = math.log(cur + 1.0 - lo) - math.log(prop + 1.0 - lo)
    if c > 0 and prop <= alpha[c - 1]:
        return 0
    if c < C - 1 and prop >= alpha[c + 1]:
        return 0
    t_new = alpha_target(prop, n_obs, total_d, n, lam, coef, amin, amax)
    if np.isnan(t_new):
        return RANGE_REJECT
    t_old = alpha_target(cur, n_obs, total_d, n, lam, coef, amin, amax)
    log_ratio = t_new - t_old + log_q
    if log_ratio >= 0.0 or math.log(rng.random()) < log_ratio:
        alpha[c] = prop
        return 1
    return 0
