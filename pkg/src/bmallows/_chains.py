"""Compiled MCMC drivers.

``mixture_chain`` runs the static model (one cluster), finite mixtures and
the fixed-label classifier; ``dynamic_chain`` runs the time-indexed model.
Both take data already packed into flat arrays (see ``augmentation.pack``).
"""

import math

import numpy as np
from numba import njit

from ._kernels import (RANGE_REJECT, SUPPORT_REJECT, WIDTH_SKIP, alpha_step,
                       alpha_target, augment_row, dist, leap_and_shift_into,
                       log_z, ordered_alpha_step, rho_step, shuffle_blocks,
                       subset_dist)

# counter slots
RHO_ACC = 0
RHO_TRIED = 1
ALPHA_ACC = 2
ALPHA_TRIED = 3
RANGE = 4
SUPPORT = 5
WIDTH = 6
AUG_ACC = 7
AUG_TRIED = 8
BETA_ACC = 9
BETA_TRIED = 10
N_COUNTERS = 11

# alpha modes
ORDERED = 0
FREE = 1
SHARED = 2


@njit(cache=True)
def _record(code, counters):
    counters[ALPHA_TRIED] += 1
    if code == 1:
        counters[ALPHA_ACC] += 1
    elif code == RANGE_REJECT:
        counters[RANGE] += 1
    elif code == SUPPORT_REJECT:
        counters[SUPPORT] += 1
    elif code == WIDTH_SKIP:
        counters[WIDTH] += 1


@njit(cache=True)
def _augment_sweep(aug, kind, miss_ptr, miss_idx, pair_ptr, pairs, alpha, rho, z,
                   metric, rng, prop, counters):
    for j in range(aug.shape[0]):
        c = z[j]
        tried, acc = augment_row(j, kind, aug, miss_ptr, miss_idx, pair_ptr, pairs,
                                 alpha[c], rho[c], metric, rng, prop)
        counters[AUG_TRIED] += tried
        counters[AUG_ACC] += acc


@njit(cache=True)
def _tie_sweep(aug, tie_ptr, group_ptr, group_items, group_start, rng):
    for j in range(aug.shape[0]):
        a = tie_ptr[j]
        b = tie_ptr[j + 1]
        if b > a:
            shuffle_blocks(aug[j], group_ptr[a:b + 1], group_items, group_start[a:b], rng)


@njit(cache=True)
def mixture_chain(aug, kind, miss_ptr, miss_idx, pair_ptr, pairs,
                  tie_ptr, group_ptr, group_items, group_start,
                  rho, alpha, tau, z, z_fixed,
                  metric, L, exact, lam, psi, sigma, alpha_mode, corrected,
                  coef, amin, amax, iters, burn, thin, aug_freq, tie_interval,
                  save_aug, rng):
    N, n = aug.shape
    C = rho.shape[0]
    k = (iters - burn) // thin
    out_alpha = np.empty((k, C))
    out_rho = np.empty((k, C, n), dtype=np.int64)
    out_tau = np.empty((k, C))
    out_z = np.empty((k, N), dtype=np.int64)
    out_aug = np.empty((k if save_aug else 0, N, n), dtype=np.int64)
    counters = np.zeros(N_COUNTERS, dtype=np.int64)
    prop = np.empty(n, dtype=np.int64)
    has_aug = False
    for j in range(N):
        if kind[j] == 1 or kind[j] == 2:
            has_aug = True
    has_ties = tie_ptr[N] > 0
    logw = np.empty(C)
    counts = np.zeros(C, dtype=np.int64)
    s = 0
    for it in range(iters):
        if has_aug and it % aug_freq == 0:
            _augment_sweep(aug, kind, miss_ptr, miss_idx, pair_ptr, pairs, alpha, rho, z,
                           metric, rng, prop, counters)
        if has_ties and it % tie_interval == 0:
            _tie_sweep(aug, tie_ptr, group_ptr, group_items, group_start, rng)

        for c in range(C):
            members = np.nonzero(z == c)[0]
            counters[RHO_TRIED] += 1
            counters[RHO_ACC] += rho_step(rho[c], prop, alpha[c], aug, members, metric,
                                          L, exact, rng)

        if alpha_mode == SHARED:
            tot = 0
            for j in range(N):
                tot += dist(aug[j], rho[z[j]], metric)
            a, code = alpha_step(alpha[0], N, tot, n, lam, sigma, coef, amin, amax, rng)
            alpha[:] = a
            _record(code, counters)
        else:
            for c in range(C):
                members = np.nonzero(z == c)[0]
                tot = subset_dist(aug, members, rho[c], metric)
                if alpha_mode == FREE or C == 1:
                    a, code = alpha_step(alpha[c], members.shape[0], tot, n, lam, sigma,
                                         coef, amin, amax, rng)
                    alpha[c] = a
                else:
                    code = ordered_alpha_step(alpha, c, members.shape[0], tot, n, lam,
                                              coef, amin, amax, corrected, rng)
                _record(code, counters)

        if C > 1:
            counts[:] = 0
            for j in range(N):
                counts[z[j]] += 1
            total = 0.0
            for c in range(C):
                tau[c] = rng.gamma(psi + counts[c])
                total += tau[c]
            for c in range(C):
                tau[c] /= total
            lzs = np.empty(C)
            for c in range(C):
                lzs[c] = log_z(coef, amin, amax, alpha[c])
            for j in range(N):
                if z_fixed[j]:
                    continue
                mx = -np.inf
                for c in range(C):
                    if tau[c] > 0.0:
                        logw[c] = (math.log(tau[c]) - lzs[c]
                                   - alpha[c] / n * dist(aug[j], rho[c], metric))
                    else:
                        logw[c] = -np.inf
                    if logw[c] > mx:
                        mx = logw[c]
                tot_w = 0.0
                for c in range(C):
                    logw[c] = math.exp(logw[c] - mx)
                    tot_w += logw[c]
                u = rng.random() * tot_w
                acc = 0.0
                pick = C - 1
                for c in range(C):
                    acc += logw[c]
                    if u < acc:
                        pick = c
                        break
                z[j] = pick

        if it >= burn and (it - burn + 1) % thin == 0 and s < k:
            out_alpha[s] = alpha
            out_rho[s] = rho
            out_tau[s] = tau
            out_z[s] = z
            if save_aug:
                out_aug[s] = aug
            s += 1
    return out_alpha, out_rho, out_tau, out_z, out_aug, counters


# ---------------------------------------------------------------- dynamics


@njit(cache=True)
def dyn_rho_step(rho, t, prop, alpha_t, beta, aug, lo, hi, metric, L, rng):
    """Leap-and-shift update of rho[t] with data and neighbour transition terms."""
    T1, n = rho.shape
    cur = rho[t]
    leap_and_shift_into(cur, L, rng, prop)
    delta = 0
    for j in range(lo, hi):
        delta += dist(aug[j], prop, metric) - dist(aug[j], cur, metric)
    log_ratio = -alpha_t / n * delta
    trans = 0
    if t > 0:
        trans += dist(prop, rho[t - 1], metric) - dist(cur, rho[t - 1], metric)
    if t < T1 - 1:
        trans += dist(rho[t + 1], prop, metric) - dist(rho[t + 1], cur, metric)
    log_ratio -= beta / n * trans
    if log_ratio >= 0.0 or math.log(rng.random()) < log_ratio:
        cur[:] = prop
        return 1
    return 0


@njit(cache=True)
def _alpha_t_target(a, t, alpha, n_t, d_t, n, sigma2, lam, coef, amin, amax):
    T1 = alpha.shape[0]
    val = alpha_target(a, n_t, d_t, n, 0.0, coef, amin, amax)
    if t > 0:
        val -= (a - alpha[t - 1]) ** 2 / (2.0 * sigma2)
    else:
        val -= lam * a
    if t < T1 - 1:
        val -= (alpha[t + 1] - a) ** 2 / (2.0 * sigma2)
    return val


@njit(cache=True)
def dyn_alpha_step(alpha, t, n_t, d_t, n, sigma2, lam, step, coef, amin, amax, rng):
    cur = alpha[t]
    prop = cur + step * rng.normal()
    if prop < 0.0:
        return SUPPORT_REJECT
    t_new = _alpha_t_target(prop, t, alpha, n_t, d_t, n, sigma2, lam, coef, amin, amax)
    if np.isnan(t_new):
        return RANGE_REJECT
    t_old = _alpha_t_target(cur, t, alpha, n_t, d_t, n, sigma2, lam, coef, amin, amax)
    log_ratio = t_new - t_old
    if log_ratio >= 0.0 or math.log(rng.random()) < log_ratio:
        alpha[t] = prop
        return 1
    return 0


@njit(cache=True)
def transition_distance(rho, metric):
    total = 0
    for t in range(1, rho.shape[0]):
        total += dist(rho[t], rho[t - 1], metric)
    return total


@njit(cache=True)
def beta_step(beta, rho, n, lam, step, metric, coef, amin, amax, rng):
    prop = beta + step * rng.normal()
    if prop < 0.0:
        return beta, SUPPORT_REJECT
    T = rho.shape[0] - 1
    d = transition_distance(rho, metric)
    t_new = alpha_target(prop, T, d, n, lam, coef, amin, amax)
    if np.isnan(t_new):
        return beta, RANGE_REJECT
    t_old = alpha_target(beta, T, d, n, lam, coef, amin, amax)
    log_ratio = t_new - t_old
    if log_ratio >= 0.0 or math.log(rng.random()) < log_ratio:
        return prop, 1
    return beta, 0


@njit(cache=True)
def sigma2_draw(alpha, a, b, rng):
    """Inverse-gamma draw for the alpha random-walk variance."""
    T = alpha.shape[0] - 1
    ss = 0.0
    for t in range(1, T + 1):
        ss += (alpha[t] - alpha[t - 1]) ** 2
    shape = a + T / 2.0
    scale = b + 0.5 * ss
    return scale / rng.gamma(shape)


@njit(cache=True)
def dynamic_chain(aug, kind, miss_ptr, miss_idx, pair_ptr, pairs,
                  tie_ptr, group_ptr, group_items, group_start, slice_ptr,
                  rho, alpha, beta, sigma2, metric, L, lam_alpha, lam_beta,
                  step_alpha, step_beta, a0, b0, coef, amin, amax,
                  update_alpha, update_beta, update_sigma,
                  iters, burn, thin, aug_freq, tie_interval, rng):
    N, n = aug.shape
    T1 = rho.shape[0]
    k = (iters - burn) // thin
    out_alpha = np.empty((k, T1))
    out_rho = np.empty((k, T1, n), dtype=np.int64)
    out_beta = np.empty(k)
    out_sigma2 = np.empty(k)
    counters = np.zeros(N_COUNTERS, dtype=np.int64)
    prop = np.empty(n, dtype=np.int64)
    # each assessor's slice, so augmentation sees that slice's (alpha, rho)
    zt = np.empty(N, dtype=np.int64)
    for t in range(T1):
        for j in range(slice_ptr[t], slice_ptr[t + 1]):
            zt[j] = t
    has_aug = False
    for j in range(N):
        if kind[j] == 1 or kind[j] == 2:
            has_aug = True
    has_ties = tie_ptr[N] > 0
    s = 0
    for it in range(iters):
        if has_aug and it % aug_freq == 0:
            _augment_sweep(aug, kind, miss_ptr, miss_idx, pair_ptr, pairs, alpha, rho, zt,
                           metric, rng, prop, counters)
        if has_ties and it % tie_interval == 0:
            _tie_sweep(aug, tie_ptr, group_ptr, group_items, group_start, rng)
        for t in range(T1):
            counters[RHO_TRIED] += 1
            counters[RHO_ACC] += dyn_rho_step(rho, t, prop, alpha[t], beta, aug,
                                              slice_ptr[t], slice_ptr[t + 1], metric, L, rng)
        if update_alpha:
            for t in range(T1):
                lo = slice_ptr[t]
                hi = slice_ptr[t + 1]
                d_t = 0
                for j in range(lo, hi):
                    d_t += dist(aug[j], rho[t], metric)
                code = dyn_alpha_step(alpha, t, hi - lo, d_t, n, sigma2, lam_alpha,
                                      step_alpha, coef, amin, amax, rng)
                _record(code, counters)
        if update_beta:
            beta, code = beta_step(beta, rho, n, lam_beta, step_beta, metric,
                                   coef, amin, amax, rng)
            counters[BETA_TRIED] += 1
            if code == 1:
                counters[BETA_ACC] += 1
            elif code == RANGE_REJECT:
                counters[RANGE] += 1
        if update_sigma:
            sigma2 = sigma2_draw(alpha, a0, b0, rng)
        if it >= burn and (it - burn + 1) % thin == 0 and s < k:
            out_alpha[s] = alpha
            out_rho[s] = rho
            out_beta[s] = beta
            out_sigma2[s] = sigma2
            s += 1
    return out_alpha, out_rho, out_beta, out_sigma2, counters
