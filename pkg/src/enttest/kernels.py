"""Hot numeric kernels shared by statmath, hypotests, and the simulator.

Every function here is nopython-compatible and decorated with the backend's
``njit`` (a no-op under ``ENTTEST_BACKEND=numpy``). Scalars only, no object
mode: these run millions of times inside Monte Carlo loops.

Random state is an opaque 64-bit value threaded through explicitly; see
``backend.stream_init`` / ``stream_child`` for keying.
"""

import math

import numpy as np

from .backend import next_unit, njit, stream_child

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# ---------------------------------------------------------------------------
# standard normal
# ---------------------------------------------------------------------------


@njit(cache=True)
def norm_cdf(z):
    return 0.5 * math.erfc(-z / _SQRT2)


@njit(cache=True)
def norm_pdf(z):
    return math.exp(-0.5 * z * z) / _SQRT_2PI


@njit(cache=True)
def norm_ppf(p):
    """Inverse of norm_cdf on (0, 1).

    Acklam's rational approximation (abs error ~1e-9) polished with two
    Halley steps against norm_cdf, giving self-consistency near machine
    precision. Returns +-inf at the endpoints.
    """
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    if p < 0.02425:
        q = math.sqrt(-2.0 * math.log(p))
        x = -(
            ((((-7.784894002430293e-03 * q - 3.223964580411365e-01) * q
               - 2.400758277161838e+00) * q - 2.549732539343734e+00) * q
             + 4.374664141464968e+00) * q + 2.938163982698783e+00
        ) / (
            (((7.784695709041462e-03 * q + 3.224671290700398e-01) * q
              + 2.445134137142996e+00) * q + 3.754408661907416e+00) * q + 1.0
        )
    elif p > 1.0 - 0.02425:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = (
            ((((-7.784894002430293e-03 * q - 3.223964580411365e-01) * q
               - 2.400758277161838e+00) * q - 2.549732539343734e+00) * q
             + 4.374664141464968e+00) * q + 2.938163982698783e+00
        ) / (
            (((7.784695709041462e-03 * q + 3.224671290700398e-01) * q
              + 2.445134137142996e+00) * q + 3.754408661907416e+00) * q + 1.0
        )
    else:
        q = p - 0.5
        r = q * q
        x = (
            ((((-3.969683028665376e+01 * r + 2.209460984245205e+02) * r
               - 2.759285104469687e+02) * r + 1.383577518672690e+02) * r
             - 3.066479806614716e+01) * r + 2.506628277459239e+00
        ) * q / (
            ((((-5.447609879822406e+01 * r + 1.615858368580409e+02) * r
               - 1.556989798598866e+02) * r + 6.680131188771972e+01) * r
             - 1.328068155288572e+01) * r + 1.0
        )
    for _ in range(2):
        e = norm_cdf(x) - p
        u = e * _SQRT_2PI * math.exp(0.5 * x * x)
        x = x - u / (1.0 + 0.5 * x * u)
    return x


# ---------------------------------------------------------------------------
# Poisson sampling
# ---------------------------------------------------------------------------


@njit(cache=True)
def poisson_draw(mean, state):
    """Exact Poisson sample: sequential-search inversion below mean 30,
    Hormann's PTRS transformed rejection above. Returns (count, state)."""
    if mean <= 0.0:
        return 0, state
    if mean < 30.0:
        u, state = next_unit(state)
        p = math.exp(-mean)
        cum = p
        k = 0
        while u > cum:
            k += 1
            p *= mean / k
            cum += p
            if p < 1e-300:
                break
        return k, state
    # PTRS, exact for mean >= 10
    smu = math.sqrt(mean)
    b = 0.931 + 2.53 * smu
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    log_mean = math.log(mean)
    while True:
        u, state = next_unit(state)
        u -= 0.5
        v, state = next_unit(state)
        us = 0.5 - abs(u)
        k = int(math.floor((2.0 * a / us + b) * u + mean + 0.43))
        if us >= 0.07 and v <= v_r:
            return k, state
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v * inv_alpha / (a / (us * us) + b))
                <= k * log_mean - mean - math.lgamma(k + 1.0)):
            return k, state


@njit(cache=True)
def poisson_seconds(mean_per_sec, whole_secs, frac_secs, state):
    """Total count accumulated over whole-second bins plus a fractional tail."""
    total = 0
    for _ in range(whole_secs):
        k, state = poisson_draw(mean_per_sec, state)
        total += k
    if frac_secs > 0.0:
        k, state = poisson_draw(mean_per_sec * frac_secs, state)
        total += k
    return total, state


@njit(cache=True)
def poisson_per_second(mean_per_sec, n_secs, state):
    """Per-second count array (histogram reproduction path)."""
    out = np.zeros(n_secs, np.int64)
    for s in range(n_secs):
        k, state = poisson_draw(mean_per_sec, state)
        out[s] = k
    return out, state


@njit(cache=True)
def sample_counts(means_per_sec, whole_secs, frac_secs, slots, root_state, trial):
    """Counts for one trial, one independent substream per vector.

    Substream key is (root_state, trial, slots[v]), so results do not depend
    on evaluation order across vectors or trials.
    """
    n = means_per_sec.shape[0]
    out = np.zeros(n, np.int64)
    trial_state = stream_child(root_state, np.uint64(trial))
    for v in range(n):
        st = stream_child(trial_state, np.uint64(slots[v]))
        c, st = poisson_seconds(means_per_sec[v], whole_secs[v], frac_secs[v], st)
        out[v] = c
    return out


@njit(cache=True)
def sample_counts_batch(means_per_sec, whole_secs, frac_secs, slots, root_state, n_trials):
    n = means_per_sec.shape[0]
    out = np.zeros((n_trials, n), np.int64)
    for t in range(n_trials):
        out[t, :] = sample_counts(means_per_sec, whole_secs, frac_secs,
                                  slots, root_state, t)
    return out


# ---------------------------------------------------------------------------
# two-stage rejection-region machinery
# ---------------------------------------------------------------------------
#
# The per-vector boundary means mu_i(R) solve, for weights w_i = 1/(2*lam*t_i)
# and c0 = 1 - F0,
#
#   c0/w_i - mu + mu*log(mu*w_i/c0) = R        (R <= R0_i, lower root)
#   c0/w_M + mu*log((w_M - w_i)/w_M) = R       (R >  R0_i, w_i < w_M)
#
# with R0_i = c0/w_M + c0*(w_M - w_i)/(w_i*w_M) * log((w_M - w_i)/w_M).
# In the scaled variable s = mu*w_i/c0 the first equation is
# 1 - s + s*log(s) = rho with rho = R*w_i/c0, solved by shortfall_root.


@njit(cache=True)
def shortfall_root(rho):
    """Solve 1 - s + s*log(s) = rho for s in (0, 1].

    The left side decreases from 1 (s -> 0) to 0 (s = 1); this returns the
    unique root, or 0.0 when rho >= 1 (no positive solution).
    """
    if rho <= 0.0:
        return 1.0
    if rho >= 1.0:
        return 0.0
    # initial guess from the small-rho expansion or the s -> 0 asymptote
    if rho < 0.25:
        e = math.sqrt(2.0 * rho)
        s = 1.0 - e * (1.0 - e / 6.0)
        if s <= 0.0:
            s = 0.5
    else:
        s = 1.0 - rho
        for _ in range(3):
            s = (1.0 - rho) / (1.0 - math.log(s))
    lo = 0.0
    hi = 1.0
    for _ in range(80):
        g = 1.0 - s + s * math.log(s) - rho
        if abs(g) < 1e-14:
            return s
        if g > 0.0:
            lo = s
        else:
            hi = s
        step = g / math.log(s)  # Newton; g' = log(s) < 0 on (0, 1)
        s_new = s - step
        if s_new <= lo or s_new >= hi:
            s_new = 0.5 * (lo + hi)
        if s_new == s:
            return s
        s = s_new
    return s


@njit(cache=True)
def boundary_r0(c0, w, w_max):
    """Branch-switch points R0_i; +inf for the max-weight vectors."""
    n = w.shape[0]
    out = np.empty(n, np.float64)
    for i in range(n):
        beta = w[i] / w_max
        if beta >= 1.0:
            out[i] = math.inf
        else:
            out[i] = (c0 / w[i]) * (beta + (1.0 - beta) * math.log1p(-beta))
    return out


@njit(cache=True)
def mu_tilde_one(c0, w_i, w_max, r0_i, r):
    if r <= 0.0:
        return c0 / w_i
    if r <= r0_i:
        s = shortfall_root(r * w_i / c0)
        return s * c0 / w_i
    return (r - c0 / w_max) / math.log1p(-w_i / w_max)


@njit(cache=True)
def mu_tilde_vec(c0, w, w_max, r0, r, out):
    for i in range(w.shape[0]):
        out[i] = mu_tilde_one(c0, w[i], w_max, r0[i], r)


@njit(cache=True)
def count_ratio_sum(counts, mu):
    total = 0.0
    for i in range(counts.shape[0]):
        total += counts[i] / mu[i]
    return total


@njit(cache=True)
def solve_r_prime(counts, c0, w, w_max, r0):
    """Root of sum_i counts_i / mu_i(R) = 1 on (0, c0/w_max).

    The sum is strictly increasing in R. Returns -1.0 when the sum already
    exceeds 1 at R = 0 (estimate at or below the threshold) and -2.0 when all
    counts are zero (sum identically 0, no root).
    """
    n_total = 0.0
    for i in range(counts.shape[0]):
        n_total += counts[i]
    if n_total <= 0.0:
        return -2.0
    mu = np.empty(w.shape[0], np.float64)
    mu_tilde_vec(c0, w, w_max, r0, 0.0, mu)
    if count_ratio_sum(counts, mu) >= 1.0:
        return -1.0
    lo = 0.0
    hi = (c0 / w_max) * (1.0 - 1e-12)
    mu_tilde_vec(c0, w, w_max, r0, hi, mu)
    if count_ratio_sum(counts, mu) <= 1.0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        mu_tilde_vec(c0, w, w_max, r0, mid, mu)
        if count_ratio_sum(counts, mu) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def z_pair_xy(x_i, y_i, x_j, y_j):
    """Pairwise statistic from curvature coordinates; nan on a bad radicand."""
    if 2.0 * x_j * y_i >= x_i * y_i + x_i * y_j:
        return x_i / math.sqrt(y_i)
    if 2.0 * x_i * y_j >= x_j * y_j + x_j * y_i:
        return x_j / math.sqrt(y_j)
    rad1 = (x_i - x_j) * (y_i - y_j)
    rad2 = x_i * y_j * y_j + x_j * y_i * y_i - y_i * y_j * (x_i + x_j)
    if rad1 <= 0.0 or rad2 <= 0.0:
        return math.nan
    num = 2.0 * (x_i * x_j * (y_i + y_j) - x_i * x_i * y_j - x_j * x_j * y_i)
    return num / (math.sqrt(rad1) * math.sqrt(rad2))


@njit(cache=True)
def curvature_xy(c0, w, mu, x, y):
    for i in range(w.shape[0]):
        x[i] = c0 / (w[i] * mu[i]) - 1.0
        y[i] = c0 / (w[i] * mu[i] * mu[i])


@njit(cache=True)
def z_min_over_pairs(c0, w, mu):
    """Minimum pairwise statistic; returns (z_min, i, j) or (nan, i, j)."""
    n = w.shape[0]
    x = np.empty(n, np.float64)
    y = np.empty(n, np.float64)
    curvature_xy(c0, w, mu, x, y)
    best = math.inf
    bi = -1
    bj = -1
    for i in range(n - 1):
        for j in range(i + 1, n):
            z = z_pair_xy(x[i], y[i], x[j], y[j])
            if math.isnan(z):
                return math.nan, i, j
            if z < best:
                best = z
                bi = i
                bj = j
    return best, bi, bj
