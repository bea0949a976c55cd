"""Numba path-simulation kernels.

Each path owns counter-seeded xoroshiro128+ streams (splitmix64 expansion of
seed and stream id), so results are bit-identical for a given seed regardless
of thread count.  Three streams are kept per path: jump clock/sizes, bridge
uniforms, and Gaussian increments.  Antithetic twins keep independent jump and
bridge streams but share the Gaussian stream with negated draws, so the
mirroring acts on the Brownian component alone.
"""

import numpy as np
from numba import njit, prange

_U64 = np.uint64
_GOLD = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_JUMP_TAG = _U64(0xA5A5A5A5A5A5A5A5)
_BRIDGE_TAG = _U64(0xC3C3C3C3C3C3C3C3)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53
_TWO_PI = 2.0 * np.pi

# barrier proximity (in units of the segment standard deviation) beyond which
# bridge-extreme sampling is skipped; exceedance odds ~ exp(-2*8^2/2)
_BRIDGE_WINDOW = 8.0


@njit(cache=True, inline="always")
def _sm64(z):
    z = z + _GOLD
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << _U64(k)) | (x >> _U64(64 - k))


@njit(cache=True, inline="always")
def _seed_stream(seed, stream_id):
    s0 = _sm64(_U64(seed) ^ (_U64(stream_id) * _GOLD))
    s1 = _sm64(s0 + _GOLD)
    return s0, s1


@njit(cache=True, inline="always")
def _next_u64(s0, s1):
    result = s0 + s1
    s1 = s1 ^ s0
    s0 = _rotl(s0, 55) ^ s1 ^ (s1 << _U64(14))
    s1 = _rotl(s1, 36)
    return result, s0, s1


@njit(cache=True, inline="always")
def _uniform(s0, s1):
    # in (0, 1]: safe for log
    r, s0, s1 = _next_u64(s0, s1)
    return (np.float64(r >> _U64(11)) + 1.0) * _INV53, s0, s1


@njit(cache=True, inline="always")
def _normal(s0, s1):
    u1, s0, s1 = _uniform(s0, s1)
    u2, s0, s1 = _uniform(s0, s1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2), s0, s1


@njit(cache=True, inline="always")
def _bridge_max(d, sd2, s0, s1):
    # max of a Brownian bridge from 0 to d (variance sd2), by inverse CDF
    u, s0, s1 = _uniform(s0, s1)
    return 0.5 * (d + np.sqrt(d * d - 2.0 * sd2 * np.log(u))), s0, s1


@njit(cache=True, inline="always")
def _bridge_min(d, sd2, s0, s1):
    u, s0, s1 = _uniform(s0, s1)
    return 0.5 * (d - np.sqrt(d * d - 2.0 * sd2 * np.log(u))), s0, s1


@njit(cache=True, inline="always")
def _sample_phase_type(alpha_cum, rates, trans_cum, s0, s1):
    m = rates.shape[0]
    u, s0, s1 = _uniform(s0, s1)
    ph = 0
    while ph < m - 1 and alpha_cum[ph] < u:
        ph += 1
    total = 0.0
    while True:
        u, s0, s1 = _uniform(s0, s1)
        total += -np.log(u) / rates[ph]
        u, s0, s1 = _uniform(s0, s1)
        k = 0
        while k < m and trans_cum[ph, k] < u:
            k += 1
        if k >= m:
            return total, s0, s1
        ph = k


@njit(cache=True, parallel=True)
def simulate_cost_kernel(
    seed,
    n_paths,
    antithetic,
    x0,
    a,
    b,
    drift,
    sigma,
    kappa,
    q,
    is_sp,
    alpha_cum,
    rates,
    trans_cum,
    h_slope,
    h_icept,
    g_slope,
    g_icept,
    dt,
    t_max,
    out,
):
    for p in prange(n_paths):
        gauss_id = p >> 1 if antithetic else p
        sign = -1.0 if (antithetic and (p & 1) == 1) else 1.0
        j0, j1 = _seed_stream(_U64(seed) ^ _JUMP_TAG, p)
        r0, r1 = _seed_stream(_U64(seed) ^ _BRIDGE_TAG, p)
        n0, n1 = _seed_stream(seed, gauss_id)

        t = 0.0
        X = x0
        xi = a - x0 if a > x0 else 0.0  # reflection atom at time zero
        cost = xi
        U = X + xi
        if U >= b:
            out[p] = cost + g_icept + g_slope * U
            continue
        disc = 1.0
        hU = h_icept + h_slope * U
        u, j0, j1 = _uniform(j0, j1)
        t_jump = -np.log(u) / kappa

        while t < t_max:
            seg_end = t + dt
            if t_jump < seg_end:
                seg_end = t_jump
            if t_max < seg_end:
                seg_end = t_max
            delta_t = seg_end - t
            dX = drift * delta_t
            sd = 0.0
            if sigma > 0.0 and delta_t > 0.0:
                sd = sigma * np.sqrt(delta_t)
                n, n0, n1 = _normal(n0, n1)
                dX += sd * n * sign
            Xn = X + dX
            # reflection: new running minimum, bridge-sampled when the
            # segment runs close to the barrier (removes the sqrt(dt) bias)
            xmin = X if X < Xn else Xn
            if sd > 0.0 and xmin - (a - xi) < _BRIDGE_WINDOW * sd:
                mmin, r0, r1 = _bridge_min(dX, sd * sd, r0, r1)
                xmin = X + mmin
            xin = xi
            if a - xmin > xin:
                xin = a - xmin
            Un = Xn + xin
            discn = np.exp(-q * seg_end)
            crossed = False
            theta = 1.0
            if Un >= b:
                # up-crossing visible at the endpoint: interpolate the segment
                crossed = True
                theta = (b - U) / (Un - U)
            elif sd > 0.0 and b - (U if U > Un else Un) < _BRIDGE_WINDOW * sd:
                mmax, r0, r1 = _bridge_max(Xn - X, sd * sd, r0, r1)
                if U + mmax >= b:
                    crossed = True
                    theta = 0.5  # within-step timing is O(dt); discount error O(q dt)
            if crossed:
                tau = t + theta * delta_t
                dtau = np.exp(-q * tau)
                hb = h_icept + h_slope * b
                cost += 0.5 * theta * delta_t * (disc * hU + dtau * hb)
                cost += dtau * (g_icept + g_slope * b)
                break
            hUn = h_icept + h_slope * Un
            cost += 0.5 * delta_t * (disc * hU + discn * hUn)
            cost += discn * (xin - xi)
            X = Xn
            xi = xin
            U = Un
            disc = discn
            hU = hUn
            t = seg_end
            if t == t_jump and t < t_max:
                zj, j0, j1 = _sample_phase_type(alpha_cum, rates, trans_cum, j0, j1)
                Xj = X + zj if is_sp else X - zj
                xij = xi
                if a - Xj > xij:
                    xij = a - Xj
                Uj = Xj + xij
                cost += disc * (xij - xi)  # jump-induced reflection, exact discount
                if is_sp and Uj >= b:
                    cost += disc * (g_icept + g_slope * Uj)
                    break
                X = Xj
                xi = xij
                U = Uj
                hU = h_icept + h_slope * U
                u, j0, j1 = _uniform(j0, j1)
                t_jump = t - np.log(u) / kappa
        out[p] = cost


@njit(cache=True, parallel=True)
def simulate_passage_kernel(
    seed,
    n_paths,
    antithetic,
    x0,
    b,
    drift,
    sigma,
    kappa,
    q,
    is_sp,
    alpha_cum,
    rates,
    trans_cum,
    dt,
    t_max,
    out_up,
    out_down_first,
    out_down,
):
    for p in prange(n_paths):
        gauss_id = p >> 1 if antithetic else p
        sign = -1.0 if (antithetic and (p & 1) == 1) else 1.0
        j0, j1 = _seed_stream(_U64(seed) ^ _JUMP_TAG, p)
        r0, r1 = _seed_stream(_U64(seed) ^ _BRIDGE_TAG, p)
        n0, n1 = _seed_stream(seed, gauss_id)

        t = 0.0
        X = x0
        up = 0.0
        down_first = 0.0
        down = 0.0
        up_found = False
        if X >= b:
            up = 1.0
            up_found = True
        u, j0, j1 = _uniform(j0, j1)
        t_jump = -np.log(u) / kappa

        while t < t_max:
            if sigma > 0.0:
                seg_end = t + dt
                if t_jump < seg_end:
                    seg_end = t_jump
            else:
                seg_end = t_jump  # piecewise-linear path: exact between jumps
            if t_max < seg_end:
                seg_end = t_max
            delta_t = seg_end - t
            dX = drift * delta_t
            sd = 0.0
            if sigma > 0.0 and delta_t > 0.0:
                sd = sigma * np.sqrt(delta_t)
                n, n0, n1 = _normal(n0, n1)
                dX += sd * n * sign
            Xn = X + dX
            if not up_found:
                if Xn >= b and Xn > X:
                    theta = (b - X) / (Xn - X)
                    up = np.exp(-q * (t + theta * delta_t))
                    up_found = True
                elif sd > 0.0 and b - (X if X > Xn else Xn) < _BRIDGE_WINDOW * sd:
                    mmax, r0, r1 = _bridge_max(dX, sd * sd, r0, r1)
                    if X + mmax >= b:
                        up = np.exp(-q * (t + 0.5 * delta_t))
                        up_found = True
            down_hit = False
            theta = 1.0
            if Xn < 0.0 and X >= 0.0:
                down_hit = True
                theta = X / (X - Xn)
            elif sd > 0.0 and Xn >= 0.0 and (X if X < Xn else Xn) < _BRIDGE_WINDOW * sd:
                mmin, r0, r1 = _bridge_min(dX, sd * sd, r0, r1)
                if X + mmin < 0.0:
                    down_hit = True
                    theta = 0.5
            if down_hit:
                d = np.exp(-q * (t + theta * delta_t))
                down = d
                if not up_found:
                    down_first = d
                break
            X = Xn
            t = seg_end
            if t == t_jump and t < t_max:
                zj, j0, j1 = _sample_phase_type(alpha_cum, rates, trans_cum, j0, j1)
                Xj = X + zj if is_sp else X - zj
                if is_sp and not up_found and Xj > b:
                    up = np.exp(-q * t)
                    up_found = True
                if Xj < 0.0:
                    d = np.exp(-q * t)
                    down = d
                    if not up_found:
                        down_first = d
                    break
                X = Xj
                u, j0, j1 = _uniform(j0, j1)
                t_jump = t - np.log(u) / kappa
        out_up[p] = up
        out_down_first[p] = down_first
        out_down[p] = down
