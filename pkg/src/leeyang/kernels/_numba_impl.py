"""Numba JIT kernels for the hot inner loops.

Mirrors `_numpy_impl` operation-for-operation: the double-double helper
algorithms here must stay in lockstep with `leeyang.dd` so that both
backends produce bit-identical results.
"""

import math

import numpy as np
import numba
from numba import njit, prange

from .. import dd as _dd

# TBB in this environment is too old for numba; pick the portable layer
# up front so imports stay warning-free.
numba.config.THREADING_LAYER = "workqueue"

_LN2_HI, _LN2_LO = _dd.LN2
_PI2_HI, _PI2_LO = _dd.PI_2
_SPLITTER = 134217729.0
_INV_FACT_HI = np.array([h for h, _ in _dd._INV_FACT])
_INV_FACT_LO = np.array([l for _, l in _dd._INV_FACT])
_EXP_TERMS = _dd._EXP_TERMS
_TRIG_TERMS = _dd._TRIG_TERMS

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_11 = np.uint64(11)
_U64_27 = np.uint64(27)
_U64_30 = np.uint64(30)
_U64_31 = np.uint64(31)
_TO_UNIT = 2.0 ** -53


# ---------------------------------------------------------------------------
# Scalar double-double helpers (same algorithms as leeyang.dd).
# ---------------------------------------------------------------------------

@njit(cache=True)
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(cache=True)
def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


@njit(cache=True)
def _two_prod(a, b):
    p = a * b
    ta = _SPLITTER * a
    ahi = ta - (ta - a)
    alo = a - ahi
    tb = _SPLITTER * b
    bhi = tb - (tb - b)
    blo = b - bhi
    return p, ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo


@njit(cache=True)
def _dd_add(xh, xl, yh, yl):
    sh, sl = _two_sum(xh, yh)
    th, tl = _two_sum(xl, yl)
    sl = sl + th
    sh, sl = _quick_two_sum(sh, sl)
    sl = sl + tl
    return _quick_two_sum(sh, sl)


@njit(cache=True)
def _dd_add_f(xh, xl, y):
    sh, sl = _two_sum(xh, y)
    sl = sl + xl
    return _quick_two_sum(sh, sl)


@njit(cache=True)
def _dd_mul(xh, xl, yh, yl):
    ph, pl = _two_prod(xh, yh)
    pl = pl + (xh * yl + xl * yh)
    return _quick_two_sum(ph, pl)


@njit(cache=True)
def _dd_sqr(xh, xl):
    ph, pl = _two_prod(xh, xh)
    pl = pl + 2.0 * (xh * xl)
    return _quick_two_sum(ph, pl)


@njit(cache=True)
def _dd_exp(xh, xl):
    if xh < -745.0:
        return 0.0, 0.0
    if xh > 709.8:
        return np.inf, 0.0
    k = np.rint(xh / _LN2_HI)
    t1h, t1l = _two_prod(k, _LN2_HI)
    rh, rl = _dd_add(xh, xl, -t1h, -t1l)
    t2h, t2l = _two_prod(k, -_LN2_LO)
    rh, rl = _dd_add(rh, rl, t2h, t2l)
    rh = np.ldexp(rh, -9)
    rl = np.ldexp(rl, -9)
    ph, pl = _dd_sqr(rh, rl)
    sh, sl = _dd_add(rh, rl, np.ldexp(ph, -1), np.ldexp(pl, -1))
    for j in range(3, _EXP_TERMS + 1):
        ph, pl = _dd_mul(ph, pl, rh, rl)
        th, tl = _dd_mul(ph, pl, _INV_FACT_HI[j - 2], _INV_FACT_LO[j - 2])
        sh, sl = _dd_add(sh, sl, th, tl)
    for _ in range(9):
        qh, ql = _dd_sqr(sh, sl)
        sh, sl = _dd_add(qh, ql, np.ldexp(sh, 1), np.ldexp(sl, 1))
    sh, sl = _dd_add_f(sh, sl, 1.0)
    ki = np.int64(k)
    return np.ldexp(sh, ki), np.ldexp(sl, ki)


@njit(cache=True)
def _dd_log(xh, xl):
    yh = np.log(xh)
    yl = 0.0
    for _ in range(2):
        eh, el = _dd_exp(-yh, -yl)
        ph, pl = _dd_mul(xh, xl, eh, el)
        ph, pl = _dd_add_f(ph, pl, -1.0)
        yh, yl = _dd_add(yh, yl, ph, pl)
    return yh, yl


@njit(cache=True)
def _dd_log1p(xh, xl):
    if abs(xh) < 1e-32:
        return xh, xl
    wh, wl = _dd_add_f(xh, xl, 1.0)
    return _dd_log(wh, wl)


@njit(cache=True)
def _dd_sincos(xh, xl):
    k = np.rint(xh / _PI2_HI)
    t1h, t1l = _two_prod(k, _PI2_HI)
    rh, rl = _dd_add(xh, xl, -t1h, -t1l)
    t2h, t2l = _two_prod(k, -_PI2_LO)
    rh, rl = _dd_add(rh, rl, t2h, t2l)
    r2h, r2l = _dd_sqr(rh, rl)
    # sin Taylor
    sh, sl = 1.0, 0.0
    th, tl = 1.0, 0.0
    sign = -1.0
    for j in range(1, _TRIG_TERMS):
        th, tl = _dd_mul(th, tl, r2h, r2l)
        ch, cl = _dd_mul(th, tl, _INV_FACT_HI[2 * j - 1], _INV_FACT_LO[2 * j - 1])
        sh, sl = _dd_add(sh, sl, sign * ch, sign * cl)
        sign = -sign
    sin_h, sin_l = _dd_mul(sh, sl, rh, rl)
    # cos Taylor
    ch_, cl_ = 1.0, 0.0
    th, tl = 1.0, 0.0
    sign = -1.0
    for j in range(1, _TRIG_TERMS):
        th, tl = _dd_mul(th, tl, r2h, r2l)
        gh, gl = _dd_mul(th, tl, _INV_FACT_HI[2 * j - 2], _INV_FACT_LO[2 * j - 2])
        ch_, cl_ = _dd_add(ch_, cl_, sign * gh, sign * gl)
        sign = -sign
    q = np.int64(k) % 4
    if q == 0:
        return sin_h, sin_l, ch_, cl_
    elif q == 1:
        return ch_, cl_, -sin_h, -sin_l
    elif q == 2:
        return -sin_h, -sin_l, -ch_, -cl_
    else:
        return -ch_, -cl_, sin_h, sin_l


@njit(cache=True)
def _lse2(ah, al, bh, bl):
    """dd log(exp(a) + exp(b)); -inf means an empty branch."""
    if ah == -np.inf:
        return bh, bl
    if bh == -np.inf:
        return ah, al
    if (bh > ah) or (bh == ah and bl > al):
        ah, al, bh, bl = bh, bl, ah, al
    dh, dl = _dd_add(bh, bl, -ah, -al)
    eh, el = _dd_exp(dh, dl)
    gh, gl = _dd_log1p(eh, el)
    return _dd_add(ah, al, gh, gl)


# ---------------------------------------------------------------------------
# Exact enumeration: Gray-code scan over configurations with spin 0 fixed +1.
# ---------------------------------------------------------------------------

@njit(cache=True)
def brute_histogram(n_sites, n_edges, nbr_idx, nbr_cnt):
    """Count configurations by (magnetization, edge agreement sum).

    Enumerates the 2^(n_sites-1) configurations with spin 0 fixed to +1
    via a Gray-code walk; returns int64 counts indexed by
    [m + N, k + E] with m the total magnetization and k = sum of
    sigma_u*sigma_v over edges.
    """
    N = n_sites
    E = n_edges
    hist = np.zeros((2 * N + 1, 2 * E + 1), dtype=np.int64)
    spins = np.ones(N, dtype=np.int8)
    m = N
    k = E
    hist[m + N, k + E] += 1
    total = np.int64(1) << (N - 1)
    for c in range(1, total):
        cc = c
        j = 0
        while cc & 1 == 0:
            cc >>= 1
            j += 1
        u = j + 1  # site 0 stays fixed
        s = spins[u]
        acc = 0
        for t in range(nbr_cnt[u]):
            acc += spins[nbr_idx[u, t]]
        k -= 2 * s * acc
        m -= 2 * s
        spins[u] = -s
        hist[m + N, k + E] += 1
    return hist


# ---------------------------------------------------------------------------
# 1D transfer engines.
# ---------------------------------------------------------------------------

@njit(cache=True)
def chain_histogram(N, periodic):
    """Exact integer (m, k) histogram for a 1D chain via transfer DP.

    Counts fit int64 for N <= 62. State: (first spin if periodic,
    last spin, magnetization).
    """
    E = N if periodic else N - 1
    if E < 0:
        E = 0
    # cnt[s0, s, m_idx, k_idx]; s encoded 0 -> -1, 1 -> +1
    n_s0 = 2 if periodic else 1
    cnt = np.zeros((n_s0, 2, 2 * N + 1, 2 * E + 1), dtype=np.int64)
    for s0 in range(n_s0):
        for s in range(2):
            if periodic and s != s0:
                continue
            sigma = 2 * s - 1
            cnt[s0 if periodic else 0, s, N + sigma, E] = 1
    for _ in range(N - 1):
        new = np.zeros_like(cnt)
        for s0 in range(n_s0):
            for s in range(2):
                sig = 2 * s - 1
                for sp in range(2):
                    sigp = 2 * sp - 1
                    dk = sig * sigp
                    for mi in range(2 * N + 1):
                        mo = mi + sigp
                        if mo < 0 or mo > 2 * N:
                            continue
                        for ki in range(2 * E + 1):
                            v = cnt[s0, s, mi, ki]
                            if v != 0:
                                new[s0, sp, mo, ki + dk] += v
        cnt = new
    hist = np.zeros((2 * N + 1, 2 * E + 1), dtype=np.int64)
    if periodic:
        for s0 in range(2):
            sig0 = 2 * s0 - 1
            for s in range(2):
                sig = 2 * s - 1
                dk = sig * sig0
                for mi in range(2 * N + 1):
                    for ki in range(2 * E + 1):
                        v = cnt[s0, s, mi, ki]
                        if v != 0:
                            hist[mi, ki + dk] += v
    else:
        for s in range(2):
            hist += cnt[0, s]
    return hist


@njit(cache=True)
def chain_transfer_logdd(N, periodic, beta):
    """ln A_m for a 1D chain by log-domain double-double transfer DP.

    Returns (hi, lo) arrays indexed by m + N; empty classes are -inf.
    """
    n_s0 = 2 if periodic else 1
    M = 2 * N + 1
    Lh = np.full((n_s0, 2, M), -np.inf)
    Ll = np.zeros((n_s0, 2, M))
    for s0 in range(n_s0):
        for s in range(2):
            if periodic and s != s0:
                continue
            sigma = 2 * s - 1
            Lh[s0 if periodic else 0, s, N + sigma] = 0.0
    for _ in range(N - 1):
        nh = np.full((n_s0, 2, M), -np.inf)
        nl = np.zeros((n_s0, 2, M))
        for s0 in range(n_s0):
            for sp in range(2):
                sigp = 2 * sp - 1
                for mo in range(M):
                    mi = mo - sigp
                    if mi < 0 or mi >= M:
                        continue
                    # source s = -1 then s = +1, fixed fold order
                    ah, al = -np.inf, 0.0
                    for s in range(2):
                        sig = 2 * s - 1
                        ch = Lh[s0, s, mi]
                        if ch == -np.inf:
                            continue
                        w = beta * (sig * sigp)
                        th, tl = _dd_add_f(ch, Ll[s0, s, mi], w)
                        ah, al = _lse2(ah, al, th, tl)
                    nh[s0, sp, mo] = ah
                    nl[s0, sp, mo] = al
        Lh, Ll = nh, nl
    out_h = np.full(M, -np.inf)
    out_l = np.zeros(M)
    for mo in range(M):
        ah, al = -np.inf, 0.0
        for s0 in range(n_s0):
            sig0 = 2 * s0 - 1
            for s in range(2):
                sig = 2 * s - 1
                ch = Lh[s0, s, mo]
                if ch == -np.inf:
                    continue
                if periodic:
                    th, tl = _dd_add_f(ch, Ll[s0, s, mo], beta * (sig * sig0))
                else:
                    th, tl = ch, Ll[s0, s, mo]
                ah, al = _lse2(ah, al, th, tl)
        out_h[mo] = ah
        out_l[mo] = al
    return out_h, out_l


# ---------------------------------------------------------------------------
# 2D transfer engines (row-based).
# ---------------------------------------------------------------------------

@njit(cache=True)
def grid2d_histogram(W, R, horiz_periodic, vert_periodic):
    """Exact integer (m, k) histogram for a W x R grid via row transfer DP."""
    N = W * R
    nrow = 1 << W
    E = (W - 1) * R + W * (R - 1)
    if horiz_periodic:
        E += R
    if vert_periodic:
        E += W
    yrow = np.zeros(nrow, dtype=np.int64)
    hrow = np.zeros(nrow, dtype=np.int64)
    for r in range(nrow):
        y = 0
        h = 0
        for c in range(W):
            s = 1 if (r >> c) & 1 else -1
            y += s
            if c + 1 < W:
                sn = 1 if (r >> (c + 1)) & 1 else -1
                h += s * sn
        if horiz_periodic:
            s_last = 1 if (r >> (W - 1)) & 1 else -1
            s_first = 1 if r & 1 else -1
            h += s_last * s_first
        yrow[r] = y
        hrow[r] = h
    vmat = np.zeros((nrow, nrow), dtype=np.int64)
    for r in range(nrow):
        for rp in range(nrow):
            v = 0
            for c in range(W):
                s = 1 if (r >> c) & 1 else -1
                sp = 1 if (rp >> c) & 1 else -1
                v += s * sp
            vmat[r, rp] = v
    hist = np.zeros((2 * N + 1, 2 * E + 1), dtype=np.int64)
    n_r0 = nrow if vert_periodic else 1
    for r0 in range(n_r0):
        cnt = np.zeros((nrow, 2 * N + 1, 2 * E + 1), dtype=np.int64)
        if vert_periodic:
            cnt[r0, N + yrow[r0], E + hrow[r0]] = 1
        else:
            for r in range(nrow):
                cnt[r, N + yrow[r], E + hrow[r]] = 1
        for _ in range(R - 1):
            new = np.zeros_like(cnt)
            for rp in range(nrow):
                dm = yrow[rp]
                for r in range(nrow):
                    dk = hrow[rp] + vmat[r, rp]
                    for mi in range(2 * N + 1):
                        mo = mi + dm
                        if mo < 0 or mo > 2 * N:
                            continue
                        for ki in range(2 * E + 1):
                            v = cnt[r, mi, ki]
                            if v != 0:
                                new[rp, mo, ki + dk] += v
            cnt = new
        for r in range(nrow):
            dk = vmat[r, r0] if vert_periodic else 0
            for mi in range(2 * N + 1):
                for ki in range(2 * E + 1):
                    v = cnt[r, mi, ki]
                    if v != 0:
                        hist[mi, ki + dk] += v
    return hist


@njit(cache=True)
def grid2d_transfer_logdd(W, R, beta, horiz_periodic, vert_periodic):
    """ln A_m for a W x R grid by log-domain double-double row DP."""
    N = W * R
    nrow = 1 << W
    M = 2 * N + 1
    yrow = np.zeros(nrow, dtype=np.int64)
    hrow = np.zeros(nrow, dtype=np.int64)
    for r in range(nrow):
        y = 0
        h = 0
        for c in range(W):
            s = 1 if (r >> c) & 1 else -1
            y += s
            if c + 1 < W:
                sn = 1 if (r >> (c + 1)) & 1 else -1
                h += s * sn
        if horiz_periodic:
            s_last = 1 if (r >> (W - 1)) & 1 else -1
            s_first = 1 if r & 1 else -1
            h += s_last * s_first
        yrow[r] = y
        hrow[r] = h
    vmat = np.zeros((nrow, nrow), dtype=np.int64)
    for r in range(nrow):
        for rp in range(nrow):
            v = 0
            for c in range(W):
                s = 1 if (r >> c) & 1 else -1
                sp = 1 if (rp >> c) & 1 else -1
                v += s * sp
            vmat[r, rp] = v
    out_h = np.full(M, -np.inf)
    out_l = np.zeros(M)
    n_r0 = nrow if vert_periodic else 1
    for r0 in range(n_r0):
        Lh = np.full((nrow, M), -np.inf)
        Ll = np.zeros((nrow, M))
        if vert_periodic:
            Lh[r0, N + yrow[r0]] = beta * hrow[r0]
        else:
            for r in range(nrow):
                Lh[r, N + yrow[r]] = beta * hrow[r]
        for _ in range(R - 1):
            nh = np.full((nrow, M), -np.inf)
            nl = np.zeros((nrow, M))
            for rp in range(nrow):
                dm = yrow[rp]
                for r in range(nrow):
                    w = beta * (hrow[rp] + vmat[r, rp])
                    for mi in range(M):
                        mo = mi + dm
                        if mo < 0 or mo >= M:
                            continue
                        ch = Lh[r, mi]
                        if ch == -np.inf:
                            continue
                        th, tl = _dd_add_f(ch, Ll[r, mi], w)
                        nh[rp, mo], nl[rp, mo] = _lse2(nh[rp, mo], nl[rp, mo], th, tl)
            Lh, Ll = nh, nl
        for r in range(nrow):
            w = beta * vmat[r, r0] if vert_periodic else 0.0
            for mi in range(M):
                ch = Lh[r, mi]
                if ch == -np.inf:
                    continue
                th, tl = _dd_add_f(ch, Ll[r, mi], w)
                out_h[mi], out_l[mi] = _lse2(out_h[mi], out_l[mi], th, tl)
    return out_h, out_l


# ---------------------------------------------------------------------------
# Trigonometric spectrum evaluation H(theta) = sum_m A_m cos(m theta / 2).
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def trig_grid_eval(vh, vl, m0, thetas):
    """Evaluate sum_j v_j cos((m0 + 2j) * theta/2) over a theta grid.

    Weights v include any doubling for the +-m symmetry. Uses the
    three-term cosine recurrence in double-double; one dd sincos per
    point seeds it.
    """
    n = thetas.shape[0]
    out_h = np.empty(n)
    out_l = np.empty(n)
    nw = vh.shape[0]
    for i in prange(n):
        x = 0.5 * thetas[i]
        s1h, s1l, c1h, c1l = _dd_sincos(x, 0.0)
        # cos(2x) = 2 cos^2 x - 1
        c2h, c2l = _dd_sqr(c1h, c1l)
        c2h, c2l = _dd_add_f(np.ldexp(c2h, 1), np.ldexp(c2l, 1), -1.0)
        th = np.ldexp(c2h, 1)
        tl = np.ldexp(c2l, 1)
        if m0 == 0:
            cur_h, cur_l = 1.0, 0.0
            prev_h, prev_l = c2h, c2l
        else:
            cur_h, cur_l = c1h, c1l
            prev_h, prev_l = c1h, c1l
        acc_h, acc_l = 0.0, 0.0
        for j in range(nw):
            ph, pl = _dd_mul(vh[j], vl[j], cur_h, cur_l)
            acc_h, acc_l = _dd_add(acc_h, acc_l, ph, pl)
            nxt_h, nxt_l = _dd_mul(th, tl, cur_h, cur_l)
            nxt_h, nxt_l = _dd_add(nxt_h, nxt_l, -prev_h, -prev_l)
            prev_h, prev_l = cur_h, cur_l
            cur_h, cur_l = nxt_h, nxt_l
        out_h[i] = acc_h
        out_l[i] = acc_l
    return out_h, out_l


# ---------------------------------------------------------------------------
# 1D chain partition function at complex field, rescaled transfer product.
#
# Z(h) = sum_sigma exp(beta sum ss + h sum s) via 2x2 complex transfer
# steps with power-of-two renormalization. Unlike the coefficient sum,
# this stays well conditioned inside the zero band (relative error
# ~ N eps of |Z| itself), which is what long-chain root location needs.
# ---------------------------------------------------------------------------

@njit(cache=True, parallel=True)
def chain_field_eval(N, periodic, beta, hre, him):
    """Z(h)/2^log2scale per field point; returns (re, im, umax, log2scale)."""
    npts = hre.shape[0]
    out_re = np.empty(npts)
    out_im = np.empty(npts)
    out_umax = np.empty(npts)
    out_log2 = np.zeros(npts, dtype=np.int64)
    eb = np.exp(beta)
    emb = np.exp(-beta)
    for i in prange(npts):
        h = complex(hre[i], him[i])
        zp = np.exp(h)
        zm = np.exp(-h)
        log2 = np.int64(0)
        if not periodic:
            u0 = zp
            u1 = zm
            for _ in range(N - 1):
                v0 = (u0 * eb + u1 * emb) * zp
                v1 = (u0 * emb + u1 * eb) * zm
                m = max(abs(v0.real), abs(v0.imag), abs(v1.real), abs(v1.imag))
                e = 0
                if m > 0.0:
                    e = math.frexp(m)[1]
                u0 = complex(math.ldexp(v0.real, -e), math.ldexp(v0.imag, -e))
                u1 = complex(math.ldexp(v1.real, -e), math.ldexp(v1.imag, -e))
                log2 += e
            z = u0 + u1
            umax = max(abs(u0), abs(u1))
        else:
            # P = T^N with T[s, s'] = exp(beta s s') exp(h s'); Z = tr(P)
            t00 = eb * zp
            t01 = emb * zm
            t10 = emb * zp
            t11 = eb * zm
            p00, p01, p10, p11 = t00, t01, t10, t11
            for _ in range(N - 1):
                q00 = p00 * t00 + p01 * t10
                q01 = p00 * t01 + p01 * t11
                q10 = p10 * t00 + p11 * t10
                q11 = p10 * t01 + p11 * t11
                m = max(abs(q00.real), abs(q00.imag), abs(q01.real), abs(q01.imag),
                        abs(q10.real), abs(q10.imag), abs(q11.real), abs(q11.imag))
                e = 0
                if m > 0.0:
                    e = math.frexp(m)[1]
                p00 = complex(math.ldexp(q00.real, -e), math.ldexp(q00.imag, -e))
                p01 = complex(math.ldexp(q01.real, -e), math.ldexp(q01.imag, -e))
                p10 = complex(math.ldexp(q10.real, -e), math.ldexp(q10.imag, -e))
                p11 = complex(math.ldexp(q11.real, -e), math.ldexp(q11.imag, -e))
                log2 += e
            z = p00 + p11
            umax = max(abs(p00), abs(p01), abs(p10), abs(p11))
        out_re[i] = z.real
        out_im[i] = z.imag
        out_umax[i] = umax
        out_log2[i] = log2
    return out_re, out_im, out_umax, out_log2


# ---------------------------------------------------------------------------
# Metropolis sampling of the perturbed Hamiltonian.
# ---------------------------------------------------------------------------

@njit(cache=True)
def _splitmix64(state):
    z = state
    z = z ^ (z >> _U64_30)
    z = z * _MIX1
    z = z ^ (z >> _U64_27)
    z = z * _MIX2
    z = z ^ (z >> _U64_31)
    return z


@njit(cache=True)
def _uniform_at(seed, counter):
    z = _splitmix64(seed + _GOLDEN * (counter + np.uint64(1)))
    return np.float64(z >> _U64_11) * _TO_UNIT


@njit(cache=True)
def _run_one_chain(nbr_idx, nbr_cnt, beta, gamma, sweeps, burn_in, thinning,
                   n_batches, seed, batch_hist):
    N = nbr_cnt.shape[0]
    spins = np.ones(N, dtype=np.int8)
    Y = N
    accepted = np.int64(0)
    n_samples = (sweeps - burn_in + thinning - 1) // thinning
    batch_len = n_samples // n_batches
    n_used = batch_len * n_batches    # equal batches; remainder dropped
    sample = 0
    counter = np.uint64(0)
    for sweep in range(sweeps):
        for u in range(N):
            uni = _uniform_at(seed, counter)
            counter += np.uint64(1)
            s = spins[u]
            acc = 0
            for t in range(nbr_cnt[u]):
                acc += spins[nbr_idx[u, t]]
            dE = -2.0 * s * (beta * acc) + gamma * (4.0 - 4.0 * s * Y)
            if dE >= 0.0 or uni < np.exp(dE):
                spins[u] = -s
                Y -= 2 * s
                accepted += 1
        if sweep >= burn_in and (sweep - burn_in) % thinning == 0:
            if sample < n_used:
                batch_hist[sample // batch_len, (Y + N) // 2] += 1
            sample += 1
    return accepted


@njit(cache=True, parallel=True)
def metropolis_chains(nbr_idx, nbr_cnt, beta, gamma, sweeps, burn_in,
                      thinning, n_batches, chain_seeds):
    """Run independent Metropolis chains; per-chain, per-batch histograms.

    Returns (batch_hist[chain, batch, (m+N)//2], accepted[chain]).
    Deterministic for fixed seeds regardless of thread count.
    """
    n_chains = chain_seeds.shape[0]
    N = nbr_cnt.shape[0]
    batch_hist = np.zeros((n_chains, n_batches, N + 1), dtype=np.int64)
    accepted = np.zeros(n_chains, dtype=np.int64)
    for c in prange(n_chains):
        accepted[c] = _run_one_chain(nbr_idx, nbr_cnt, beta, gamma, sweeps,
                                     burn_in, thinning, n_batches,
                                     chain_seeds[c], batch_hist[c])
    return batch_hist, accepted
