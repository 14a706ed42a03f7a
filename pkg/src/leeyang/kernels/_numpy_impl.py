"""Pure-numpy fallback kernels.

Same algorithms and operation order as `_numba_impl`, vectorized where
the loop structure allows; selected by the LEEYANG_PURE_NUMPY env flag
or when numba is unavailable. Results match the JIT backend bit for bit
(integer histograms exactly; double-double paths op-for-op).
"""

import math

import numpy as np

from .. import dd

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TO_UNIT = 2.0 ** -53


def _lse2_vec(ah, al, bh, bl):
    """Vector dd log(exp(a)+exp(b)) matching the scalar fold semantics."""
    ah = np.asarray(ah, dtype=np.float64)
    al = np.asarray(al, dtype=np.float64)
    bh = np.asarray(bh, dtype=np.float64)
    bl = np.asarray(bl, dtype=np.float64)
    swap = (bh > ah) | ((bh == ah) & (bl > al))
    big_h = np.where(swap, bh, ah)
    big_l = np.where(swap, bl, al)
    sml_h = np.where(swap, ah, bh)
    sml_l = np.where(swap, al, bl)
    ok = sml_h != -np.inf
    s_h = np.where(ok, sml_h, 0.0)
    s_l = np.where(ok, sml_l, 0.0)
    b_h = np.where(ok, big_h, 1.0)
    b_l = np.where(ok, big_l, 0.0)
    dh, dl = dd.add(s_h, s_l, -b_h, -b_l)
    eh, el = dd.exp(dh, dl)
    gh, gl = dd.log1p(eh, el)
    rh, rl = dd.add(b_h, b_l, gh, gl)
    return np.where(ok, rh, big_h), np.where(ok, rl, big_l)


def _add_f_masked(lh, ll, w):
    """dd add of a float to log values, passing -inf through untouched."""
    ok = lh != -np.inf
    h, l = dd.add_f(np.where(ok, lh, 0.0), np.where(ok, ll, 0.0), w)
    return np.where(ok, h, -np.inf), np.where(ok, l, 0.0)


# ---------------------------------------------------------------------------
# Exact enumeration (chunked vectorized Gray-free bit counting).
# ---------------------------------------------------------------------------

def brute_histogram(n_sites, n_edges, nbr_idx, nbr_cnt):
    """Count configurations by (m, k); spin 0 fixed +1. See JIT twin."""
    N = n_sites
    E = n_edges
    # recover the edge list from the neighbor table (u < v once each)
    eu = []
    ev = []
    for u in range(N):
        for t in range(nbr_cnt[u]):
            v = int(nbr_idx[u, t])
            if u < v:
                eu.append(u)
                ev.append(v)
    eu = np.array(eu, dtype=np.int64)
    ev = np.array(ev, dtype=np.int64)
    hist = np.zeros((2 * N + 1) * (2 * E + 1), dtype=np.int64)
    total = 1 << (N - 1)
    chunk = 1 << 16
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        spins = np.empty((idx.size, N), dtype=np.int8)
        spins[:, 0] = 1
        for b in range(N - 1):
            spins[:, b + 1] = 1 - 2 * ((idx >> np.uint64(b)) & np.uint64(1)).astype(np.int8)
        m = spins.sum(axis=1, dtype=np.int64)
        if E > 0:
            k = (spins[:, eu].astype(np.int64) * spins[:, ev].astype(np.int64)).sum(axis=1)
        else:
            k = np.zeros(idx.size, dtype=np.int64)
        flat = (m + N) * (2 * E + 1) + (k + E)
        hist += np.bincount(flat, minlength=hist.size).astype(np.int64)
    return hist.reshape(2 * N + 1, 2 * E + 1)


# ---------------------------------------------------------------------------
# 1D transfer engines.
# ---------------------------------------------------------------------------

def chain_histogram(N, periodic):
    """Exact integer (m, k) histogram for a 1D chain. See JIT twin."""
    E = max(N if periodic else N - 1, 0)
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
                    src = cnt[s0, s]
                    lo_m, hi_m = max(0, -sigp), min(2 * N + 1, 2 * N + 1 - sigp)
                    lo_k, hi_k = max(0, -dk), min(2 * E + 1, 2 * E + 1 - dk)
                    new[s0, sp, lo_m + sigp:hi_m + sigp, lo_k + dk:hi_k + dk] += \
                        src[lo_m:hi_m, lo_k:hi_k]
        cnt = new
    hist = np.zeros((2 * N + 1, 2 * E + 1), dtype=np.int64)
    if periodic:
        for s0 in range(2):
            sig0 = 2 * s0 - 1
            for s in range(2):
                sig = 2 * s - 1
                dk = sig * sig0
                lo_k, hi_k = max(0, -dk), min(2 * E + 1, 2 * E + 1 - dk)
                hist[:, lo_k + dk:hi_k + dk] += cnt[s0, s][:, lo_k:hi_k]
    else:
        hist += cnt[0, 0] + cnt[0, 1]
    return hist


def chain_transfer_logdd(N, periodic, beta):
    """ln A_m for a 1D chain, log-domain double-double DP. See JIT twin."""
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
                # shifted views of the two sources, fold s=0 then s=1
                th0, tl0 = _shift_m(Lh[s0, 0], Ll[s0, 0], sigp, M)
                th0, tl0 = _add_f_masked(th0, tl0, beta * ((2 * 0 - 1) * sigp))
                th1, tl1 = _shift_m(Lh[s0, 1], Ll[s0, 1], sigp, M)
                th1, tl1 = _add_f_masked(th1, tl1, beta * ((2 * 1 - 1) * sigp))
                nh[s0, sp], nl[s0, sp] = _lse2_vec(th0, tl0, th1, tl1)
        Lh, Ll = nh, nl
    out_h = np.full(M, -np.inf)
    out_l = np.zeros(M)
    for s0 in range(n_s0):
        sig0 = 2 * s0 - 1
        for s in range(2):
            sig = 2 * s - 1
            if periodic:
                th, tl = _add_f_masked(Lh[s0, s], Ll[s0, s], beta * (sig * sig0))
            else:
                th, tl = Lh[s0, s], Ll[s0, s]
            out_h, out_l = _lse2_vec(out_h, out_l, th, tl)
    return out_h, out_l


def _shift_m(h, l, delta, M):
    """View of log arrays shifted by delta in the m index (pad -inf)."""
    oh = np.full(M, -np.inf)
    ol = np.zeros(M)
    if delta >= 0:
        oh[delta:] = h[:M - delta]
        ol[delta:] = l[:M - delta]
    else:
        oh[:delta] = h[-delta:]
        ol[:delta] = l[-delta:]
    return oh, ol


# ---------------------------------------------------------------------------
# 2D transfer engines.
# ---------------------------------------------------------------------------

def _row_tables(W, horiz_periodic):
    nrow = 1 << W
    r = np.arange(nrow, dtype=np.int64)
    bits = np.empty((nrow, W), dtype=np.int64)
    for c in range(W):
        bits[:, c] = 2 * ((r >> c) & 1) - 1
    yrow = bits.sum(axis=1)
    hrow = (bits[:, :-1] * bits[:, 1:]).sum(axis=1) if W > 1 else np.zeros(nrow, dtype=np.int64)
    if horiz_periodic:
        hrow = hrow + bits[:, -1] * bits[:, 0]
    vmat = bits @ bits.T
    return yrow, hrow, vmat


def grid2d_histogram(W, R, horiz_periodic, vert_periodic):
    """Exact integer (m, k) histogram for a W x R grid. See JIT twin."""
    N = W * R
    nrow = 1 << W
    E = (W - 1) * R + W * (R - 1)
    if horiz_periodic:
        E += R
    if vert_periodic:
        E += W
    yrow, hrow, vmat = _row_tables(W, horiz_periodic)
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
                dm = int(yrow[rp])
                for r in range(nrow):
                    dk = int(hrow[rp] + vmat[r, rp])
                    src = cnt[r]
                    lo_m, hi_m = max(0, -dm), min(2 * N + 1, 2 * N + 1 - dm)
                    lo_k, hi_k = max(0, -dk), min(2 * E + 1, 2 * E + 1 - dk)
                    new[rp, lo_m + dm:hi_m + dm, lo_k + dk:hi_k + dk] += \
                        src[lo_m:hi_m, lo_k:hi_k]
            cnt = new
        for r in range(nrow):
            dk = int(vmat[r, r0]) if vert_periodic else 0
            lo_k, hi_k = max(0, -dk), min(2 * E + 1, 2 * E + 1 - dk)
            hist[:, lo_k + dk:hi_k + dk] += cnt[r][:, lo_k:hi_k]
    return hist


def grid2d_transfer_logdd(W, R, beta, horiz_periodic, vert_periodic):
    """ln A_m for a W x R grid, log-domain double-double DP. See JIT twin."""
    N = W * R
    nrow = 1 << W
    M = 2 * N + 1
    yrow, hrow, vmat = _row_tables(W, horiz_periodic)
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
                dm = int(yrow[rp])
                ah = np.full(M, -np.inf)
                al = np.zeros(M)
                for r in range(nrow):
                    w = beta * (hrow[rp] + vmat[r, rp])
                    th, tl = _shift_m(Lh[r], Ll[r], dm, M)
                    th, tl = _add_f_masked(th, tl, w)
                    ah, al = _lse2_vec(ah, al, th, tl)
                nh[rp], nl[rp] = ah, al
            Lh, Ll = nh, nl
        for r in range(nrow):
            w = beta * vmat[r, r0] if vert_periodic else 0.0
            th, tl = _add_f_masked(Lh[r], Ll[r], w)
            out_h, out_l = _lse2_vec(out_h, out_l, th, tl)
    return out_h, out_l


# ---------------------------------------------------------------------------
# Trigonometric spectrum evaluation.
# ---------------------------------------------------------------------------

def trig_grid_eval(vh, vl, m0, thetas):
    """Vectorized cosine-recurrence evaluation over a theta grid."""
    thetas = np.asarray(thetas, dtype=np.float64)
    x = 0.5 * thetas
    _, (c1h, c1l) = dd.sincos(x, np.zeros_like(x))
    c2h, c2l = dd.sqr(c1h, c1l)
    c2h, c2l = dd.add_f(np.ldexp(c2h, 1), np.ldexp(c2l, 1), -1.0)
    th = np.ldexp(c2h, 1)
    tl = np.ldexp(c2l, 1)
    if m0 == 0:
        cur_h, cur_l = np.ones_like(x), np.zeros_like(x)
        prev_h, prev_l = c2h, c2l
    else:
        cur_h, cur_l = c1h, c1l
        prev_h, prev_l = c1h.copy(), c1l.copy()
    acc_h, acc_l = np.zeros_like(x), np.zeros_like(x)
    for j in range(vh.shape[0]):
        ph, pl = dd.mul(vh[j], vl[j], cur_h, cur_l)
        acc_h, acc_l = dd.add(acc_h, acc_l, ph, pl)
        nxt_h, nxt_l = dd.mul(th, tl, cur_h, cur_l)
        nxt_h, nxt_l = dd.add(nxt_h, nxt_l, -prev_h, -prev_l)
        prev_h, prev_l = cur_h, cur_l
        cur_h, cur_l = nxt_h, nxt_l
    return acc_h, acc_l


# ---------------------------------------------------------------------------
# 1D chain partition function at complex field (see JIT twin).
# ---------------------------------------------------------------------------

def _rescale_pairs(parts, log2):
    """Power-of-two renormalization of complex components (in place)."""
    m = np.zeros_like(parts[0].real)
    for p in parts:
        m = np.maximum(m, np.maximum(np.abs(p.real), np.abs(p.imag)))
    e = np.where(m > 0.0, np.frexp(m)[1], 0).astype(np.int64)
    scaled = [np.ldexp(p.real, -e) + 1j * np.ldexp(p.imag, -e) for p in parts]
    return scaled, log2 + e


def chain_field_eval(N, periodic, beta, hre, him):
    """Z(h)/2^log2scale per field point; returns (re, im, umax, log2scale)."""
    h = np.asarray(hre, dtype=np.float64) + 1j * np.asarray(him, dtype=np.float64)
    zp = np.exp(h)
    zm = np.exp(-h)
    eb = math.exp(beta)
    emb = math.exp(-beta)
    log2 = np.zeros(h.shape, dtype=np.int64)
    if not periodic:
        u0 = zp.copy()
        u1 = zm.copy()
        for _ in range(N - 1):
            v0 = (u0 * eb + u1 * emb) * zp
            v1 = (u0 * emb + u1 * eb) * zm
            (u0, u1), log2 = _rescale_pairs([v0, v1], log2)
        z = u0 + u1
        umax = np.maximum(np.abs(u0), np.abs(u1))
    else:
        t00, t01, t10, t11 = eb * zp, emb * zm, emb * zp, eb * zm
        p00, p01, p10, p11 = t00.copy(), t01.copy(), t10.copy(), t11.copy()
        for _ in range(N - 1):
            q00 = p00 * t00 + p01 * t10
            q01 = p00 * t01 + p01 * t11
            q10 = p10 * t00 + p11 * t10
            q11 = p10 * t01 + p11 * t11
            (p00, p01, p10, p11), log2 = _rescale_pairs([q00, q01, q10, q11], log2)
        z = p00 + p11
        umax = np.maximum(np.maximum(np.abs(p00), np.abs(p01)),
                          np.maximum(np.abs(p10), np.abs(p11)))
    return z.real.copy(), z.imag.copy(), umax, log2


# ---------------------------------------------------------------------------
# Metropolis sampling.
# ---------------------------------------------------------------------------

def _uniform_block(seed, base, count):
    ctr = np.arange(base + 1, base + count + 1, dtype=np.uint64)
    z = seed + _GOLDEN * ctr
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return (z >> np.uint64(11)).astype(np.float64) * _TO_UNIT


def metropolis_chains(nbr_idx, nbr_cnt, beta, gamma, sweeps, burn_in,
                      thinning, n_batches, chain_seeds):
    """Sequential-python twin of the JIT Metropolis driver."""
    n_chains = chain_seeds.shape[0]
    N = nbr_cnt.shape[0]
    batch_hist = np.zeros((n_chains, n_batches, N + 1), dtype=np.int64)
    accepted = np.zeros(n_chains, dtype=np.int64)
    n_samples = (sweeps - burn_in + thinning - 1) // thinning
    for c in range(n_chains):
        seed = np.uint64(chain_seeds[c])
        spins = np.ones(N, dtype=np.int64)
        Y = N
        acc_count = 0
        sample = 0
        nbr_lists = [nbr_idx[u, :nbr_cnt[u]].astype(np.int64) for u in range(N)]
        for sweep in range(sweeps):
            unis = _uniform_block(seed, sweep * N, N)
            for u in range(N):
                s = spins[u]
                acc = int(spins[nbr_lists[u]].sum()) if nbr_lists[u].size else 0
                dE = -2.0 * s * (beta * acc) + gamma * (4.0 - 4.0 * s * Y)
                if dE >= 0.0 or unis[u] < math.exp(dE):
                    spins[u] = -s
                    Y -= 2 * s
                    acc_count += 1
            if sweep >= burn_in and (sweep - burn_in) % thinning == 0:
                b = min(sample * n_batches // n_samples, n_batches - 1)
                batch_hist[c, b, (Y + N) // 2] += 1
                sample += 1
        accepted[c] = acc_count
    return batch_hist, accepted
