"""Double-double (~106-bit significand) arithmetic on numpy arrays.

A value is carried as an unevaluated pair ``(hi, lo)`` of float64 with
``|lo| <= ulp(hi)/2``; the represented number is exactly ``hi + lo``.
All functions broadcast over numpy arrays and accept plain floats.

The error-free transformations (two_sum / two_prod) require strict IEEE
double semantics: do not run these under fastmath or extended-precision
intermediates.
"""

import numpy as np
import mpmath

_SPLITTER = 134217729.0  # 2**27 + 1, Dekker split constant

# Number of Taylor terms used by exp/sin/cos after argument reduction.
_EXP_TERMS = 12
_TRIG_TERMS = 16


def two_sum(a, b):
    """Error-free sum: returns (s, e) with s + e == a + b exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def quick_two_sum(a, b):
    """Error-free sum assuming |a| >= |b|."""
    s = a + b
    e = b - (s - a)
    return s, e


def two_prod(a, b):
    """Error-free product: returns (p, e) with p + e == a * b exactly."""
    p = a * b
    ta = _SPLITTER * a
    ahi = ta - (ta - a)
    alo = a - ahi
    tb = _SPLITTER * b
    bhi = tb - (tb - b)
    blo = b - bhi
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, e


def add(xh, xl, yh, yl):
    """Accurate double-double addition."""
    sh, sl = two_sum(xh, yh)
    th, tl = two_sum(xl, yl)
    sl = sl + th
    sh, sl = quick_two_sum(sh, sl)
    sl = sl + tl
    return quick_two_sum(sh, sl)


def add_f(xh, xl, y):
    """Add a plain float64 to a double-double."""
    sh, sl = two_sum(xh, y)
    sl = sl + xl
    return quick_two_sum(sh, sl)


def neg(xh, xl):
    return -xh, -xl


def sub(xh, xl, yh, yl):
    return add(xh, xl, -yh, -yl)


def mul(xh, xl, yh, yl):
    """Double-double multiplication."""
    ph, pl = two_prod(xh, yh)
    pl = pl + (xh * yl + xl * yh)
    return quick_two_sum(ph, pl)


def mul_f(xh, xl, y):
    """Multiply a double-double by a plain float64."""
    ph, pl = two_prod(xh, y)
    pl = pl + xl * y
    return quick_two_sum(ph, pl)


def mul_pow2(xh, xl, k):
    """Exact scaling by 2**k (k integer, possibly an array)."""
    return np.ldexp(xh, k), np.ldexp(xl, k)


def sqr(xh, xl):
    ph, pl = two_prod(xh, xh)
    pl = pl + 2.0 * (xh * xl)
    return quick_two_sum(ph, pl)


def div(xh, xl, yh, yl):
    """Double-double division (three-term long division)."""
    q1 = xh / yh
    rh, rl = add(xh, xl, *mul_f(yh, yl, -q1))
    q2 = rh / yh
    rh, rl = add(rh, rl, *mul_f(yh, yl, -q2))
    q3 = rh / yh
    sh, sl = quick_two_sum(q1, q2)
    return add_f(sh, sl, q3)


def from_int64(n):
    """Exact conversion of int64 values (counts up to 2**62) to double-double."""
    n = np.asarray(n, dtype=np.int64)
    hi = n.astype(np.float64)
    lo = (n - hi.astype(np.int64)).astype(np.float64)
    return hi, lo


def comparison_key(xh, xl):
    """hi value; enough to order well-separated double-doubles."""
    return xh


# ---------------------------------------------------------------------------
# Constants (computed once from mpmath at import).
# ---------------------------------------------------------------------------

def _const(expr):
    with mpmath.workprec(140):
        x = mpmath.mpf(expr) if isinstance(expr, str) else expr
        hi = float(x)
        lo = float(x - hi)
    return hi, lo


with mpmath.workprec(140):
    LN2 = _const(mpmath.ln(2))
    PI = _const(mpmath.pi())
    TWO_PI = _const(2 * mpmath.pi())
    PI_2 = _const(mpmath.pi() / 2)
    PI_4 = _const(mpmath.pi() / 4)

_INV_FACT = []
with mpmath.workprec(140):
    for _j in range(2, _TRIG_TERMS * 2 + 4):
        _INV_FACT.append(_const(1 / mpmath.factorial(_j)))


# ---------------------------------------------------------------------------
# Transcendentals.
# ---------------------------------------------------------------------------

def exp(xh, xl):
    """Double-double exp via ln2 reduction, scaled Taylor series, squaring."""
    xh = np.asarray(xh, dtype=np.float64)
    xl = np.asarray(xl, dtype=np.float64)
    k = np.rint(xh / LN2[0])
    # r = x - k*ln2, |r| <= ln2/2 + eps
    t1h, t1l = two_prod(k, LN2[0])
    rh, rl = add(xh, xl, -t1h, -t1l)
    rh, rl = add(rh, rl, *two_prod(k, -LN2[1]))
    # scale by 2**-9 and run the Taylor series for exp(r) - 1
    rh, rl = mul_pow2(rh, rl, -9)
    ph, pl = sqr(rh, rl)                              # r^2
    sh, sl = add(rh, rl, *mul_pow2(ph, pl, -1))       # r + r^2/2
    for j in range(3, _EXP_TERMS + 1):
        ph, pl = mul(ph, pl, rh, rl)                  # r^j
        fh, fl = _INV_FACT[j - 2]                     # 1/j! as double-double
        th, tl = mul(ph, pl, fh, fl)
        sh, sl = add(sh, sl, th, tl)
    # undo scaling: (1+s)^(2^9) - 1 via s <- s^2 + 2 s repeated
    for _ in range(9):
        sqh, sql = sqr(sh, sl)
        sh, sl = add(sqh, sql, *mul_pow2(sh, sl, 1))
    sh, sl = add_f(sh, sl, 1.0)
    ki = k.astype(np.int64)
    sh, sl = mul_pow2(sh, sl, ki)
    # clamp under/overflow
    under = xh < -745.0
    over = xh > 709.8
    sh = np.where(under, 0.0, np.where(over, np.inf, sh))
    sl = np.where(under | over, 0.0, sl)
    return sh, sl


def log(xh, xl):
    """Double-double natural log; two Newton steps off the float64 log."""
    xh = np.asarray(xh, dtype=np.float64)
    xl = np.asarray(xl, dtype=np.float64)
    yh = np.log(xh)
    yl = np.zeros_like(yh)
    # y += x*exp(-y) - 1; first pass leaves O(d^2), second O(2^-106)
    for _ in range(2):
        eh, el = exp(-yh, -yl)
        ph, pl = mul(xh, xl, eh, el)
        ph, pl = add_f(ph, pl, -1.0)
        yh, yl = add(yh, yl, ph, pl)
    return yh, yl


def log1p(xh, xl):
    """log(1+x) with absolute error ~2^-106 (relative for x not tiny)."""
    xh = np.asarray(xh, dtype=np.float64)
    xl = np.asarray(xl, dtype=np.float64)
    wh, wl = add_f(xh, xl, 1.0)
    tiny = np.abs(xh) < 1e-32
    wh = np.where(tiny, 1.0, wh)
    lh, ll = log(wh, wl)
    return np.where(tiny, xh, lh), np.where(tiny, xl, ll)


def _sincos_taylor(rh, rl):
    """sin and cos Taylor sums on |r| <= pi/4 + slack."""
    r2h, r2l = sqr(rh, rl)
    # sin: r * (1 - r^2/3! + r^4/5! - ...)
    sh, sl = np.ones_like(rh), np.zeros_like(rh)
    th, tl = np.ones_like(rh), np.zeros_like(rh)
    sign = -1.0
    for j in range(1, _TRIG_TERMS):
        th, tl = mul(th, tl, r2h, r2l)
        fh, fl = _INV_FACT[2 * j - 1]  # 1/(2j+1)!
        ch, cl = mul(th, tl, fh, fl)
        sh, sl = add(sh, sl, sign * ch, sign * cl)
        sign = -sign
    sinh_, sinl_ = mul(sh, sl, rh, rl)
    # cos: 1 - r^2/2! + r^4/4! - ...
    ch_, cl_ = np.ones_like(rh), np.zeros_like(rh)
    th, tl = np.ones_like(rh), np.zeros_like(rh)
    sign = -1.0
    for j in range(1, _TRIG_TERMS):
        th, tl = mul(th, tl, r2h, r2l)
        fh, fl = _INV_FACT[2 * j - 2]  # 1/(2j)!
        gh, gl = mul(th, tl, fh, fl)
        ch_, cl_ = add(ch_, cl_, sign * gh, sign * gl)
        sign = -sign
    return (sinh_, sinl_), (ch_, cl_)


def sincos(xh, xl):
    """Double-double (sin x, cos x); accurate for |x| up to ~1e6."""
    xh = np.asarray(xh, dtype=np.float64)
    xl = np.asarray(xl, dtype=np.float64)
    k = np.rint(xh / PI_2[0])
    t1h, t1l = two_prod(k, PI_2[0])
    rh, rl = add(xh, xl, -t1h, -t1l)
    rh, rl = add(rh, rl, *two_prod(k, -PI_2[1]))
    (sh, sl), (ch, cl) = _sincos_taylor(rh, rl)
    q = k.astype(np.int64) % 4
    sin_h = np.select([q == 0, q == 1, q == 2], [sh, ch, -sh], default=-ch)
    sin_l = np.select([q == 0, q == 1, q == 2], [sl, cl, -sl], default=-cl)
    cos_h = np.select([q == 0, q == 1, q == 2], [ch, -sh, -ch], default=sh)
    cos_l = np.select([q == 0, q == 1, q == 2], [cl, -sl, -cl], default=sl)
    return (sin_h, sin_l), (cos_h, cos_l)


def cos(xh, xl):
    return sincos(xh, xl)[1]


def sin(xh, xl):
    return sincos(xh, xl)[0]


# ---------------------------------------------------------------------------
# Reductions and conversions.
# ---------------------------------------------------------------------------

def tree_sum(hi, lo):
    """Deterministic pairwise-tree sum of a double-double array.

    Fixed reduction order (index-halving tree), independent of thread
    count or chunking, so results are bit-stable.
    """
    hi = np.asarray(hi, dtype=np.float64).ravel().copy()
    lo = np.asarray(lo, dtype=np.float64).ravel().copy()
    n = hi.size
    if n == 0:
        return 0.0, 0.0
    while n > 1:
        half = n // 2
        ah, al = add(hi[:half], lo[:half], hi[half:2 * half], lo[half:2 * half])
        if n % 2:
            ah = np.concatenate([ah, hi[2 * half:n]])
            al = np.concatenate([al, lo[2 * half:n]])
            half += 1
        hi, lo = ah, al
        n = half
    return float(hi[0]), float(lo[0])


def logsumexp(hi, lo):
    """Double-double log(sum(exp(x_i))) over an array of dd log-values."""
    hi = np.asarray(hi, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    mask = np.isfinite(hi)
    if not mask.any():
        return -np.inf, 0.0
    shift = float(hi[mask].max())
    eh, el = exp(*add_f(hi[mask], lo[mask], -shift))
    sh, sl = tree_sum(eh, el)
    lh, ll = log(np.asarray(sh), np.asarray(sl))
    lh, ll = add_f(lh, ll, shift)
    return float(lh), float(ll)


def to_mpf(xh, xl):
    """Exact mpmath value of a scalar double-double (use under workprec>=130)."""
    return mpmath.mpf(float(xh)) + mpmath.mpf(float(xl))


def from_mpf(x):
    hi = float(x)
    lo = float(x - mpmath.mpf(hi))
    return hi, lo


def to_str(xh, xl, digits=36):
    """Decimal string with enough digits to round-trip 106-bit values."""
    with mpmath.workprec(140):
        return mpmath.nstr(to_mpf(xh, xl), digits, strip_zeros=False)


def from_str(s):
    with mpmath.workprec(140):
        return from_mpf(mpmath.mpf(s))
