"""Magnetization-resolved weight spectra A_m, exactly, in log domain.

A_m is the total Boltzmann weight of configurations with total
magnetization m at h = 0. Engines: brute-force enumeration (exact
integer (m, k) histograms, k the edge agreement sum), 1D/2D transfer
DP (integer histograms when counts fit int64, else log-domain
double-double), and the closed binomial form at beta = 0.

Everything downstream (zeros, cumulants, tilts, densities) consumes
these spectra; log weights are double-double so that cancellation-heavy
evaluations retain ~1e-28 headroom.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
import mpmath

from . import dd
from . import kernels
from .lattice import FREE, PERIODIC, LatticeSpec, build_lattice, chain_lattice

SCHEMA_VERSION = 1
BRUTE_FORCE_CAP = 26       # 2^25 configurations after fixing one spin
INT_COUNT_CAP = 62         # counts fit int64 up to 2^62 configurations
TRANSFER_2D_WIDTH_CAP = 9

SUPPORTED_PRECISIONS = (53, 106)


class PrecisionLossWarning(UserWarning):
    """Cancellation ate into the accumulation precision budget."""


@dataclass
class MagnetizationSpectrum:
    """ln A_m over m in {-N, -N+2, ..., N}, double-double components."""

    site_count: int
    beta: float
    boundary: str
    dimension: int
    engine: str
    precision_bits: int
    m_values: np.ndarray   # int64, ascending
    log_hi: np.ndarray
    log_lo: np.ndarray
    radius: int = -1       # box radius n when applicable, else -1
    _logz: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if not np.all(np.isfinite(self.log_hi)):
            raise ValueError("empty magnetization class: every A_m must be > 0")
        if np.any((self.m_values % 2) != (self.site_count % 2)):
            raise ValueError("support parity violated: m must equal N mod 2")

    @property
    def cache_key(self):
        return spectrum_cache_key(self.dimension, self.site_count, self.boundary,
                                  self.beta, self.precision_bits, self.engine)

    def log_z(self):
        """dd log of Z = sum_m A_m."""
        if self._logz is None:
            self._logz = dd.logsumexp(self.log_hi, self.log_lo)
        return self._logz

    def weights_dd(self):
        """Normalized weights A_m / Z as a double-double array pair."""
        zh, zl = self.log_z()
        lh, ll = dd.add(self.log_hi, self.log_lo, -zh, -zl)
        return dd.exp(lh, ll)

    def log_weight(self, m):
        i = int(np.searchsorted(self.m_values, m))
        if i >= len(self.m_values) or self.m_values[i] != m:
            raise KeyError(f"no magnetization class m={m}")
        return self.log_hi[i], self.log_lo[i]


def spectrum_cache_key(d, N, boundary, beta, precision_bits, engine):
    """Canonical hash of the spectrum-defining parameters."""
    payload = json.dumps(
        {"d": d, "N": N, "boundary": boundary, "beta": repr(float(beta)),
         "precision_bits": precision_bits, "engine": engine},
        sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _round_precision(lh, ll, precision_bits):
    if precision_bits == 53:
        return lh + ll, np.zeros_like(lh)
    return lh, ll


def _check_precision(precision_bits):
    if precision_bits not in SUPPORTED_PRECISIONS:
        raise ValueError(
            f"precision_bits must be one of {SUPPORTED_PRECISIONS}")


def _symmetrize(m_values, lh, ll):
    """Force ln A_m == ln A_{-m} exactly by copying from m >= 0."""
    order = np.argsort(m_values)
    m_values = m_values[order]
    lh = lh[order].copy()
    ll = ll[order].copy()
    n = len(m_values)
    for i in range(n):
        j = n - 1 - i   # m_values[j] == -m_values[i]
        if m_values[j] > 0:
            lh[i] = lh[j]
            ll[i] = ll[j]
    return m_values, lh, ll


def _assemble_log_weights(hist, beta, n_sites, n_edges):
    """ln A_m from an exact integer (m, k) histogram.

    A_m = sum_k n_{m,k} exp(beta k), evaluated per m with the max-k
    shift so nothing overflows; counts convert to double-double exactly.
    """
    N, E = n_sites, n_edges
    ms = []
    lhs = []
    lls = []
    for mi in range(hist.shape[0]):
        row = hist[mi]
        nz = np.nonzero(row)[0]
        if nz.size == 0:
            continue
        m = mi - N
        ks = nz.astype(np.int64) - E
        kmax = int(ks.max())
        wh, wl = dd.exp(*dd.two_prod(beta, (ks - kmax).astype(np.float64)))
        nh, nl = dd.from_int64(row[nz])
        th, tl = dd.mul(nh, nl, wh, wl)
        sh, sl = dd.tree_sum(th, tl)
        gh, gl = dd.log(np.asarray(sh), np.asarray(sl))
        gh, gl = dd.add(gh, gl, *dd.two_prod(beta, float(kmax)))
        ms.append(m)
        lhs.append(float(gh))
        lls.append(float(gl))
    return np.array(ms, dtype=np.int64), np.array(lhs), np.array(lls)


def _finalize(m, lh, ll, *, N, beta, boundary, d, engine, precision_bits, radius=-1):
    m, lh, ll = _symmetrize(m, lh, ll)
    lh, ll = _round_precision(lh, ll, precision_bits)
    return MagnetizationSpectrum(
        site_count=N, beta=float(beta), boundary=boundary, dimension=d,
        engine=engine, precision_bits=precision_bits,
        m_values=m, log_hi=lh, log_lo=ll, radius=radius)


# ---------------------------------------------------------------------------
# Engines.
# ---------------------------------------------------------------------------

def enumerate_spectrum(lattice: LatticeSpec, beta, precision_bits=106,
                       cap=BRUTE_FORCE_CAP):
    """Brute-force exact spectrum by Gray-code enumeration.

    Enumerates only configurations with the first spin +1 and doubles
    via the mirror class, which enforces the +-m symmetry exactly.
    """
    _check_precision(precision_bits)
    N = lattice.site_count
    if N > cap:
        raise ValueError(
            f"N={N} exceeds the brute-force cap {cap}; "
            "use transfer_spectrum_1d/transfer_spectrum_2d instead")
    nbr_idx, nbr_cnt = lattice.neighbor_table()
    E = lattice.n_edges
    half = kernels.brute_histogram(N, E, nbr_idx, nbr_cnt)
    hist = half + half[::-1, :]          # add the spin-flipped half-space
    m, lh, ll = _assemble_log_weights(hist, beta, N, E)
    return _finalize(m, lh, ll, N=N, beta=beta, boundary=lattice.boundary,
                     d=lattice.dimension, engine="brute",
                     precision_bits=precision_bits, radius=lattice.radius)


def transfer_spectrum_1d(N, boundary, beta, precision_bits=106):
    """1D chain spectrum via transfer DP (O(N^2) log-weight updates).

    Uses exact integer counting when counts fit int64 (N <= 62), else
    the log-domain double-double recursion.
    """
    _check_precision(precision_bits)
    if N < 1:
        raise ValueError("N >= 1 required")
    periodic = boundary == PERIODIC
    if periodic and N < 3:
        raise ValueError("periodic chain needs N >= 3")
    if N <= INT_COUNT_CAP:
        E = N if periodic else N - 1
        hist = kernels.chain_histogram(N, periodic)
        m, lh, ll = _assemble_log_weights(hist, beta, N, max(E, 0))
    else:
        out_h, out_l = kernels.chain_transfer_logdd(N, periodic, float(beta))
        mi = np.nonzero(out_h != -np.inf)[0]
        m = mi.astype(np.int64) - N
        lh, ll = out_h[mi], out_l[mi]
    radius = (N - 1) // 2 if N % 2 == 1 else -1
    return _finalize(m, lh, ll, N=N, beta=beta, boundary=boundary, d=1,
                     engine="transfer1d", precision_bits=precision_bits,
                     radius=radius)


def transfer_spectrum_2d(n, boundary, beta, precision_bits=106):
    """(2n+1) x (2n+1) spectrum via row transfer DP; width 2n+1 <= 9."""
    _check_precision(precision_bits)
    W = 2 * n + 1
    if W > TRANSFER_2D_WIDTH_CAP:
        raise ValueError(f"width {W} exceeds the 2D transfer cap "
                         f"{TRANSFER_2D_WIDTH_CAP}")
    periodic = boundary == PERIODIC
    if periodic and W < 3:
        raise ValueError("periodic boundary needs side >= 3")
    N = W * W
    if N <= INT_COUNT_CAP:
        hist = kernels.grid2d_histogram(W, W, periodic, periodic)
        E = (W - 1) * W + W * (W - 1) + (2 * W if periodic else 0)
        m, lh, ll = _assemble_log_weights(hist, beta, N, E)
    else:
        out_h, out_l = kernels.grid2d_transfer_logdd(W, W, float(beta),
                                                     periodic, periodic)
        mi = np.nonzero(out_h != -np.inf)[0]
        m = mi.astype(np.int64) - N
        lh, ll = out_h[mi], out_l[mi]
    return _finalize(m, lh, ll, N=N, beta=beta, boundary=boundary, d=2,
                     engine="transfer2d", precision_bits=precision_bits,
                     radius=n)


def curie_weiss_spectrum(N, precision_bits=106):
    """Binomial spectrum ln A_m = ln C(N, (N+m)/2) via log-gamma.

    The beta = 0 case: the gamma_n-tilt of this spectrum is exactly the
    critical Curie-Weiss model.
    """
    _check_precision(precision_bits)
    if N < 1:
        raise ValueError("N >= 1 required")
    m = np.arange(-N, N + 1, 2, dtype=np.int64)
    lh = np.empty(len(m))
    ll = np.empty(len(m))
    with mpmath.workprec(140):
        lg_n = mpmath.loggamma(N + 1)
        half = len(m) // 2
        for i in range(len(m)):
            if m[i] < 0:
                continue
            j = (N + int(m[i])) // 2
            val = lg_n - mpmath.loggamma(j + 1) - mpmath.loggamma(N - j + 1)
            lh[i], ll[i] = dd.from_mpf(val)
    for i in range(half):
        lh[i], ll[i] = lh[len(m) - 1 - i], ll[len(m) - 1 - i]
    return _finalize(m, lh, ll, N=N, beta=0.0, boundary=FREE, d=1,
                     engine="curie-weiss", precision_bits=precision_bits,
                     radius=(N - 1) // 2 if N % 2 == 1 else -1)


def spectrum_for_lattice(lattice: LatticeSpec, beta, precision_bits=106,
                         engine="auto"):
    """Route a lattice to the best exact engine."""
    if engine == "brute":
        return enumerate_spectrum(lattice, beta, precision_bits)
    if engine == "cw" or (engine == "auto" and beta == 0.0):
        return curie_weiss_spectrum(lattice.site_count, precision_bits)
    if lattice.dimension == 1:
        return transfer_spectrum_1d(lattice.site_count, lattice.boundary,
                                    beta, precision_bits)
    if lattice.dimension == 2 and lattice.radius >= 0:
        return transfer_spectrum_2d(lattice.radius, lattice.boundary, beta,
                                    precision_bits)
    return enumerate_spectrum(lattice, beta, precision_bits)


# ---------------------------------------------------------------------------
# MGF and moments.
# ---------------------------------------------------------------------------

def mgf_log_dd(spec, x):
    """dd log of <exp(x Y)> for real x (log-domain, no overflow)."""
    th, tl = dd.two_prod(float(x), spec.m_values.astype(np.float64))
    th, tl = dd.add(spec.log_hi, spec.log_lo, th, tl)
    nh, nl = dd.logsumexp(th, tl)
    zh, zl = spec.log_z()
    return dd.add(nh, nl, -zh, -zl)


def uses_chain_evaluator(spec):
    """Long untilted chains route MGF/root evaluations through the
    rescaled 2x2 transfer product: the coefficient sum loses the
    exponentially suppressed in-band values past ~64 sites at any
    fixed precision, while the transfer product stays conditioned.
    """
    return (spec.dimension == 1 and spec.site_count > 64
            and spec.engine in ("transfer1d", "brute", "curie-weiss"))


def mgf_scaled(spec, z):
    """<exp(z Y)> as (value, log_scale) with <e^{zY}> = value * exp(log_scale).

    Split form keeps large systems evaluable where the plain value
    would over- or underflow float64.
    """
    z = complex(z)
    if uses_chain_evaluator(spec):
        periodic = spec.boundary == PERIODIC
        re, im, _, log2 = kernels.chain_field_eval(
            spec.site_count, periodic, spec.beta,
            np.array([z.real]), np.array([z.imag]))
        zh, zl = spec.log_z()
        log_scale = float(log2[0]) * math.log(2.0) - zh - zl
        return complex(re[0], im[0]), log_scale
    mf = spec.m_values.astype(np.float64)
    xh, xl = dd.two_prod(z.real, mf)
    lh, ll = dd.add(spec.log_hi, spec.log_lo, xh, xl)
    shift = float(lh.max())
    wh, wl = dd.exp(*dd.add_f(lh, ll, -shift))
    yh, yl = dd.two_prod(z.imag, mf)
    (sh, sl), (ch, cl) = dd.sincos(yh, yl)
    re = dd.tree_sum(*dd.mul(wh, wl, ch, cl))
    im = dd.tree_sum(*dd.mul(wh, wl, sh, sl))
    zh, zl = spec.log_z()
    log_scale = shift - zh - zl
    return complex(re[0] + re[1], im[0] + im[1]), log_scale


def mgf_eval(spec, z):
    """<exp(z Y)> = sum_m A_m e^{zm} / sum_m A_m.

    Real z returns a float (>= 1 by symmetry and convexity); complex z
    returns a complex value. May overflow to inf for very large
    |Re z| * N; use mgf_log_dd / mgf_scaled for the log form.
    """
    if isinstance(z, complex) and z.imag != 0.0:
        val, log_scale = mgf_scaled(spec, z)
        return val * np.exp(log_scale)
    x = z.real if isinstance(z, complex) else float(z)
    gh, gl = mgf_log_dd(spec, x)
    vh, vl = dd.exp(gh, gl)
    return float(vh + vl)


def moment(spec, k):
    """<Y^k> = sum_m m^k A_m / Z; odd k short-circuits to exact 0."""
    k = int(k)
    if k < 0:
        raise ValueError("k >= 0 required")
    if k == 0:
        return 1.0
    if k % 2 == 1:
        return 0.0
    return float(sum(moment_dd(spec, k)))


def moment_dd(spec, k):
    """Even moment <Y^k> as a double-double pair."""
    wh, wl = spec.weights_dd()
    mf = spec.m_values.astype(np.float64)
    m2h, m2l = dd.sqr(mf, np.zeros_like(mf))
    ph, pl = m2h.copy(), m2l.copy()
    for _ in range(k // 2 - 1):
        ph, pl = dd.mul(ph, pl, m2h, m2l)
    th, tl = dd.mul(wh, wl, ph, pl)
    return dd.tree_sum(th, tl)


# ---------------------------------------------------------------------------
# Serialization and cache.
# ---------------------------------------------------------------------------

def spectrum_to_dict(spec):
    return {
        "schema_version": SCHEMA_VERSION,
        "d": spec.dimension,
        "n_or_N": spec.site_count,
        "radius": spec.radius,
        "boundary": spec.boundary,
        "beta": repr(spec.beta),
        "precision_bits": spec.precision_bits,
        "engine": spec.engine,
        "cache_key": spec.cache_key,
        # both double-double components as exact shortest decimals so a
        # reload reproduces the stored pair bit for bit
        "log_weights": [[int(m), repr(float(h)), repr(float(l))]
                        for m, h, l in zip(spec.m_values, spec.log_hi, spec.log_lo)],
    }


def spectrum_from_dict(data):
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError("unsupported spectrum schema version")
    m = np.array([int(e[0]) for e in data["log_weights"]], dtype=np.int64)
    lh = np.array([float(e[1]) for e in data["log_weights"]])
    ll = np.array([float(e[2]) for e in data["log_weights"]])
    return MagnetizationSpectrum(
        site_count=int(data["n_or_N"]), beta=float(data["beta"]),
        boundary=data["boundary"], dimension=int(data["d"]),
        engine=data["engine"], precision_bits=int(data["precision_bits"]),
        m_values=m, log_hi=lh, log_lo=ll, radius=int(data.get("radius", -1)))


def save_spectrum(spec, path):
    with open(path, "w") as f:
        json.dump(spectrum_to_dict(spec), f, sort_keys=True, indent=1)
        f.write("\n")


def load_spectrum(path):
    with open(path) as f:
        return spectrum_from_dict(json.load(f))
