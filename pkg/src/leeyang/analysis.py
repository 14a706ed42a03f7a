"""Cumulants, scaling constants, exponential tilts, and limit densities.

The quantitative core: u_2/u_4/u_6 from spectra and from zero lists,
the tilt p_m proportional to A_m exp(gamma m^2) (gamma_n = 1/(2<Y^2>)
gives the critical Curie-Weiss perturbation), the Gaussian-transform
density f_W and its zero-product twin, and the evaluable limit-density
family K exp(-kappa_1 x^4) prod (1+x^2/a_j^2) exp(-x^2/a_j^2).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import dd
from .spectrum import MagnetizationSpectrum, mgf_log_dd, moment, moment_dd
from .zeros import MgfZeroList, find_angles

SQRT_2PI = math.sqrt(2.0 * math.pi)

# c_n bracket endpoints: 1/int dx/(1+x^4/3) and 1/int exp(-x^4) dx
C_N_LOWER = 0.342045913658905
C_N_UPPER = 0.551628151029271


# ---------------------------------------------------------------------------
# Gamma-function constants (Lanczos double precision, identity-checked).
# ---------------------------------------------------------------------------

def gamma_quarter_constants():
    """Gamma(1/4), Gamma(3/4), Gamma(5/4) and the quartic constants.

    Cross-checks the reflection identity Gamma(1/4)Gamma(3/4) = pi*sqrt(2)
    to 1e-13 so the values never silently depend on a bad libm.
    """
    g14 = math.gamma(0.25)
    g34 = math.gamma(0.75)
    g54 = math.gamma(1.25)
    target = math.pi * math.sqrt(2.0)
    if abs(g14 * g34 - target) > 1e-13 * target:
        raise ArithmeticError("gamma reflection identity check failed")
    C = math.sqrt(g34 / g14)
    return {
        "gamma14": g14,
        "gamma34": g34,
        "gamma54": g54,
        "C": C,
        "K_X": C / (2.0 * g54),
        "quartic_kurtosis": g54 * g14 / (g34 * g34),
    }


def twoine_bounds(y):
    """The guard inequality exp(-y^2/2) <= (1+y)e^{-y} <= 1/(1+y^2/6)."""
    y = np.asarray(y, dtype=np.float64)
    return np.exp(-0.5 * y * y), (1.0 + y) * np.exp(-y), 1.0 / (1.0 + y * y / 6.0)


# ---------------------------------------------------------------------------
# Cumulants.
# ---------------------------------------------------------------------------

@dataclass
class CumulantSet:
    u2: float
    u4: float
    u6: float | None
    source: str                 # "spectrum" or "zeros"
    truncation_bound: float = 0.0

    def __post_init__(self):
        if self.u2 <= 0:
            raise ValueError("u2 must be positive")


def cumulants_from_spectrum(spec, orders=(2, 4, 6)):
    """u2, u4 (and u6) from exact moments, combined in double-double."""
    m2 = moment_dd(spec, 2)
    out = {"u2": m2[0] + m2[1], "u4": None, "u6": None}
    if 4 in orders or 6 in orders:
        m4 = moment_dd(spec, 4)
        # u4 = m4 - 3 m2^2
        t = dd.mul_f(*dd.sqr(np.asarray(m2[0]), np.asarray(m2[1])), -3.0)
        u4 = dd.add(np.asarray(m4[0]), np.asarray(m4[1]), *t)
        out["u4"] = float(u4[0] + u4[1])
    if 6 in orders:
        m6 = moment_dd(spec, 6)
        # u6 = m6 - 15 m4 m2 + 30 m2^3
        a = dd.mul_f(*dd.mul(np.asarray(m4[0]), np.asarray(m4[1]),
                             np.asarray(m2[0]), np.asarray(m2[1])), -15.0)
        b = dd.mul_f(*dd.mul(*dd.sqr(np.asarray(m2[0]), np.asarray(m2[1])),
                             np.asarray(m2[0]), np.asarray(m2[1])), 30.0)
        u6 = dd.add(np.asarray(m6[0]), np.asarray(m6[1]), *a)
        u6 = dd.add(*u6, *b)
        out["u6"] = float(u6[0] + u6[1])
    return CumulantSet(u2=float(out["u2"]), u4=out["u4"], u6=out["u6"],
                       source="spectrum", truncation_bound=0.0)


def cumulants_from_zeros(zeros: MgfZeroList, order):
    """u_{2m} = (-1)^{m-1} (2m)!/m sum_j alpha_j^{-2m}, with tail bound.

    Returns (value, bound); the bound covers the omitted replicas.
    """
    if order < 4 or order % 2:
        raise ValueError("order must be even and >= 4")
    m = order // 2
    coef = math.factorial(order) / m
    s = float(np.sum(zeros.alphas ** (-float(order))))
    sign = 1.0 if (m - 1) % 2 == 0 else -1.0
    return sign * coef * s, coef * zeros.tail_bound(order)


# ---------------------------------------------------------------------------
# Scaling constants.
# ---------------------------------------------------------------------------

@dataclass
class ScalingConstants:
    gamma_n: float       # 1/(2 u2)
    lambda_n: float      # u2
    c_n: float
    d_n: float
    tilt_normalizer: float   # <exp(Y^2/(2 u2))>

    def __post_init__(self):
        if not (self.c_n > 0 and self.d_n > 0):
            raise ValueError("c_n and d_n must be positive")


def tilt_log_normalizer(spec, gamma):
    """dd log <exp(gamma Y^2)>."""
    mf = spec.m_values.astype(np.float64)
    qh, ql = dd.two_prod(float(gamma), mf * mf)
    th, tl = dd.add(spec.log_hi, spec.log_lo, qh, ql)
    nh, nl = dd.logsumexp(th, tl)
    zh, zl = spec.log_z()
    return dd.add(nh, nl, -zh, -zl)


def scaling_constants(spec, cums: CumulantSet | None = None):
    """c_n and d_n of the tightness lemma, plus gamma_n and lambda_n."""
    if cums is None:
        cums = cumulants_from_spectrum(spec, orders=(2, 4))
    lam = cums.u2
    if cums.u4 >= 0:
        raise ValueError("u4 must be negative (guarded: impossible at finite N)")
    gamma_n = 0.5 / lam
    th, tl = tilt_log_normalizer(spec, gamma_n)
    tnorm = float(sum(dd.exp(np.asarray(th), np.asarray(tl))))
    c_n = math.sqrt(lam) / (SQRT_2PI * tnorm) * (24.0 / -cums.u4) ** 0.25
    d_n = (-cums.u4 / 24.0) ** 0.25 / lam
    return ScalingConstants(gamma_n=gamma_n, lambda_n=lam, c_n=c_n, d_n=d_n,
                            tilt_normalizer=tnorm)


# ---------------------------------------------------------------------------
# Exponential tilt (the X_n construction).
# ---------------------------------------------------------------------------

@dataclass
class TiltedSpectrum:
    """p_m proportional to A_m exp(gamma m^2); gamma = gamma_n gives X_n."""

    base: MagnetizationSpectrum
    gamma: float
    spectrum: MagnetizationSpectrum     # log-tilted weights, engine "tilt"
    probabilities: np.ndarray
    tilt_normalizer: float

    @property
    def m_values(self):
        return self.spectrum.m_values

    def moment(self, k):
        return moment(self.spectrum, k)

    def normalized_kurtosis(self):
        return normalized_kurtosis(self)


def tilt_spectrum(spec, gamma):
    """Tilt a spectrum by exp(gamma m^2) and normalize."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0 (ferromagnetic tilt)")
    mf = spec.m_values.astype(np.float64)
    qh, ql = dd.two_prod(float(gamma), mf * mf)
    lh, ll = dd.add(spec.log_hi, spec.log_lo, qh, ql)
    # gamma = 0 tilts nothing: keep the base engine tag (and its closed
    # forms, e.g. the beta = 0 zero bypass)
    engine = spec.engine if gamma == 0.0 else f"tilt[g={repr(float(gamma))}]"
    tilted = MagnetizationSpectrum(
        site_count=spec.site_count, beta=spec.beta, boundary=spec.boundary,
        dimension=spec.dimension, engine=engine,
        precision_bits=spec.precision_bits, m_values=spec.m_values.copy(),
        log_hi=lh, log_lo=ll, radius=spec.radius)
    zh, zl = tilted.log_z()
    ph, pl = dd.exp(*dd.add(lh, ll, -zh, -zl))
    th, tl = tilt_log_normalizer(spec, gamma)
    return TiltedSpectrum(base=spec, gamma=float(gamma), spectrum=tilted,
                          probabilities=np.asarray(ph + pl),
                          tilt_normalizer=float(sum(dd.exp(np.asarray(th), np.asarray(tl)))))


def critical_tilt(spec):
    """The gamma_n tilt: X_n, the critical Curie-Weiss perturbation."""
    u2 = moment(spec, 2)
    return tilt_spectrum(spec, 0.5 / u2)


# ---------------------------------------------------------------------------
# Gaussian-transform densities.
# ---------------------------------------------------------------------------

def w_density_spectrum(spec, x, consts: ScalingConstants | None = None):
    """f_{W_n}(x) = e^{-x^2/2L} <e^{xY/L}> / (sqrt(2 pi L) <e^{gamma_n Y^2}>)."""
    if consts is None:
        consts = scaling_constants(spec)
    lam = consts.lambda_n
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty_like(xs)
    log_pref = -math.log(SQRT_2PI * math.sqrt(lam) * consts.tilt_normalizer)
    for i, xi in enumerate(xs):
        gh, gl = mgf_log_dd(spec, xi / lam)
        e = float(gh + gl) - xi * xi / (2.0 * lam) + log_pref
        out[i] = math.exp(e)
    return float(out[0]) if np.ndim(x) == 0 else out


def w_density_rescaled(spec, x, consts: ScalingConstants | None = None):
    """f_{d_n W_n}(x) = (1/d_n) f_{W_n}(x / d_n), the spectrum route."""
    if consts is None:
        consts = scaling_constants(spec)
    return w_density_spectrum(spec, np.asarray(x) / consts.d_n, consts) / consts.d_n


def w_density_zeros(spec, zeros: MgfZeroList, x,
                    consts: ScalingConstants | None = None,
                    cums: CumulantSet | None = None, tol=1e-8):
    """f_{d_n W_n}(x) from the zero product c_n prod (1+y_j) e^{-y_j}.

    y_j = x^2 / (alpha_j^2 sqrt(-u4/4!)). Raises when the replica
    truncation can move the product by more than tol.
    """
    if cums is None:
        cums = cumulants_from_spectrum(spec, orders=(2, 4))
    if consts is None:
        consts = scaling_constants(spec, cums)
    scale = math.sqrt(-cums.u4 / 24.0)
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    xmax = float(np.max(np.abs(xs)))
    bound = 0.75 * (xmax ** 4 / (-cums.u4 / 24.0)) * zeros.tail_bound(4)
    if bound > tol:
        raise ValueError(
            f"replica truncation bound {bound:.3g} exceeds tol={tol:.3g}; "
            "raise the replication depth K")
    inv = 1.0 / (zeros.alphas ** 2 * scale)
    out = np.empty_like(xs)
    for i, xi in enumerate(xs):
        y = (xi * xi) * inv
        out[i] = consts.c_n * math.exp(float(np.sum(np.log1p(y) - y)))
    return float(out[0]) if np.ndim(x) == 0 else out


def density_sandwich(spec, x, consts: ScalingConstants | None = None):
    """(lower, value, upper) of c_n e^{-x^4} <= f_{d_nW_n}(x) <= c_n/(1+x^4/3)."""
    if consts is None:
        consts = scaling_constants(spec)
    xs = np.asarray(x, dtype=np.float64)
    val = w_density_rescaled(spec, xs, consts)
    return consts.c_n * np.exp(-xs ** 4), val, consts.c_n / (1.0 + xs ** 4 / 3.0)


# ---------------------------------------------------------------------------
# Limit density models.
# ---------------------------------------------------------------------------

@dataclass
class LimitDensityModel:
    """Evaluable K exp(-kappa_1 x^4) prod (1+x^2/a_j^2) exp(-x^2/a_j^2).

    The model is the W-limit density; the X-limit is the C3-rescale
    f_X(x) = C3 f_W(C3 x) with C3 = sqrt(E W^2).
    """

    kappa1: float
    K: float
    a_list: np.ndarray
    C3: float
    half_width: float = 6.0

    def __post_init__(self):
        defect = abs(self.kappa1 + 0.5 * float(np.sum(self.a_list ** -4.0)) - 1.0)
        if defect > 1e-12:
            raise ValueError(f"kappa_1 identity violated by {defect:.3g}")
        if not 0.0 <= self.kappa1 <= 1.0 + 1e-12:
            raise ValueError("kappa_1 must lie in [0, 1]")

    def _shape(self, x):
        x = np.asarray(x, dtype=np.float64)
        val = np.exp(-self.kappa1 * x ** 4)
        for a in self.a_list:
            y = (x / a) ** 2
            val = val * (1.0 + y) * np.exp(-y)
        return val

    def density_w(self, x):
        return self.K * self._shape(x)

    def density_x(self, x):
        return self.C3 * self.density_w(self.C3 * np.asarray(x))

    def cdf_x(self, x):
        """CDF of the X-scale density by adaptive quadrature (abs tol 1e-12)."""
        lo = -self.half_width / self.C3
        xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
        order = np.argsort(xs)
        out = np.empty_like(xs)
        prev_x, acc = lo, 0.0
        for i in order:
            xi = float(xs[i])
            if xi <= lo:
                out[i] = 0.0
                continue
            seg, _ = quad(lambda t: self.density_x(t), prev_x, xi,
                          epsabs=1e-12, epsrel=1e-10, limit=200)
            acc += seg
            out[i] = acc
            prev_x = xi
        return float(out[0]) if np.ndim(x) == 0 else out

    def var_x(self):
        v, _ = quad(lambda t: t * t * self.density_x(t),
                    -self.half_width / self.C3, self.half_width / self.C3,
                    epsabs=1e-12, epsrel=1e-10, limit=200)
        return v

    def kurtosis(self):
        m2, _ = quad(lambda t: t * t * self.density_w(t),
                     -self.half_width, self.half_width,
                     epsabs=1e-12, epsrel=1e-10, limit=200)
        m4, _ = quad(lambda t: t ** 4 * self.density_w(t),
                     -self.half_width, self.half_width,
                     epsabs=1e-12, epsrel=1e-10, limit=200)
        return m4 / (m2 * m2)


def limit_density_model(a_list=()):
    """Build the model from the zero scalings a_j; K and C3 by quadrature."""
    a = np.asarray(sorted(a_list), dtype=np.float64)
    kappa1 = 1.0 - 0.5 * float(np.sum(a ** -4.0)) if a.size else 1.0
    if kappa1 < -1e-12:
        raise ValueError("sum a_j^-4 exceeds 2; not a valid zero-scaling list")
    kappa1 = max(kappa1, 0.0)

    def shape(x):
        val = math.exp(-kappa1 * x ** 4)
        for aj in a:
            y = (x / aj) ** 2
            val *= (1.0 + y) * math.exp(-y)
        return val

    # stretch the window until the integrand tail is dead
    L = 6.0
    while shape(L) > 1e-18 and L < 60.0:
        L *= 1.25
    norm, _ = quad(shape, -L, L, epsabs=1e-12, epsrel=1e-10, limit=200)
    m2, _ = quad(lambda t: t * t * shape(t), -L, L,
                 epsabs=1e-12, epsrel=1e-10, limit=200)
    K = 1.0 / norm
    C3 = math.sqrt(m2 / norm)
    return LimitDensityModel(kappa1=kappa1, K=K, a_list=a, C3=C3, half_width=L)


def quartic_model():
    """The empty-a_list model: f_W = e^{-x^4}/(2 Gamma(5/4)), C3 = C."""
    return limit_density_model(())


def limit_density(model: LimitDensityModel, x):
    """f_X(x) = C3 f_W(C3 x)."""
    val = model.density_x(x)
    return float(val) if np.ndim(x) == 0 else val


def symmetric_gaussian_mixture(x, mean=math.sqrt(2.0) / 2.0, var=0.5):
    """Optional comparison density: mixture of N(+-mean, var), weight 1/2."""
    x = np.asarray(x, dtype=np.float64)
    pref = 1.0 / math.sqrt(2.0 * math.pi * var)
    return 0.5 * pref * (np.exp(-(x - mean) ** 2 / (2 * var))
                         + np.exp(-(x + mean) ** 2 / (2 * var)))


# ---------------------------------------------------------------------------
# Distribution diagnostics.
# ---------------------------------------------------------------------------

def normalized_kurtosis(dist):
    """E X^4 / (E X^2)^2 for tilted spectra, models, or (m2, m4) pairs."""
    if isinstance(dist, TiltedSpectrum):
        m2 = dist.moment(2)
        m4 = dist.moment(4)
        return m4 / (m2 * m2)
    if isinstance(dist, LimitDensityModel):
        return dist.kurtosis()
    m2, m4 = dist
    return m4 / (m2 * m2)


def kolmogorov_distance(dist, model: LimitDensityModel):
    """sup_x |F_emp(x) - F_model(x)| for X/sqrt(E X^2) vs the model.

    dist is a TiltedSpectrum or an (atoms, probabilities) pair already
    on the normalized scale; the sup runs over the atom jump points.
    """
    if isinstance(dist, TiltedSpectrum):
        m2 = dist.moment(2)
        atoms = dist.m_values.astype(np.float64) / math.sqrt(m2)
        probs = dist.probabilities
    else:
        atoms, probs = dist
        atoms = np.asarray(atoms, dtype=np.float64)
        probs = np.asarray(probs, dtype=np.float64)
    F_emp = np.cumsum(probs)
    F_model = model.cdf_x(atoms)
    below = np.abs(np.concatenate([[0.0], F_emp[:-1]]) - F_model)
    above = np.abs(F_emp - F_model)
    return float(np.max(np.maximum(below, above)))


def power_sum_profile(zeros: MgfZeroList, u4, orders=(4, 6, 8)):
    """b_k = sum alpha^{-2k} / (-u4/4!)^{k/2} with truncation bounds.

    b_2 == 2 identically when u4 is the full zero sum; each b_k lies in
    [0, 2^{k/2}].
    """
    denom = -u4 / 24.0
    out = []
    for order in orders:
        if order % 2 or order < 4:
            raise ValueError("orders must be even and >= 4")
        k = order // 2
        s = float(np.sum(zeros.alphas ** (-float(order))))
        out.append({
            "k": k,
            "b_k": s / denom ** (k / 2.0),
            "bound": zeros.tail_bound(order) / denom ** (k / 2.0),
        })
    return out


# ---------------------------------------------------------------------------
# The b-shifted tilt (LY-type certification at finite n).
# ---------------------------------------------------------------------------

@dataclass
class TiltedLyReport:
    b: float
    gamma_n: float
    ex2: float
    gamma_hat: float
    pre_asymptotic: bool
    certified: bool
    n_roots: int
    residual: float


def tilted_ly_check(spec, b, grid_points=None, theta_tol=1e-12):
    """Certify the gamma_hat-tilted spectrum keeps all zeros on the circle.

    gamma_hat = gamma_n (1 - b/(gamma_n E X^2)). Negative gamma_hat at
    small N is reported as pre-asymptotic, not a failure.
    """
    if b <= 0:
        raise ValueError("b must be positive")
    u2 = moment(spec, 2)
    gamma_n = 0.5 / u2
    tilted = tilt_spectrum(spec, gamma_n)
    ex2 = tilted.moment(2)
    gamma_hat = gamma_n * (1.0 - b / (gamma_n * ex2))
    if gamma_hat < 0:
        return TiltedLyReport(b=b, gamma_n=gamma_n, ex2=ex2,
                              gamma_hat=gamma_hat, pre_asymptotic=True,
                              certified=False, n_roots=0, residual=float("nan"))
    hat = tilt_spectrum(spec, gamma_hat)
    ly = find_angles(hat.spectrum, grid_points=grid_points, theta_tol=theta_tol)
    n_roots = int(ly.multiplicities.sum())
    return TiltedLyReport(b=b, gamma_n=gamma_n, ex2=ex2, gamma_hat=gamma_hat,
                          pre_asymptotic=False,
                          certified=n_roots == spec.site_count,
                          n_roots=n_roots, residual=ly.residual)
