"""Lee-Yang zero angles on the unit circle and derived MGF zeros.

The partition function in z = e^{-2h} factors over N = |Lambda| roots
e^{i theta_j}; the angles are the zeros on (0, 2pi) of the real
trigonometric polynomial

    H(theta) = sum_m A_m cos(m theta / 2),

whose imaginary parts cancel by the A_m = A_{-m} symmetry. All MGF
zeros of <exp(zY)> then sit at +-i(theta_j/2 + k pi), k >= 0.
"""

import cmath
import json
import math
from dataclasses import dataclass

import numpy as np

from . import dd
from . import kernels
from .spectrum import SCHEMA_VERSION, mgf_scaled, moment

_LN10_PER_BIT = math.log10(2.0)


class RootDeficitError(RuntimeError):
    """Multiplicity accounting could not certify N circle roots.

    Raise precision_bits or grid_points and retry; CLI maps this to
    exit code 2.
    """

    def __init__(self, message, found, expected):
        super().__init__(message)
        self.found = found
        self.expected = expected


@dataclass
class LeeYangSpectrum:
    """Sorted zero angles with multiplicities on (0, 2pi)."""

    angles: np.ndarray          # float64, ascending
    multiplicities: np.ndarray  # int64
    residual: float             # max |H(theta_j)| relative to sum A_m
    source: str                 # spectrum cache key
    site_count: int

    def __post_init__(self):
        total = int(self.multiplicities.sum())
        if total != self.site_count:
            raise ValueError(
                f"zero count {total} != site count {self.site_count}")

    def with_multiplicity(self):
        """Angles repeated per multiplicity."""
        return np.repeat(self.angles, self.multiplicities)

    @property
    def theta_min(self):
        return float(self.angles[0])


@dataclass
class MgfZeroList:
    """Replicated MGF zero ordinates alpha = theta/2 + k*pi, k <= K."""

    alphas: np.ndarray
    replication_depth: int
    theta_min: float
    site_count: int

    def tail_bound(self, order):
        """Bound on sum over the omitted replicas of alpha^{-order}.

        Integral comparison: sum_{k>K} (theta/2 + k pi)^{-2m}
        <= pi^{-2m} (K + theta_min/(2 pi))^{1-2m} / (2m - 1) per angle.
        """
        if order < 2 or order % 2:
            raise ValueError("order must be even and >= 2")
        m2 = order
        c = self.theta_min / (2.0 * math.pi)
        return (self.site_count * math.pi ** (-m2)
                * (self.replication_depth + c) ** (1 - m2) / (m2 - 1))


def circle_weights(spec):
    """Cosine-sum weights over m >= 0 (doubled for m > 0), A_max-normalized.

    Returns (vh, vl, m0, total) with total = sum_m A_m / A_max.
    """
    shift = float(spec.log_hi.max())
    wh, wl = dd.exp(*dd.add_f(spec.log_hi, spec.log_lo, -shift))
    th, tl = dd.tree_sum(wh, wl)
    total = th + tl
    pos = spec.m_values >= 0
    mpos = spec.m_values[pos]
    vh = wh[pos].copy()
    vl = wl[pos].copy()
    double = mpos > 0
    vh[double] = np.ldexp(vh[double], 1)
    vl[double] = np.ldexp(vl[double], 1)
    m0 = int(mpos.min())
    return vh, vl, m0, total


def circle_function(spec, theta, relative=False):
    """H(theta) = sum_m A_m cos(m theta/2) at one angle or an array.

    With relative=True the value comes back divided by max_m A_m (same
    zeros and signs); the raw value overflows to inf once ln A_max
    exceeds ~709. Values that fall below the accumulation floor without
    being a located zero raise a PrecisionLossWarning: the digits are
    exhausted by cancellation there.
    """
    import warnings
    from .spectrum import PrecisionLossWarning
    vh, vl, m0, total = circle_weights(spec)
    arr = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    hh, hl = kernels.trig_grid_eval(vh, vl, m0, arr)
    exhausted = np.abs(hh) < total * 2.0 ** (-spec.precision_bits + 16)
    if exhausted.any():
        warnings.warn(
            "|H| below the cancellation budget at "
            f"{int(exhausted.sum())} point(s); values there are noise-level",
            PrecisionLossWarning, stacklevel=2)
    if not relative:
        shift = float(spec.log_hi.max())
        sh, sl = dd.exp(np.asarray(shift), np.asarray(0.0))
        hh, hl = dd.mul(hh, hl, sh + 0.0, sl + 0.0)
    if np.isscalar(theta) or np.ndim(theta) == 0:
        return float(hh if np.ndim(hh) == 0 else hh[0])
    return hh


def _merge_zones(zones, lo_clip, hi_clip):
    """Union of refinement intervals clipped to the scan window."""
    clipped = [(max(a, lo_clip), min(b, hi_clip)) for a, b in zones]
    clipped = sorted((a, b) for a, b in clipped if a < b)
    merged = []
    for a, b in clipped:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def _bisect_roots(eval_fn, lo, hi, f_lo, tol):
    """Vectorized sign-change bisection to absolute tolerance tol."""
    lo = lo.copy()
    hi = hi.copy()
    f_lo = f_lo.copy()
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        fm = eval_fn(mid)
        left = (np.sign(fm) == np.sign(f_lo)) & (fm != 0.0)
        lo = np.where(left, mid, lo)
        f_lo = np.where(left, fm, f_lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def _spectrum_evaluator(spec):
    """(eval_fn, total, digits): H evaluation backend for the scan.

    Small systems sum the cosine series in double-double; long chains
    use the rescaled transfer product of Z(i theta/2), normalized per
    point, whose in-band conditioning does not degrade with N.
    """
    from .spectrum import uses_chain_evaluator
    if uses_chain_evaluator(spec):
        N = spec.site_count
        periodic = spec.boundary == "periodic"
        beta = spec.beta

        def eval_fn(thetas):
            re, _, umax, _ = kernels.chain_field_eval(
                N, periodic, beta, np.zeros_like(thetas), 0.5 * thetas)
            return re / umax

        return eval_fn, 1.0, 13
    vh, vl, m0, total = circle_weights(spec)

    def eval_fn(thetas):
        return kernels.trig_grid_eval(vh, vl, m0, thetas)[0]

    return eval_fn, total, int(spec.precision_bits * _LN10_PER_BIT)


def find_angles(spec, grid_points=None, theta_tol=1e-12, force_scan=False):
    """Locate all N zero angles of H on (0, 2pi) with multiplicities.

    Grid scan on (0, pi) (the theta -> 2pi - theta symmetry supplies the
    mirrors), bisection on sign changes, then the deficit-accounting
    pass: local minima of |H| below the precision floor receive even
    multiplicity 2, escalating by 2 where the finite-difference slope
    also vanishes. Exact binomial (beta = 0) spectra short-circuit to
    the closed form: theta = pi with multiplicity N.
    """
    N = spec.site_count
    if grid_points is None:
        grid_points = max(64 * N, 256)
    if grid_points < 4 * N:
        raise ValueError("grid_points must be at least 4N")
    if spec.beta == 0.0 and not spec.engine.startswith("tilt") and not force_scan:
        return LeeYangSpectrum(
            angles=np.array([math.pi]), multiplicities=np.array([N]),
            residual=0.0, source=spec.cache_key, site_count=N)

    eval_fn, total, digits = _spectrum_evaluator(spec)
    floor = total * 10.0 ** (-(digits - 4))

    G = grid_points // 2
    h = math.pi / G
    thetas = h * np.arange(1, G)      # open (0, pi)

    odd = N % 2 == 1
    roots = []       # (theta, multiplicity) on (0, pi)
    pi_mult = 1 if odd else 0

    # pad with a point near 0 (H > 0 there) and a probe just left of pi
    # (pi itself is an identical zero for odd N)
    probe_left = math.pi - 0.25 * h
    pad_t = np.concatenate([[0.25 * h], thetas, [probe_left]])
    if not odd:
        # for even N, pi is a regular point unless it carries an even root
        pad_t = np.concatenate([pad_t, [math.pi]])
    pad_f = eval_fn(pad_t)

    def _scan(ts, fs):
        """Bisect every sign change among consecutive samples."""
        found = []
        sgn = np.sign(fs)
        exact = fs == 0.0
        change = (sgn[:-1] * sgn[1:] < 0) & ~exact[:-1] & ~exact[1:]
        idx = np.nonzero(change)[0]
        if idx.size:
            located = _bisect_roots(eval_fn, ts[idx], ts[idx + 1],
                                    fs[idx], theta_tol)
            found.extend(float(t) for t in located)
        for i in np.nonzero(exact)[0]:
            t = float(ts[i])
            if 0.0 < t < math.pi:
                found.append(t)
        return found

    roots.extend((t, 1) for t in _scan(pad_t, pad_f))

    def _count():
        return 2 * sum(mult for _, mult in roots) + (pi_mult if odd else 0)

    # Clusters tighter than the grid (root spacing shrinks toward the
    # support edge like 1/N^2) alias away: refine around close located
    # roots, and just beyond the extreme ones, until the count closes.
    h_cur = h
    for _ in range(10):
        deficit = N - _count()
        if deficit <= 0 or not roots:
            break
        rs = sorted(t for t, _ in roots)
        zones = []
        for i, r in enumerate(rs):
            near_prev = i > 0 and rs[i] - rs[i - 1] <= 2.5 * h_cur
            near_next = i + 1 < len(rs) and rs[i + 1] - rs[i] <= 2.5 * h_cur
            if near_prev or near_next:
                zones.append((r - 2.0 * h_cur, r + 2.0 * h_cur))
        zones.append((rs[0] - 8.0 * h_cur, rs[0]))
        zones.append((rs[-1], rs[-1] + 8.0 * h_cur))
        h_cur /= 16.0
        new_roots = []
        for lo_z, hi_z in _merge_zones(zones, 0.25 * h, probe_left):
            n_cells = max(int((hi_z - lo_z) / h_cur) + 1, 8)
            ts = np.linspace(lo_z, hi_z, n_cells + 1)
            new_roots.extend(_scan(ts, eval_fn(ts)))
        added = False
        existing = sorted(t for t, _ in roots)
        for t in new_roots:
            j = np.searchsorted(existing, t)
            close = False
            for k in (j - 1, j):
                if 0 <= k < len(existing) and abs(existing[k] - t) < 4.0 * theta_tol:
                    close = True
            if not close:
                roots.append((t, 1))
                existing = sorted(x for x, _ in roots)
                added = True
        if not added:
            break

    deficit = N - _count()

    if deficit > 0:
        absH = np.abs(pad_f)
        mins = []
        for i in range(1, len(pad_f) - 1):
            if absH[i] < floor and absH[i] <= absH[i - 1] and absH[i] <= absH[i + 1]:
                t = float(pad_t[i])
                if any(abs(t - r) < 2.5 * h for r, _ in roots):
                    continue
                if odd and (math.pi - t) < 2.5 * h:
                    continue
                slope = abs(pad_f[i + 1] - pad_f[i - 1])
                mins.append((float(absH[i]), t, slope))
        mins.sort()
        slope_tol = total * 10.0 ** (-(digits - 8))
        extra = []
        for val, t, slope in mins:
            at_pi = (not odd) and abs(t - math.pi) < 0.5 * h
            unit = 2 if at_pi else 4     # interior minima mirror
            if deficit >= unit:
                mult = 2
                deficit -= unit
                while deficit >= unit and slope < slope_tol:
                    mult += 2
                    deficit -= unit
                extra.append((math.pi if at_pi else t, mult, at_pi))
        for t, mult, at_pi in extra:
            if at_pi:
                pi_mult += mult
            else:
                roots.append((t, mult))

    if deficit != 0:
        found = N - deficit
        raise RootDeficitError(
            f"certified {found} of {N} circle roots at precision_bits="
            f"{spec.precision_bits}, grid_points={grid_points}; raise "
            "precision_bits or grid_points", found, N)

    angles = []
    mults = []
    for t, mult in sorted(roots):
        angles.append(t)
        mults.append(mult)
    full_angles = angles + ([math.pi] if pi_mult else []) + \
        [2.0 * math.pi - t for t in reversed(angles)]
    full_mults = mults + ([pi_mult] if pi_mult else []) + mults[::-1]

    locs = np.array([t for t in full_angles])
    Hr = eval_fn(locs)
    residual = float(np.max(np.abs(Hr)) / total) if locs.size else 0.0

    return LeeYangSpectrum(
        angles=np.array(full_angles), multiplicities=np.array(full_mults, dtype=np.int64),
        residual=residual, source=spec.cache_key, site_count=N)


# ---------------------------------------------------------------------------
# MGF zeros (replicas) and the factorization check.
# ---------------------------------------------------------------------------

def choose_replication_depth(N, theta_min, order=4, tol=1e-10):
    """Smallest K whose tail_bound(order) stays below tol."""
    c = theta_min / (2.0 * math.pi)
    K = (N / (tol * (order - 1) * math.pi ** order)) ** (1.0 / (order - 1)) - c
    return max(int(math.ceil(K)), 1)


def mgf_zeros(ly: LeeYangSpectrum, K):
    """Sorted MGF zero ordinates {theta_l/2 + k pi : 0 <= k <= K}."""
    if K < 0:
        raise ValueError("K >= 0 required")
    half = ly.with_multiplicity() / 2.0
    reps = (half[None, :] + math.pi * np.arange(K + 1)[:, None]).ravel()
    return MgfZeroList(alphas=np.sort(reps), replication_depth=K,
                       theta_min=ly.theta_min, site_count=ly.site_count)


def factorization_tail_bound(zeros: MgfZeroList, zmax):
    """Relative error the omitted replicas can contribute on |z| <= zmax.

    |log(1+w) - w| <= (2/3)|w|^2 for |w| <= 1/4 with w = z^2/alpha^2,
    summed over the tail, then |e^D - 1| <= 1.1|D| for the small total.
    """
    return 0.75 * zmax ** 4 * zeros.tail_bound(4)


def default_factorization_grid(zmax=1.0):
    """Real points, an outer ring, and an inner ring inside |z| <= zmax."""
    pts = [zmax * t for t in (-1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0)]
    pts += [zmax * cmath.exp(1j * math.pi * k / 8) for k in range(1, 16) if k != 8]
    pts += [0.5 * zmax * cmath.exp(1j * math.pi * k / 4) for k in range(8)]
    return pts


def factorization_residual(spec, zeros: MgfZeroList, z_grid=None):
    """Max relative deviation between <e^{zY}> and its Hadamard product.

    Compares log <e^{zY}> against z^2 lambda/2 + sum_j [log(1+z^2/a_j^2)
    - z^2/a_j^2] over the replicated zero list; grid points within 1e-6
    of a zero are skipped (both sides vanish there).
    """
    if z_grid is None:
        z_grid = default_factorization_grid()
    lam = moment(spec, 2)
    alphas = zeros.alphas
    a2 = alphas.astype(np.complex128) ** 2
    worst = 0.0
    for z in z_grid:
        z = complex(z)
        if min(abs(z - 1j * a) for a in alphas[:64]) < 1e-6 or \
           min(abs(z + 1j * a) for a in alphas[:64]) < 1e-6:
            continue
        val, log_scale = mgf_scaled(spec, z)
        log_lhs = cmath.log(val) + log_scale
        # log1p(w) - w, series for small |w| to dodge cancellation
        w = z * z / a2
        small = np.abs(w) <= 1e-4
        t_small = -w ** 2 / 2 + w ** 3 / 3 - w ** 4 / 4 + w ** 5 / 5
        t_big = np.log(1.0 + w) - w
        terms = np.where(small, t_small, t_big)
        log_rhs = 0.5 * lam * z * z + terms.sum()
        D = log_lhs - log_rhs
        # branch of the complex log: both sides equal mod 2 pi i
        D = complex(D.real, math.remainder(D.imag, 2.0 * math.pi))
        resid = abs(cmath.exp(D) - 1.0) if abs(D) < 1.0 else float("inf")
        worst = max(worst, resid)
    return worst


# ---------------------------------------------------------------------------
# Empirical zero measure.
# ---------------------------------------------------------------------------

@dataclass
class EmpiricalZeroMeasure:
    """mu_n: uniform mass 1/N on each zero angle (with multiplicity)."""

    angles: np.ndarray
    masses: np.ndarray

    def arc_mass(self, a, b):
        """Mass of the closed arc [a, b] (wrap-around allowed)."""
        if not (0 < b - a < 2.0 * math.pi + 1e-12):
            raise ValueError("need 0 < b - a <= 2 pi")
        rel = np.mod(self.angles - a, 2.0 * math.pi)
        inside = rel <= (b - a) + 1e-15
        return float(self.masses[inside].sum())


def empirical_zero_measure(ly: LeeYangSpectrum):
    return EmpiricalZeroMeasure(
        angles=ly.angles.copy(),
        masses=ly.multiplicities.astype(np.float64) / ly.site_count)


def arc_mass(measure: EmpiricalZeroMeasure, a, b):
    return measure.arc_mass(a, b)


# ---------------------------------------------------------------------------
# Zero-set files.
# ---------------------------------------------------------------------------

def zeros_to_dict(ly: LeeYangSpectrum):
    return {
        "schema_version": SCHEMA_VERSION,
        "source_key": ly.source,
        "site_count": ly.site_count,
        "angles": [[repr(float(t)), int(mult)]
                   for t, mult in zip(ly.angles, ly.multiplicities)],
        "residual": repr(ly.residual),
    }


def zeros_from_dict(data):
    return LeeYangSpectrum(
        angles=np.array([float(a) for a, _ in data["angles"]]),
        multiplicities=np.array([int(mu) for _, mu in data["angles"]], dtype=np.int64),
        residual=float(data["residual"]),
        source=data["source_key"],
        site_count=int(data["site_count"]))


def save_zeros(ly, path):
    with open(path, "w") as f:
        json.dump(zeros_to_dict(ly), f, sort_keys=True, indent=1)
        f.write("\n")


def load_zeros(path):
    with open(path) as f:
        return zeros_from_dict(json.load(f))
