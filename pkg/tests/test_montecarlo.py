"""Metropolis sampling: reproducibility, detailed balance, exact oracles."""

import math

import numpy as np
import pytest

from leeyang import analysis as an
from leeyang import montecarlo as mc
from leeyang import spectrum as sp
from leeyang.lattice import FREE, build_lattice, chain_lattice


def test_config_validation():
    lat = build_lattice(1, 1, FREE)
    with pytest.raises(ValueError):
        mc.McConfig(lattice=lat, beta=0.1, sweeps=10, burn_in=10)
    with pytest.raises(ValueError):
        mc.McConfig(lattice=lat, beta=0.1, chains=0)
    with pytest.raises(ValueError):
        mc.McConfig(lattice=lat, beta=0.1, thinning=0)


def test_reproducibility_bit_identical():
    lat = build_lattice(2, 1, FREE)
    cfg = mc.McConfig(lattice=lat, beta=0.3, gamma=0.02, sweeps=500,
                      burn_in=100, chains=3, master_seed=77)
    a = mc.mc_run(cfg)
    b = mc.mc_run(cfg)
    assert a.moments == b.moments
    assert np.array_equal(a.histogram_mass, b.histogram_mass)
    assert a.acceptance_rate == b.acceptance_rate
    c = mc.mc_run(mc.McConfig(lattice=lat, beta=0.3, gamma=0.02, sweeps=500,
                              burn_in=100, chains=3, master_seed=78))
    assert c.moments != a.moments


def test_independent_spins_variance():
    lat = chain_lattice(12, FREE)
    cfg = mc.McConfig(lattice=lat, beta=0.0, gamma=0.0, sweeps=4000,
                      burn_in=500, chains=2, master_seed=5)
    est = mc.mc_run(cfg)
    v, se = est.moments[2]
    assert abs(v - 12.0) <= 3.0 * se


def test_two_site_detailed_balance():
    """Exact stationary law on the 2-site chain, within 3 SE per bin."""
    lat = chain_lattice(2, FREE)
    beta, gamma = 0.4, 0.05
    # exact: states (++, --) have m = +-2, k = +1; (+-, -+) m = 0, k = -1
    w2 = math.exp(beta + 4.0 * gamma)
    w0 = math.exp(-beta)
    Z = 2.0 * w2 + 2.0 * w0
    exact = {2: w2 / Z, 0: 2.0 * w0 / Z, -2: w2 / Z}
    cfg = mc.McConfig(lattice=lat, beta=beta, gamma=gamma, sweeps=20000,
                      burn_in=1000, chains=4, master_seed=11)
    est = mc.mc_run(cfg)
    v2, se2 = est.moments[2]
    exact_m2 = sum(p * m * m for m, p in exact.items())
    assert abs(v2 - exact_m2) <= 3.0 * se2
    for m, p in exact.items():
        i = int(np.where(est.histogram_m == m)[0][0])
        # multinomial s.e. with a mild autocorrelation allowance
        se_bin = math.sqrt(p * (1 - p) / est.n_samples) * 3.0
        assert abs(est.histogram_mass[i] - p) <= 4.0 * se_bin


def test_3x3_against_exact_engine(grid3x3):
    exact2 = sp.moment(grid3x3, 2)
    exact4 = sp.moment(grid3x3, 4)
    lat = build_lattice(2, 1, FREE)
    cfg = mc.McConfig(lattice=lat, beta=0.3, gamma=0.0, sweeps=6000,
                      burn_in=500, chains=2, master_seed=21)
    est = mc.mc_run(cfg)
    for k, exact in ((2, exact2), (4, exact4)):
        v, se = est.moments[k]
        assert abs(v - exact) <= 3.0 * se


def test_3x3_tilted_against_exact(grid3x3):
    tilted = an.critical_tilt(grid3x3)
    lat = build_lattice(2, 1, FREE)
    cfg = mc.McConfig(lattice=lat, beta=0.3, gamma="auto", sweeps=6000,
                      burn_in=500, chains=2, master_seed=31)
    est = mc.mc_run(cfg, spectrum=grid3x3)
    assert est.gamma_mode == "auto-spectrum"
    assert est.gamma == pytest.approx(0.5 / sp.moment(grid3x3, 2), rel=1e-12)
    for k in (2, 4):
        v, se = est.moments[k]
        assert abs(v - tilted.moment(k)) <= 3.0 * se


def test_gamma_auto_calibration_path():
    lat = chain_lattice(8, FREE)
    cfg = mc.McConfig(lattice=lat, beta=0.2, gamma="auto", sweeps=3000,
                      burn_in=300, chains=2, master_seed=41)
    est = mc.mc_run(cfg)   # no spectrum handed in -> calibration pre-run
    assert est.gamma_mode == "auto-calibration"
    exact_u2 = sp.moment(sp.transfer_spectrum_1d(8, FREE, 0.2), 2)
    assert est.gamma == pytest.approx(0.5 / exact_u2, rel=0.25)


def test_histogram_symmetry_sign_test():
    """E Y and E Y^3 consistent with 0 at 3 SE (spin-flip symmetry)."""
    lat = build_lattice(2, 1, FREE)
    cfg = mc.McConfig(lattice=lat, beta=0.3, gamma=0.01, sweeps=8000,
                      burn_in=500, chains=2, master_seed=51)
    est = mc.mc_run(cfg)
    m = est.histogram_m.astype(np.float64)
    p = est.histogram_mass
    n_eff = est.n_samples
    for k in (1, 3):
        mean = float(np.sum(p * m ** k))
        var = float(np.sum(p * m ** (2 * k)) - mean ** 2)
        se = math.sqrt(max(var, 1e-30) / n_eff)
        # generous autocorrelation allowance
        assert abs(mean) <= 9.0 * se


def test_mc_histogram_normalization():
    lat = build_lattice(2, 1, FREE)
    cfg = mc.McConfig(lattice=lat, beta=0.3, gamma=0.0, sweeps=2000,
                      burn_in=200, chains=2, master_seed=61)
    est = mc.mc_run(cfg)
    centers, mass = mc.mc_histogram(est, 15)
    assert mass.sum() == pytest.approx(1.0, rel=1e-12)
    assert np.allclose(centers, -centers[::-1])
    with pytest.raises(ValueError):
        mc.mc_histogram(est, 5)


def test_batch_count_guard():
    lat = chain_lattice(4, FREE)
    with pytest.raises(ValueError, match="batches"):
        mc.mc_run(mc.McConfig(lattice=lat, beta=0.1, sweeps=20, burn_in=10,
                              n_batches=32))


def test_acceptance_rate_sane():
    lat = build_lattice(2, 1, FREE)
    cfg = mc.McConfig(lattice=lat, beta=0.3, gamma=0.0, sweeps=1000,
                      burn_in=100, chains=1, master_seed=71)
    est = mc.mc_run(cfg)
    assert 0.05 < est.acceptance_rate < 0.95


def test_histogram_moments_helper():
    lat = build_lattice(2, 1, FREE)
    cfg = mc.McConfig(lattice=lat, beta=0.2, gamma=0.0, sweeps=2000,
                      burn_in=200, chains=2, master_seed=81)
    est = mc.mc_run(cfg)
    m2, m4, kurt = mc.histogram_moments(est)
    assert m2 == pytest.approx(est.moments[2][0], rel=1e-12)
    assert kurt == pytest.approx(m4 / m2 ** 2, rel=1e-12)
