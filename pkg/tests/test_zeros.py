"""Zero location, replication, factorization, and the empirical measure."""

import math

import numpy as np
import pytest

from leeyang import spectrum as sp
from leeyang import zeros as zr
from leeyang.lattice import FREE, build_lattice, chain_lattice
from leeyang import analysis as an

# root of 8 c^3 = 3.5 c with c = cos(theta/2): the nonzero cosine root
CHAIN3_THETA = 2.0 * math.acos(math.sqrt(7.0) / 4.0)


def test_circle_function_single_spin(single_spin):
    assert zr.circle_function(single_spin, 1.0) == \
        pytest.approx(2.0 * math.cos(0.5), rel=1e-14)
    assert abs(zr.circle_function(single_spin, math.pi)) < 1e-15


def test_circle_function_beta0_cube():
    spec = sp.transfer_spectrum_1d(3, FREE, 0.0)
    for t in (0.7, 2.0, 3.0):
        assert zr.circle_function(spec, t) == \
            pytest.approx((2.0 * math.cos(t / 2.0)) ** 3, rel=1e-13)


def test_circle_function_chain3(chain3):
    # A_3 (4c^3 - 3c) * 2 + A_1 * c * 2 with A_3 = 2, A_1 = 2.5
    for t in (0.5, 1.0, 2.5):
        c = math.cos(t / 2.0)
        assert zr.circle_function(chain3, t) == \
            pytest.approx(16.0 * c ** 3 - 7.0 * c, rel=1e-12, abs=1e-12)


def test_circle_function_warns_on_exhaustion(chain101):
    # inside the zero band of a long chain the cosine sum cancels far
    # below the 106-bit budget; the value is noise and must say so
    with pytest.warns(sp.PrecisionLossWarning):
        zr.circle_function(chain101, 2.0)


def test_find_angles_single_spin(single_spin):
    ly = zr.find_angles(single_spin)
    assert np.allclose(ly.angles, [math.pi])
    assert list(ly.multiplicities) == [1]


def test_find_angles_chain3(chain3):
    ly = zr.find_angles(chain3)
    expected = [CHAIN3_THETA, math.pi, 2.0 * math.pi - CHAIN3_THETA]
    assert np.allclose(ly.angles, expected, atol=1e-11)
    assert list(ly.multiplicities) == [1, 1, 1]
    assert ly.residual < 1e-10


def test_find_angles_beta0_multiplicity():
    spec = sp.transfer_spectrum_1d(3, FREE, 0.0)
    ly = zr.find_angles(spec)
    assert list(ly.angles) == [math.pi]
    assert list(ly.multiplicities) == [3]


def test_angle_count_and_symmetry(grid3x3, grid3x3_periodic, grid5x5):
    for spec in (grid3x3, grid3x3_periodic, grid5x5):
        ly = zr.find_angles(spec)
        assert int(ly.multiplicities.sum()) == spec.site_count
        # conjugate symmetry of the multiset
        mirrored = sorted(2.0 * math.pi - t for t in ly.with_multiplicity())
        assert np.allclose(sorted(ly.with_multiplicity()), mirrored, atol=1e-11)
        assert ly.angles[0] > 0.0 and ly.angles[-1] < 2.0 * math.pi


def test_grid_points_precondition(chain3):
    with pytest.raises(ValueError):
        zr.find_angles(chain3, grid_points=8)


def test_root_deficit_raises():
    """A barely-tilted binomial keeps a degenerate cluster at pi that a
    coarse scan cannot certify; the error names the remedy."""
    spec = sp.curie_weiss_spectrum(9)
    tilted = an.tilt_spectrum(spec, 1e-8)
    with pytest.raises(zr.RootDeficitError, match="grid_points"):
        zr.find_angles(tilted.spectrum, grid_points=9 * 64)


def test_tilted_cluster_resolved_with_fine_grid():
    """The same near-degenerate cluster resolves once gamma is sizable."""
    spec = sp.curie_weiss_spectrum(5)
    tilted = an.tilt_spectrum(spec, 0.05)
    ly = zr.find_angles(tilted.spectrum)
    assert int(ly.multiplicities.sum()) == 5


def test_mgf_zeros_single_spin(single_spin):
    ly = zr.find_angles(single_spin)
    mz = zr.mgf_zeros(ly, 2)
    assert np.allclose(mz.alphas,
                       [math.pi / 2, 3 * math.pi / 2, 5 * math.pi / 2])


def test_mgf_zeros_chain3(chain3):
    ly = zr.find_angles(chain3)
    mz = zr.mgf_zeros(ly, 0)
    assert np.allclose(mz.alphas,
                       [CHAIN3_THETA / 2, math.pi / 2,
                        math.pi - CHAIN3_THETA / 2], atol=1e-11)


def test_tail_bound_single_spin():
    ly = zr.LeeYangSpectrum(angles=np.array([math.pi]),
                            multiplicities=np.array([1]),
                            residual=0.0, source="x", site_count=1)
    mz = zr.mgf_zeros(ly, 10)
    bound = mz.tail_bound(4)
    assert bound <= 3.4e-6
    # the bound dominates the true tail
    ks = np.arange(11, 2_000_000)
    true_tail = np.sum((math.pi / 2 + ks * math.pi) ** -4.0)
    assert true_tail <= bound


def test_choose_replication_depth():
    K = zr.choose_replication_depth(1, math.pi, order=4, tol=1e-10)
    ly = zr.LeeYangSpectrum(angles=np.array([math.pi]),
                            multiplicities=np.array([1]),
                            residual=0.0, source="x", site_count=1)
    assert zr.mgf_zeros(ly, K).tail_bound(4) < 1e-10
    assert zr.mgf_zeros(ly, K - 2).tail_bound(4) > 1e-10


def test_factorization_single_spin(single_spin):
    ly = zr.find_angles(single_spin)
    mz = zr.mgf_zeros(ly, 50)
    grid = list(np.linspace(-1, 1, 9)[np.linspace(-1, 1, 9) != 0])
    resid = zr.factorization_residual(single_spin, mz, z_grid=grid)
    assert resid <= 1e-6


def test_factorization_chain3(chain3):
    ly = zr.find_angles(chain3)
    mz = zr.mgf_zeros(ly, 100)
    resid = zr.factorization_residual(chain3, mz)
    assert resid <= 1e-8 + zr.factorization_tail_bound(mz, 1.0)


def test_power_sum_lower_bound(chain3, grid3x3):
    """alpha_j^2 sqrt(-u4/4!) >= sqrt(j/2) for every j."""
    for spec in (chain3, grid3x3):
        cums = an.cumulants_from_spectrum(spec, orders=(2, 4))
        ly = zr.find_angles(spec)
        mz = zr.mgf_zeros(ly, 64)
        scaled = mz.alphas ** 2 * math.sqrt(-cums.u4 / 24.0)
        j = np.arange(1, len(mz.alphas) + 1)
        assert np.all(scaled >= np.sqrt(j / 2.0) * (1 - 1e-12))


def test_replica_completeness_single_spin(single_spin):
    """u4 from zeros matches the spectrum value within the tail bound."""
    ly = zr.find_angles(single_spin)
    mz = zr.mgf_zeros(ly, 10_000)
    u4z, bound = an.cumulants_from_zeros(mz, 4)
    assert abs(u4z - (-2.0)) <= bound
    assert bound < 1e-10


def test_u2_consistency_b_nonnegative(chain3, grid3x3):
    """2 sum alpha^{-2} <= u2, equality defect 2b >= 0."""
    for spec in (chain3, grid3x3):
        u2 = sp.moment(spec, 2)
        ly = zr.find_angles(spec)
        mz = zr.mgf_zeros(ly, 200_000)
        s = 2.0 * float(np.sum(mz.alphas ** -2.0))
        assert s <= u2 + 2.0 * mz.tail_bound(2)


def test_u2_consistency_single_spin_b_zero(single_spin):
    """sum (pi/2 + k pi)^{-2} = 1/2 exactly, so b = 0."""
    ly = zr.find_angles(single_spin)
    mz = zr.mgf_zeros(ly, 1_000_000)
    s = 2.0 * float(np.sum(np.sort(mz.alphas ** -2.0)))
    b = (1.0 - s) / 2.0
    assert 0.0 <= b <= mz.tail_bound(2)


def test_twoine_guard_inequality():
    """exp(-y^2/2) <= (1+y)e^{-y} <= 1/(1+y^2/6) on 1e5 random points."""
    rng = np.random.default_rng(123)
    y = rng.uniform(0.0, 50.0, 100_000)
    lower, mid, upper = an.twoine_bounds(y)
    assert np.all(lower <= mid * (1 + 1e-14) + 1e-300)
    assert np.all(mid <= upper * (1 + 1e-14))


def test_empirical_measure_and_arc_mass(single_spin, chain3):
    ly1 = zr.find_angles(single_spin)
    mu1 = zr.empirical_zero_measure(ly1)
    assert mu1.arc_mass(math.pi - 0.1, math.pi + 0.1) == 1.0
    ly3 = zr.find_angles(chain3)
    mu3 = zr.empirical_zero_measure(ly3)
    assert mu3.arc_mass(0.0 + 1e-9, 1.0) == 0.0
    spec0 = sp.transfer_spectrum_1d(3, FREE, 0.0)
    mu0 = zr.empirical_zero_measure(zr.find_angles(spec0))
    assert mu0.arc_mass(3.0, 3.3) == 1.0
    # wrap-around arc
    assert mu3.arc_mass(-0.5, 0.5) == 0.0


def test_zero_file_roundtrip(chain3, tmp_path):
    ly = zr.find_angles(chain3)
    path = tmp_path / "zeros.json"
    zr.save_zeros(ly, path)
    back = zr.load_zeros(path)
    assert np.array_equal(back.angles, ly.angles)
    assert np.array_equal(back.multiplicities, ly.multiplicities)
    assert back.source == ly.source


def test_chain_evaluator_agrees_with_dd_route():
    """Dual route at N = 61: the rescaled transfer product and the dd
    cosine sum are positive multiples of the same H, so they must agree
    in sign everywhere and place the roots at the same angles."""
    from leeyang import kernels
    N, beta = 61, 0.25
    spec = sp.transfer_spectrum_1d(N, FREE, beta)
    assert not sp.uses_chain_evaluator(spec)   # N <= 64: dd route
    thetas = np.linspace(0.2, math.pi - 0.2, 257)
    vh, vl, m0, _ = zr.circle_weights(spec)
    h_dd, _ = kernels.trig_grid_eval(vh, vl, m0, thetas)
    re, _, umax, _ = kernels.chain_field_eval(
        N, False, beta, np.zeros_like(thetas), 0.5 * thetas)
    assert np.all(np.sign(h_dd) == np.sign(re))

    ly_dd = zr.find_angles(spec)

    def transfer_h(ts):
        return kernels.chain_field_eval(
            N, False, beta, np.zeros_like(ts), 0.5 * ts)[0]

    # the transfer evaluator brackets every dd-located simple root
    for t in ly_dd.angles[ly_dd.angles < math.pi - 1e-9]:
        flo = transfer_h(np.array([t - 1e-7]))[0]
        fhi = transfer_h(np.array([t + 1e-7]))[0]
        assert flo * fhi < 0
