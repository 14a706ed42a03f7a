"""Lattice construction and energy conventions."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from leeyang.lattice import (FREE, PERIODIC, ModelParams, base_energy,
                             box_lattice, build_lattice, chain_lattice,
                             perturbed_energy, total_magnetization,
                             validate_spins)


def test_path_of_three():
    lat = build_lattice(1, 1, FREE)
    assert lat.site_count == 3
    assert [tuple(e) for e in lat.edges] == [(0, 1), (1, 2)]


def test_3x3_free_edges():
    lat = build_lattice(2, 1, FREE)
    assert lat.site_count == 9
    assert lat.n_edges == 12


def test_3x3_periodic_edges():
    # oracle: a torus has d*N edges
    lat = build_lattice(2, 1, PERIODIC)
    assert lat.site_count == 9
    assert lat.n_edges == 2 * 9


@pytest.mark.parametrize("d,n,boundary", [(1, 4, FREE), (1, 4, PERIODIC),
                                          (2, 2, PERIODIC), (3, 1, FREE),
                                          (3, 1, PERIODIC)])
def test_edge_invariants(d, n, boundary):
    lat = build_lattice(d, n, boundary)
    side = 2 * n + 1
    coords = np.array(np.unravel_index(np.arange(lat.site_count),
                                       (side,) * d)).T
    seen = set()
    for u, v in lat.edges:
        assert u != v
        key = (min(u, v), max(u, v))
        assert key not in seen
        seen.add(key)
        diff = np.abs(coords[u] - coords[v])
        if boundary == PERIODIC:
            diff = np.minimum(diff, side - diff)
        assert diff.sum() == 1
    expected = d * lat.site_count if boundary == PERIODIC \
        else d * side ** (d - 1) * (side - 1)
    assert lat.n_edges == expected


def test_periodic_needs_side_three():
    with pytest.raises(ValueError):
        build_lattice(1, 0, PERIODIC)
    with pytest.raises(ValueError):
        chain_lattice(2, PERIODIC)


def test_single_site_is_legal():
    lat = build_lattice(1, 0, FREE)
    assert lat.site_count == 1
    assert lat.n_edges == 0


def test_chain_lattice_any_length():
    lat = chain_lattice(2, FREE)
    assert lat.site_count == 2
    assert [tuple(e) for e in lat.edges] == [(0, 1)]
    ring = chain_lattice(4, PERIODIC)
    assert ring.n_edges == 4


def test_box_lattice_even_torus():
    lat = box_lattice([4, 4], PERIODIC)
    assert lat.site_count == 16
    assert lat.n_edges == 32


def test_base_energy_examples():
    lat = build_lattice(1, 1, FREE)
    assert base_energy([1, 1, 1], lat, 0.5) == 1.0
    assert base_energy([1, -1, 1], lat, 0.5) == -1.0
    torus = build_lattice(2, 1, PERIODIC)
    assert base_energy(np.ones(9), torus, 0.25) == 4.5


def test_total_magnetization_examples():
    assert total_magnetization(np.ones(9)) == 9
    assert total_magnetization([1, -1, 1]) == 1
    assert total_magnetization(-np.ones(25)) == -25


def test_perturbed_energy_examples():
    lat = build_lattice(1, 1, FREE)
    assert perturbed_energy([1, 1, 1], lat, 0.0, 1.0 / 6.0) == pytest.approx(1.5)
    assert perturbed_energy([1, -1, 1], lat, 0.5, 0.0) == -1.0
    assert perturbed_energy([1, 1, -1], lat, 0.5, 0.1) == pytest.approx(0.1)


def test_length_mismatch_rejected():
    lat = build_lattice(1, 1, FREE)
    with pytest.raises(ValueError):
        base_energy([1, 1], lat, 0.5)
    with pytest.raises(ValueError):
        validate_spins([1, 0, 1])


@given(st.lists(st.sampled_from([-1, 1]), min_size=9, max_size=9),
       st.floats(0, 2), st.floats(0, 1))
def test_spin_flip_symmetry(spins, beta, gamma):
    lat = build_lattice(2, 1, FREE)
    s = np.array(spins)
    assert base_energy(s, lat, beta) == base_energy(-s, lat, beta)
    assert perturbed_energy(s, lat, beta, gamma) == \
        perturbed_energy(-s, lat, beta, gamma)
    assert total_magnetization(-s) == -total_magnetization(s)


@given(st.lists(st.sampled_from([-1, 1]), min_size=5, max_size=5),
       st.floats(0, 2))
def test_gamma_zero_reduces_to_base(spins, beta):
    lat = chain_lattice(5, FREE)
    s = np.array(spins)
    assert perturbed_energy(s, lat, beta, 0.0) == base_energy(s, lat, beta)


def test_model_params_validation():
    ModelParams(beta=0.3, gamma=0.01, h=-1.0)
    with pytest.raises(ValueError):
        ModelParams(beta=-0.1)
    with pytest.raises(ValueError):
        ModelParams(gamma=-1e-9)


def test_neighbor_table_consistent():
    lat = build_lattice(2, 1, PERIODIC)
    idx, cnt = lat.neighbor_table()
    assert cnt.sum() == 2 * lat.n_edges
    assert np.all(cnt == 4)
