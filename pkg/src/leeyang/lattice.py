"""Lattices, spin configurations, and the base/perturbed energies.

Sites of the box [-n, n]^d are ordered lexicographically by coordinate;
every engine and cache key relies on that ordering. The energy sign
convention is "larger is more probable": the sampled measure is
proportional to exp(base_energy) resp. exp(perturbed_energy).
"""

from dataclasses import dataclass, field

import numpy as np

FREE = "free"
PERIODIC = "periodic"

# site-count guard so d*(2n+1)^d never overflows the int32 edge indices
MAX_SITES = 2 ** 30


@dataclass(frozen=True)
class LatticeSpec:
    """A finite hypercubic box with free or periodic boundary."""

    dimension: int
    radius: int            # n; side length is 2n+1 (-1 for generalized chains)
    boundary: str
    site_count: int
    edges: np.ndarray      # (E, 2) int32, u < v, lexicographic site indices

    def __post_init__(self):
        if self.boundary not in (FREE, PERIODIC):
            raise ValueError(f"unknown boundary {self.boundary!r}")

    @property
    def n_edges(self):
        return len(self.edges)

    def neighbor_table(self):
        """Padded neighbor-index table (idx, cnt) for the kernels."""
        N = self.site_count
        cnt = np.zeros(N, dtype=np.int32)
        for u, v in self.edges:
            cnt[u] += 1
            cnt[v] += 1
        maxdeg = int(cnt.max()) if N and cnt.size else 0
        idx = np.zeros((N, max(maxdeg, 1)), dtype=np.int32)
        fill = np.zeros(N, dtype=np.int32)
        for u, v in self.edges:
            idx[u, fill[u]] = v
            fill[u] += 1
            idx[v, fill[v]] = u
            fill[v] += 1
        return idx, cnt


@dataclass(frozen=True)
class ModelParams:
    """Couplings: beta (pair), gamma (coefficient of Y^2), field h."""

    beta: float = 0.0
    gamma: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")


def build_lattice(d, n, boundary=FREE):
    """Hypercubic box [-n, n]^d with the requested boundary condition.

    Periodic wrapping requires side 2n+1 >= 3. Sites are indexed in
    lexicographic coordinate order; edges join L1-distance-1 pairs
    (mod side per axis when periodic), each listed once with u < v.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if n < 0:
        raise ValueError("radius must be >= 0")
    side = 2 * n + 1
    if boundary == PERIODIC and side < 3:
        raise ValueError("periodic boundary needs side 2n+1 >= 3")
    N = side ** d
    if d * N > MAX_SITES:
        raise ValueError(f"lattice with {N} sites exceeds the index budget")
    strides = [side ** (d - 1 - a) for a in range(d)]

    def site_index(coord):
        return sum(c * s for c, s in zip(coord, strides))

    edges = []
    for flat in range(N):
        coord = []
        rem = flat
        for a in range(d):
            coord.append(rem // strides[a])
            rem %= strides[a]
        for a in range(d):
            if coord[a] + 1 < side:
                nb = list(coord)
                nb[a] += 1
                edges.append((flat, site_index(nb)))
            elif boundary == PERIODIC:
                nb = list(coord)
                nb[a] = 0
                u, v = flat, site_index(nb)
                edges.append((min(u, v), max(u, v)))
    edges = np.array(sorted(set(map(tuple, edges))), dtype=np.int32)
    if len(edges) == 0:
        edges = np.zeros((0, 2), dtype=np.int32)
    return LatticeSpec(d, n, boundary, N, edges)


def chain_lattice(N, boundary=FREE):
    """1D chain of arbitrary length N (generalizes build_lattice(1, n)).

    The paper-style box always has odd N = 2n+1; even chains are an
    extension used by exploratory runs and the two-site MC oracle.
    """
    if N < 1:
        raise ValueError("chain needs N >= 1")
    if boundary == PERIODIC and N < 3:
        raise ValueError("periodic chain needs N >= 3")
    edges = [(i, i + 1) for i in range(N - 1)]
    if boundary == PERIODIC:
        edges.append((0, N - 1))
    arr = np.array(sorted(edges), dtype=np.int32) if edges else np.zeros((0, 2), dtype=np.int32)
    return LatticeSpec(1, -1 if N % 2 == 0 else (N - 1) // 2, boundary, N, arr)


def box_lattice(sides, boundary=FREE):
    """General box with per-axis side lengths (even-sided tori included).

    Exploratory builder; the paper's lattices are the odd boxes of
    build_lattice.
    """
    sides = list(sides)
    d = len(sides)
    if d < 1 or any(s < 1 for s in sides):
        raise ValueError("need at least one axis with side >= 1")
    if boundary == PERIODIC and any(s < 3 for s in sides):
        raise ValueError("periodic boundary needs every side >= 3")
    N = int(np.prod(sides))
    strides = [int(np.prod(sides[a + 1:])) for a in range(d)]

    def site_index(coord):
        return sum(c * s for c, s in zip(coord, strides))

    edges = set()
    for flat in range(N):
        coord = []
        rem = flat
        for a in range(d):
            coord.append(rem // strides[a])
            rem %= strides[a]
        for a in range(d):
            if coord[a] + 1 < sides[a]:
                nb = list(coord)
                nb[a] += 1
                edges.add((flat, site_index(nb)))
            elif boundary == PERIODIC:
                nb = list(coord)
                nb[a] = 0
                u, v = flat, site_index(nb)
                edges.add((min(u, v), max(u, v)))
    arr = np.array(sorted(edges), dtype=np.int32) if edges else np.zeros((0, 2), dtype=np.int32)
    return LatticeSpec(d, -1, boundary, N, arr)


def validate_spins(config, lattice=None):
    """Assert a +-1 spin vector (optionally of the lattice's length)."""
    config = np.asarray(config)
    if not np.all(np.abs(config) == 1):
        raise ValueError("spins must be +-1")
    if lattice is not None and config.shape != (lattice.site_count,):
        raise ValueError(
            f"config length {config.shape} does not match N={lattice.site_count}")
    return config.astype(np.int8)


def total_magnetization(config):
    """Y(sigma) = sum of all spins."""
    return int(np.asarray(config, dtype=np.int64).sum())


def base_energy(config, lattice, beta):
    """beta * sum over edges of sigma_u sigma_v."""
    config = validate_spins(config, lattice)
    if lattice.n_edges == 0:
        return 0.0
    s = config.astype(np.int64)
    k = int((s[lattice.edges[:, 0]] * s[lattice.edges[:, 1]]).sum())
    return beta * k


def perturbed_energy(config, lattice, beta, gamma):
    """base_energy plus gamma * Y^2 (negative of the Hamiltonian)."""
    y = total_magnetization(config)
    return base_energy(config, lattice, beta) + gamma * (y * y)
