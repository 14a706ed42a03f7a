"""Seeded single-spin-flip Metropolis sampling of the perturbed model.

The sampled measure is proportional to exp(beta sum sigma sigma +
gamma Y^2); a flip of sigma_u changes the exponent by

    dE = -2 beta sigma_u S_u + gamma ((Y - 2 sigma_u)^2 - Y^2)

and is accepted with probability min(1, exp(dE)). Y is tracked
incrementally; sweeps visit sites in lexicographic order. Randomness is
a counter-based SplitMix64 stream per chain, derived from the master
seed, so estimates are bit-identical for a fixed McConfig regardless of
thread count or backend.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .lattice import LatticeSpec
from .spectrum import moment

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@dataclass
class McConfig:
    lattice: LatticeSpec
    beta: float
    gamma: float | str = 0.0    # value, or "auto" for 1/(2 <Y^2>)
    sweeps: int = 4096
    burn_in: int = 512
    chains: int = 2
    master_seed: int = 1
    thinning: int = 1
    n_batches: int = 32

    def __post_init__(self):
        if not self.sweeps > self.burn_in >= 0:
            raise ValueError("need sweeps > burn_in >= 0")
        if self.chains < 1:
            raise ValueError("chains >= 1 required")
        if self.thinning < 1:
            raise ValueError("thinning >= 1 required")
        if self.n_batches < 1:
            raise ValueError("n_batches >= 1 required")


@dataclass
class McEstimates:
    moments: dict               # k -> (estimate, standard error)
    histogram_m: np.ndarray     # magnetization values
    histogram_mass: np.ndarray  # probability mass per value
    acceptance_rate: float
    chain_seeds: list
    gamma: float
    gamma_mode: str
    n_samples: int
    batch_means: dict = field(default_factory=dict)   # k -> per-batch means


def chain_seed(master_seed, chain_index):
    """Counter-based split of the master seed into per-chain streams."""
    mask = (1 << 64) - 1
    return np.uint64((int(master_seed) + int(_GOLDEN) * (chain_index + 1)) & mask)


def resolve_gamma(config: McConfig, spectrum=None, calibration_sweeps=2048):
    """Resolve the gamma coupling; 'auto' means 1/(2 <Y^2>).

    Auto mode takes <Y^2> from an exact spectrum when one is supplied,
    else from a gamma = 0 calibration pre-run (choice recorded in the
    returned mode string).
    """
    if config.gamma != "auto":
        return float(config.gamma), "explicit"
    if spectrum is not None:
        return 0.5 / moment(spectrum, 2), "auto-spectrum"
    calib = McConfig(lattice=config.lattice, beta=config.beta, gamma=0.0,
                     sweeps=calibration_sweeps,
                     burn_in=min(calibration_sweeps // 4, config.burn_in or 1),
                     chains=config.chains,
                     master_seed=int(np.uint64(config.master_seed) ^ np.uint64(0xC0FFEE)),
                     thinning=1, n_batches=config.n_batches)
    est = mc_run(calib)
    return 0.5 / est.moments[2][0], "auto-calibration"


def mc_run(config: McConfig, spectrum=None):
    """Run the chains and form batch-mean estimates of E Y^2 and E Y^4."""
    gamma, mode = resolve_gamma(config, spectrum)
    N = config.lattice.site_count
    nbr_idx, nbr_cnt = config.lattice.neighbor_table()
    n_samples = (config.sweeps - config.burn_in + config.thinning - 1) // config.thinning
    if n_samples < config.n_batches:
        raise ValueError("fewer samples than batches; extend sweeps")
    seeds = np.array([chain_seed(config.master_seed, c)
                      for c in range(config.chains)], dtype=np.uint64)
    batch_hist, accepted = kernels.metropolis_chains(
        nbr_idx, nbr_cnt, float(config.beta), float(gamma),
        config.sweeps, config.burn_in, config.thinning,
        config.n_batches, seeds)

    m_vals = np.arange(-N, N + 1, 2, dtype=np.int64)
    idx = (m_vals + N) // 2
    moments = {}
    batch_means = {}
    for k in (2, 4):
        mk = m_vals.astype(np.float64) ** k
        # chains merged in index order; every batch has n_samples/n_batches +- 1
        per_batch = []
        for c in range(config.chains):
            counts = batch_hist[c][:, idx].astype(np.float64)
            tot = counts.sum(axis=1)
            per_batch.append((counts @ mk) / tot)
        bm = np.concatenate(per_batch)
        est = float(bm.mean())
        se = float(bm.std(ddof=1) / math.sqrt(bm.size)) if bm.size > 1 else 0.0
        moments[k] = (est, se)
        batch_means[k] = bm
    total_hist = batch_hist.sum(axis=(0, 1))[idx].astype(np.float64)
    mass = total_hist / total_hist.sum()
    attempts = config.chains * config.sweeps * N
    return McEstimates(
        moments=moments, histogram_m=m_vals, histogram_mass=mass,
        acceptance_rate=float(accepted.sum()) / attempts,
        chain_seeds=[int(s) for s in seeds], gamma=gamma, gamma_mode=mode,
        n_samples=n_samples * config.chains, batch_means=batch_means)


def mc_histogram(estimates: McEstimates, bins):
    """Rebin the magnetization histogram onto X/sqrt(E X^2).

    Returns (bin_centers, mass); edges symmetric about 0, total mass 1.
    """
    if bins < 10:
        raise ValueError("bins >= 10 required")
    ex2 = estimates.moments[2][0]
    x = estimates.histogram_m.astype(np.float64) / math.sqrt(ex2)
    lim = float(np.max(np.abs(x))) * (1.0 + 1e-9)
    edges = np.linspace(-lim, lim, bins + 1)
    which = np.clip(np.digitize(x, edges) - 1, 0, bins - 1)
    mass = np.zeros(bins)
    np.add.at(mass, which, estimates.histogram_mass)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, mass


def histogram_moments(estimates: McEstimates):
    """(E X^2, E X^4, kurtosis) from the total histogram."""
    m = estimates.histogram_m.astype(np.float64)
    p = estimates.histogram_mass
    m2 = float(np.sum(p * m ** 2))
    m4 = float(np.sum(p * m ** 4))
    return m2, m4, m4 / (m2 * m2)
