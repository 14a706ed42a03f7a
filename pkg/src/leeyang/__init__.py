"""Finite-volume Ising magnetization spectra, Lee-Yang zeros, and
critical Curie-Weiss perturbation diagnostics."""

__version__ = "0.1.0"
