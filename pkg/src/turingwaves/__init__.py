"""Turing instabilities and periodic traveling waves of viscous conservation laws.

Submodules:

``models``      system descriptors, fixtures and flux evaluation
``dispersion``  constant-state symbol analysis and Turing-point search
``profile``     Newton solver and continuation for periodic wave profiles
``hill``        Floquet-Bloch spectra by Hill's method and stability classification
``evolve``      time integration used to cross-check spectral verdicts
``sweep``       parameter sweeps and existence curves
``cli``         command-line entry point
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

__all__ = ["__version__"]
