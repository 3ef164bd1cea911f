"""Periodic approximations of measure-preserving torus maps and the spectra of
the resulting permutation (Koopman) operators."""

from .discretizer import PermutationMap, discretize, discretize_analytic, discretize_matching, quality_report
from .lattice import LatticePartition, torus_distance
from .maps import TorusMap, builtin, builtin_observable, sample
from .spectral import Interval, Mollifier, atoms, autocorrelation, cycle_decompose, density, project

__version__ = "0.1.0"

__all__ = [
    "Interval",
    "LatticePartition",
    "Mollifier",
    "PermutationMap",
    "TorusMap",
    "atoms",
    "autocorrelation",
    "builtin",
    "builtin_observable",
    "cycle_decompose",
    "density",
    "discretize",
    "discretize_analytic",
    "discretize_matching",
    "project",
    "quality_report",
    "sample",
    "torus_distance",
]
