"""Photon counting statistics of light emitted by decaying surface plasmons.

Modules
-------
specfun     incomplete gamma, Bessel I1 and Poisson pmf
plasmon     Kretschmann-geometry plasmon parameters
counting    count distribution, generating function and moments
simulator   Monte Carlo of emission, splitting, detection and binning
stream      sparse binned-count streams and their CSV format
analysis    correlation, Fano factor and run-split statistics
plot        deterministic SVG line plots
cli         command-line front end
"""
from .counting import (
    CountDistribution,
    CountingParams,
    MomentSet,
    distribution,
    generating_function,
    moments,
    reduced_covariance,
    weight_zero,
)
from .errors import SpolightError
from .plasmon import OpticalConfig, derive_plasmon_parameters
from .simulator import SimConfig, run_experiment
from .stream import BinnedCountStream, load_stream, save_stream

__version__ = "0.1.0"

__all__ = [
    "BinnedCountStream",
    "CountDistribution",
    "CountingParams",
    "MomentSet",
    "OpticalConfig",
    "SimConfig",
    "SpolightError",
    "derive_plasmon_parameters",
    "distribution",
    "generating_function",
    "load_stream",
    "moments",
    "reduced_covariance",
    "run_experiment",
    "save_stream",
    "weight_zero",
]
