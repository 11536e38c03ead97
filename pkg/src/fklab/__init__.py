"""Timestep bias of discretized Feynman-Kac semigroups on the 1-D torus.

Population Monte Carlo (:mod:`fklab.smc`), a Fourier-Galerkin reference
solver (:mod:`fklab.galerkin`) and the sweep/verification harness
(:mod:`fklab.harness`).
"""
from .errors import (ConfigurationError, FKLabError, InsufficientDataError, InvalidInputError,
                     NumericalError, SingularMatrixError)
from .model import ProblemSpec, TrigPolynomial, preset, wrap
from .smc import SmcConfig, SmcEstimate, smc_run

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError", "FKLabError", "InsufficientDataError", "InvalidInputError",
    "NumericalError", "SingularMatrixError", "ProblemSpec", "TrigPolynomial", "preset", "wrap",
    "SmcConfig", "SmcEstimate", "smc_run",
]
