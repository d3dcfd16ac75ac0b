"""Spectral construction of quasi-periodic states of the 3-D cubic
Schroedinger (Gross-Pitaevskii) equation with a periodic potential.

Submodules:

    trigpoly  sparse trigonometric-polynomial algebra (coefficient space)
    lattice   dual-lattice geometry and resonance index sets
    linop     operator assembly, contour expansion, dense oracle
    nonres    non-resonance admissibility surrogate
    gpfix     potential-map fixed point, solution assembly, Newton oracle
    isosurf   isoenergetic-surface tracing and measure estimation
    cli       batch front end (gpwave solve | iso | scan)
"""

from .errors import (BasisTooLarge, ConfigError, GPWaveError, IndexDrift,
                     MultipleEigenvaluesInWindow, NewtonDiverged,
                     NoAdmissiblePoint, NoEigenvalueInWindow, NoRootInInterval,
                     NotConverged, ResonantContour, SeriesDiverging,
                     SupportOverflow)
from .trigpoly import TrigPolynomial, convolve, mod_squared, remove_mean, star_norm

__version__ = "0.1.0"

__all__ = [
    "TrigPolynomial", "star_norm", "convolve", "remove_mean", "mod_squared",
    "GPWaveError", "ConfigError", "BasisTooLarge", "ResonantContour",
    "SeriesDiverging", "NoEigenvalueInWindow", "MultipleEigenvaluesInWindow",
    "NoAdmissiblePoint", "NotConverged", "IndexDrift", "SupportOverflow",
    "NewtonDiverged", "NoRootInInterval", "__version__",
]
