"""Exception types shared across the solver."""


class GPWaveError(Exception):
    """Base class for all solver errors."""


class ConfigError(GPWaveError):
    """Invalid or inconsistent configuration / input data."""


class BasisTooLarge(ConfigError):
    """Requested truncation radius would exceed the configured basis budget."""


class ResonantContour(GPWaveError):
    """An eigenvalue of the model operator sits inside the guard band of the
    integration circle (or the circle does not enclose exactly one)."""


class SeriesDiverging(GPWaveError):
    """Per-order norms of the expansion stopped decaying; the instance is
    outside the convergent regime."""


class NoEigenvalueInWindow(GPWaveError):
    """Dense eigensolve found no eigenvalue in the requested interval."""


class MultipleEigenvaluesInWindow(GPWaveError):
    """Dense eigensolve found more than one eigenvalue in the interval."""


class NoAdmissiblePoint(GPWaveError):
    """No quasimomentum passing the non-resonance checks was found within the
    allotted attempts."""


class NotConverged(GPWaveError):
    """Fixed-point iteration ran out of steps before reaching tolerance."""


class IndexDrift(GPWaveError):
    """A later iteration step selected a different unperturbed index; the run
    left the admissible regime."""


class SupportOverflow(GPWaveError):
    """Frequency support grew past the configured cutoff (raised only in
    strict mode; the default path truncates and logs the dropped mass)."""


class NewtonDiverged(GPWaveError):
    """Damped Newton refinement failed to reduce the residual."""


class NoRootInInterval(GPWaveError):
    """Radius equation shows no sign change over the search interval."""
