"""Exception types shared across the package."""


class NlChafeeError(Exception):
    """Base class for all package errors."""


class ConfigError(NlChafeeError):
    """Invalid or unknown configuration content; message names the key."""


class AboveSeparatrixError(NlChafeeError):
    """Requested energy lies above the separatrix level sup F."""


class SingularTimeMapError(NlChafeeError):
    """Energy within 1e-12 of sup F; the time-map integral diverges."""


class NoEquilibriumError(NlChafeeError):
    """No profile with the requested zero count exists at this lambda."""


class ShootingOverflowError(NlChafeeError):
    """Shooting orbit left the compact well (|u| exceeded safety bound)."""


class DivergedError(NlChafeeError):
    """Galerkin trajectory exceeded the dissipation-bound safety radius."""


class EigenConvergenceError(NlChafeeError):
    """Dense eigenvalue solve did not converge."""


class MorseViolationError(NlChafeeError):
    """Connection graph violates a structural invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))
