"""Exception types shared across the package."""


class GaugePError(Exception):
    pass


class ConfigurationError(GaugePError, ValueError):
    """Invalid parameters, dimensions or run configuration."""


class UnsupportedInputError(GaugePError, ValueError):
    """Input outside the supported domain (e.g. a defective diffusion matrix)."""


class DivergenceAbort(GaugePError, RuntimeError):
    """Too many trajectories diverged; the run was abandoned."""

    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)


class TruncationError(GaugePError, RuntimeError):
    """The truncated Fock basis is no longer adequate."""
