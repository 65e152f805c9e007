"""Exception types raised by the numerical engine and the CLI."""


class EngineError(Exception):
    """Base class for numerical-engine failures."""


class GeometryError(EngineError):
    """Particle separation is zero or below the configured minimum."""


class ConvergenceError(EngineError):
    """Matsubara sum did not converge within the policy's hard cap."""


class StrongCouplingError(EngineError):
    """Round-trip spectral radius reached 1; the dipole log-det model
    is outside its validity range at this separation."""


class ResonanceError(EngineError):
    """Permittivity hit the dipole-resonance pole (eps + 2 singular)."""


class ConsistencyError(EngineError):
    """Two independent numerical routes disagreed beyond tolerance."""


class ConfigError(Exception):
    """Invalid run configuration.  Carries an optional source line."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class NoisyLaplacianWarning(UserWarning):
    """Step-halved Laplacian estimates disagree; result may be noisy."""
