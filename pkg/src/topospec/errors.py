"""Exception types shared across the pipeline."""


class TopospecError(Exception):
    """Base class for all pipeline errors."""


class IntegrationDivergedError(TopospecError):
    """State became non-finite during integration; carries the step index."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"integration diverged (non-finite state) at step {step}")


class DegeneratePerturbationError(TopospecError):
    """Tangent vector collapsed to zero norm during Lyapunov estimation."""


class InsufficientDataError(TopospecError):
    """Input series too short; message names the required minimum length."""


class ZeroVarianceError(TopospecError):
    """A coordinate has zero variance and unit-variance normalization was requested."""


class DegenerateGeometryError(TopospecError):
    """Point cloud is rank-deficient where planar structure is required."""


class DegenerateBandwidthError(TopospecError):
    """Kernel bandwidth is zero (all points identical)."""


class SelectionInfeasibleError(TopospecError):
    """Candidate filtering removed every point; suggests threshold relaxation."""


class AliasingConfigError(TopospecError):
    """Time grid violates the Nyquist condition; message names the minimal scaling."""


class CompileConfigError(TopospecError):
    """Requested evolution cannot be compiled within the step budget."""


class ResourceLimitError(TopospecError):
    """Qubit count exceeds the dense-simulation budget."""


class UndefinedEntropyError(TopospecError):
    """Spectral entropy is undefined (zero total power)."""


class ConfigError(TopospecError):
    """Run configuration is malformed (unknown key, bad value)."""
