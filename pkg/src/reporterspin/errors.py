"""Exception types shared across the package."""


class ReporterSpinError(Exception):
    """Base class for all package-specific errors."""


class FieldMisalignmentError(ReporterSpinError):
    """Field direction too far from the NV axis for the linear Zeeman formula."""


class CoincidentSitesError(ReporterSpinError):
    """Two spin sites closer than the minimum allowed separation."""


class DegenerateRadiusError(ReporterSpinError):
    """Geometry inversion hit a degenerate branch (b -> 0 endpoint)."""


class NoSolutionError(ReporterSpinError):
    """Inconsistent inputs: no (r, theta) reproduces the requested couplings."""


class DimensionLimitError(ReporterSpinError):
    """Requested Hilbert space exceeds the dense-matrix size limit."""


class UnknownChannelError(ReporterSpinError):
    """Pulse or readout addressed a channel absent from the spin system."""


class SchemaError(ReporterSpinError):
    """Configuration or data file violates the expected schema."""


class VersionMismatchError(SchemaError):
    """File carries a format/constants version this code does not understand."""


class ConvergenceError(ReporterSpinError):
    """Optimizer failed to converge within the configured restarts."""


class ZeroDofError(ReporterSpinError):
    """Chi-squared requested with no remaining degrees of freedom."""


class DegenerateAbscissaError(ReporterSpinError):
    """Fit abscissa carries no information (e.g. all fields zero)."""


class OptimizerBudgetError(ReporterSpinError):
    """Localization exceeded its optimizer budget; partial map attached."""

    def __init__(self, message, partial_map=None):
        super().__init__(message)
        self.partial_map = partial_map
