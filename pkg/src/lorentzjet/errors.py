"""Exception hierarchy shared across the package."""


class LorentzJetError(Exception):
    """Base class for all package errors."""


class ChartDomainError(LorentzJetError):
    """A point (or a finite-difference stencil around it) leaves the chart."""


class BasePointMismatch(LorentzJetError):
    """Two tangent vectors were combined at different base points."""


class SingularMetricError(LorentzJetError):
    """Metric matrix not invertible, or signature not (-,+,...,+)."""


class IntegrationError(LorentzJetError):
    """Geodesic integration failed (step underflow, left chart, ...)."""


class ShootingError(LorentzJetError):
    """Newton shooting for the inverse exponential map did not converge."""


class SurfaceError(LorentzJetError):
    """Degenerate hypersurface frame or invalid Fermi chart."""


class FermiResidualError(SurfaceError):
    """Fermi block structure violated beyond tolerance at a chart point."""


class TableSchemaError(LorentzJetError):
    """Measurement dataset file has the wrong schema or is corrupt."""


class RecoveryError(LorentzJetError):
    """Jet recovery stage failed."""


class RankDeficientError(RecoveryError):
    """Probed direction set does not determine the quadratic form."""


class AnchorError(RecoveryError):
    """Anchor family construction failed (too few qualifying anchors)."""


class ConfigError(LorentzJetError):
    """Scenario configuration invalid."""
