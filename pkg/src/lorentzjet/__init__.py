"""Forward synthesis of Lorentzian time-separation data on a timelike
hypersurface, and recovery of the metric jet at a surface point from that
data alone."""

from .geometry import (
    CausalClass,
    ChartDomain,
    CurvatureSample,
    MetricField,
    Point,
    TangentVector,
    causal_character,
    christoffel,
    curvature_at,
    inner,
    validate_metric,
)
from .catalog import catalog_metric, metric_from_config

__all__ = [
    "CausalClass",
    "ChartDomain",
    "CurvatureSample",
    "MetricField",
    "Point",
    "TangentVector",
    "causal_character",
    "christoffel",
    "curvature_at",
    "inner",
    "validate_metric",
    "catalog_metric",
    "metric_from_config",
]
