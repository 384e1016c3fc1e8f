"""Path-dependent viscosity solution experiments."""

from ._core import (
    ConfigurationError,
    DiscretePath,
    DomainError,
    Functional,
    Grid,
    PointInTheta,
    PrecisionError,
    catalog_functional,
    catalog_names,
    control_value,
    default_config_text,
    distance,
    origin_point,
    regularize,
    run_suite,
    suite_names,
    sup_expectation,
    validate_config,
)

__all__ = [
    "ConfigurationError",
    "DiscretePath",
    "DomainError",
    "Functional",
    "Grid",
    "PointInTheta",
    "PrecisionError",
    "catalog_functional",
    "catalog_names",
    "control_value",
    "default_config_text",
    "distance",
    "origin_point",
    "regularize",
    "run_suite",
    "suite_names",
    "sup_expectation",
    "validate_config",
]
