"""Facade para usar o laboratório de Finsler como pacote Python."""

from .averaging import (
    averaged_connection,
    averaged_curvature,
    averaged_field,
    averaged_metric,
    build_indicatrix_quadrature,
    interpolated_family,
)
from .catalog import FinslerModel, check_convexity, check_homogeneity, make_catalog_model
from .classifier import classify, pure_landsberg_diagnostic, randers_berwald_criterion
from .config import Settings, load_settings
from .connections import ConnectionField, chern_field, verify_structure_equations
from .curvature import curvature, flag_curvature
from .exceptions import FinslerError
from .lab import FinslerLab, create_lab
from .models import ClassificationReport, SampleSpec, SlitPoint, Thresholds
from .storage import parse_model
from .transport import (
    BasePath,
    geodesic_equivalence_probe,
    horizontal_lift,
    indicatrix_invariance_probe,
    integrate_geodesic,
    parallel_transport,
    reversibility_probe,
)

__all__ = [
    "FinslerLab",
    "create_lab",
    "Settings",
    "load_settings",
    "FinslerError",
    "FinslerModel",
    "SlitPoint",
    "SampleSpec",
    "Thresholds",
    "ClassificationReport",
    "make_catalog_model",
    "parse_model",
    "check_homogeneity",
    "check_convexity",
    "ConnectionField",
    "chern_field",
    "verify_structure_equations",
    "curvature",
    "flag_curvature",
    "build_indicatrix_quadrature",
    "averaged_connection",
    "averaged_metric",
    "averaged_curvature",
    "averaged_field",
    "interpolated_family",
    "BasePath",
    "integrate_geodesic",
    "horizontal_lift",
    "parallel_transport",
    "indicatrix_invariance_probe",
    "geodesic_equivalence_probe",
    "reversibility_probe",
    "classify",
    "randers_berwald_criterion",
    "pure_landsberg_diagnostic",
]
