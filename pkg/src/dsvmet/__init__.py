"""Phase-estimation limits of displaced squeezed vacuum probes, with a Fock-space oracle."""
from .closedform import MetrologyReport, limits, mean_sq_photon, qfi_dsv
from .core import (
    SIGMA_VAC,
    DsvParams,
    EllipseGeometry,
    error_ellipse,
    mean_photon,
    phase_sensitive_param,
    reorder_displacement,
)

__all__ = [
    "SIGMA_VAC",
    "DsvParams",
    "EllipseGeometry",
    "MetrologyReport",
    "error_ellipse",
    "limits",
    "mean_photon",
    "mean_sq_photon",
    "phase_sensitive_param",
    "qfi_dsv",
    "reorder_displacement",
]
