"""Closed-form QFI, photon-number moments and accuracy limits of the DSV probe."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .core import DsvParams, mean_photon, phase_sensitive_param


@dataclass(frozen=True)
class MetrologyReport:
    qfi: float
    n_bar: float
    n_sq_bar: float
    cramer_rao: float
    shot_noise: float
    heisenberg: float
    hofmann: float
    delta: float
    measurements: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


def qfi_dsv(p: DsvParams) -> float:
    """Quantum Fisher information of the difference phase for the DSV probe.

    Evaluated as ``2 s^2 c^2 + |alpha|^2 (cosh 2r - sinh 2r cos 2x)`` with
    ``x = phi - theta/2``; for ``x = 0`` this is the amplitude-squeezed minimum.
    """
    s = math.sinh(p.r)
    c = math.cosh(p.r)
    x = phase_sensitive_param(p)
    return 2.0 * s * s * c * c + p.alpha_mag**2 * (
        math.cosh(2.0 * p.r) - math.sinh(2.0 * p.r) * math.cos(2.0 * x)
    )


def mean_sq_photon(p: DsvParams) -> float:
    """Mean-square photon number ``<n^2>``."""
    a2 = p.alpha_mag**2
    s = math.sinh(p.r)
    c = math.cosh(p.r)
    x = phase_sensitive_param(p)
    return (
        a2 * a2
        - a2 * (2.0 * s * c * math.cos(2.0 * x) - 1.0)
        + s * s * c * c
        + (4.0 * a2 + 1.0) * s * s
        + 2.0 * s**4
    )


def _inv_sqrt(v: float) -> float:
    return math.inf if v <= 0.0 else 1.0 / math.sqrt(v)


def limits(p: DsvParams, measurements: int = 1) -> MetrologyReport:
    """All four phase-accuracy limits for ``p``.

    Zero-information inputs (the vacuum) give ``inf`` limits instead of
    raising. ``delta`` is ``nan`` when both the Cramer-Rao and Hofmann
    limits are infinite.
    """
    if int(measurements) != measurements or measurements < 1:
        raise ValueError(f"measurements must be a positive integer, got {measurements!r}")
    measurements = int(measurements)
    qfi = qfi_dsv(p)
    n_bar = mean_photon(p)
    n_sq = mean_sq_photon(p)
    cr = _inv_sqrt(measurements * qfi)
    hof = _inv_sqrt(n_sq)
    delta = math.nan if math.isinf(cr) and math.isinf(hof) else cr - hof
    return MetrologyReport(
        qfi=qfi,
        n_bar=n_bar,
        n_sq_bar=n_sq,
        cramer_rao=cr,
        shot_noise=_inv_sqrt(n_bar),
        heisenberg=math.inf if n_bar <= 0.0 else 1.0 / n_bar,
        hofmann=hof,
        delta=delta,
        measurements=measurements,
    )
