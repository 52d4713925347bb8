"""Parameter types and elementary quantities for displaced squeezed vacuum probes.

Conventions used throughout the package:

* The probe is ``D(alpha) S(xi) |0>`` with ``alpha = |alpha| e^{i phi}`` and
  ``xi = r e^{i theta}``.
* Quadratures are ``x = (a + a^dag) / 2``, so the vacuum quadrature variance
  is 1/4 and the vacuum standard deviation ``SIGMA_VAC`` is 1/2.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

SIGMA_VAC = 0.5


@dataclass(frozen=True)
class DsvParams:
    """Intrinsic parameters of a displaced squeezed vacuum state.

    Phases are stored exactly as given; no reduction is applied.
    """

    alpha_mag: float
    phi: float = 0.0
    r: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        for name in ("alpha_mag", "phi", "r", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)!r}")
        if self.alpha_mag < 0:
            raise ValueError(f"alpha_mag must be >= 0, got {self.alpha_mag}")
        if self.r < 0:
            raise ValueError(f"r must be >= 0, got {self.r}")

    @classmethod
    def from_phase(cls, alpha_mag: float, r: float, phase: float) -> "DsvParams":
        """Build parameters with ``phi - theta/2 = phase`` realized as ``phi = phase, theta = 0``."""
        return cls(alpha_mag=alpha_mag, phi=phase, r=r, theta=0.0)

    @property
    def alpha(self) -> complex:
        return cmath.rect(self.alpha_mag, self.phi)

    @property
    def xi(self) -> complex:
        return cmath.rect(self.r, self.theta)

    @property
    def phase(self) -> float:
        return phase_sensitive_param(self)


@dataclass(frozen=True)
class EllipseGeometry:
    center: complex
    semi_major: float
    semi_minor: float
    orientation: float  # angle of the squeezed (minor) axis


def phase_sensitive_param(p: DsvParams) -> float:
    """Return ``phi - theta/2`` reduced to ``[0, pi)``."""
    x = math.fmod(p.phi - 0.5 * p.theta, math.pi)
    if x < 0:
        x += math.pi
    # fmod of a value just below a multiple of pi can round up to pi itself
    if x >= math.pi:
        x = 0.0
    return x


def mean_photon(p: DsvParams) -> float:
    return p.alpha_mag**2 + math.sinh(p.r) ** 2


def reorder_displacement(p: DsvParams) -> complex:
    """Displacement ``beta`` with ``D(beta) S(xi) = S(xi) D(alpha)``.

    With ``S(xi) = exp((xi* a^2 - xi a^dag^2) / 2)``, conjugation gives
    ``S a S^dag = a cosh r + a^dag e^{i theta} sinh r``, hence
    ``beta = alpha cosh r - alpha* e^{i theta} sinh r``. The often-quoted
    ``+`` form belongs to the opposite squeeze sign, which would put the
    QFI minimum at ``phi - theta/2 = pi/2`` instead of 0.
    """
    alpha = p.alpha
    return alpha * math.cosh(p.r) - alpha.conjugate() * cmath.exp(1j * p.theta) * math.sinh(p.r)


def error_ellipse(p: DsvParams) -> EllipseGeometry:
    """One-sigma quadrature error ellipse of the probe in the complex-amplitude plane."""
    return EllipseGeometry(
        center=p.alpha,
        semi_major=SIGMA_VAC * math.exp(p.r),
        semi_minor=SIGMA_VAC * math.exp(-p.r),
        orientation=0.5 * p.theta,
    )
