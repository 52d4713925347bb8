"""Truncated Fock-space oracle for the closed-form DSV results.

States are built as dense amplitude vectors over ``|0>, ..., |dim-1>``.
Operators are exponentiated from their truncated generators with a
scaling-and-squaring Taylor scheme, so nothing here shares code with
:mod:`dsvmet.closedform`.

To measure truncation loss the probe is built in a padded working space and
then cut back to ``dim``; the weight above ``dim`` is recorded as
``tail_mass`` before renormalizing.

The parameter is encoded as ``exp(+i phi_minus n / 2)`` on the signal mode.
With the idler in vacuum this is the full two-mode encoding, since ``G_-``
acts as ``n_a / 2`` there. The QFI does not depend on the sign of the phase.

The pure-state QFI is ``4 (<d psi|d psi> - |<d psi|psi>|^2)``. Only the minus
sign makes it equal to four times the generator variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DsvParams, reorder_displacement

DEFAULT_TAIL_TOL = 1e-10
TAYLOR_TOL = 1e-14
MIN_AUTO_DIM = 64
MAX_AUTO_DIM = 1024


class TruncationError(ValueError):
    """Raised when a truncated basis is too small for the requested state."""


@dataclass
class FockVector:
    dim: int
    amps: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (self.dim,):
            raise ValueError(f"amps has shape {self.amps.shape}, expected ({self.dim},)")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2


@dataclass
class OperatorMatrix:
    dim: int
    entries: np.ndarray

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.dim, self.entries @ other.entries)
        if isinstance(other, FockVector):
            return FockVector(self.dim, self.entries @ other.amps, other.tail_mass)
        return self.entries @ other


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def vacuum(dim: int) -> FockVector:
    amps = np.zeros(dim, dtype=complex)
    amps[0] = 1.0
    return FockVector(dim, amps)


def expm_taylor(a: np.ndarray, tol: float = TAYLOR_TOL, max_terms: int = 60) -> np.ndarray:
    """Dense matrix exponential by scaling and squaring a truncated Taylor series.

    The matrix is scaled so its 1-norm is at most 1/2, the series is summed
    until the max-norm of the last term drops below ``tol``, and the result
    is squared back up.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    norm = np.abs(a).sum(axis=0).max() if n else 0.0
    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    a = a / 2.0**squarings

    result = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, max_terms + 1):
        term = term @ a / k
        result += term
        if np.abs(term).max() <= tol:
            break
    else:
        raise RuntimeError(f"Taylor series did not converge in {max_terms} terms")

    for _ in range(squarings):
        result = result @ result
    return result


def _check_dim(dim: int) -> None:
    if int(dim) != dim or dim < 2:
        raise ValueError(f"dim must be an integer >= 2, got {dim!r}")


def build_displacement(alpha: complex, dim: int) -> OperatorMatrix:
    """``D(alpha) = exp(alpha a^dag - alpha* a)`` on the truncated basis."""
    _check_dim(dim)
    alpha = complex(alpha)
    if abs(alpha) ** 2 > dim / 4:
        raise TruncationError(
            f"displacement guard: |alpha|^2 = {abs(alpha) ** 2:.6g} exceeds dim/4 = {dim / 4:g}"
        )
    a = annihilation(dim)
    gen = alpha * a.conj().T - alpha.conjugate() * a
    return OperatorMatrix(dim, expm_taylor(gen))


def build_squeeze(xi: complex, dim: int) -> OperatorMatrix:
    """``S(xi) = exp((xi* a^2 - xi a^dag^2) / 2)`` on the truncated basis."""
    _check_dim(dim)
    xi = complex(xi)
    if math.sinh(abs(xi)) ** 2 > dim / 4:
        raise TruncationError(
            f"squeeze guard: sinh^2(r) = {math.sinh(abs(xi)) ** 2:.6g} exceeds dim/4 = {dim / 4:g}"
        )
    a = annihilation(dim)
    ad = a.conj().T
    gen = 0.5 * (xi.conjugate() * (a @ a) - xi * (ad @ ad))
    return OperatorMatrix(dim, expm_taylor(gen))


def _working_dim(dim: int) -> int:
    return dim + max(16, dim // 4)


def _truncate(amps: np.ndarray, dim: int, tail_tol: float | None) -> FockVector:
    tail = float(np.sum(np.abs(amps[dim:]) ** 2))
    if tail_tol is not None and tail >= tail_tol:
        raise TruncationError(
            f"tail mass {tail:.3g} at dim={dim} is not below tail_tol={tail_tol:g}"
        )
    kept = amps[:dim]
    return FockVector(dim, kept / np.linalg.norm(kept), tail)


def _check_guards(p: DsvParams, dim: int, extra_alpha: complex | None = None) -> None:
    # the heuristics apply to the requested dim, not the padded working space
    _check_dim(dim)
    for alpha in (p.alpha, extra_alpha):
        if alpha is not None and abs(alpha) ** 2 > dim / 4:
            raise TruncationError(
                f"displacement guard: |alpha|^2 = {abs(alpha) ** 2:.6g} exceeds dim/4 = {dim / 4:g}"
            )
    if math.sinh(p.r) ** 2 > dim / 4:
        raise TruncationError(
            f"squeeze guard: sinh^2(r) = {math.sinh(p.r) ** 2:.6g} exceeds dim/4 = {dim / 4:g}"
        )


def dsv_state(p: DsvParams, dim: int, tail_tol: float | None = DEFAULT_TAIL_TOL) -> FockVector:
    """``D(alpha) S(xi) |0>`` truncated to ``dim`` levels and renormalized.

    Pass ``tail_tol=None`` to skip the tail-mass check (the mass is still
    recorded on the returned vector).
    """
    _check_guards(p, dim)
    work = _working_dim(dim)
    psi = build_squeeze(p.xi, work).entries[:, 0]
    psi = build_displacement(p.alpha, work).entries @ psi
    return _truncate(psi, dim, tail_tol)


def photon_moments(v: FockVector) -> tuple[float, float, float]:
    """``(<n>, <n^2>, Var n)`` of a normalized state."""
    prob = v.probabilities
    n = np.arange(v.dim, dtype=float)
    mean = float(prob @ n)
    second = float(prob @ n**2)
    variance = float(prob @ (n - mean) ** 2)
    return mean, second, variance


def encode_phase(v: FockVector, phi_minus: float) -> FockVector:
    n = np.arange(v.dim, dtype=float)
    return FockVector(v.dim, np.exp(0.5j * phi_minus * n) * v.amps, v.tail_mass)


def infidelity_from_step(psi: np.ndarray, step: np.ndarray) -> float:
    """``1 - |<psi|psi + step>|^2`` for unit vectors ``psi`` and ``psi + step``.

    Equals the squared norm of the part of ``step`` orthogonal to ``psi``,
    which avoids subtracting two numbers close to one.
    """
    perp = step - psi * np.vdot(psi, step)
    return float(np.vdot(perp, perp).real)


def qfi_fidelity(
    p: DsvParams,
    dphi: float,
    dim: int,
    tail_tol: float | None = DEFAULT_TAIL_TOL,
) -> float:
    """QFI from the Bures distance between states encoded at ``0`` and ``dphi``.

    Returns ``8 (1 - sqrt(F)) / dphi^2`` with ``F`` the fidelity of the two
    encoded states; the error is ``O(dphi^2)``.
    """
    if not 1e-6 <= dphi <= 1e-2:
        raise ValueError(f"dphi must lie in [1e-6, 1e-2], got {dphi!r}")
    psi = dsv_state(p, dim, tail_tol).amps
    n = np.arange(dim, dtype=float)
    step = np.expm1(0.5j * dphi * n) * psi
    one_minus_f = infidelity_from_step(psi, step)
    fid = 1.0 - one_minus_f
    one_minus_sqrt_f = one_minus_f / (1.0 + math.sqrt(max(fid, 0.0)))
    return 8.0 * one_minus_sqrt_f / dphi**2


def phase_derivative(p: DsvParams, dphi: float, dim: int,
                     tail_tol: float | None = DEFAULT_TAIL_TOL) -> tuple[FockVector, FockVector]:
    """Encoded state at zero and its central-difference derivative in the phase."""
    psi = dsv_state(p, dim, tail_tol)
    plus = encode_phase(psi, dphi).amps
    minus = encode_phase(psi, -dphi).amps
    return psi, FockVector(dim, (plus - minus) / (2.0 * dphi), psi.tail_mass)


def qfi_pure_state(psi: FockVector, dpsi: FockVector) -> float:
    """``4 (<dpsi|dpsi> - |<dpsi|psi>|^2)`` for a normalized pure state."""
    overlap = np.vdot(dpsi.amps, psi.amps)
    return float(4.0 * (np.vdot(dpsi.amps, dpsi.amps).real - abs(overlap) ** 2))


def check_reorder(p: DsvParams, dim: int, tail_tol: float | None = DEFAULT_TAIL_TOL) -> float:
    """Fidelity between ``S(xi) D(alpha)|0>`` and ``D(beta) S(xi)|0>``."""
    beta = reorder_displacement(p)
    _check_guards(p, dim, extra_alpha=beta)
    work = _working_dim(dim)
    squeeze = build_squeeze(p.xi, work).entries
    vac = np.zeros(work, dtype=complex)
    vac[0] = 1.0
    left = squeeze @ (build_displacement(p.alpha, work).entries @ vac)
    right = build_displacement(beta, work).entries @ squeeze[:, 0]
    left = _truncate(left, dim, tail_tol).amps
    right = _truncate(right, dim, tail_tol).amps
    return float(abs(np.vdot(left, right)) ** 2)


def check_two_mode_reduction(p: DsvParams, dim: int = 24, tail_tol: float | None = 1e-4) -> float:
    """``|4 Var(G_-) - Var(n_a)|`` for the DSV signal with a vacuum idler.

    Builds the joint ``dim**2`` space explicitly, so ``dim`` is capped at 32.
    The identity holds for any truncated signal, hence the loose default
    ``tail_tol``.
    """
    if dim > 32:
        raise ValueError(f"joint space is dim**2; dim must be <= 32, got {dim}")
    signal = dsv_state(p, dim, tail_tol)
    joint = np.kron(signal.amps, vacuum(dim).amps)
    n_op = number(dim)
    eye = np.eye(dim)
    g_minus = 0.5 * (np.kron(n_op, eye) - np.kron(eye, n_op))
    g_psi = g_minus @ joint
    mean_g = np.vdot(joint, g_psi).real
    var_g = np.vdot(g_psi, g_psi).real - mean_g**2
    _, _, var_n = photon_moments(signal)
    return float(abs(4.0 * var_g - var_n))


def auto_state(p: DsvParams, tail_tol: float = DEFAULT_TAIL_TOL) -> FockVector:
    """DSV state at the smallest power-of-two dimension (64 to 1024) with tail mass below ``tail_tol``."""
    if not 0.0 < tail_tol <= 1e-4:
        raise ValueError(f"tail_tol must lie in (0, 1e-4], got {tail_tol!r}")
    dim = MIN_AUTO_DIM
    last = None
    while dim <= MAX_AUTO_DIM:
        try:
            return dsv_state(p, dim, tail_tol)
        except TruncationError as exc:
            last = exc
        dim *= 2
    raise TruncationError(
        f"auto_dim cap reached: no dim <= {MAX_AUTO_DIM} meets tail_tol={tail_tol:g} ({last})"
    )


def auto_dim(p: DsvParams, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    return auto_state(p, tail_tol).dim
