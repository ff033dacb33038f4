"""Ray geometry for the PSDP crystal cube.

The selective prism is a cuboid of three negative uniaxial crystal pieces;
inside the middle trapezoid the extraordinary (V) ray bends at the tilted
interface, reflects off the top face, and rejoins the ordinary (H) ray.
This module gives the refraction angle, the optical path difference (OPD)
between the two rays, the interface angle that zeroes the OPD, and a
total-internal-reflection check at the top face.

Angle conventions: beta is the tilt of the internal interface measured so
that the extraordinary ray refracts by the additional angle delta toward
the top face; all functions take and return radians.  Lengths are in
millimetres; wavelengths in nanometres.

The TIR test uses the isotropic approximation: the extraordinary ray is
assigned the constant index n_e (the same approximation the OPD formula
makes), the medium beyond the top face is air (n = 1), and the incidence
angle at the top face is 90 degrees - delta.  Direction-dependent
extraordinary indices and walk-off are out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Snell arguments may land this far past 1 when a quoted, rounded beta sits
# at the grazing point; treat those as grazing instead of refusing.
_GRAZE_SLACK = 1e-5

# arcsin has infinite slope at 1, so an argument within a few ulps of 1 is
# indistinguishable from exact grazing; snapping avoids sqrt(eps) noise in
# the returned angle.
_GRAZE_SNAP = 4e-16


class NoPropagationError(ValueError):
    """No propagating refracted ray exists for the given interface angle."""


class DegenerateGeometryError(ValueError):
    """Zero refraction angle: isotropic indices or a degenerate interface."""


@dataclass(frozen=True)
class CrystalSpec:
    """Uniaxial crystal cube geometry and indices.

    n_o, n_e: ordinary and extraordinary refractive indices (n_e <= n_o for
    a negative uniaxial material; equality is allowed but degenerate).
    d: square cross-section side in mm.  beta: interface angle in radians.
    length_L (mm) and wavelength (nm) are informational.
    """

    n_o: float
    n_e: float
    d: float
    beta: float
    length_L: float = 0.0
    wavelength: float = 589.3

    def __post_init__(self) -> None:
        if not (0.0 < self.n_e <= self.n_o):
            raise ValueError(
                f"need 0 < n_e <= n_o (negative uniaxial); got n_o={self.n_o}, n_e={self.n_e}"
            )
        if not 0.0 < self.beta < math.pi / 2:
            raise ValueError("interface angle beta must lie in (0, pi/2)")
        if self.d <= 0.0:
            raise ValueError("cross-section side d must be positive")


#: Built-in material records: name -> (n_o, n_e, wavelength_nm).
MATERIALS: dict[str, tuple[float, float, float]] = {
    "calcite": (1.658, 1.486, 589.3),
}


def delta_from_beta(spec: CrystalSpec) -> float:
    """Extra deflection delta of the extraordinary ray at the interface.

    Solves n_o sin(beta) = n_e sin(beta + delta) for delta.  Arguments a
    hair past the grazing point (from rounded input angles) are clamped to
    grazing; anything beyond raises NoPropagationError.
    """
    arg = (spec.n_o / spec.n_e) * math.sin(spec.beta)
    if arg > 1.0 + _GRAZE_SLACK:
        raise NoPropagationError(
            f"refraction argument {arg:.9f} > 1: no propagating extraordinary ray "
            f"at beta = {math.degrees(spec.beta):.3f} deg"
        )
    if arg >= 1.0 - _GRAZE_SNAP:
        return math.pi / 2 - spec.beta
    return math.asin(arg) - spec.beta


def opd_from_delta(n_o: float, n_e: float, d: float, delta: float) -> float:
    """Closed-form OPD d*(n_e - n_o cos delta)/sin delta for a given delta."""
    if delta <= 0.0:
        raise DegenerateGeometryError("OPD undefined for delta <= 0 (no ray separation)")
    return d * (n_e - n_o * math.cos(delta)) / math.sin(delta)


def opd(spec: CrystalSpec) -> float:
    """Optical path difference between the two rays, in mm.

    Negative values mean the extraordinary ray leads.
    """
    return opd_from_delta(spec.n_o, spec.n_e, spec.d, delta_from_beta(spec))


def delta_zero_opd(n_o: float, n_e: float) -> float:
    """Deflection angle arccos(n_e/n_o) at which the OPD vanishes."""
    _check_indices(n_o, n_e)
    return math.acos(n_e / n_o)


def beta_zero_opd(n_o: float, n_e: float) -> float:
    """Interface angle arctan(n_e/sqrt(n_o^2 - n_e^2)) giving zero OPD.

    Complementary to delta_zero_opd: the two always sum to 90 degrees.
    """
    _check_indices(n_o, n_e)
    return math.atan2(n_e, math.sqrt(n_o * n_o - n_e * n_e))


def _check_indices(n_o: float, n_e: float) -> None:
    if not 0.0 < n_e <= n_o:
        raise ValueError(f"need 0 < n_e <= n_o; got n_o={n_o}, n_e={n_e}")


def path_length_p2p3(spec: CrystalSpec) -> float:
    """Extraordinary-ray leg from the interface to the top face: d/(2 sin delta)."""
    delta = delta_from_beta(spec)
    if delta <= 0.0:
        raise DegenerateGeometryError("path length undefined for delta <= 0")
    return spec.d / (2.0 * math.sin(delta))


def tir_margin(spec: CrystalSpec) -> float:
    """n_e cos(delta) - 1: positive means total internal reflection holds."""
    delta = delta_from_beta(spec)
    return spec.n_e * math.cos(delta) - 1.0


@dataclass(frozen=True)
class AssemblyReport:
    """Aggregate design check for one crystal spec."""

    delta: float
    opd_mm: float
    zero_opd: bool
    tir_ok: bool
    compensator_needed: bool
    beta_recommended: float
    degenerate: bool = False


def validate_assembly(spec: CrystalSpec) -> AssemblyReport:
    """Evaluate OPD, TIR and compensator need; recommend the zero-OPD angle.

    A compensator is flagged when the OPD exceeds one wavelength.  Isotropic
    input (n_o = n_e) yields a degenerate report with NaN ray numbers
    instead of raising.
    """
    beta_rec = beta_zero_opd(spec.n_o, spec.n_e)
    try:
        delta = delta_from_beta(spec)
        opd_mm = opd_from_delta(spec.n_o, spec.n_e, spec.d, delta)
    except (DegenerateGeometryError, NoPropagationError):
        return AssemblyReport(
            delta=math.nan,
            opd_mm=math.nan,
            zero_opd=False,
            tir_ok=False,
            compensator_needed=False,
            beta_recommended=beta_rec,
            degenerate=True,
        )
    wavelength_mm = spec.wavelength * 1e-6
    return AssemblyReport(
        delta=delta,
        opd_mm=opd_mm,
        zero_opd=abs(opd_mm) <= 1e-12 * spec.d,
        tir_ok=spec.n_e * math.cos(delta) - 1.0 > 0.0,
        compensator_needed=abs(opd_mm) > wavelength_mm,
        beta_recommended=beta_rec,
    )
