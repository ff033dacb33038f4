"""Unitary builders for the optical elements of the simulator.

Single-rail devices (prisms, plates, holograms) act on one rail and leave
all other rails untouched; two-rail devices (beamsplitters) mix a rail pair
identically on every (polarization, ell) mode.  Every builder verifies its
output against the unitarity tolerance for single elements.

Conventions baked in here:
  - A Dove prism rotated by alpha (anticlockwise, about the beam axis) maps
    |pol, ell> to exp(2i*ell*alpha)|pol, -ell>; polarization is untouched
    (idealized prism).
  - A half-wave plate at angle theta applies i*[[cos 2t, sin 2t],
    [sin 2t, -cos 2t]] to polarization; the leading i is kept everywhere and
    discounted only by global-phase-insensitive comparisons.
  - The PSDP (polarization-selective Dove prism) acts as a Dove prism on V
    and as the identity on H.
  - The balanced beamsplitter uses the real sum/difference convention
    (1/sqrt2)[[1, 1], [1, -1]] on the rail pair.
  - The PBS transmits H (rail kept) and reflects V (rail swapped).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .hilbert import (
    ELEMENT_TOL,
    POLS,
    ModeIndex,
    ModeSpace,
    UnitaryOp,
)

ModeMap = Callable[[ModeIndex], list[tuple[ModeIndex, complex]]]


class WindowOverflowError(ValueError):
    """An OAM shift would push an active mode outside the finite window."""


def _build(space: ModeSpace, fn: ModeMap, tol: float = ELEMENT_TOL) -> UnitaryOp:
    """Assemble a dense matrix column by column from a per-mode action."""
    dim = space.dim
    m = np.zeros((dim, dim), dtype=complex)
    for col, mode in enumerate(space.modes()):
        for out, amp in fn(mode):
            m[space.index(*out), col] += amp
    return UnitaryOp(m, check_tol=tol)


def _check_rail(rail: int, space: ModeSpace) -> None:
    if not 0 <= rail < space.rails:
        raise ValueError(f"rail {rail} outside space with {space.rails} rails")


def dove(alpha: float, rail: int, space: ModeSpace) -> UnitaryOp:
    """Dove prism rotated by alpha: |pol, ell> -> exp(2i*ell*alpha)|pol, -ell>."""
    _check_rail(rail, space)

    def fn(m: ModeIndex):
        if m.rail != rail:
            return [(m, 1.0)]
        return [(ModeIndex(m.rail, m.pol, -m.ell), np.exp(2j * m.ell * alpha))]

    return _build(space, fn)


def rotation(alpha: float) -> np.ndarray:
    """2x2 rotation matrix [[cos a, -sin a], [sin a, cos a]]."""
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _pol_matrix_element(m2: np.ndarray, rail: int, space: ModeSpace) -> UnitaryOp:
    """Embed a 2x2 polarization matrix on one rail, identity on OAM."""

    def fn(m: ModeIndex):
        if m.rail != rail:
            return [(m, 1.0)]
        col = POLS.index(m.pol)
        return [
            (ModeIndex(m.rail, "H", m.ell), complex(m2[0, col])),
            (ModeIndex(m.rail, "V", m.ell), complex(m2[1, col])),
        ]

    return _build(space, fn)


def hwp(theta: float, rail: int, space: ModeSpace) -> UnitaryOp:
    """Half-wave plate with slow axis at theta; OAM untouched.

    Polarization matrix: i*[[cos 2t, sin 2t], [sin 2t, -cos 2t]].
    """
    _check_rail(rail, space)
    a = 2.0 * theta
    m2 = 1j * np.array([[math.cos(a), math.sin(a)], [math.sin(a), -math.cos(a)]])
    return _pol_matrix_element(m2, rail, space)


def pol_rotation(alpha: float, rail: int, space: ModeSpace) -> UnitaryOp:
    """Physical frame rotation of the polarization plane on one rail."""
    _check_rail(rail, space)
    return _pol_matrix_element(rotation(alpha), rail, space)


def psdp(rail: int, space: ModeSpace) -> UnitaryOp:
    """Polarization-selective Dove prism: identity on H, ell -> -ell on V."""
    return psdp_rotated(0.0, rail, space)


def psdp_rotated(alpha: float, rail: int, space: ModeSpace) -> UnitaryOp:
    """Rotated PSDP assembly: identity on H, exp(2i*ell*alpha) ell-flip on V.

    The physical assembly is HWP(alpha/2) . R(alpha) J R(-alpha) . HWP(alpha/2),
    which equals the direct operator times a discarded global -1.  The builder
    returns the direct operator and verifies the assembly identity at build
    time (on a single-rail scratch space, where the -1 really is global);
    disagreement beyond 1e-12 means a convention drifted and is fatal.
    """
    _check_rail(rail, space)

    def fn(m: ModeIndex):
        if m.rail != rail or m.pol == "H":
            return [(m, 1.0)]
        return [(ModeIndex(m.rail, "V", -m.ell), np.exp(2j * m.ell * alpha))]

    direct = _build(space, fn)

    scratch = ModeSpace(1, space.window)
    j_alpha = direct.matrix if space.rails == 1 else psdp_rotated(alpha, 0, scratch).matrix
    half = hwp(alpha / 2.0, 0, scratch).matrix
    rot = pol_rotation(alpha, 0, scratch).matrix
    rot_inv = pol_rotation(-alpha, 0, scratch).matrix
    sandwich = half @ rot @ j_alpha @ rot_inv @ half
    residual = float(np.max(np.abs(sandwich + j_alpha)))
    if residual > ELEMENT_TOL:
        raise RuntimeError(
            f"rotated-PSDP self-check failed: assembly differs from -J_alpha by {residual:.3e}"
        )
    return direct


def _wrapped_shift(
    shift: int,
    rail: int,
    space: ModeSpace,
    pols: Iterable[str],
    active: Optional[set[tuple[str, int]]],
    label: str,
) -> UnitaryOp:
    """Cyclic OAM shift on selected polarizations of one rail.

    Refuses to build if any active (pol, ell) mode would leave the window;
    inactive modes wrap around cyclically so the matrix stays unitary
    (amplitudes are never truncated).
    """
    _check_rail(rail, space)
    span = 2 * space.window + 1
    if abs(shift) > 2 * space.window:
        raise ValueError(f"{label} shift {shift} exceeds sanity bound 2L = {2 * space.window}")
    sel = set(pols)
    for pol in sel:
        for ell in range(-space.window, space.window + 1):
            if active is not None and (pol, ell) not in active:
                continue
            if abs(ell + shift) > space.window:
                raise WindowOverflowError(
                    f"{label} shift {shift:+d} maps active mode (pol={pol}, ell={ell}) "
                    f"outside window [-{space.window}, {space.window}]"
                )

    def fn(m: ModeIndex):
        if m.rail != rail or m.pol not in sel:
            return [(m, 1.0)]
        ell = (m.ell + shift + space.window) % span - space.window
        return [(ModeIndex(m.rail, m.pol, ell), 1.0)]

    return _build(space, fn)


def spp(
    q: int,
    rail: int,
    space: ModeSpace,
    active: Optional[set[tuple[str, int]]] = None,
) -> UnitaryOp:
    """Spiral phase plate: adds q units of OAM, |pol, ell> -> |pol, ell + q>.

    `active` lists the (pol, ell) modes the surrounding circuit is declared
    on; without it every window mode counts as active, so any q != 0 is a
    window overflow.
    """
    return _wrapped_shift(q, rail, space, POLS, active, "spiral phase plate")


def slm_selective(
    pol: str,
    shift: int,
    rail: int,
    space: ModeSpace,
    active: Optional[set[tuple[str, int]]] = None,
) -> UnitaryOp:
    """Polarization-selective SLM hologram: OAM shift on one polarization only."""
    if pol not in POLS:
        raise ValueError(f"unknown polarization {pol!r}")
    return _wrapped_shift(shift, rail, space, (pol,), active, "selective SLM")


def bs(rail_a: int, rail_b: int, space: ModeSpace) -> UnitaryOp:
    """Balanced beamsplitter on a rail pair: sum and difference output ports."""
    _check_rail(rail_a, space)
    _check_rail(rail_b, space)
    if rail_a == rail_b:
        raise ValueError("beamsplitter needs two distinct rails")
    s = 1.0 / math.sqrt(2.0)

    def fn(m: ModeIndex):
        if m.rail == rail_a:
            return [(ModeIndex(rail_a, m.pol, m.ell), s), (ModeIndex(rail_b, m.pol, m.ell), s)]
        if m.rail == rail_b:
            return [(ModeIndex(rail_a, m.pol, m.ell), s), (ModeIndex(rail_b, m.pol, m.ell), -s)]
        return [(m, 1.0)]

    return _build(space, fn)


def pbs(rail_a: int, rail_b: int, space: ModeSpace) -> UnitaryOp:
    """Polarizing beamsplitter: H transmits (rail kept), V swaps the rail pair."""
    _check_rail(rail_a, space)
    _check_rail(rail_b, space)
    if rail_a == rail_b:
        raise ValueError("polarizing beamsplitter needs two distinct rails")

    def fn(m: ModeIndex):
        if m.pol == "V" and m.rail == rail_a:
            return [(ModeIndex(rail_b, "V", m.ell), 1.0)]
        if m.pol == "V" and m.rail == rail_b:
            return [(ModeIndex(rail_a, "V", m.ell), 1.0)]
        return [(m, 1.0)]

    return _build(space, fn)


def mirror(rail: int, space: ModeSpace) -> UnitaryOp:
    """Idealized fold mirror: identity (flips and phases absorbed upstream)."""
    _check_rail(rail, space)
    return UnitaryOp.identity(space.dim)


def oam_hadamard(ell_plus: int, ell_minus: int, rail: int, space: ModeSpace) -> UnitaryOp:
    """Hadamard on the OAM pair {|ell+>, |ell->} for both polarizations.

    |ell+> -> (|ell+> + |ell->)/sqrt2 and |ell-> -> (|ell+> - |ell->)/sqrt2;
    all other winding numbers are untouched.
    """
    _check_rail(rail, space)
    if ell_plus == ell_minus:
        raise ValueError("Hadamard pair needs two distinct winding numbers")
    for ell in (ell_plus, ell_minus):
        if abs(ell) > space.window:
            raise ValueError(f"ell {ell} outside window [-{space.window}, {space.window}]")
    s = 1.0 / math.sqrt(2.0)

    def fn(m: ModeIndex):
        if m.rail != rail or m.ell not in (ell_plus, ell_minus):
            return [(m, 1.0)]
        sign = s if m.ell == ell_plus else -s
        return [
            (ModeIndex(m.rail, m.pol, ell_plus), s),
            (ModeIndex(m.rail, m.pol, ell_minus), sign),
        ]

    return _build(space, fn)


def phase_plate(
    phi: float, rail: int, space: ModeSpace, pol: Optional[str] = None
) -> UnitaryOp:
    """Constant phase exp(i phi) on one rail; optionally on one polarization only.

    With pol=None this is a plain path phase (glass plate); with a
    polarization tag it is a fixed retarder such as a compensator plate.
    """
    _check_rail(rail, space)
    if pol is not None and pol not in POLS:
        raise ValueError(f"unknown polarization {pol!r}")
    factor = np.exp(1j * phi)

    def fn(m: ModeIndex):
        if m.rail != rail or (pol is not None and m.pol != pol):
            return [(m, 1.0)]
        return [(m, factor)]

    return _build(space, fn)


def z_power(n: int, cycle: int, rail: int, space: ModeSpace) -> UnitaryOp:
    """Diagonal OAM phase gate from two Dove prisms at relative angle pi*n/cycle.

    Built as dove(0) after dove(pi*n/cycle); the pair is diagonal with entry
    exp(2i*pi*ell*n/cycle) on every (pol, ell).
    """
    if cycle < 2:
        raise ValueError("cycle length must be at least 2")
    first = dove(math.pi * n / cycle, rail, space)
    second = dove(0.0, rail, space)
    return UnitaryOp(second.matrix @ first.matrix)


# --- circuit stage records -------------------------------------------------
#
# ElementSpec mirrors the circuit-file syntax, so angles are stored in
# degrees exactly as written; builders convert to radians.  The factory
# classmethods accept radians to match the functions above.

_KINDS = {
    "dove": "DP",
    "hwp": "HWP",
    "psdp": "PSDP",
    "spp": "SPP",
    "slm": "SLM",
    "bs": "BS",
    "pbs": "PBS",
    "mirror": "MIRROR",
    "oamh": "OAMH",
    "zpow": "ZPOW",
    "phase": "PHASE",
}


@dataclass(frozen=True)
class ElementSpec:
    """One placed element: kind tag plus the parameters its builder needs."""

    kind: str
    rail: int = 0
    rail_b: int = -1
    angle_deg: float = 0.0      # dove/psdp alpha, hwp theta, phase phi
    q: int = 0                  # spp shift
    pol: str = ""               # slm target, phase restriction ("" = both)
    shift: int = 0              # slm shift
    ell_plus: int = 1
    ell_minus: int = -1
    n: int = 0                  # zpow numerator
    cycle: int = 2              # zpow denominator

    @classmethod
    def dove(cls, alpha: float, rail: int = 0) -> "ElementSpec":
        return cls("dove", rail=rail, angle_deg=math.degrees(alpha))

    @classmethod
    def hwp(cls, theta: float, rail: int = 0) -> "ElementSpec":
        return cls("hwp", rail=rail, angle_deg=math.degrees(theta))

    @classmethod
    def psdp(cls, alpha: float = 0.0, rail: int = 0) -> "ElementSpec":
        return cls("psdp", rail=rail, angle_deg=math.degrees(alpha))

    @classmethod
    def spp(cls, q: int, rail: int = 0) -> "ElementSpec":
        return cls("spp", rail=rail, q=q)

    @classmethod
    def slm(cls, pol: str, shift: int, rail: int = 0) -> "ElementSpec":
        return cls("slm", rail=rail, pol=pol, shift=shift)

    @classmethod
    def bs(cls, rail_a: int, rail_b: int) -> "ElementSpec":
        return cls("bs", rail=rail_a, rail_b=rail_b)

    @classmethod
    def pbs(cls, rail_a: int, rail_b: int) -> "ElementSpec":
        return cls("pbs", rail=rail_a, rail_b=rail_b)

    @classmethod
    def mirror(cls, rail: int = 0) -> "ElementSpec":
        return cls("mirror", rail=rail)

    @classmethod
    def oam_hadamard(cls, ell_plus: int, ell_minus: int, rail: int = 0) -> "ElementSpec":
        return cls("oamh", rail=rail, ell_plus=ell_plus, ell_minus=ell_minus)

    @classmethod
    def z_power(cls, n: int, cycle: int, rail: int = 0) -> "ElementSpec":
        return cls("zpow", rail=rail, n=n, cycle=cycle)

    @classmethod
    def phase(cls, phi: float, rail: int = 0, pol: str = "") -> "ElementSpec":
        return cls("phase", rail=rail, angle_deg=math.degrees(phi), pol=pol)

    def build(
        self, space: ModeSpace, active: Optional[set[tuple[str, int]]] = None
    ) -> UnitaryOp:
        angle = math.radians(self.angle_deg)
        if self.kind == "dove":
            return dove(angle, self.rail, space)
        if self.kind == "hwp":
            return hwp(angle, self.rail, space)
        if self.kind == "psdp":
            return psdp_rotated(angle, self.rail, space)
        if self.kind == "spp":
            return spp(self.q, self.rail, space, active)
        if self.kind == "slm":
            return slm_selective(self.pol, self.shift, self.rail, space, active)
        if self.kind == "bs":
            return bs(self.rail, self.rail_b, space)
        if self.kind == "pbs":
            return pbs(self.rail, self.rail_b, space)
        if self.kind == "mirror":
            return mirror(self.rail, space)
        if self.kind == "oamh":
            return oam_hadamard(self.ell_plus, self.ell_minus, self.rail, space)
        if self.kind == "zpow":
            return z_power(self.n, self.cycle, self.rail, space)
        if self.kind == "phase":
            return phase_plate(angle, self.rail, space, self.pol or None)
        raise ValueError(f"unknown element kind {self.kind!r}")

    @property
    def label(self) -> str:
        """Device-class label used for resource accounting."""
        return _KINDS[self.kind]

    def rails_used(self) -> tuple[int, ...]:
        if self.kind in ("bs", "pbs"):
            return (self.rail, self.rail_b)
        return (self.rail,)
