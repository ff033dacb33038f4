"""Hybrid mode space for light carrying spatial rail, polarization and OAM.

A basis mode is (rail, polarization, winding number ell) with ell confined
to a finite window [-L, L].  States are complex amplitude vectors over the
canonically ordered basis; operators are dense unitary matrices over it.
"""

from __future__ import annotations

from dataclasses import dataclass, InitVar
from typing import NamedTuple, Optional

import numpy as np

POLS = ("H", "V")

ELEMENT_TOL = 1e-12   # single-element algebra
CIRCUIT_TOL = 1e-9    # deep compositions


class ModeIndex(NamedTuple):
    """One basis mode: spatial rail, polarization tag, OAM winding number."""

    rail: int
    pol: str
    ell: int


class ModeSpace(NamedTuple):
    """Mode-space dimensions: `rails` spatial ports, OAM window [-window, window]."""

    rails: int
    window: int

    @property
    def dim(self) -> int:
        return self.rails * 2 * (2 * self.window + 1)

    def modes(self) -> list[ModeIndex]:
        return basis_enumerate(self.rails, self.window)

    def index(self, rail: int, pol: str, ell: int) -> int:
        """Position of a mode in the canonical basis order."""
        if not 0 <= rail < self.rails:
            raise ValueError(f"rail {rail} outside space with {self.rails} rails")
        if abs(ell) > self.window:
            raise ValueError(f"ell {ell} outside window [-{self.window}, {self.window}]")
        span = 2 * self.window + 1
        return rail * 2 * span + POLS.index(pol) * span + (ell + self.window)


def basis_enumerate(rails: int, window: int) -> list[ModeIndex]:
    """Canonical basis order: rail ascending, then H before V, then ell from -L to L."""
    if rails < 1 or window < 0:
        raise ValueError("need rails >= 1 and window >= 0")
    return [
        ModeIndex(r, p, l)
        for r in range(rails)
        for p in POLS
        for l in range(-window, window + 1)
    ]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over the canonical basis of a ModeSpace.

    Normalized to unit norm within 1e-9 unless constructed with
    normalized=False (for unnormalized intermediates).
    """

    space: ModeSpace
    amps: np.ndarray
    normalized: InitVar[bool] = True

    def __post_init__(self, normalized: bool) -> None:
        amps = _freeze(np.asarray(self.amps).reshape(-1))
        if amps.shape[0] != self.space.dim:
            raise ValueError(f"amplitude count {amps.shape[0]} != basis size {self.space.dim}")
        object.__setattr__(self, "amps", amps)
        if normalized and abs(self.norm() - 1.0) > 1e-9:
            raise ValueError(f"state norm {self.norm():.12g} is not 1 within 1e-9")

    @classmethod
    def basis_state(cls, space: ModeSpace, rail: int, pol: str, ell: int) -> "StateVector":
        amps = np.zeros(space.dim, dtype=complex)
        amps[space.index(rail, pol, ell)] = 1.0
        return cls(space, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def amplitude(self, rail: int, pol: str, ell: int) -> complex:
        return complex(self.amps[self.space.index(rail, pol, ell)])


@dataclass(frozen=True)
class UnitaryOp:
    """Dense unitary matrix over the canonical basis; verified at construction."""

    matrix: np.ndarray
    check_tol: InitVar[float] = ELEMENT_TOL

    def __post_init__(self, check_tol: float) -> None:
        m = _freeze(np.asarray(self.matrix))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix shape {m.shape} is not square")
        object.__setattr__(self, "matrix", m)
        if not check_unitary(m, check_tol):
            raise ValueError(f"matrix is not unitary within {check_tol:g}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "UnitaryOp":
        return cls(np.eye(dim, dtype=complex))

    def dagger(self) -> "UnitaryOp":
        return UnitaryOp(self.matrix.conj().T)


def check_unitary(u: UnitaryOp | np.ndarray, tol: float) -> bool:
    """True iff max entry of |U†U - I| is at most tol."""
    m = u.matrix if isinstance(u, UnitaryOp) else np.asarray(u)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix shape {m.shape} is not square")
    gram = m.conj().T @ m
    return float(np.max(np.abs(gram - np.eye(m.shape[0])))) <= tol


def apply(u: UnitaryOp, psi: StateVector) -> StateVector:
    """Apply an operator to a state: matrix-vector product over the shared basis."""
    if u.dim != psi.space.dim:
        raise ValueError(f"operator dim {u.dim} != state dim {psi.space.dim}")
    return StateVector(psi.space, u.matrix @ psi.amps, normalized=False)


def compose(second: UnitaryOp, first: UnitaryOp) -> UnitaryOp:
    """Sequential product second·first, with `first` applied first."""
    if second.dim != first.dim:
        raise ValueError(f"operator dims differ: {second.dim} vs {first.dim}")
    return UnitaryOp(second.matrix @ first.matrix, check_tol=CIRCUIT_TOL)


def equal_up_to_global_phase(a: UnitaryOp, b: UnitaryOp, tol: float = CIRCUIT_TOL) -> bool:
    """True iff A = c·B entrywise within tol for some unit-modulus scalar c.

    The phase c is read off the first basis entry (row-major) where |B| > tol,
    which makes the comparison deterministic.
    """
    if a.dim != b.dim:
        raise ValueError(f"operator dims differ: {a.dim} vs {b.dim}")
    ma, mb = a.matrix, b.matrix
    sig = np.argwhere(np.abs(mb) > tol)
    if sig.size == 0:
        return bool(np.max(np.abs(ma)) <= tol)
    i, j = sig[0]
    c = ma[i, j] / mb[i, j]
    if abs(c) < tol:
        return False
    c /= abs(c)
    return float(np.max(np.abs(ma - c * mb))) <= tol


def as_phased_permutation(
    u: UnitaryOp, tol: float = CIRCUIT_TOL
) -> Optional[dict[int, tuple[int, complex]]]:
    """Extract the truth table of a permutation-with-phases unitary.

    Returns {input basis index: (output basis index, unit phase)} iff every
    column has exactly one entry of modulus above 1 - tol; None otherwise.
    """
    m = u.matrix
    mapping: dict[int, tuple[int, complex]] = {}
    mags = np.abs(m)
    for col in range(u.dim):
        hits = np.flatnonzero(mags[:, col] > 1.0 - tol)
        if hits.size != 1:
            return None
        row = int(hits[0])
        mapping[col] = (row, complex(m[row, col] / mags[row, col]))
    return mapping
