"""Circuits: ordered element stages, compilation, and the named constructions.

A Circuit is an immutable stage list over a fixed mode space.  Compilation
multiplies the stage unitaries in order (first stage applied first) and
checks the product against the circuit-level unitarity tolerance.

Prebuilt circuits:
  - mz_sorter / mz_tree: Mach-Zehnder interferometric even/odd sorting and
    its binary-tree extension to N = 2, 4, 8, 16 modes.
  - pos / pos_inverse / pos_tree: single-beam sorting with the PSDP, where
    parity ends up in the polarization and a PBS splits the rails.
  - cnot, swap: polarization-control / OAM-target gates on the qubit
    subspace {H, V} x {|+1>, |-1>}.
  - pauli_x_power: cyclic shift ell -> ell (+) k on the OAM subspace
    {-2, -1, 0, 1} carried in H polarization.

Tree branches that sort a residue class r != 0 need a fixed compensation
phase exp(-2i*alpha*r) alongside the prism pair: the prisms supply only
phases proportional to ell, and without the offset the two interferometer
ports split 50/50 on those branches.  The compensation is a phase plate on
the prism arm (MZ) or a V-only retarder between the PSDPs (POS).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .elements import ElementSpec
from .hilbert import CIRCUIT_TOL, POLS, ModeSpace, UnitaryOp

DEFAULT_WINDOW = 8

TREE_SIZES = (2, 4, 8, 16)

X_SUBSPACE = (-2, -1, 0, 1)


@dataclass(frozen=True)
class Circuit:
    """Ordered element stages over a (rails, window) mode space.

    `active` optionally declares the (pol, ell) modes the circuit is
    specified on; OAM-shifting stages check window overflow against the
    declared modes instead of the whole window.
    """

    rails: int
    window: int
    stages: tuple[ElementSpec, ...] = ()
    active: Optional[frozenset[tuple[str, int]]] = None

    # modes carrying less amplitude than this are outside the live support
    _SUPPORT_EPS = 1e-12

    def __post_init__(self) -> None:
        for stage in self.stages:
            for rail in stage.rails_used():
                if not 0 <= rail < self.rails:
                    raise ValueError(
                        f"stage {stage.kind!r} uses rail {rail} outside {self.rails} rails"
                    )
        if self.active is not None:
            for pol, ell in self.active:
                if pol not in POLS or abs(ell) > self.window:
                    raise ValueError(f"active mode ({pol}, {ell}) outside the space")

    @property
    def space(self) -> ModeSpace:
        return ModeSpace(self.rails, self.window)


def compile_circuit(circuit: Circuit) -> UnitaryOp:
    """Ordered product of the stage unitaries, first stage applied first.

    When the circuit declares an active subspace, the (pol, ell) support
    reachable from it is propagated through the partial product, and each
    OAM-shifting stage checks window overflow against the modes that can
    actually carry amplitude when the stage is reached.
    """
    space = circuit.space
    total = np.eye(space.dim, dtype=complex)
    cols: Optional[list[int]] = None
    if circuit.active is not None:
        declared = set(circuit.active)
        cols = [i for i, m in enumerate(space.modes()) if (m.pol, m.ell) in declared]
    for stage in circuit.stages:
        if cols is None:
            active_now = None
        elif not cols:
            active_now = set()
        else:
            reach = np.max(np.abs(total[:, cols]), axis=1) > Circuit._SUPPORT_EPS
            active_now = {
                (m.pol, m.ell) for i, m in enumerate(space.modes()) if reach[i]
            }
        total = stage.build(space, active_now).matrix @ total
    return UnitaryOp(total, check_tol=CIRCUIT_TOL)


@dataclass(frozen=True)
class SortReport:
    """Routing marginals per input winding number.

    marginals[ell] maps (rail, pol) to the output probability in that cell;
    each row sums to 1 for a unitary circuit.
    """

    input_rail: int
    input_pol: str
    marginals: dict[int, dict[tuple[int, str], float]]

    def dominant(self, ell: int) -> tuple[int, str, float]:
        """Most probable (rail, pol) cell for one input, with its probability."""
        cell, prob = max(self.marginals[ell].items(), key=lambda kv: (kv[1], kv[0]))
        return cell[0], cell[1], prob

    def rows(self) -> list[tuple[int, int, str, float]]:
        """(ell, rail, pol, probability) rows sorted by input ell."""
        return [(ell, *self.dominant(ell)) for ell in sorted(self.marginals)]


def run_sort(
    circuit: Circuit,
    inputs: Iterable[int],
    input_rail: int = 0,
    input_pol: str = "H",
) -> SortReport:
    """Exhaustive routing oracle: apply the compiled circuit to basis inputs.

    For each requested ell, sends |input_rail, input_pol, ell> through the
    circuit and tabulates the (rail, pol) output marginals.
    """
    space = circuit.space
    u = compile_circuit(circuit).matrix
    span = 2 * space.window + 1
    marginals: dict[int, dict[tuple[int, str], float]] = {}
    for ell in inputs:
        col = u[:, space.index(input_rail, input_pol, ell)]
        probs = np.abs(col.reshape(space.rails, 2, span)) ** 2
        per_cell = probs.sum(axis=2)
        marginals[ell] = {
            (rail, POLS[p]): float(per_cell[rail, p])
            for rail in range(space.rails)
            for p in range(2)
        }
    return SortReport(input_rail, input_pol, marginals)


def resource_count(circuit: Circuit) -> dict[str, int]:
    """Stage tally by device-class label (DP, HWP, PSDP, BS, PBS, ...)."""
    counts: dict[str, int] = {}
    for stage in circuit.stages:
        counts[stage.label] = counts.get(stage.label, 0) + 1
    return counts


# --- interferometric sorters -------------------------------------------------


def _mz_stages(
    alpha: float, rail_a: int, rail_b: int, arm_phase: float
) -> list[ElementSpec]:
    """One Mach-Zehnder unit: BS, prism pair (plus arm phase) on rail_b, BS."""
    stages = [
        ElementSpec.bs(rail_a, rail_b),
        ElementSpec.dove(alpha, rail_b),
        ElementSpec.dove(0.0, rail_b),
    ]
    if arm_phase != 0.0:
        stages.append(ElementSpec.phase(arm_phase, rail_b))
    stages += [
        ElementSpec.mirror(rail_a),
        ElementSpec.mirror(rail_b),
        ElementSpec.bs(rail_a, rail_b),
    ]
    return stages


def mz_sorter(
    alpha: float,
    window: int = DEFAULT_WINDOW,
    rails: int = 2,
    rail_a: int = 0,
    rail_b: int = 1,
    arm_phase: float = 0.0,
) -> Circuit:
    """Two-rail Mach-Zehnder sorter with a rotated prism pair in one arm.

    The prism arm multiplies |ell> by exp(2i*ell*alpha); interference at the
    second beamsplitter routes exp-phase +1 modes to rail_a and -1 modes to
    rail_b.  At alpha = pi/2 that is the even/odd split.
    """
    return Circuit(rails, window, tuple(_mz_stages(alpha, rail_a, rail_b, arm_phase)))


def _tree_plan(n: int) -> None:
    if n not in TREE_SIZES:
        raise ValueError(f"tree size {n} unsupported; choose one of {TREE_SIZES}")


def mz_tree(n: int, window: int = DEFAULT_WINDOW) -> Circuit:
    """Binary tree of Mach-Zehnder sorters separating |0> .. |n-1> onto n rails.

    Level with modulus m uses alpha = pi/(2m); a branch holding the residue
    class r (mod m) carries the compensation phase exp(-2i*alpha*r) in its
    prism arm.  Fresh output rails are allocated left to right.
    """
    _tree_plan(n)
    stages: list[ElementSpec] = []
    branches: list[tuple[int, int, int]] = [(0, 0, 1)]  # (rail, residue, modulus)
    next_rail = 1
    while branches[0][2] < n:
        grown: list[tuple[int, int, int]] = []
        for rail, residue, modulus in branches:
            partner = next_rail
            next_rail += 1
            alpha = math.pi / (2 * modulus)
            stages += _mz_stages(alpha, rail, partner, -2.0 * alpha * residue)
            grown.append((rail, residue, 2 * modulus))
            grown.append((partner, residue + modulus, 2 * modulus))
        branches = grown
    return Circuit(n, window, tuple(stages))


# --- PSDP-based sorters -------------------------------------------------------


def _pos_stages(
    alpha: float, rail: int, comp_phase: float, inverse: bool
) -> list[ElementSpec]:
    """POS core on one rail: HWP(pi/8), PSDP pair, HWP(pi/8).

    The forward order is PSDP(alpha) then PSDP(0); the inverse core swaps
    the pair, which is the exact matrix inverse of the forward core.  A
    nonzero comp_phase inserts a V-only retarder between the prisms.
    """
    pair = [ElementSpec.psdp(alpha, rail), ElementSpec.psdp(0.0, rail)]
    if inverse:
        pair.reverse()
    stages = [ElementSpec.hwp(math.pi / 8, rail), pair[0]]
    if comp_phase != 0.0:
        stages.append(ElementSpec.phase(comp_phase, rail, pol="V"))
    stages += [pair[1], ElementSpec.hwp(math.pi / 8, rail)]
    return stages


def pos(
    alpha: float,
    window: int = DEFAULT_WINDOW,
    with_pbs: bool = True,
    rails: int = 2,
    rail: int = 0,
    out_rail: int = 1,
    comp_phase: float = 0.0,
) -> Circuit:
    """PSDP OAM sorter: parity moves into polarization, then a PBS splits rails.

    For an all-H input at alpha = pi/2, even winding numbers leave in H on
    `rail` and odd ones in V on `out_rail`.  With with_pbs=False only the
    single-rail core is built (used when the sorter is re-merged mid-beam).
    """
    stages = _pos_stages(alpha, rail, comp_phase, inverse=False)
    if with_pbs:
        stages.append(ElementSpec.pbs(rail, out_rail))
        return Circuit(rails, window, tuple(stages))
    return Circuit(rail + 1, window, tuple(stages))


def pos_inverse(
    alpha: float,
    window: int = DEFAULT_WINDOW,
    rail: int = 0,
    comp_phase: float = 0.0,
) -> Circuit:
    """Re-merging POS core with the PSDP pair interchanged (exact inverse)."""
    stages = _pos_stages(alpha, rail, comp_phase, inverse=True)
    return Circuit(rail + 1, window, tuple(stages))


def pos_tree(n: int, window: int = DEFAULT_WINDOW) -> Circuit:
    """Tree of POS sorters separating |0> .. |n-1> onto n rails.

    Same compensation-phase scheme as mz_tree, applied to the V component
    between the PSDPs.  Each branch tracks the polarization its class
    arrived in: the PBS leaves H on the incoming rail and sends V to the
    fresh rail, so child bookkeeping depends on the parent polarization.
    """
    _tree_plan(n)
    stages: list[ElementSpec] = []
    # (rail, pol carried in, residue, modulus)
    branches: list[tuple[int, str, int, int]] = [(0, "H", 0, 1)]
    next_rail = 1
    while branches[0][3] < n:
        grown: list[tuple[int, str, int, int]] = []
        for rail, pol, residue, modulus in branches:
            partner = next_rail
            next_rail += 1
            alpha = math.pi / (2 * modulus)
            stages += _pos_stages(alpha, rail, -2.0 * alpha * residue, inverse=False)
            stages.append(ElementSpec.pbs(rail, partner))
            if pol == "H":
                grown.append((rail, "H", residue, 2 * modulus))
                grown.append((partner, "V", residue + modulus, 2 * modulus))
            else:
                grown.append((partner, "V", residue, 2 * modulus))
                grown.append((rail, "H", residue + modulus, 2 * modulus))
        branches = grown
    return Circuit(n, window, tuple(stages))


# --- gates --------------------------------------------------------------------


def cnot(window: int = DEFAULT_WINDOW) -> Circuit:
    """CNOT with polarization control and OAM target: a single PSDP.

    On {H, V} x {|+ell>, |-ell>} with H = control 0 and |+ell> = target 0,
    the PSDP maps |i, j> to |i, j xor i> with unit phases.
    """
    return Circuit(1, window, (ElementSpec.psdp(0.0, 0),))


def swap(window: int = DEFAULT_WINDOW) -> Circuit:
    """SWAP between the polarization qubit and the OAM qubit on {|+1>, |-1>}.

    Three PSDP-based CNOTs: the middle one is conjugated by Hadamards on
    both qubits (HWP at pi/8 for polarization, mode converter for OAM),
    which reverses its control and target.
    """
    had = (ElementSpec.hwp(math.pi / 8, 0), ElementSpec.oam_hadamard(1, -1, 0))
    stages = (
        ElementSpec.psdp(0.0, 0),
        *had,
        ElementSpec.psdp(0.0, 0),
        *had,
        ElementSpec.psdp(0.0, 0),
    )
    return Circuit(1, window, stages)


def pauli_x_power(k: int, window: int = DEFAULT_WINDOW) -> Circuit:
    """Cyclic OAM shift ell -> ell (+) k on {-2, -1, 0, 1}, all-H input.

    k = 1: add one OAM unit, sort parity into polarization with the POS
    core, flip the even modes with a PSDP (conjugated by HWP(pi/4) swaps so
    the prism sees them in V), and re-merge with the inverse core.
    k = 2: sort, shift the even (H-carried) modes by two with a selective
    hologram, reflect every mode with a prism, and re-merge.
    k = 3: the k = 1 sequence reversed, with the phase plate shifting down.

    Output phases are per-mode unit factors from the wave-plate convention;
    the underlying permutation is exact.
    """
    if k not in (1, 2, 3):
        raise ValueError("supported powers are 1, 2 and 3")
    if window < 2:
        raise ValueError("window of at least 2 needed for the shifted subspace")
    sort = _pos_stages(math.pi / 2, 0, 0.0, inverse=False)
    merge = _pos_stages(math.pi / 2, 0, 0.0, inverse=True)
    flip_evens = [
        ElementSpec.hwp(math.pi / 4, 0),
        ElementSpec.psdp(0.0, 0),
        ElementSpec.hwp(math.pi / 4, 0),
    ]
    if k == 1:
        stages = [ElementSpec.spp(+1, 0), *sort, *flip_evens, *merge]
    elif k == 2:
        stages = [*sort, ElementSpec.slm("H", +2, 0), ElementSpec.dove(0.0, 0), *merge]
    else:
        stages = [*sort, *flip_evens, *merge, ElementSpec.spp(-1, 0)]
    active = frozenset(("H", ell) for ell in X_SUBSPACE)
    return Circuit(1, window, tuple(stages), active=active)
