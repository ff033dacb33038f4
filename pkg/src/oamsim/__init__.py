"""oamsim: hybrid rail/polarization/OAM linear-optics simulator.

Builds the unitaries of Dove prisms, wave plates, polarization-selective
Dove prisms and beamsplitter networks on a finite mode space, compiles gate
and sorter circuits, and validates the selective-prism crystal geometry.
"""

from .hilbert import (
    CIRCUIT_TOL,
    ELEMENT_TOL,
    POLS,
    ModeIndex,
    ModeSpace,
    StateVector,
    UnitaryOp,
    apply,
    as_phased_permutation,
    basis_enumerate,
    check_unitary,
    compose,
    equal_up_to_global_phase,
)
from .elements import ElementSpec, WindowOverflowError
from .circuits import (
    Circuit,
    SortReport,
    cnot,
    compile_circuit,
    mz_sorter,
    mz_tree,
    pauli_x_power,
    pos,
    pos_inverse,
    pos_tree,
    resource_count,
    run_sort,
    swap,
)
from .geometry import (
    AssemblyReport,
    CrystalSpec,
    DegenerateGeometryError,
    MATERIALS,
    NoPropagationError,
    beta_zero_opd,
    delta_from_beta,
    delta_zero_opd,
    opd,
    path_length_p2p3,
    tir_margin,
    validate_assembly,
)

__all__ = [
    "CIRCUIT_TOL",
    "ELEMENT_TOL",
    "POLS",
    "ModeIndex",
    "ModeSpace",
    "StateVector",
    "UnitaryOp",
    "apply",
    "as_phased_permutation",
    "basis_enumerate",
    "check_unitary",
    "compose",
    "equal_up_to_global_phase",
    "ElementSpec",
    "WindowOverflowError",
    "Circuit",
    "SortReport",
    "cnot",
    "compile_circuit",
    "mz_sorter",
    "mz_tree",
    "pauli_x_power",
    "pos",
    "pos_inverse",
    "pos_tree",
    "resource_count",
    "run_sort",
    "swap",
    "AssemblyReport",
    "CrystalSpec",
    "DegenerateGeometryError",
    "MATERIALS",
    "NoPropagationError",
    "beta_zero_opd",
    "delta_from_beta",
    "delta_zero_opd",
    "opd",
    "path_length_p2p3",
    "tir_margin",
    "validate_assembly",
]

__version__ = "0.1.0"
