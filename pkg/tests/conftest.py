import numpy as np
import pytest

from oamsim.hilbert import ModeSpace, UnitaryOp


def random_unitary(dim: int, rng: np.random.Generator) -> UnitaryOp:
    """Haar-ish random unitary from the QR decomposition of a Ginibre matrix."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return UnitaryOp(q, check_tol=1e-9)


def restrict(matrix: np.ndarray, space: ModeSpace, modes) -> np.ndarray:
    """Square block of a matrix on the listed (rail, pol, ell) modes."""
    idx = [space.index(*m) for m in modes]
    return matrix[np.ix_(idx, idx)]


QUBIT_MODES = [(0, "H", 1), (0, "H", -1), (0, "V", 1), (0, "V", -1)]

# CNOT with the first (polarization) qubit as control, basis 00 01 10 11
CNOT_FWD = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
# CNOT with the second (OAM) qubit as control
CNOT_REV = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)


def three_cnot_swap() -> np.ndarray:
    """Independent SWAP oracle: forward, reversed, forward CNOT product."""
    return CNOT_FWD @ CNOT_REV @ CNOT_FWD


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20250810)
