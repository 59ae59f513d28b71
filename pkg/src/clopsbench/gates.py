"""Dense matrices for the gate kinds the suite understands.

Two-qubit matrices use the ordering ``index = 2*bit(qubits[0]) + bit(qubits[1])``,
so ``np.kron(A, B)`` puts ``A`` on the first listed qubit.
"""

from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex)

CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)

XX = np.kron(X, X)
YY = np.kron(Y, Y)
ZZ = np.kron(Z, Z)

PAULIS = (I2, X, Y, Z)


def rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex
    )


def euler_zsx(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """``RZ(alpha) @ SX @ RZ(beta) @ SX @ RZ(gamma)``; time order is right to left."""
    return rz(alpha) @ SX @ rz(beta) @ SX @ rz(gamma)


def interaction(a: float, b: float, c: float) -> np.ndarray:
    """``exp(i(a XX + b YY + c ZZ))``.

    The three Pauli products commute and are diagonal in the magic basis, so
    the exponential is evaluated exactly there.
    """
    phases = np.exp(1j * (a * _MAGIC_XX + b * _MAGIC_YY + c * _MAGIC_ZZ))
    return MAGIC @ np.diag(phases) @ MAGIC.conj().T


MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / np.sqrt(2)

_MAGIC_XX = np.real(np.diag(MAGIC.conj().T @ XX @ MAGIC))
_MAGIC_YY = np.real(np.diag(MAGIC.conj().T @ YY @ MAGIC))
_MAGIC_ZZ = np.real(np.diag(MAGIC.conj().T @ ZZ @ MAGIC))


def magic_diagonals() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenvalues of XX, YY, ZZ in the magic basis, as real +-1 vectors."""
    return _MAGIC_XX.copy(), _MAGIC_YY.copy(), _MAGIC_ZZ.copy()
