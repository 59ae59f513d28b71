"""Two-qubit KAK decomposition and ZSX Euler synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gates

_MAGIC = gates.MAGIC
_MAGIC_DAG = gates.MAGIC.conj().T
_HXX, _HYY, _HZZ = gates.magic_diagonals()


class DecompositionError(ValueError):
    """Input is not a unitary of the expected size."""


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max elementwise |a - e^{i phi} b| with phi chosen to align the two."""
    overlap = np.vdot(b.reshape(-1), a.reshape(-1))
    phase = overlap / abs(overlap) if abs(overlap) > 1e-300 else 1.0
    return float(np.abs(a - phase * b).max())


def check_unitary(u: np.ndarray, dim: int, atol: float = 1e-10) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (dim, dim):
        raise DecompositionError(f"expected a {dim}x{dim} matrix, got {u.shape}")
    if not np.all(np.isfinite(u)):
        raise DecompositionError("matrix has non-finite entries")
    err = np.abs(u.conj().T @ u - np.eye(dim)).max()
    if err > atol:
        raise DecompositionError(f"matrix is not unitary (max |U^dag U - I| = {err:.2e})")
    return u


# ----------------------------------------------------------- one qubit ----

def zsx_angles(u: np.ndarray) -> tuple[float, float, float]:
    """Angles with ``u ~ RZ(a) SX RZ(b) SX RZ(c)`` up to global phase."""
    u = np.asarray(u, dtype=complex)
    su = u / np.sqrt(np.linalg.det(u))
    theta = 2.0 * math.atan2(abs(su[1, 0]), abs(su[0, 0]))
    plus = 2.0 * np.angle(su[1, 1])
    minus = 2.0 * np.angle(su[1, 0])
    phi = 0.5 * (plus + minus)
    lam = 0.5 * (plus - minus)
    return _wrap(phi + math.pi), _wrap(theta + math.pi), _wrap(lam)


def _wrap(angle: float) -> float:
    """Representative in (-pi, pi]."""
    out = math.remainder(float(angle), 2.0 * math.pi)
    return math.pi if out == -math.pi else out


def diagonal_angle(u: np.ndarray) -> float:
    """Angle ``t`` with ``u ~ RZ(t)``; ``u`` must be diagonal."""
    return _wrap(float(np.angle(u[1, 1]) - np.angle(u[0, 0])))


# ---------------------------------------------------------- two qubits ----

def kron_factor(k: np.ndarray) -> tuple[complex, np.ndarray, np.ndarray]:
    """Split ``k = phase * kron(a, b)`` with ``a``, ``b`` in SU(2)."""
    r = np.asarray(k).reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(r)
    a = u[:, 0].reshape(2, 2) * np.sqrt(s[0])
    b = vh[0, :].reshape(2, 2) * np.sqrt(s[0])
    da, db = np.sqrt(np.linalg.det(a)), np.sqrt(np.linalg.det(b))
    if min(abs(da), abs(db)) < 1e-12:
        # Far from a product: the best rank-one term is singular.
        return 1.0 + 0j, a, b
    a, b = a / da, b / db
    return complex(da * db), a, b


def is_local(u: np.ndarray, atol: float = 1e-9) -> bool:
    phase, a, b = kron_factor(u)
    return float(np.abs(phase * np.kron(a, b) - u).max()) < atol


@dataclass(frozen=True)
class KAK:
    """``U = phase * kron(a1, b1) @ interaction(x, y, z) @ kron(a0, b0)``."""

    phase: complex
    a0: np.ndarray
    b0: np.ndarray
    x: float
    y: float
    z: float
    a1: np.ndarray
    b1: np.ndarray

    def matrix(self) -> np.ndarray:
        return (
            self.phase
            * np.kron(self.a1, self.b1)
            @ gates.interaction(self.x, self.y, self.z)
            @ np.kron(self.a0, self.b0)
        )


def _real_orthogonal_eigenbasis(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real orthogonal ``p`` diagonalising the symmetric unitary ``m``.

    Real and imaginary parts of ``m`` are commuting real symmetric matrices;
    a generic real combination of them shares their eigenvectors. The mixing
    angles come from a fixed list so the result is deterministic.
    """
    re, im = m.real, m.imag
    for t in (0.5772156649, 1.3247179572, 2.2360679775, 0.3183098862, 2.7182818285, 1.0):
        _, p = np.linalg.eigh(math.cos(t) * re + math.sin(t) * im)
        d = p.T @ m @ p
        if np.abs(d - np.diag(np.diag(d))).max() < 1e-9:
            if np.linalg.det(p) < 0:
                p[:, 0] = -p[:, 0]
            return p, np.diag(d)
    raise DecompositionError("could not diagonalise the magic-basis Gram matrix")


def kak_decompose(u: np.ndarray) -> KAK:
    u = check_unitary(u, 4)
    det = np.linalg.det(u)
    su = u / det**0.25
    up = _MAGIC_DAG @ su @ _MAGIC
    p, d = _real_orthogonal_eigenbasis(up.T @ up)
    half = np.exp(0.5j * np.angle(d))
    if np.prod(half).real < 0:
        half[0] = -half[0]
    k1 = up @ p @ np.diag(half.conj())
    k1 = k1.real if np.abs(k1.imag).max() < 1e-8 else k1
    left = _MAGIC @ k1 @ _MAGIC_DAG
    right = _MAGIC @ p.T @ _MAGIC_DAG
    theta = np.angle(half)
    x = float(theta @ _HXX) / 4.0
    y = float(theta @ _HYY) / 4.0
    z = float(theta @ _HZZ) / 4.0
    common = float(theta.sum()) / 4.0
    pl, a1, b1 = kron_factor(left)
    pr, a0, b0 = kron_factor(right)
    phase = det**0.25 * pl * pr * np.exp(1j * common)
    return KAK(complex(phase), a0, b0, x, y, z, a1, b1)


# ------------------------------------------------------ gate sequences ----
# A two-qubit sequence is a list of ("CX", (control, target)) or
# ("U", (qubit,), 2x2 matrix, kind) entries on local qubits 0 and 1, kind
# being "diag" for rotations known to be diagonal and "general" otherwise.

def _ry(t: float) -> np.ndarray:
    return np.array(
        [[math.cos(t / 2), -math.sin(t / 2)], [math.sin(t / 2), math.cos(t / 2)]],
        dtype=complex,
    )


def interaction_sequence(x: float, y: float, z: float) -> list[tuple]:
    """Three-CX realisation of ``interaction(x, y, z)`` up to global phase."""
    h = math.pi / 2
    return [
        ("U", (1,), gates.rz(-h), "diag"),
        ("CX", (1, 0)),
        ("U", (0,), gates.rz(h - 2 * z), "diag"),
        ("U", (1,), _ry(2 * x - h), "general"),
        ("CX", (0, 1)),
        ("U", (1,), _ry(h - 2 * y), "general"),
        ("CX", (1, 0)),
        ("U", (0,), gates.rz(h), "diag"),
    ]


def decompose_two_qubit(u: np.ndarray) -> list[tuple]:
    """Exactly three CX plus single-qubit unitaries, equal to ``u`` up to phase."""
    k = kak_decompose(u)
    return (
        [("U", (0,), k.a0, "general"), ("U", (1,), k.b0, "general")]
        + interaction_sequence(k.x, k.y, k.z)
        + [("U", (0,), k.a1, "general"), ("U", (1,), k.b1, "general")]
    )


def sequence_matrix(seq: list[tuple]) -> np.ndarray:
    """Compose a two-qubit sequence by dense 4x4 multiplication."""
    out = np.eye(4, dtype=complex)
    cx10 = gates.SWAP @ gates.CX @ gates.SWAP
    for item in seq:
        if item[0] == "CX":
            m = gates.CX if item[1] == (0, 1) else cx10
        else:
            m = np.kron(item[2], gates.I2) if item[1] == (0,) else np.kron(gates.I2, item[2])
        out = m @ out
    return out
