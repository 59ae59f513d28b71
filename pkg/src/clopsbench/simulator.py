"""Dense statevector simulation, shot sampling and heavy-output analysis.

Amplitude index convention: qubit 0 is the most significant bit, so the
binary expansion of an index, written left to right, lists qubits 0..N-1.
The same string is the Counts key when every qubit is measured into its own
clbit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import gates
from .circuit import Circuit, GateOp, ParameterError
from .rng import SplitMix64

DEFAULT_MAX_QUBITS = 14


class CapacityError(RuntimeError):
    """Circuit does not fit the simulator or device."""


@dataclass(frozen=True)
class Statevector:
    amplitudes: np.ndarray

    @property
    def num_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(self.probabilities().sum()))


@dataclass
class Counts:
    """Outcome histogram; keys are clbit strings with clbit 0 leftmost."""

    counts: dict[str, int]
    shots: int = field(default=-1)

    def __post_init__(self) -> None:
        total = sum(self.counts.values())
        if self.shots < 0:
            self.shots = total
        if total != self.shots:
            raise ParameterError(f"counts sum to {total}, expected {self.shots}")
        lengths = {len(k) for k in self.counts}
        if len(lengths) > 1 or any(set(k) - {"0", "1"} for k in self.counts):
            raise ParameterError("count keys must be equal-length binary strings")
        if any(v < 0 for v in self.counts.values()):
            raise ParameterError("negative count")

    def to_json(self) -> dict:
        return {"shots": self.shots, "counts": {k: self.counts[k] for k in sorted(self.counts)}}

    @classmethod
    def from_json(cls, d: Mapping) -> "Counts":
        return cls({str(k): int(v) for k, v in d["counts"].items()}, int(d["shots"]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Counts):
            return NotImplemented
        nonzero = lambda c: {k: v for k, v in c.counts.items() if v}
        return self.shots == other.shots and nonzero(self) == nonzero(other)


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing error after every 1- and 2-qubit gate.

    With probability ``p`` the gate is followed by a uniformly random Pauli
    (identity included) on its qubits, which is the depolarizing channel
    ``rho -> (1-p) rho + p I/d``.
    """

    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.p1 <= 1.0 and 0.0 <= self.p2 <= 1.0):
            raise ParameterError("depolarizing probabilities must lie in [0, 1]")

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0


# ----------------------------------------------------------- kernels ----

def _apply_1q(state: np.ndarray, u: np.ndarray, q: int, offset: int = 0) -> np.ndarray:
    axis = q + offset
    out = np.tensordot(u, state, axes=([1], [axis]))
    return np.moveaxis(out, 0, axis)


def _apply_2q(state: np.ndarray, u: np.ndarray, q0: int, q1: int, offset: int = 0) -> np.ndarray:
    a0, a1 = q0 + offset, q1 + offset
    out = np.tensordot(u.reshape(2, 2, 2, 2), state, axes=([2, 3], [a0, a1]))
    return np.moveaxis(out, (0, 1), (a0, a1))


def _apply_perm(state: np.ndarray, qubits: tuple[int, ...], offset: int = 0) -> np.ndarray:
    positions = sorted(qubits)
    axes = list(range(state.ndim))
    for pos, src in zip(positions, qubits):
        axes[pos + offset] = src + offset
    return np.transpose(state, axes)


def _apply_op(state: np.ndarray, op: GateOp, offset: int = 0) -> np.ndarray:
    name = op.name
    if name in ("BARRIER", "MEASURE"):
        return state
    if name == "PERM":
        return _apply_perm(state, op.qubits, offset)
    if name == "RESET":
        raise ParameterError("RESET is not supported by the statevector simulator")
    if len(op.qubits) == 1:
        return _apply_1q(state, op.matrix(), op.qubits[0], offset)
    return _apply_2q(state, op.matrix(), op.qubits[0], op.qubits[1], offset)


def _check_width(width: int, max_qubits: int) -> None:
    if width > max_qubits:
        raise CapacityError(f"{width} qubits exceeds the simulator cap of {max_qubits}")


def _check_terminal_measures(circuit: Circuit) -> None:
    done: set[int] = set()
    for op in circuit.ops:
        if op.name == "MEASURE":
            done.add(op.qubits[0])
        elif op.name != "BARRIER" and done.intersection(op.qubits):
            raise ParameterError(f"{op.name} on {op.qubits} follows a measurement")


def simulate(circuit: Circuit, max_qubits: int = DEFAULT_MAX_QUBITS) -> Statevector:
    """Exact final state of ``circuit`` from |0...0>; measurements are ignored."""
    _check_width(circuit.width, max_qubits)
    _check_terminal_measures(circuit)
    n = circuit.width
    state = np.zeros((2,) * n, dtype=complex)
    state[(0,) * n] = 1.0
    for op in circuit.ops:
        state = _apply_op(state, op)
    return Statevector(state.reshape(-1))


# ----------------------------------------------------------- sampling ----

def _sample_indices(probs: np.ndarray, shots: int, rng: SplitMix64) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    u = rng.random_array(shots)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, probs.size - 1)


def _measured_map(circuit: Circuit) -> list[tuple[int, int]]:
    return [(op.qubits[0], int(op.params[0])) for op in circuit.ops if op.name == "MEASURE"]


def _histogram(indices: np.ndarray, width: int, measured: list[tuple[int | None, int]], num_clbits: int) -> dict[str, int]:
    out: dict[str, int] = {}
    values, freq = np.unique(indices, return_counts=True)
    for value, count in zip(values.tolist(), freq.tolist()):
        bits = ["0"] * num_clbits
        for qubit, clbit in measured:
            if qubit is not None and (value >> (width - 1 - qubit)) & 1:
                bits[clbit] = "1"
        key = "".join(bits)
        out[key] = out.get(key, 0) + int(count)
    return out


def sample(sv: Statevector, shots: int, rng: SplitMix64) -> Counts:
    """``shots`` independent draws from the Born distribution of ``sv``."""
    if shots < 1:
        raise ParameterError("shots must be >= 1")
    n = sv.num_qubits
    idx = _sample_indices(sv.probabilities(), shots, rng)
    measured = [(q, q) for q in range(n)]
    return Counts(_histogram(idx, n, measured, n), shots)


def run_counts(
    circuit: Circuit,
    shots: int,
    rng: SplitMix64,
    noise: NoiseModel | None = None,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> Counts:
    """Sample the measured clbits of ``circuit``.

    A circuit without any MEASURE reads out every qubit into the clbit of
    the same index. Only qubits touched by a gate are simulated, so a small
    circuit placed on a large device stays cheap; idle qubits read 0.
    """
    if shots < 1:
        raise ParameterError("shots must be >= 1")
    _check_terminal_measures(circuit)
    measured = _measured_map(circuit)
    num_clbits = circuit.num_clbits
    if not measured:
        measured = [(q, q) for q in range(circuit.width)]
        num_clbits = circuit.width
    compact, remap = _compact(circuit)
    _check_width(compact.width, max_qubits)
    if noise is None or noise.is_noiseless:
        idx = _sample_indices(simulate(compact, max_qubits).probabilities(), shots, rng)
    else:
        idx = _noisy_indices(compact, shots, rng, noise)
    local = [(remap.get(q), c) for q, c in measured]
    return Counts(_histogram(idx, compact.width, local, num_clbits), shots)


def _compact(circuit: Circuit) -> tuple[Circuit, dict[int, int]]:
    gated = [op for op in circuit.ops if op.name not in ("MEASURE", "BARRIER")]
    used = sorted({q for op in gated for q in op.qubits})
    remap = {q: i for i, q in enumerate(used)}
    if len(used) == circuit.width:
        return circuit, remap
    ops = tuple(GateOp(op.name, tuple(remap[q] for q in op.qubits), op.params) for op in gated)
    return Circuit(len(used), ops), remap


def _noisy_indices(circuit: Circuit, shots: int, rng: SplitMix64, noise: NoiseModel) -> np.ndarray:
    """One Pauli trajectory per shot, all shots evolved as one batch."""
    n = circuit.width
    state = np.zeros((shots,) + (2,) * n, dtype=complex)
    state[(slice(None),) + (0,) * n] = 1.0
    paulis = np.stack(gates.PAULIS)
    for op in circuit.ops:
        state = _apply_op(state, op, offset=1)
        k = len(op.qubits)
        if op.name in ("PERM", "BARRIER", "MEASURE") or k not in (1, 2):
            continue
        p = noise.p1 if k == 1 else noise.p2
        if p == 0.0:
            continue
        hit = rng.random_array(shots) < p
        which = (rng.take(shots) % np.uint64(4**k)).astype(np.int64)
        which[~hit] = 0
        for j, q in enumerate(op.qubits):
            code = (which >> (2 * j)) & 3
            for pauli in (1, 2, 3):
                mask = code == pauli
                if mask.any():
                    state[mask] = _apply_1q(state[mask], paulis[pauli], q, offset=1)
    probs = np.abs(state.reshape(shots, -1)) ** 2
    u = rng.random_array(shots)
    cdf = np.cumsum(probs, axis=1)
    cdf /= cdf[:, -1:]
    idx = (cdf <= u[:, None]).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


# -------------------------------------------------------- heavy outputs ----

def heavy_set(probs: Iterable[float]) -> set[int]:
    """Indices whose probability is strictly above the median of all of them."""
    p = np.asarray(list(probs), dtype=float)
    median = float(np.median(p))
    return set(np.flatnonzero(p > median).tolist())


def heavy_bitstrings(probs: Iterable[float], width: int) -> set[str]:
    return {format(i, f"0{width}b") for i in heavy_set(probs)}


def heavy_output_probability(counts: Counts | Mapping[str, int], heavy: Iterable) -> float:
    """Fraction of shots that landed on a heavy outcome.

    ``heavy`` may hold bitstrings or integer indices.
    """
    c = counts.counts if isinstance(counts, Counts) else dict(counts)
    total = sum(c.values())
    if total == 0:
        raise ParameterError("counts are empty")
    width = len(next(iter(c)))
    keys = {h if isinstance(h, str) else format(int(h), f"0{width}b") for h in heavy}
    return sum(v for k, v in c.items() if k in keys) / total


def ideal_heavy_mass(probs: np.ndarray) -> float:
    p = np.asarray(probs, dtype=float)
    return float(p[p > np.median(p)].sum())


def counts_dumps(counts: Counts) -> str:
    return json.dumps(counts.to_json(), separators=(",", ":"))
