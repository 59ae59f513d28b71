"""Circuit data model, QV templates and SU(4) construction."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import gates
from .rng import SplitMix64


class ParameterError(ValueError):
    """Invalid dimensions, lengths or values handed to a circuit operation."""


ONE_QUBIT = frozenset({"SX", "X", "RZ"})
TWO_QUBIT = frozenset({"CX", "SU4", "SWAP"})
NATIVE = frozenset({"SX", "X", "RZ", "CX", "MEASURE", "BARRIER", "RESET"})
KINDS = NATIVE | {"SU4", "PERM", "SWAP"}

SU4_PARAMS = 15
SU4_MATRIX_PARAMS = 32


@dataclass(frozen=True)
class GateOp:
    """One operation on an ordered list of qubits.

    ``SU4`` carries either 15 KAK angles or 32 reals (row-major real/imag
    pairs of an explicit matrix). ``PERM`` lists a permutation of a subset of
    qubits: afterwards the state previously held by ``qubits[j]`` sits on
    ``sorted(qubits)[j]``. ``MEASURE`` carries its classical bit index as the
    single parameter.
    """

    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        name, qs, ps = self.name, self.qubits, self.params
        if name not in KINDS:
            raise ParameterError(f"unknown gate kind {name!r}")
        if any(q < 0 for q in qs):
            raise ParameterError(f"negative qubit index in {name} {qs}")
        if name in ONE_QUBIT or name in ("MEASURE", "RESET"):
            if len(qs) != 1:
                raise ParameterError(f"{name} acts on one qubit, got {qs}")
        if name in TWO_QUBIT and (len(qs) != 2 or qs[0] == qs[1]):
            raise ParameterError(f"{name} needs two distinct qubits, got {qs}")
        if name in ("PERM", "BARRIER") and len(set(qs)) != len(qs):
            raise ParameterError(f"{name} repeats a qubit: {qs}")
        if name == "RZ" and len(ps) != 1:
            raise ParameterError("RZ takes exactly one angle")
        if name == "SU4" and len(ps) not in (SU4_PARAMS, SU4_MATRIX_PARAMS):
            raise ParameterError(f"SU4 takes 15 angles or 32 matrix reals, got {len(ps)}")
        if name == "MEASURE" and len(ps) != 1:
            raise ParameterError("MEASURE carries its clbit index as its one param")
        if not all(math.isfinite(p) for p in ps):
            raise ParameterError(f"non-finite parameter in {name}")

    def matrix(self) -> np.ndarray:
        name = self.name
        if name == "SX":
            return gates.SX
        if name == "X":
            return gates.X
        if name == "RZ":
            return gates.rz(self.params[0])
        if name == "CX":
            return gates.CX
        if name == "SWAP":
            return gates.SWAP
        if name == "SU4":
            if len(self.params) == SU4_PARAMS:
                return su4_from_params(self.params)
            flat = np.asarray(self.params).reshape(16, 2)
            return (flat[:, 0] + 1j * flat[:, 1]).reshape(4, 4)
        raise ParameterError(f"{name} has no unitary matrix")

    def to_json(self) -> dict:
        return {"name": self.name, "qubits": list(self.qubits), "params": list(self.params)}

    @classmethod
    def from_json(cls, d: dict) -> "GateOp":
        return cls(d["name"], tuple(d["qubits"]), tuple(d.get("params", ())))


def su4_op(q0: int, q1: int, matrix: np.ndarray) -> GateOp:
    """SU4 op holding an explicit matrix."""
    m = np.asarray(matrix, dtype=complex).reshape(16)
    return GateOp("SU4", (q0, q1), tuple(np.column_stack([m.real, m.imag]).reshape(32)))


def measure(qubit: int, clbit: int | None = None) -> GateOp:
    return GateOp("MEASURE", (qubit,), (qubit if clbit is None else clbit,))


@dataclass(frozen=True)
class Circuit:
    width: int
    ops: tuple[GateOp, ...] = ()
    num_clbits: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))
        if self.width < 0:
            raise ParameterError("width must be non-negative")
        measured: set[int] = set()
        clbits: set[int] = set()
        for op in self.ops:
            if any(q >= self.width for q in op.qubits):
                raise ParameterError(f"{op.name} on {op.qubits} exceeds width {self.width}")
            if op.name == "MEASURE":
                if op.qubits[0] in measured:
                    raise ParameterError(f"qubit {op.qubits[0]} measured twice")
                measured.add(op.qubits[0])
                clbits.add(int(op.params[0]))
        if self.num_clbits is None:
            object.__setattr__(self, "num_clbits", max(clbits) + 1 if clbits else 0)

    def to_json(self) -> dict:
        return {"width": self.width, "ops": [op.to_json() for op in self.ops]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, d: dict) -> "Circuit":
        return cls(int(d["width"]), tuple(GateOp.from_json(o) for o in d["ops"]))

    def count_ops(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for op in self.ops:
            out[op.name] = out.get(op.name, 0) + 1
        return out


# ---------------------------------------------------------------- SU(4) ----

def su4_from_params(angles: Sequence[float]) -> np.ndarray:
    """Fully parameterised two-qubit unitary in KAK form.

    ``angles[0:3]`` and ``angles[3:6]`` are the Euler angles of the local
    unitaries applied first to qubits 0 and 1, ``angles[6:9]`` the XX/YY/ZZ
    interaction strengths, ``angles[9:12]`` and ``angles[12:15]`` the local
    unitaries applied last. Each local unitary is ``RZ SX RZ SX RZ``.
    """
    a = np.asarray(angles, dtype=float)
    if a.shape != (SU4_PARAMS,):
        raise ParameterError(f"expected {SU4_PARAMS} angles, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParameterError("SU4 angles must be finite")
    before = np.kron(gates.euler_zsx(*a[0:3]), gates.euler_zsx(*a[3:6]))
    after = np.kron(gates.euler_zsx(*a[9:12]), gates.euler_zsx(*a[12:15]))
    return after @ gates.interaction(*a[6:9]) @ before


def random_su4_haar(rng: SplitMix64) -> np.ndarray:
    """Haar-random element of SU(4) (QR of a complex Ginibre matrix)."""
    z = rng.normal_array(32).reshape(4, 4, 2)
    g = (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return q / np.linalg.det(q) ** 0.25


# ------------------------------------------------------------ templates ----

@dataclass(frozen=True)
class QVTemplate:
    """QV circuit skeleton: fixed permutations, parameterised SU(4) slots.

    Slot ``(layer, pair)`` acts on qubits ``(2*pair, 2*pair + 1)`` after that
    layer's permutation and owns angles ``[offset, offset + 15)`` with
    ``offset = (layer * N//2 + pair) * 15``.
    """

    template_id: int
    width: int
    layers: int
    permutations: tuple[tuple[int, ...], ...]

    @property
    def pairs_per_layer(self) -> int:
        return self.width // 2

    @property
    def num_params(self) -> int:
        return self.layers * self.pairs_per_layer * SU4_PARAMS

    def slot_names(self) -> list[str]:
        return [
            f"theta[{self.template_id}][{layer}][{pair}][{j}]"
            for layer in range(self.layers)
            for pair in range(self.pairs_per_layer)
            for j in range(SU4_PARAMS)
        ]

    def to_json(self) -> dict:
        return {
            "template_id": self.template_id,
            "width": self.width,
            "layers": self.layers,
            "permutations": [list(p) for p in self.permutations],
        }

    @classmethod
    def from_json(cls, d: dict) -> "QVTemplate":
        return cls(
            int(d["template_id"]),
            int(d["width"]),
            int(d["layers"]),
            tuple(tuple(int(x) for x in p) for p in d["permutations"]),
        )


def generate_qv_templates(width: int, layers: int, count: int, seed: int) -> list[QVTemplate]:
    """``count`` templates whose permutations come from one SplitMix64 stream."""
    if width < 2 or layers < 1 or count < 1:
        raise ParameterError(
            f"need width >= 2, layers >= 1, count >= 1; got {width}, {layers}, {count}"
        )
    rng = SplitMix64(seed)
    out = []
    for m in range(count):
        perms = tuple(tuple(rng.shuffle(list(range(width)))) for _ in range(layers))
        out.append(QVTemplate(m, width, layers, perms))
    return out


def _layered_circuit(width: int, permutations: Iterable[Sequence[int]], su4s: Iterable[GateOp]) -> Circuit:
    su4s = iter(su4s)
    ops: list[GateOp] = []
    for perm in permutations:
        ops.append(GateOp("PERM", tuple(perm)))
        for pair in range(width // 2):
            op = next(su4s)
            ops.append(GateOp("SU4", (2 * pair, 2 * pair + 1), op.params))
    ops.extend(measure(q) for q in range(width))
    return Circuit(width, tuple(ops))


def bind_parameters(template: QVTemplate, theta: Sequence[float]) -> Circuit:
    """Concrete circuit: per layer one PERM then the SU4 slots, then measure all."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (template.num_params,):
        raise ParameterError(
            f"template {template.template_id} takes {template.num_params} parameters, "
            f"got {theta.size}"
        )
    if not np.all(np.isfinite(theta)):
        raise ParameterError("parameters must be finite")
    chunks = theta.reshape(-1, SU4_PARAMS)
    su4s = (GateOp("SU4", (0, 1), tuple(c)) for c in chunks)
    return _layered_circuit(template.width, template.permutations, su4s)


def qv_model_circuit(width: int, rng: SplitMix64, layers: int | None = None) -> Circuit:
    """Square QV circuit with Haar SU(4) blocks, drawn from ``rng``."""
    layers = width if layers is None else layers
    if width < 2 or layers < 1:
        raise ParameterError("QV circuits need width >= 2 and at least one layer")
    perms = []
    su4s = []
    for _ in range(layers):
        perms.append(rng.shuffle(list(range(width))))
        su4s.extend(su4_op(0, 1, random_su4_haar(rng)) for _ in range(width // 2))
    return _layered_circuit(width, perms, su4s)
