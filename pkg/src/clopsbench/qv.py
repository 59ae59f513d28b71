"""Quantum Volume: square random circuits scored by heavy-output probability."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .backend import Backend, Job
from .circuit import ParameterError, qv_model_circuit
from .rng import SplitMix64, substream_seed
from .simulator import CapacityError, heavy_bitstrings, heavy_output_probability, simulate
from .transpiler import depth, transpile

PASS_THRESHOLD = 2.0 / 3.0


@dataclass(frozen=True)
class QVResult:
    """Outcome of one QV width; ``qv_value`` is set only when the width passed.

    ``qubits`` and ``latency`` record where and how the circuits ran so a
    CLOPS run can insist on the same device settings.
    """

    width: int
    circuits: int
    shots: int
    mean_hop: float
    sigma: float
    lower_bound: float
    passed: bool
    qv_value: int | None
    z: float = 2.0
    seed: int = 0
    qubits: tuple[int, ...] = ()
    backend: str = ""
    latency: dict = field(default_factory=dict)
    hops: tuple[float, ...] = ()
    ideal_heavy_mass: float = 0.0
    mean_depth: float = 0.0

    def __post_init__(self) -> None:
        if self.passed != (self.lower_bound > PASS_THRESHOLD):
            raise ParameterError("passed must agree with the confidence bound")
        if self.qv_value != (2**self.width if self.passed else None):
            raise ParameterError("qv_value is 2^width exactly when passed")

    def to_json(self) -> dict:
        d = asdict(self)
        d["qubits"] = list(self.qubits)
        d["hops"] = list(self.hops)
        d["kind"] = "qv"
        return d

    @classmethod
    def from_json(cls, d: dict) -> "QVResult":
        names = {f.name for f in fields(cls)}
        kw = {k: v for k, v in d.items() if k in names}
        kw["qubits"] = tuple(kw.get("qubits", ()))
        kw["hops"] = tuple(kw.get("hops", ()))
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "QVResult":
        return cls.from_json(json.loads(Path(path).read_text()))


def confidence_bound(hops, z: float = 2.0) -> tuple[float, float, float]:
    """Mean heavy-output probability, its binomial standard error and mean - z*sigma."""
    h = np.asarray(hops, dtype=float)
    if h.size == 0:
        raise ParameterError("no circuits")
    mean = float(h.mean())
    sigma = math.sqrt(max(mean * (1.0 - mean), 0.0) / h.size)
    return mean, sigma, mean - z * sigma


def run_qv(
    backend: Backend,
    width: int,
    num_circuits: int = 100,
    shots: int = 100,
    z: float = 2.0,
    seed: int = 0,
) -> QVResult:
    """Run ``num_circuits`` width-``width`` square circuits and score them."""
    if width < 2:
        raise ParameterError("QV needs width >= 2")
    if num_circuits < 1 or shots < 1:
        raise ParameterError("num_circuits and shots must be >= 1")
    if width > backend.num_qubits:
        raise CapacityError(f"width {width} exceeds {backend.num_qubits} qubits")
    qubits = backend.coupling_map.select_qubits(width)
    sub = backend.coupling_map.subgraph(qubits)
    rng = SplitMix64(substream_seed(seed, "qv", width))

    natives, heavy, masses, depths = [], [], [], []
    for _ in range(num_circuits):
        circuit = qv_model_circuit(width, rng)
        probs = simulate(circuit).probabilities()
        heavy.append(heavy_bitstrings(probs, width))
        masses.append(float(probs[probs > np.median(probs)].sum()))
        native = transpile(circuit, sub)
        depths.append(depth(native).depth)
        natives.append(native.embed(qubits, backend.num_qubits).circuit)

    result = backend.run(Job(tuple(natives), shots))
    hops = [heavy_output_probability(c, h) for c, h in zip(result.counts, heavy)]
    mean, sigma, lower = confidence_bound(hops, z)
    passed = lower > PASS_THRESHOLD
    return QVResult(
        width=width,
        circuits=num_circuits,
        shots=shots,
        mean_hop=mean,
        sigma=sigma,
        lower_bound=lower,
        passed=passed,
        qv_value=2**width if passed else None,
        z=z,
        seed=seed,
        qubits=tuple(qubits),
        backend=backend.name,
        latency=backend.latency.to_json(),
        hops=tuple(hops),
        ideal_heavy_mass=float(np.mean(masses)),
        mean_depth=float(np.mean(depths)),
    )


def qv_scan(
    backend: Backend, max_width: int, **kwargs
) -> tuple[int | None, list[QVResult]]:
    """Widths 2..max_width in order; returns the last width of the initial passing run."""
    if max_width > backend.num_qubits:
        raise CapacityError(f"max_width {max_width} exceeds {backend.num_qubits} qubits")
    results = [run_qv(backend, n, **kwargs) for n in range(2, max_width + 1)]
    best = None
    for r in results:
        if not r.passed:
            break
        best = r.width
    return best, results
