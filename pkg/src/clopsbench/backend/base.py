"""Jobs, timing ledger, latency model, clocks and the event log."""

from __future__ import annotations

import itertools
import threading
import time
import uuid
from dataclasses import dataclass, field, fields
from types import MappingProxyType
from typing import Mapping

from ..circuit import Circuit, ParameterError
from ..simulator import Counts
from ..transpiler import CouplingMap

NS = 1_000_000_000


class BackendError(RuntimeError):
    pass


class UnknownJobError(BackendError, KeyError):
    pass


class TransportError(BackendError):
    pass


class UnsupportedError(BackendError):
    pass


def to_ns(seconds: float) -> int:
    return int(round(seconds * NS))


DEFAULT_GATE_DURATIONS = MappingProxyType(
    {"SX": 35.5e-9, "X": 35.5e-9, "RZ": 0.0, "CX": 400e-9, "BARRIER": 0.0, "RESET": 1e-6}
)


@dataclass(frozen=True)
class LatencyModel:
    """Per-backend timing parameters, all in seconds.

    ``transfer_per_byte`` is charged once per direction on the request
    payload size, ``transfer_fixed`` once per round trip.
    """

    rep_delay: float = 250e-6
    instrument_init: float = 0.0
    load_per_instruction: float = 0.0
    runtime_compile_per_gate: float = 0.0
    gate_durations: Mapping[str, float] = DEFAULT_GATE_DURATIONS
    measure_duration: float = 5e-6
    transfer_per_byte: float = 0.0
    transfer_fixed: float = 0.0

    def __post_init__(self) -> None:
        # Kinds not listed keep their default duration.
        merged = {**DEFAULT_GATE_DURATIONS, **self.gate_durations}
        object.__setattr__(self, "gate_durations", MappingProxyType(merged))
        for f in fields(self):
            if f.name == "gate_durations":
                continue
            if getattr(self, f.name) < 0:
                raise ParameterError(f"latency field {f.name} must be >= 0")
        if any(v < 0 for v in self.gate_durations.values()):
            raise ParameterError("gate durations must be >= 0")

    @classmethod
    def zero(cls) -> "LatencyModel":
        return cls(
            rep_delay=0.0,
            gate_durations={k: 0.0 for k in DEFAULT_GATE_DURATIONS},
            measure_duration=0.0,
        )

    def to_json(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["gate_durations"] = dict(sorted(self.gate_durations.items()))
        return out

    @classmethod
    def from_json(cls, d: Mapping) -> "LatencyModel":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def circuit_duration_ns(self, circuit: Circuit) -> int:
        """As-soon-as-possible schedule length of one shot."""
        t = [0.0] * circuit.width
        for op in circuit.ops:
            qs = op.qubits
            if op.name == "MEASURE":
                dur = self.measure_duration
            else:
                dur = self.gate_durations.get(op.name, 0.0)
            start = max((t[q] for q in qs), default=0.0)
            for q in qs:
                t[q] = start + dur
        return to_ns(max(t, default=0.0))

    def transfer_ns(self, payload_bytes: int) -> int:
        return to_ns(2 * payload_bytes * self.transfer_per_byte + self.transfer_fixed)


@dataclass
class TimingLedger:
    """Accumulated time per category, kept as integer nanoseconds.

    Integer sums do not depend on the order jobs finish in, which keeps
    virtual-clock runs reproducible to the nanosecond.
    """

    circuit_execution_ns: int = 0
    circuit_delay_ns: int = 0
    runtime_compile_and_transfer_ns: int = 0

    CATEGORIES = ("circuit_execution", "circuit_delay", "runtime_compile_and_transfer")

    def __post_init__(self) -> None:
        if min(self.circuit_execution_ns, self.circuit_delay_ns, self.runtime_compile_and_transfer_ns) < 0:
            raise ParameterError("ledger entries must be >= 0")

    @property
    def circuit_execution(self) -> float:
        return self.circuit_execution_ns / NS

    @property
    def circuit_delay(self) -> float:
        return self.circuit_delay_ns / NS

    @property
    def runtime_compile_and_transfer(self) -> float:
        return self.runtime_compile_and_transfer_ns / NS

    @property
    def total_ns(self) -> int:
        return self.circuit_execution_ns + self.circuit_delay_ns + self.runtime_compile_and_transfer_ns

    @property
    def total(self) -> float:
        return self.total_ns / NS

    def add(self, other: "TimingLedger") -> None:
        self.circuit_execution_ns += other.circuit_execution_ns
        self.circuit_delay_ns += other.circuit_delay_ns
        self.runtime_compile_and_transfer_ns += other.runtime_compile_and_transfer_ns

    def copy(self) -> "TimingLedger":
        return TimingLedger(
            self.circuit_execution_ns, self.circuit_delay_ns, self.runtime_compile_and_transfer_ns
        )

    def to_json(self) -> dict:
        return {name: getattr(self, name) for name in self.CATEGORIES}

    @classmethod
    def from_json(cls, d: Mapping) -> "TimingLedger":
        return cls(*(to_ns(float(d[name])) for name in cls.CATEGORIES))


# -------------------------------------------------------------- clocks ----

class VirtualClock:
    """Simulated time in integer nanoseconds, advanced explicitly."""

    mode = "virtual"

    def __init__(self) -> None:
        self._ns = 0
        self._lock = threading.Lock()

    def now_ns(self) -> int:
        with self._lock:
            return self._ns

    def now(self) -> float:
        return self.now_ns() / NS

    def advance_ns(self, ns: int) -> None:
        with self._lock:
            self._ns += ns


class WallClock:
    """Real time; advancing sleeps."""

    mode = "wall"

    def __init__(self) -> None:
        self._origin = time.perf_counter()

    def now(self) -> float:
        return time.perf_counter() - self._origin

    def now_ns(self) -> int:
        return to_ns(self.now())

    def advance_ns(self, ns: int) -> None:
        if ns > 0:
            time.sleep(ns / NS)


def make_clock(mode: str):
    if mode == "virtual":
        return VirtualClock()
    if mode == "wall":
        return WallClock()
    raise ParameterError(f"clock must be 'wall' or 'virtual', got {mode!r}")


# ----------------------------------------------------------- event log ----

@dataclass(frozen=True)
class Event:
    seq: int
    time: float
    kind: str
    job_id: str | None = None
    tag: tuple | None = None


class EventLog:
    """Append-only, thread-safe log with a global sequence number."""

    def __init__(self) -> None:
        self._events: list[Event] = []
        self._lock = threading.Lock()
        self._seq = itertools.count()

    def record(self, kind: str, time: float, job_id: str | None = None, tag: tuple | None = None) -> Event:
        with self._lock:
            event = Event(next(self._seq), time, kind, job_id, tag)
            self._events.append(event)
            return event

    @property
    def events(self) -> list[Event]:
        with self._lock:
            return list(self._events)

    def of_kind(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]


# ---------------------------------------------------------------- jobs ----

@dataclass(frozen=True)
class Job:
    """Circuits to run with a common shot count.

    With ``params`` set, ``circuits`` are parameterised templates and
    ``params[i]`` supplies the SU4 angles of circuit ``i``; the backend binds
    and lowers them itself.
    """

    circuits: tuple[Circuit, ...]
    shots: int
    job_id: str = field(default_factory=lambda: str(uuid.uuid4()))
    params: tuple[tuple[float, ...], ...] | None = None
    tag: tuple | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "circuits", tuple(self.circuits))
        if self.shots < 1:
            raise ParameterError("shots must be >= 1")
        if not self.circuits:
            raise ParameterError("a job needs at least one circuit")
        if self.params is not None:
            params = tuple(tuple(float(x) for x in p) for p in self.params)
            if len(params) != len(self.circuits):
                raise ParameterError("need one parameter vector per circuit")
            object.__setattr__(self, "params", params)

    def to_wire(self) -> dict:
        return {
            "type": "submit",
            "job_id": self.job_id,
            "shots": self.shots,
            "circuits": [c.to_json() for c in self.circuits],
            "params": None if self.params is None else [list(p) for p in self.params],
        }

    @classmethod
    def from_wire(cls, msg: Mapping) -> "Job":
        params = msg.get("params")
        return cls(
            tuple(Circuit.from_json(c) for c in msg["circuits"]),
            int(msg["shots"]),
            str(msg["job_id"]),
            None if params is None else tuple(tuple(p) for p in params),
        )


@dataclass
class JobResult:
    job_id: str
    counts: list[Counts]
    timing: TimingLedger
    started: float = 0.0
    finished: float = 0.0

    def to_wire(self) -> dict:
        return {
            "type": "result",
            "job_id": self.job_id,
            "counts": [c.to_json() for c in self.counts],
            "timing": self.timing.to_json(),
        }

    @classmethod
    def from_wire(cls, msg: Mapping) -> "JobResult":
        return cls(
            str(msg["job_id"]),
            [Counts.from_json(c) for c in msg["counts"]],
            TimingLedger.from_json(msg["timing"]),
        )


class Backend:
    """Something that runs jobs: ``submit`` returns an id, ``result`` blocks."""

    name: str = "backend"
    num_qubits: int
    coupling_map: CouplingMap
    latency: LatencyModel
    clock: VirtualClock | WallClock

    def submit(self, job: Job) -> str:
        raise NotImplementedError

    def result(self, job_id: str, timeout: float | None = None) -> JobResult:
        raise NotImplementedError

    def run(self, job: Job, timeout: float | None = None) -> JobResult:
        return self.result(self.submit(job), timeout)

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def describe(self) -> dict:
        return {
            "name": self.name,
            "num_qubits": self.num_qubits,
            "coupling_map": self.coupling_map.to_json(),
            "latency": self.latency.to_json(),
            "clock": self.clock.mode,
        }
