"""In-process simulated QPU with a latency model and a single execution queue."""

from __future__ import annotations

import hashlib
import json
import queue
import struct
import threading
from dataclasses import dataclass
from typing import Sequence

from ..circuit import NATIVE, Circuit, GateOp, ParameterError
from ..rng import SplitMix64, substream_seed
from ..simulator import DEFAULT_MAX_QUBITS, CapacityError, Counts, NoiseModel, run_counts
from ..transpiler import CouplingMap, RoutedCircuit, ValidationError, lower, route
from .base import (
    Backend,
    EventLog,
    Job,
    JobResult,
    LatencyModel,
    TimingLedger,
    UnknownJobError,
    make_clock,
    to_ns,
)

_OPCODES = {name: i for i, name in enumerate(sorted(NATIVE))}


@dataclass(frozen=True)
class ControlBinary:
    """Packed instruction stream for one native circuit."""

    data: bytes
    num_instructions: int

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.data).hexdigest()


def pack_circuit(circuit: Circuit) -> ControlBinary:
    """Deterministic binary encoding; rejects anything outside the native set."""
    chunks = [struct.pack("<HH", circuit.width, len(circuit.ops))]
    for op in circuit.ops:
        if op.name not in NATIVE:
            raise ValidationError(f"{op.name} is not a native gate")
        chunks.append(struct.pack("<BB", _OPCODES[op.name], len(op.qubits)))
        chunks.append(struct.pack(f"<{len(op.qubits)}H", *op.qubits))
        chunks.append(struct.pack("<B", len(op.params)))
        chunks.append(struct.pack(f"<{len(op.params)}d", *op.params))
    return ControlBinary(b"".join(chunks), len(circuit.ops))


def bind_su4_slots(circuit: Circuit, theta: Sequence[float]) -> Circuit:
    """Fill the circuit's SU4 ops, in order, with consecutive 15-angle chunks."""
    slots = sum(op.name == "SU4" for op in circuit.ops)
    if len(theta) != 15 * slots:
        raise ParameterError(f"circuit has {slots} SU4 slots, got {len(theta)} parameters")
    ops = []
    k = 0
    for op in circuit.ops:
        if op.name == "SU4":
            op = GateOp("SU4", op.qubits, tuple(theta[k : k + 15]))
            k += 15
        ops.append(op)
    return Circuit(circuit.width, tuple(ops), circuit.num_clbits)


def circuit_seed(seed: int, circuit: Circuit) -> int:
    """Sampling seed from the backend seed and the circuit content."""
    h = hashlib.sha256(circuit.dumps().encode()).digest()
    return substream_seed(seed, "shots", int.from_bytes(h[:8], "little"))


class LocalBackend(Backend):
    """Simulated device.

    Jobs go through one queue drained by one executor thread, so at most one
    job runs at a time. The clock is advanced by the modeled cost of each job:
    instantly in virtual mode, by sleeping in wall mode. Counts depend only on
    ``seed`` and the circuit content, never on job order.
    """

    def __init__(
        self,
        num_qubits: int,
        coupling_map: CouplingMap | None = None,
        latency: LatencyModel | None = None,
        clock: str = "virtual",
        noise: NoiseModel | None = None,
        seed: int = 0,
        name: str = "local",
        max_qubits: int = DEFAULT_MAX_QUBITS,
        event_log: EventLog | None = None,
    ) -> None:
        if num_qubits < 1:
            raise ParameterError("backend needs at least one qubit")
        self.num_qubits = num_qubits
        self.coupling_map = coupling_map or CouplingMap.line(num_qubits)
        if self.coupling_map.num_qubits != num_qubits:
            raise ParameterError("coupling map size differs from num_qubits")
        self.latency = latency or LatencyModel()
        self.clock = make_clock(clock)
        self.noise = noise
        self.seed = seed
        self.name = name
        self.max_qubits = max_qubits
        self.events = event_log or EventLog()
        self._queue: queue.Queue = queue.Queue()
        self._results: dict[str, JobResult | BaseException] = {}
        self._pending: set[str] = set()
        self._cond = threading.Condition()
        self._routes: dict[str, tuple[RoutedCircuit, tuple[int, ...]]] = {}
        self._route_lock = threading.Lock()
        self._thread: threading.Thread | None = None
        self._closed = False

    # -------------------------------------------------------- lifecycle ----
    def _ensure_worker(self) -> None:
        with self._cond:
            if self._closed:
                raise RuntimeError("backend is closed")
            if self._thread is None:
                self._thread = threading.Thread(target=self._work, name=f"{self.name}-qpu", daemon=True)
                self._thread.start()

    def close(self) -> None:
        with self._cond:
            if self._closed:
                return
            self._closed = True
            thread = self._thread
        if thread is not None:
            self._queue.put(None)
            thread.join()

    # ------------------------------------------------------- submission ----
    def _validate(self, job: Job) -> None:
        for c in job.circuits:
            if c.width > self.num_qubits:
                raise CapacityError(f"circuit width {c.width} exceeds {self.num_qubits} qubits")
            if job.params is None:
                for op in c.ops:
                    if op.name not in NATIVE:
                        raise ValidationError(f"{op.name} is not a native gate")
                    if op.name == "CX" and not self.coupling_map.adjacent(*op.qubits):
                        raise ValidationError(f"CX on {op.qubits} is not a coupling edge")

    def submit(self, job: Job) -> str:
        self._validate(job)
        self._ensure_worker()
        with self._cond:
            if job.job_id in self._pending or job.job_id in self._results:
                raise ParameterError(f"duplicate job id {job.job_id}")
            self._pending.add(job.job_id)
        self.events.record("received", self.clock.now(), job.job_id, job.tag)
        self._queue.put(job)
        return job.job_id

    def result(self, job_id: str, timeout: float | None = None) -> JobResult:
        with self._cond:
            if job_id not in self._pending and job_id not in self._results:
                raise UnknownJobError(job_id)
            if not self._cond.wait_for(lambda: job_id in self._results, timeout):
                raise TimeoutError(f"job {job_id} not finished after {timeout} s")
            out = self._results.pop(job_id)
            self._pending.discard(job_id)
        if isinstance(out, BaseException):
            raise out
        self.events.record("delivered", self.clock.now(), job_id)
        return out

    # -------------------------------------------------------- execution ----
    def _work(self) -> None:
        while True:
            job = self._queue.get()
            if job is None:
                return
            try:
                out: JobResult | BaseException = self._execute(job)
            except Exception as exc:  # surfaced to the caller of result()
                out = exc
            with self._cond:
                self._results[job.job_id] = out
                self._cond.notify_all()

    def runtime_compile(
        self, circuits: Sequence[Circuit], params: Sequence[Sequence[float]] | None = None
    ) -> list[tuple[Circuit, ControlBinary]]:
        """Lower jobs to control binaries; binds and transpiles templates when ``params`` is set."""
        if params is None:
            return [(c, pack_circuit(c)) for c in circuits]
        out = []
        for c, theta in zip(circuits, params):
            native = self._bind_and_lower(c, theta)
            out.append((native, pack_circuit(native)))
        return out

    def _bind_and_lower(self, template: Circuit, theta: Sequence[float]) -> Circuit:
        key = json.dumps(
            [template.width] + [[op.name, list(op.qubits)] for op in template.ops], separators=(",", ":")
        )
        with self._route_lock:
            cached = self._routes.get(key)
        bound = bind_su4_slots(template, theta)
        if cached is None:
            qubits = self.coupling_map.select_qubits(template.width)
            cached = (route(bound, self.coupling_map.subgraph(qubits)), qubits)
            with self._route_lock:
                self._routes[key] = cached
        routed, qubits = cached
        return lower(routed.rebind(bound)).embed(qubits, self.num_qubits).circuit

    def job_cost(self, job: Job, compiled: Sequence[tuple[Circuit, ControlBinary]]) -> TimingLedger:
        lat = self.latency
        payload = len(json.dumps(job.to_wire(), separators=(",", ":")).encode())
        rctd = lat.transfer_ns(payload) + to_ns(lat.instrument_init)
        execution = delay = 0
        rep = to_ns(lat.rep_delay)
        per_op = lat.load_per_instruction + lat.runtime_compile_per_gate
        for native, binary in compiled:
            rctd += to_ns(per_op * binary.num_instructions)
            execution += job.shots * lat.circuit_duration_ns(native)
            delay += job.shots * rep
        return TimingLedger(execution, delay, rctd)

    def _execute(self, job: Job) -> JobResult:
        started = self.clock.now()
        self.events.record("started", started, job.job_id)
        compiled = self.runtime_compile(job.circuits, job.params)
        ledger = self.job_cost(job, compiled)
        counts: list[Counts] = []
        for native, _ in compiled:
            rng = SplitMix64(circuit_seed(self.seed, native))
            counts.append(run_counts(native, job.shots, rng, self.noise, self.max_qubits))
        self.clock.advance_ns(ledger.total_ns)
        finished = self.clock.now()
        self.events.record("finished", finished, job.job_id)
        return JobResult(job.job_id, counts, ledger, started, finished)
