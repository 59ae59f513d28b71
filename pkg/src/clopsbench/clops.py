"""CLOPS: timed, result-dependent parameter updates over parameterised QV templates."""

from __future__ import annotations

import json
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .backend import Backend, EventLog, Job, TimingLedger
from .backend.base import NS
from .circuit import ParameterError, QVTemplate, bind_parameters, generate_qv_templates
from .qv import QVResult
from .rng import derive_seed, next_params, substream_seed
from .simulator import heavy_output_probability, heavy_set, simulate
from .transpiler import RoutedCircuit, ValidationError, lower, route, routed_depth


def compute_clops(M: int, K: int, S: int, D: int, time_taken: float) -> int:
    """Layers per second, floored."""
    if not time_taken > 0:
        raise ParameterError("time_taken must be positive")
    return math.floor(M * K * S * D / time_taken)


def compute_depth1_rate(M: int, K: int, S: int, avg_depth: float, time_taken: float) -> int:
    """Depth-1 circuits per second, floored."""
    if not time_taken > 0:
        raise ParameterError("time_taken must be positive")
    if not avg_depth > 0:
        raise ParameterError("avg_depth must be positive")
    return math.floor(M * K * S * avg_depth / time_taken)


@dataclass(frozen=True)
class ClopsConfig:
    """Run sizes and seeds. ``layers`` is log2 of the backend's QV."""

    templates: int = 100
    updates: int = 10
    shots: int = 100
    layers: int = 5
    width: int | None = None
    master_seed: int = 0
    qubits: tuple[int, ...] | None = None
    server_side_binding: bool = False
    max_parallel: int | None = None
    measure_quality: bool = True

    def __post_init__(self) -> None:
        if self.width is None:
            object.__setattr__(self, "width", self.layers)
        if self.qubits is not None:
            object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if min(self.templates, self.updates, self.shots, self.layers) < 1:
            raise ParameterError("templates, updates, shots and layers must be >= 1")
        if self.width < 2:
            raise ParameterError("width must be >= 2")
        if self.width != self.layers:
            raise ParameterError("QV circuits are square: width must equal layers")
        if self.qubits is not None and len(self.qubits) != self.width:
            raise ParameterError(f"layout has {len(self.qubits)} qubits, width is {self.width}")
        if not 0 <= self.master_seed < 2**64:
            raise ParameterError("master_seed must be a 64-bit unsigned integer")

    @classmethod
    def from_qv(cls, qv: QVResult, **overrides) -> "ClopsConfig":
        if not qv.passed or qv.qv_value is None:
            raise ValidationError(f"QV run at width {qv.width} did not pass")
        layers = int(qv.qv_value).bit_length() - 1
        if 2**layers != qv.qv_value:
            raise ValidationError(f"QV value {qv.qv_value} is not a power of two")
        return cls(layers=layers, qubits=tuple(qv.qubits) or None, **overrides)

    def to_json(self) -> dict:
        d = asdict(self)
        d["qubits"] = None if self.qubits is None else list(self.qubits)
        return d


@dataclass
class ClopsReport:
    clops: int
    depth1_per_second: int
    avg_template_depth: float
    total_time: float
    ledger: TimingLedger
    config: dict
    backend: dict = field(default_factory=dict)
    qubits: tuple[int, ...] = ()
    circuits_run: int = 0
    mean_hop: float | None = None
    clock: str = "virtual"

    @property
    def qv_value(self) -> int:
        return 2 ** self.config["layers"]

    def recompute(self) -> tuple[int, int]:
        c = self.config
        m, k, s = c["templates"], c["updates"], c["shots"]
        return (
            compute_clops(m, k, s, c["layers"], self.total_time),
            compute_depth1_rate(m, k, s, self.avg_template_depth, self.total_time),
        )

    def to_json(self) -> dict:
        return {
            "kind": "clops",
            "clops": self.clops,
            "depth1_per_second": self.depth1_per_second,
            "avg_template_depth": self.avg_template_depth,
            "total_time": self.total_time,
            "timing": self.ledger.to_json(),
            "config": self.config,
            "backend": self.backend,
            "qubits": list(self.qubits),
            "circuits_run": self.circuits_run,
            "mean_hop": self.mean_hop,
            "clock": self.clock,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, d: dict) -> "ClopsReport":
        if d.get("kind", "clops") != "clops":
            raise ParameterError(f"not a CLOPS report (kind={d.get('kind')!r})")
        report = cls(
            clops=int(d["clops"]),
            depth1_per_second=int(d["depth1_per_second"]),
            avg_template_depth=float(d["avg_template_depth"]),
            total_time=float(d["total_time"]),
            ledger=TimingLedger.from_json(d["timing"]),
            config=dict(d["config"]),
            backend=dict(d.get("backend", {})),
            qubits=tuple(d.get("qubits", ())),
            circuits_run=int(d.get("circuits_run", 0)),
            mean_hop=d.get("mean_hop"),
            clock=str(d.get("clock", "virtual")),
        )
        if report.recompute() != (report.clops, report.depth1_per_second):
            raise ParameterError("report figures do not match its own time and depth")
        return report


class ClopsAborted(RuntimeError):
    """A chain failed; ``ledger`` holds the time of the jobs that did finish."""

    def __init__(self, message: str, ledger: TimingLedger, completed: int) -> None:
        super().__init__(message)
        self.ledger = ledger
        self.completed = completed


def check_settings(backend: Backend, qv: QVResult) -> None:
    """The timed run must use the delays and gate lengths the QV run used."""
    if not qv.latency:
        return
    now = backend.latency.to_json()
    for key in ("rep_delay", "gate_durations", "measure_duration"):
        if key in qv.latency and qv.latency[key] != now[key]:
            raise ValidationError(f"backend {key} differs from the QV run")


def _layout(backend: Backend, cfg: ClopsConfig) -> tuple[int, ...]:
    if cfg.width > backend.num_qubits:
        raise ValidationError(f"width {cfg.width} exceeds {backend.num_qubits} qubits")
    if cfg.qubits is None:
        return backend.coupling_map.select_qubits(cfg.width)
    if max(cfg.qubits) >= backend.num_qubits or len(set(cfg.qubits)) != len(cfg.qubits):
        raise ValidationError(f"layout {cfg.qubits} does not fit the backend")
    if not backend.coupling_map.subgraph(cfg.qubits).is_connected:
        raise ValidationError(f"layout {cfg.qubits} is not connected")
    return cfg.qubits


def _template_circuit(t: QVTemplate):
    return bind_parameters(t, np.zeros(t.num_params))


def run_clops(
    backend: Backend,
    cfg: ClopsConfig,
    qv: QVResult | None = None,
    events: EventLog | None = None,
) -> ClopsReport:
    """Time M chains of K dependent jobs.

    Step 1 (template generation and routing) happens before the timer
    starts. Chain ``m`` then binds fresh parameters, submits, waits for the
    counts and seeds its next parameters from them; chains run concurrently.
    """
    if qv is not None:
        check_settings(backend, qv)
        if 2**cfg.layers != qv.qv_value:
            raise ValidationError(f"layers={cfg.layers} does not match QV {qv.qv_value}")
    events = events if events is not None else EventLog()
    clock = backend.clock
    virtual = clock.mode == "virtual"
    qubits = _layout(backend, cfg)
    sub = backend.coupling_map.subgraph(qubits)

    templates = generate_qv_templates(
        cfg.width, cfg.layers, cfg.templates, substream_seed(cfg.master_seed, "templates")
    )
    routed: list[RoutedCircuit] = []
    depths: list[int] = []
    for t in templates:
        events.record("template_generated", clock.now(), tag=(t.template_id,))
        r = route(_template_circuit(t), sub)
        routed.append(r)
        depths.append(routed_depth(r))
        events.record("template_transpiled", clock.now(), tag=(t.template_id,))
    avg_depth = float(np.mean(depths))

    ledger = TimingLedger()
    lock = threading.Lock()
    abort = threading.Event()
    hops: list[tuple[int, int, float]] = []
    done = [0]

    def chain(m: int) -> None:
        t = templates[m]
        theta = next_params(substream_seed(cfg.master_seed, "theta", m), t.num_params)
        for k in range(cfg.updates):
            if abort.is_set():
                return
            bound = bind_parameters(t, theta)
            if cfg.server_side_binding:
                job = Job((_template_circuit(t),), cfg.shots, params=(tuple(theta),), tag=(m, k))
            else:
                native = lower(routed[m].rebind(bound)).embed(qubits, backend.num_qubits)
                job = Job((native.circuit,), cfg.shots, tag=(m, k))
            events.record("submit", clock.now(), job.job_id, (m, k))
            backend.submit(job)
            result = backend.result(job.job_id)
            events.record("result", clock.now(), job.job_id, (m, k))
            counts = result.counts[0]
            with lock:
                ledger.add(result.timing)
                done[0] += 1
            if cfg.measure_quality:
                heavy = heavy_set(simulate(bound).probabilities())
                with lock:
                    hops.append((m, k, heavy_output_probability(counts, heavy)))
            if k + 1 < cfg.updates:
                theta = next_params(derive_seed(counts.counts), t.num_params)

    workers = min(cfg.templates, cfg.max_parallel or cfg.templates)
    start_ns = clock.now_ns() if virtual else time.perf_counter_ns()
    events.record("timing_start", clock.now())
    failure: BaseException | None = None
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="clops-chain") as pool:
        futures = [pool.submit(chain, m) for m in range(cfg.templates)]
        for f in futures:
            exc = f.exception()
            if exc is not None and failure is None:
                failure = exc
                abort.set()
    end_ns = clock.now_ns() if virtual else time.perf_counter_ns()
    events.record("timing_stop", clock.now())
    if failure is not None:
        raise ClopsAborted(f"CLOPS run aborted: {failure}", ledger.copy(), done[0]) from failure

    total_ns = end_ns - start_ns
    if total_ns > ledger.total_ns:
        # Time not attributed by the backend is client-side overhead.
        ledger.runtime_compile_and_transfer_ns += total_ns - ledger.total_ns
    total = total_ns / NS
    cfg_json = cfg.to_json()
    return ClopsReport(
        clops=compute_clops(cfg.templates, cfg.updates, cfg.shots, cfg.layers, total),
        depth1_per_second=compute_depth1_rate(cfg.templates, cfg.updates, cfg.shots, avg_depth, total),
        avg_template_depth=avg_depth,
        total_time=total,
        ledger=ledger,
        config=cfg_json,
        backend=backend.describe(),
        qubits=tuple(qubits),
        circuits_run=done[0],
        mean_hop=float(np.mean([h for *_, h in sorted(hops)])) if hops else None,
        clock=clock.mode,
    )


def causality_violations(events: EventLog) -> list[tuple[int, int]]:
    """Chains ``(m, k)`` whose submission did not follow the result of ``(m, k-1)``."""
    submit = {e.tag: e.seq for e in events.of_kind("submit")}
    result = {e.tag: e.seq for e in events.of_kind("result")}
    bad = []
    for (m, k), seq in sorted(submit.items()):
        if k == 0:
            continue
        prev = result.get((m, k - 1))
        if prev is None or prev >= seq:
            bad.append((m, k))
    return bad


def step_one_precedes_timing(events: EventLog) -> bool:
    start = events.of_kind("timing_start")
    if len(start) != 1:
        return False
    prep = events.of_kind("template_generated") + events.of_kind("template_transpiled")
    return all(e.seq < start[0].seq for e in prep)
