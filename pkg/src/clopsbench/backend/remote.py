"""Newline-delimited JSON over TCP: a server wrapping a local backend and a client.

Each job uses its own connection: the client sends ``submit``, the server
answers ``ack`` and later ``result`` (or ``error``) on the same socket. A
``describe`` request returns the device description.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
import time
from dataclasses import dataclass

from ..circuit import ParameterError
from ..simulator import CapacityError
from ..transpiler import CouplingMap, ValidationError
from .base import (
    Backend,
    Job,
    JobResult,
    LatencyModel,
    TransportError,
    UnknownJobError,
    UnsupportedError,
    WallClock,
    to_ns,
)

_ERROR_CODES = (
    (CapacityError, "capacity"),
    (ValidationError, "validation"),
    (ParameterError, "malformed"),
    (UnknownJobError, "unknown_job"),
)


def _send(sock_file, msg: dict) -> None:
    sock_file.write(json.dumps(msg, separators=(",", ":")).encode() + b"\n")
    sock_file.flush()


def _error(job_id, code: str, message: str) -> dict:
    return {"type": "error", "job_id": job_id, "code": code, "message": message}


def error_code(exc: BaseException) -> str:
    for kind, code in _ERROR_CODES:
        if isinstance(exc, kind):
            return code
    if isinstance(exc, (json.JSONDecodeError, KeyError, TypeError, ValueError)):
        return "malformed"
    return "internal"


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        backend = self.server.backend
        for line in self.rfile:
            if not line.strip():
                continue
            job_id = None
            try:
                msg = json.loads(line)
                kind = msg.get("type")
                job_id = msg.get("job_id")
                if kind == "describe":
                    _send(self.wfile, {"type": "describe", **backend.describe()})
                    continue
                if kind != "submit":
                    raise ParameterError(f"unknown message type {kind!r}")
                job = Job.from_wire(msg)
                backend.submit(job)
                _send(self.wfile, {"type": "ack", "job_id": job.job_id})
                _send(self.wfile, backend.result(job.job_id).to_wire())
            except OSError:
                return
            except Exception as exc:  # reported to the client, server keeps running
                code = error_code(exc)
                try:
                    _send(self.wfile, _error(job_id, code, str(exc)))
                except OSError:
                    return


class _Server(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True


class BackendServer:
    """Serve ``backend`` on ``(host, port)``; port 0 picks a free one."""

    def __init__(self, backend: Backend, host: str = "127.0.0.1", port: int = 0) -> None:
        self.backend = backend
        self._server = _Server((host, port), _Handler)
        self._server.backend = backend
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        host, port = self._server.server_address[:2]
        return host, port

    def start(self) -> "BackendServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self) -> "BackendServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def serve(address: tuple[str, int], backend: Backend) -> BackendServer:
    return BackendServer(backend, *address).start()


@dataclass
class _Pending:
    job: Job
    sock: socket.socket | None
    reader: object
    sent_at: float


class RemoteError(RuntimeError):
    """The server answered with an error message."""

    def __init__(self, code: str, message: str) -> None:
        super().__init__(f"{code}: {message}")
        self.code = code


class RemoteBackend(Backend):
    """Client for :class:`BackendServer`.

    Connection failures are retried ``retries`` times with exponential
    backoff starting at ``backoff`` seconds, after which TransportError is
    raised. Wall-clock round-trip time beyond what the server accounted for
    is charged to runtime_compile_and_transfer.
    """

    def __init__(
        self,
        host: str,
        port: int,
        retries: int = 3,
        backoff: float = 0.05,
        timeout: float | None = 60.0,
        clock: str = "wall",
    ) -> None:
        if clock != "wall":
            raise UnsupportedError("remote backends only support the wall clock")
        self.host, self.port = host, port
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self.clock = WallClock()
        self._pending: dict[str, _Pending] = {}
        self._lock = threading.Lock()
        info = self._describe()
        self.name = info["name"]
        self.num_qubits = int(info["num_qubits"])
        self.coupling_map = CouplingMap.from_json(info["coupling_map"])
        self.latency = LatencyModel.from_json(info["latency"])

    def _with_retries(self, action):
        delay = self.backoff
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                return action()
            except (OSError, EOFError) as exc:
                last = exc
                if attempt < self.retries:
                    time.sleep(delay)
                    delay *= 2
        raise TransportError(
            f"{self.host}:{self.port} unreachable after {self.retries} retries: {last}"
        ) from last

    def _connect(self) -> tuple[socket.socket, object]:
        sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        return sock, sock.makefile("rwb")

    @staticmethod
    def _read(reader) -> dict:
        line = reader.readline()
        if not line:
            raise EOFError("connection closed by server")
        msg = json.loads(line)
        if msg.get("type") == "error":
            raise RemoteError(msg.get("code", "internal"), msg.get("message", ""))
        return msg

    def _describe(self) -> dict:
        def action():
            sock, f = self._connect()
            with sock, f:
                _send(f, {"type": "describe"})
                return self._read(f)

        return self._with_retries(action)

    def _open(self, job: Job) -> _Pending:
        sock, f = self._connect()
        try:
            sent = time.perf_counter()
            _send(f, job.to_wire())
            ack = self._read(f)
            if ack.get("type") != "ack" or ack.get("job_id") != job.job_id:
                raise EOFError(f"unexpected reply {ack!r}")
        except BaseException:
            f.close()
            sock.close()
            raise
        return _Pending(job, sock, f, sent)

    def submit(self, job: Job) -> str:
        pending = self._with_retries(lambda: self._open(job))
        with self._lock:
            self._pending[job.job_id] = pending
        return job.job_id

    def result(self, job_id: str, timeout: float | None = None) -> JobResult:
        with self._lock:
            pending = self._pending.pop(job_id, None)
        if pending is None:
            raise UnknownJobError(job_id)
        state = {"p": pending, "first": True}

        def action():
            if not state["first"]:
                state["p"] = self._open(pending.job)
            state["first"] = False
            p = state["p"]
            try:
                if timeout is not None:
                    p.sock.settimeout(timeout)
                return self._read(p.reader), p.sent_at
            finally:
                p.reader.close()
                p.sock.close()

        msg, sent_at = self._with_retries(action)
        elapsed = time.perf_counter() - sent_at
        out = JobResult.from_wire(msg)
        extra = to_ns(elapsed) - out.timing.total_ns
        if extra > 0:
            out.timing.runtime_compile_and_transfer_ns += extra
        out.finished = self.clock.now()
        return out
