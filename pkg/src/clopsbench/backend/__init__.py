"""Backends: a local simulated device and a TCP client/server pair."""

from .base import (
    Backend,
    BackendError,
    EventLog,
    Job,
    JobResult,
    LatencyModel,
    TimingLedger,
    TransportError,
    UnknownJobError,
    UnsupportedError,
    VirtualClock,
    WallClock,
)
from .config import backend_from_config, load_backend, load_config
from .local import ControlBinary, LocalBackend, pack_circuit
from .remote import BackendServer, RemoteBackend, RemoteError, serve

__all__ = [
    "Backend",
    "BackendError",
    "BackendServer",
    "ControlBinary",
    "EventLog",
    "Job",
    "JobResult",
    "LatencyModel",
    "LocalBackend",
    "RemoteBackend",
    "RemoteError",
    "TimingLedger",
    "TransportError",
    "UnknownJobError",
    "UnsupportedError",
    "VirtualClock",
    "WallClock",
    "backend_from_config",
    "load_backend",
    "load_config",
    "pack_circuit",
    "serve",
]
