"""Backend construction from JSON config files."""

from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path
from typing import Mapping

from ..circuit import ParameterError
from ..simulator import NoiseModel
from ..transpiler import CouplingMap
from .base import Backend, LatencyModel
from .local import LocalBackend
from .remote import RemoteBackend

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

_LATENCY_FIELDS = {f.name for f in fields(LatencyModel)}
_OTHER_FIELDS = {"name", "num_qubits", "coupling_map", "clock", "noise", "seed", "address", "max_qubits"}


def resolve_config_path(path: str | Path) -> Path:
    """A file path, or the stem of a bundled config such as ``bogota``."""
    p = Path(path)
    if p.exists():
        return p
    bundled = CONFIG_DIR / f"{p.name}.json" if p.suffix == "" else CONFIG_DIR / p.name
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"backend config {path} not found")


def load_config(path: str | Path) -> dict:
    p = resolve_config_path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{p}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ParameterError(f"{p}: config must be a JSON object")
    data.setdefault("name", p.stem)
    return data


def _coupling_map(spec, num_qubits: int) -> CouplingMap:
    if spec is None or spec == "line":
        return CouplingMap.line(num_qubits)
    if isinstance(spec, Mapping):
        return CouplingMap.from_json(spec)
    return CouplingMap(num_qubits, spec)


def backend_from_config(config: Mapping, seed: int | None = None, **overrides) -> Backend:
    """Build a backend; an ``address`` field ("host:port") selects a remote one."""
    cfg = {**config, **overrides}
    unknown = set(cfg) - _LATENCY_FIELDS - _OTHER_FIELDS
    if unknown:
        raise ParameterError(f"unknown backend config fields: {sorted(unknown)}")
    if "address" in cfg:
        host, _, port = str(cfg["address"]).rpartition(":")
        return RemoteBackend(host or "127.0.0.1", int(port), clock=cfg.get("clock", "wall"))
    if "num_qubits" not in cfg:
        raise ParameterError("backend config needs num_qubits")
    n = int(cfg["num_qubits"])
    noise = cfg.get("noise")
    return LocalBackend(
        n,
        _coupling_map(cfg.get("coupling_map"), n),
        LatencyModel.from_json({k: v for k, v in cfg.items() if k in _LATENCY_FIELDS}),
        clock=cfg.get("clock", "virtual"),
        noise=None if noise is None else NoiseModel(**noise),
        seed=int(cfg.get("seed", 0) if seed is None else seed),
        name=str(cfg.get("name", "local")),
        max_qubits=int(cfg.get("max_qubits", 14)),
    )


def load_backend(path: str | Path, seed: int | None = None, **overrides) -> Backend:
    return backend_from_config(load_config(path), seed, **overrides)
