"""Command-line entry point: ``qv``, ``clops``, ``serve`` and ``report``.

Exit codes: 0 success, 2 bad input or configuration, 3 backend unreachable,
1 anything else. Errors are written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .backend import TransportError, load_backend
from .backend.config import resolve_config_path
from .backend.remote import BackendServer, RemoteError
from .circuit import ParameterError
from .clops import ClopsConfig, ClopsReport, run_clops
from .qv import QVResult, qv_scan, run_qv
from .simulator import CapacityError
from .transpiler import ValidationError

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_TRANSPORT = 0, 1, 2, 3

REPORT_COLUMNS = ("Device", "Qubits", "QV", "Layers", "Shots", "CLOPS", "depth-1 circ per second")
BREAKDOWN_COLUMNS = ("Device", "circuit_execution", "circuit_delay", "runtime_compile_and_transfer", "total")

DEFAULTS = {
    "qv": {"circuits": 100, "shots": 100, "z": 2.0, "scan": False},
    "clops": {"m": 100, "k": 10, "shots": 100, "breakdown": False, "server_side_binding": False},
    "serve": {"host": "127.0.0.1", "port": 0},
    "report": {"files": []},
}


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    """Everything needed to repeat a run; echoed into every output."""

    command: str
    backend: str | None = None
    seed: int | None = None
    out: str | None = None
    overrides: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "backend": self.backend,
            "seed": self.seed,
            "out": self.out,
            "overrides": dict(sorted(self.overrides.items())),
        }


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="run manifest JSON supplying defaults")
    parser.add_argument("--seed", type=int, default=default, help="master seed (random if omitted)")
    parser.add_argument("--out", default=default, help="also write the JSON result here")
    fmt = parser.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json", default=default)
    fmt.add_argument("--table", dest="format", action="store_const", const="table", default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="clopsbench", description="Quantum Volume and CLOPS benchmarks")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    qv = sub.add_parser("qv", help="measure quantum volume at one width")
    _global_flags(qv, suppress=True)
    qv.add_argument("--backend")
    qv.add_argument("--width", type=int)
    qv.add_argument("--circuits", type=int)
    qv.add_argument("--shots", type=int)
    qv.add_argument("--z", type=float)
    qv.add_argument("--scan", action="store_const", const=True, help="run widths 2..width")

    clops = sub.add_parser("clops", help="run the timed CLOPS procedure")
    _global_flags(clops, suppress=True)
    clops.add_argument("--backend")
    clops.add_argument("--qv-result", dest="qv_result")
    clops.add_argument("--layers", type=int, help="layers when no QV result is given")
    clops.add_argument("--m", type=int)
    clops.add_argument("--k", type=int)
    clops.add_argument("--shots", type=int)
    clops.add_argument("--breakdown", action="store_const", const=True)
    clops.add_argument("--server-side-binding", dest="server_side_binding", action="store_const", const=True)

    serve = sub.add_parser("serve", help="serve a backend over TCP")
    _global_flags(serve, suppress=True)
    serve.add_argument("--backend")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)

    report = sub.add_parser("report", help="tabulate CLOPS report files")
    _global_flags(report, suppress=True)
    report.add_argument("files", nargs="*")
    return parser


def _resolve(args: argparse.Namespace) -> tuple[argparse.Namespace, RunManifest]:
    manifest = {}
    if args.config:
        path = Path(args.config)
        try:
            manifest = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read manifest {path}: {exc}") from exc
        if not isinstance(manifest, dict):
            raise UsageError(f"manifest {path} must be a JSON object")
    command = args.command or manifest.get("command")
    if command not in DEFAULTS:
        raise UsageError("a command is required: qv, clops, serve or report")
    args.command = command
    overrides = dict(manifest.get("overrides", {}))
    for key in ("backend", "seed", "out"):
        if key in manifest:
            overrides.setdefault(key, manifest[key])
    for key, value in overrides.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    for key, value in DEFAULTS[command].items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if getattr(args, "seed", None) is None:
        args.seed = secrets.randbits(64)
    if getattr(args, "format", None) is None:
        args.format = "table" if command == "report" else "json"
    if command in ("qv", "clops", "serve") and not getattr(args, "backend", None):
        raise UsageError(f"{command} needs --backend")
    skip = {"command", "config", "backend", "seed", "out", "format"}
    effective = {k: v for k, v in vars(args).items() if k not in skip}
    run = RunManifest(command, getattr(args, "backend", None), args.seed, args.out, effective)
    return args, run


def render_table(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [list(columns)] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def report_row(report: ClopsReport) -> tuple:
    c = report.config
    return (
        report.backend.get("name", "?"),
        report.backend.get("num_qubits", "?"),
        2 ** c["layers"],
        c["layers"],
        c["shots"],
        report.clops,
        report.depth1_per_second,
    )


def breakdown_row(report: ClopsReport) -> tuple:
    t = report.ledger
    return (
        report.backend.get("name", "?"),
        f"{t.circuit_execution:.1f}",
        f"{t.circuit_delay:.1f}",
        f"{t.runtime_compile_and_transfer:.1f}",
        f"{report.total_time:.1f}",
    )


def _emit(payload: dict, args, table: str | None = None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(table if args.format == "table" and table is not None else text)


def cmd_qv(args, run: RunManifest) -> int:
    if args.width is None:
        raise UsageError("qv needs --width")
    with load_backend(args.backend) as backend:
        kwargs = dict(num_circuits=args.circuits, shots=args.shots, z=args.z, seed=args.seed)
        if args.scan:
            best, results = qv_scan(backend, args.width, **kwargs)
            payload = {
                "kind": "qv_scan",
                "largest_width": best,
                "qv_value": None if best is None else 2**best,
                "results": [r.to_json() for r in results],
            }
        else:
            results = [run_qv(backend, args.width, **kwargs)]
            payload = results[0].to_json()
    payload["manifest"] = run.to_json()
    rows = [(r.width, f"{r.mean_hop:.4f}", f"{r.lower_bound:.4f}", r.passed, r.qv_value) for r in results]
    _emit(payload, args, render_table(("Width", "Mean HOP", "Lower bound", "Passed", "QV"), rows))
    return EXIT_OK


def cmd_clops(args, run: RunManifest) -> int:
    qv = None
    options = dict(
        templates=args.m,
        updates=args.k,
        shots=args.shots,
        master_seed=args.seed,
        server_side_binding=args.server_side_binding,
    )
    if args.qv_result:
        try:
            qv = QVResult.load(args.qv_result)
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise UsageError(f"cannot read QV result {args.qv_result}: {exc}") from exc
        cfg = ClopsConfig.from_qv(qv, **options)
    elif args.layers:
        cfg = ClopsConfig(layers=args.layers, **options)
    else:
        raise UsageError("clops needs --qv-result or --layers")
    with load_backend(args.backend) as backend:
        report = run_clops(backend, cfg, qv)
    payload = report.to_json()
    payload["manifest"] = run.to_json()
    table = render_table(REPORT_COLUMNS, [report_row(report)])
    breakdown = render_table(BREAKDOWN_COLUMNS, [breakdown_row(report)])
    if args.breakdown:
        if args.format == "table":
            table += "\n\n" + breakdown
        else:
            print(breakdown, file=sys.stderr)
    _emit(payload, args, table)
    return EXIT_OK


def cmd_serve(args, run: RunManifest) -> int:
    backend = load_backend(args.backend)
    server = BackendServer(backend, args.host, args.port)
    host, port = server.address
    print(json.dumps({"serving": f"{host}:{port}", "manifest": run.to_json()}), flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        backend.close()
    return EXIT_OK


def load_reports(files: Sequence[str]) -> list[ClopsReport]:
    reports = []
    for name in files:
        try:
            reports.append(ClopsReport.from_json(json.loads(Path(name).read_text())))
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{name}: not a readable CLOPS report ({exc})") from exc
    return reports


def cmd_report(args, run: RunManifest) -> int:
    reports = load_reports(args.files)
    rows = [report_row(r) for r in reports]
    payload = {
        "kind": "report",
        "columns": list(REPORT_COLUMNS),
        "rows": [list(r) for r in rows],
        "manifest": run.to_json(),
    }
    _emit(payload, args, render_table(REPORT_COLUMNS, rows))
    return EXIT_OK


COMMANDS = {"qv": cmd_qv, "clops": cmd_clops, "serve": cmd_serve, "report": cmd_report}


def _fail(code: int, kind: str, exc: BaseException) -> int:
    print(json.dumps({"error": kind, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args, run = _resolve(args)
        if getattr(args, "backend", None):
            resolve_config_path(args.backend)
        return COMMANDS[args.command](args, run)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", exc)
    except (FileNotFoundError, ParameterError, ValidationError, CapacityError) as exc:
        return _fail(EXIT_USAGE, type(exc).__name__, exc)
    except TransportError as exc:
        return _fail(EXIT_TRANSPORT, "transport", exc)
    except RemoteError as exc:
        return _fail(EXIT_FAILURE, "remote", exc)


if __name__ == "__main__":
    sys.exit(main())
