"""Offline compilation to {SX, X, RZ, CX} on a coupling map, and circuit depth.

Compilation runs in two stages. ``route`` fixes the structure: it picks an
initial layout, tracks permutations as layout relabelling and inserts SWAPs
so every two-qubit operation lands on a coupling edge. ``lower`` turns the
routed operations into native gates. Every structural decision depends only
on gate kinds and qubits, never on angle values, so re-binding the
parameters of a routed template yields a native circuit of identical shape.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from . import gates
from .circuit import NATIVE, Circuit, GateOp, ParameterError
from .kak import decompose_two_qubit, diagonal_angle, zsx_angles
from .simulator import CapacityError

ENUMERATION_LIMIT = 8
BEAM_WIDTH = 1


class RoutingError(RuntimeError):
    pass


class ValidationError(ValueError):
    pass


# -------------------------------------------------------- coupling map ----

@dataclass(frozen=True)
class CouplingMap:
    num_qubits: int
    edges: frozenset[tuple[int, int]]

    def __init__(self, num_qubits: int, edges: Iterable[Sequence[int]]) -> None:
        norm = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b or not (0 <= a < num_qubits and 0 <= b < num_qubits):
                raise ParameterError(f"bad coupling edge ({a}, {b}) for {num_qubits} qubits")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "num_qubits", int(num_qubits))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def line(cls, n: int) -> "CouplingMap":
        return cls(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def from_json(cls, d: dict) -> "CouplingMap":
        return cls(int(d["num_qubits"]), [tuple(e) for e in d["edges"]])

    def to_json(self) -> dict:
        return {"num_qubits": self.num_qubits, "edges": [list(e) for e in sorted(self.edges)]}

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.num_qubits))
        g.add_edges_from(sorted(self.edges))
        return g

    def is_connected(self) -> bool:
        return self.num_qubits <= 1 or nx.is_connected(self.graph)

    def adjacent(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edges

    @cached_property
    def line_order(self) -> tuple[int, ...] | None:
        """Qubits in path order when the map is a simple path, else None."""
        n = self.num_qubits
        if n == 1:
            return (0,)
        if len(self.edges) != n - 1 or not self.is_connected():
            return None
        degrees = dict(self.graph.degree())
        if max(degrees.values()) > 2:
            return None
        start = min(q for q, d in degrees.items() if d == 1)
        order = [start]
        prev = None
        while len(order) < n:
            nxt = [q for q in sorted(self.graph[order[-1]]) if q != prev]
            prev = order[-1]
            order.append(nxt[0])
        return tuple(order)

    def subgraph(self, qubits: Sequence[int]) -> "CouplingMap":
        """Induced map on ``qubits``, relabelled ``qubits[i] -> i``."""
        index = {q: i for i, q in enumerate(qubits)}
        return CouplingMap(
            len(qubits),
            [(index[a], index[b]) for a, b in self.edges if a in index and b in index],
        )

    def select_qubits(self, n: int) -> tuple[int, ...]:
        """``n`` connected qubits, preferring a simple path (line)."""
        if n > self.num_qubits:
            raise CapacityError(f"need {n} qubits, device has {self.num_qubits}")
        g = self.graph
        for start in range(self.num_qubits):
            path = _find_path(g, start, n)
            if path:
                return tuple(path)
        for start in range(self.num_qubits):
            seen = list(nx.bfs_tree(g, start))[:n]
            if len(seen) == n:
                return tuple(seen)
        raise RoutingError(f"no connected set of {n} qubits")


def _find_path(g: nx.Graph, start: int, n: int) -> list[int] | None:
    stack = [(start, [start])]
    while stack:
        node, path = stack.pop()
        if len(path) == n:
            return path
        for nb in sorted(g[node], reverse=True):
            if nb not in path:
                stack.append((nb, path + [nb]))
    return None


# ---------------------------------------------------- permutation routing ----

def _odd_even_swaps(keys: list[int], first: int = 0) -> tuple[list[int], int]:
    """Odd-even transposition sort of ``keys``.

    Returns the left index of each adjacent swap, in order, and the number of
    rounds that performed at least one swap. ``first`` picks the parity of
    the opening round; either way ``len(keys)`` rounds suffice.
    """
    keys = list(keys)
    n = len(keys)
    swaps: list[int] = []
    rounds = 0
    for r in range(first, first + n + 1):
        if all(keys[i] <= keys[i + 1] for i in range(n - 1)):
            break
        did = False
        for i in range(r % 2, n - 1, 2):
            if keys[i] > keys[i + 1]:
                keys[i], keys[i + 1] = keys[i + 1], keys[i]
                swaps.append(i)
                did = True
        rounds += did
    return swaps, rounds


def _token_swaps(dest: dict[int, int], cmap: CouplingMap) -> list[tuple[int, int]]:
    """Swap sequence moving the token at ``p`` to ``dest[p]`` on any connected map.

    Greedy phase: swap across an edge whenever both tokens get closer to home.
    Remaining tokens are placed by peeling leaves off a BFS spanning tree.
    """
    g = cmap.graph
    dist = dict(nx.all_pairs_shortest_path_length(g))
    at = {p: p for p in range(cmap.num_qubits)}  # position -> token
    home = {p: dest.get(p, p) for p in range(cmap.num_qubits)}  # token -> target
    out: list[tuple[int, int]] = []

    def swap(a: int, b: int) -> None:
        at[a], at[b] = at[b], at[a]
        out.append((a, b))

    improved = True
    while improved:
        improved = False
        for a, b in sorted(cmap.edges):
            ta, tb = at[a], at[b]
            if dist[b][home[ta]] < dist[a][home[ta]] and dist[a][home[tb]] < dist[b][home[tb]]:
                swap(a, b)
                improved = True

    tree = nx.bfs_tree(g, 0).to_undirected()
    remaining = set(tree.nodes)
    while remaining:
        sub = tree.subgraph(remaining)
        leaf = min(v for v in remaining if sub.degree(v) <= 1)
        token = next(t for t in home if home[t] == leaf)
        pos = next(p for p, t in at.items() if t == token)
        path = nx.shortest_path(sub, pos, leaf)
        for a, b in zip(path, path[1:]):
            swap(a, b)
        remaining.discard(leaf)
    return out


def permutation_swaps(perm: Sequence[int], cmap: CouplingMap) -> list[tuple[int, int]]:
    """Adjacent swaps that realise PERM semantics for ``perm`` on ``cmap``.

    After the swaps, the state that was on ``perm[j]`` sits on ``sorted(perm)[j]``.
    """
    perm = [int(p) for p in perm]
    if sorted(set(perm)) != sorted(perm) or any(not 0 <= p < cmap.num_qubits for p in perm):
        raise ParameterError(f"{perm} is not a permutation of device qubits")
    if not cmap.is_connected():
        raise RoutingError("coupling map is disconnected")
    dest = {src: pos for pos, src in zip(sorted(perm), perm)}
    if all(k == v for k, v in dest.items()):
        return []
    order = cmap.line_order
    if order is not None:
        where = {q: i for i, q in enumerate(order)}
        keys = [where[dest.get(q, q)] for q in order]
        idx, _ = _odd_even_swaps(keys)
        return [(order[i], order[i + 1]) for i in idx]
    return _token_swaps(dest, cmap)


def swap_as_cx(a: int, b: int) -> list[GateOp]:
    return [GateOp("CX", (a, b)), GateOp("CX", (b, a)), GateOp("CX", (a, b))]


def route_permutation(perm: Sequence[int], cmap: CouplingMap) -> list[GateOp]:
    """CX triples (one per SWAP) realising ``perm`` on ``cmap``."""
    return [cx for a, b in permutation_swaps(perm, cmap) for cx in swap_as_cx(a, b)]


# -------------------------------------------------------------- routing ----

@dataclass(frozen=True)
class RoutedCircuit:
    """Physical-qubit operations before native lowering.

    ``sources[i]`` is the index of the input op that produced ``ops[i]``, or
    -1 for an inserted SWAP. ``initial_layout[j]`` / ``final_layout[j]`` give
    the physical qubit holding logical qubit ``j`` before / after the circuit.
    """

    cmap: CouplingMap
    width: int
    ops: tuple[GateOp, ...]
    sources: tuple[int, ...]
    initial_layout: tuple[int, ...]
    final_layout: tuple[int, ...]
    num_clbits: int

    def rebind(self, circuit: Circuit) -> "RoutedCircuit":
        """Same routing for a circuit of identical structure but new parameters."""
        new = []
        for op, src in zip(self.ops, self.sources):
            if src < 0:
                new.append(op)
                continue
            other = circuit.ops[src]
            if other.name != op.name:
                raise ValidationError("circuit structure differs from the routed template")
            new.append(GateOp(op.name, op.qubits, other.params))
        return RoutedCircuit(
            self.cmap, self.width, tuple(new), self.sources,
            self.initial_layout, self.final_layout, self.num_clbits,
        )


def _front_pairs(ops: Sequence[GateOp], start: int, current: list[int]) -> list[tuple[int, int]]:
    """Disjoint two-qubit interactions at the head of ``ops[start:]``.

    ``current`` maps logical position to a token id; PERMs are followed so
    the pairs are expressed in tokens. Stops at the first reuse of a token.
    """
    cur = list(current)
    seen: set[int] = set()
    pairs = []
    for op in ops[start:]:
        if op.name == "PERM":
            old = list(cur)
            for pos, src in zip(sorted(op.qubits), op.qubits):
                cur[pos] = old[src]
            continue
        if op.name in ("CX", "SU4", "SWAP"):
            a, b = cur[op.qubits[0]], cur[op.qubits[1]]
            if a in seen or b in seen:
                break
            seen.update((a, b))
            pairs.append((a, b))
        elif op.name in ("MEASURE", "BARRIER", "RESET"):
            if seen.intersection(cur[q] for q in op.qubits):
                break
    return pairs


def _line_arrangements(tokens: list, pairs: list[tuple[int, int]]):
    """Line orderings of ``tokens`` that keep each pair adjacent.

    Pairs become blocks (either orientation) placed among the remaining
    tokens, which keep their current relative order.
    """
    paired = {t for p in pairs for t in p}
    singles = [t for t in tokens if t not in paired]
    slots = len(pairs) + len(singles)
    for where in itertools.permutations(range(slots), len(pairs)):
        block_at = dict(zip(where, range(len(pairs))))
        for flips in itertools.product((False, True), repeat=len(pairs)):
            seq = []
            rest = iter(singles)
            for slot in range(slots):
                if slot in block_at:
                    i = block_at[slot]
                    a, b = pairs[i]
                    seq.extend((b, a) if flips[i] else (a, b))
                else:
                    seq.append(next(rest))
            yield tuple(seq)


class _Beam:
    """One partial routing: emitted ops, layout and a structural depth model."""

    __slots__ = ("ops", "sources", "log2phys", "holder", "shape", "swaps")

    def __init__(self, width: int, n: int, log2phys: list[int], holder: dict[int, int]) -> None:
        self.ops: list[GateOp] = []
        self.sources: list[int] = []
        self.log2phys = log2phys
        self.holder = holder
        self.shape = _Lowerer(n, numeric=False)
        self.swaps = 0

    def copy(self) -> "_Beam":
        other = _Beam.__new__(_Beam)
        other.ops = list(self.ops)
        other.sources = list(self.sources)
        other.log2phys = list(self.log2phys)
        other.holder = dict(self.holder)
        other.shape = self.shape.copy()
        other.swaps = self.swaps
        return other

    def swap(self, a: int, b: int, width: int) -> None:
        op = GateOp("SWAP", (a, b))
        self.ops.append(op)
        self.sources.append(-1)
        self.shape.feed([op])
        self.swaps += 1
        ta, tb = self.holder[a], self.holder[b]
        self.holder[a], self.holder[b] = tb, ta
        if ta < width:
            self.log2phys[ta] = b
        if tb < width:
            self.log2phys[tb] = a

    def emit(self, op: GateOp, index: int) -> None:
        phys = GateOp(op.name, tuple(self.log2phys[q] for q in op.qubits), op.params)
        self.ops.append(phys)
        self.sources.append(index)
        self.shape.feed([phys])

    def permute(self, op: GateOp) -> None:
        old = list(self.log2phys)
        for pos, src in zip(sorted(op.qubits), op.qubits):
            self.log2phys[pos] = old[src]
        for j, p in enumerate(self.log2phys):
            self.holder[p] = j


def _line_candidates(beam: _Beam, line: tuple[int, ...], pairs, width: int):
    """Swap lists (odd-even networks) to every pair-adjacent arrangement."""
    tokens = [beam.holder[q] for q in line]
    pos = {t: i for i, t in enumerate(tokens)}
    seen = set()
    for arrangement in _line_arrangements(tokens, pairs):
        keys = [0] * len(tokens)
        for target, tok in enumerate(arrangement):
            keys[pos[tok]] = target
        for first in (0, 1):
            idx, _ = _odd_even_swaps(keys, first)
            key = tuple(idx)
            if key not in seen:
                seen.add(key)
                yield [(line[i], line[i + 1]) for i in idx]


def route(circuit: Circuit, cmap: CouplingMap, beam_width: int = BEAM_WIDTH) -> RoutedCircuit:
    """Place and route ``circuit`` on ``cmap``.

    Permutations only relabel the layout. On line maps of up to
    ``ENUMERATION_LIMIT`` qubits, whenever the next layer of disjoint
    two-qubit gates is not all adjacent, every arrangement that makes it
    adjacent is reached by an odd-even transposition network; a beam of the
    ``beam_width`` shallowest partial routings (by native depth, estimated on
    structure alone) is carried forward and the shallowest complete one wins.
    Other maps fall back to moving one qubit along a shortest path.
    """
    width = circuit.width
    if width > cmap.num_qubits:
        raise CapacityError(f"circuit width {width} exceeds device size {cmap.num_qubits}")
    if not cmap.is_connected():
        raise RoutingError("coupling map is disconnected")
    n = cmap.num_qubits
    line = cmap.line_order
    use_line = line is not None and n <= ENUMERATION_LIMIT
    # Tokens: logical positions 0..width-1, empty slots width..n-1.
    if use_line:
        # Nothing has run yet, so any placement is free: take the first one
        # that makes the opening layer of interactions adjacent.
        pairs = _front_pairs(circuit.ops, 0, list(range(width)))
        arrangement = next(_line_arrangements(list(range(n)), pairs))
        placed = {tok: line[i] for i, tok in enumerate(arrangement)}
    else:
        placed = {tok: tok for tok in range(n)}
    log2phys = [placed[j] for j in range(width)]
    holder = {p: tok for tok, p in placed.items()}
    initial_layout = tuple(log2phys)

    beams = [_Beam(width, n, log2phys, holder)]
    for index, op in enumerate(circuit.ops):
        if op.name == "PERM":
            for beam in beams:
                beam.permute(op)
            continue
        if len(op.qubits) == 2 and op.name != "BARRIER":
            if use_line:
                pairs = _front_pairs(circuit.ops, index, list(range(width)))
                grown = []
                for bi, beam in enumerate(beams):
                    if all(cmap.adjacent(beam.log2phys[a], beam.log2phys[b]) for a, b in pairs):
                        grown.append(((beam.shape.depth(), beam.swaps, bi, 0), beam))
                        continue
                    for ci, swaps in enumerate(_line_candidates(beam, line, pairs, width)):
                        nxt = beam.copy()
                        for a, b in swaps:
                            nxt.swap(a, b, width)
                        trial = nxt.shape.copy()
                        trial.feed([_Shape("SU4", (nxt.log2phys[a], nxt.log2phys[b])) for a, b in pairs])
                        grown.append(((trial.depth(), nxt.swaps, bi, ci), nxt))
                grown.sort(key=lambda item: item[0])
                beams = [beam for _, beam in grown[:beam_width]]
            else:
                beam = beams[0]
                pa, pb = beam.log2phys[op.qubits[0]], beam.log2phys[op.qubits[1]]
                if not cmap.adjacent(pa, pb):
                    path = nx.shortest_path(cmap.graph, pa, pb)
                    for a, b in zip(path, path[1:-1]):
                        beam.swap(a, b, width)
        for beam in beams:
            beam.emit(op, index)
    best = min(beams, key=lambda b: (b.shape.depth(), b.swaps))
    return RoutedCircuit(
        cmap, width, tuple(best.ops), tuple(best.sources),
        initial_layout, tuple(best.log2phys), circuit.num_clbits,
    )


# -------------------------------------------------------------- lowering ----

@dataclass(frozen=True)
class NativeCircuit:
    """Native-gate circuit on physical qubits plus its layouts."""

    circuit: Circuit
    initial_layout: tuple[int, ...]
    final_layout: tuple[int, ...]

    @property
    def ops(self) -> tuple[GateOp, ...]:
        return self.circuit.ops

    @property
    def width(self) -> int:
        return self.circuit.width

    def embed(self, qubits: Sequence[int], device_size: int) -> "NativeCircuit":
        """Relabel local qubit ``i`` to device qubit ``qubits[i]``."""
        ops = tuple(GateOp(op.name, tuple(qubits[q] for q in op.qubits), op.params) for op in self.ops)
        return NativeCircuit(
            Circuit(device_size, ops, self.circuit.num_clbits),
            tuple(qubits[q] for q in self.initial_layout),
            tuple(qubits[q] for q in self.final_layout),
        )


# Two-qubit synthesis always has this shape (see kak.decompose_two_qubit):
# ("U", local qubit, kind) and ("CX", (local control, local target)).
_SYNTH_SHAPE = (
    ("U", 0, "general"), ("U", 1, "general"),
    ("U", 1, "diag"), ("CX", (1, 0)), ("U", 0, "diag"), ("U", 1, "general"),
    ("CX", (0, 1)), ("U", 1, "general"), ("CX", (1, 0)), ("U", 0, "diag"),
    ("U", 0, "general"), ("U", 1, "general"),
)
_RAW_CX = {"CX": 1, "SWAP": 3}


class _Block:
    __slots__ = ("qubits", "ops")

    def __init__(self, qubits: tuple[int, int], op: GateOp) -> None:
        self.qubits = qubits
        self.ops = [op]

    def copy(self) -> "_Block":
        other = _Block(self.qubits, self.ops[0])
        other.ops = list(self.ops)
        return other

    def needs_synthesis(self) -> bool:
        if any(op.name == "SU4" for op in self.ops):
            return True
        return sum(_RAW_CX.get(op.name, 0) for op in self.ops) > 3

    def matrix(self) -> np.ndarray:
        p, q = self.qubits
        out = np.eye(4, dtype=complex)
        for op in self.ops:
            m = op.matrix()
            if len(op.qubits) == 1:
                m = np.kron(m, gates.I2) if op.qubits[0] == p else np.kron(gates.I2, m)
            elif op.qubits != (p, q):
                m = gates.SWAP @ m @ gates.SWAP
            out = m @ out
        return out


class _Shape:
    """Stand-in op carrying only a name and qubits, for depth estimates."""

    __slots__ = ("name", "qubits")

    def __init__(self, name: str, qubits: tuple[int, ...]) -> None:
        self.name = name
        self.qubits = qubits


class _Lowerer:
    """Streaming native lowering.

    Two-qubit runs on the same pair are collected into blocks; a block holding
    an SU4, or more than three CX worth of gates, is re-synthesised with three
    CX, otherwise its gates are emitted as they are. Consecutive single-qubit
    unitaries on a qubit are fused; a fused run of RZs becomes one RZ and any
    other run becomes RZ SX RZ SX RZ. Per-qubit depth is tracked throughout.
    With ``numeric=False`` no matrices are touched and nothing is emitted.
    """

    def __init__(self, num_qubits: int, numeric: bool = True) -> None:
        self.numeric = numeric
        self.d = [0] * num_qubits
        self.pending: dict[int, tuple[np.ndarray | None, str]] = {}
        self.open: dict[int, _Block] = {}
        self.order: list[_Block] = []
        self.out: list[GateOp] = []

    def copy(self) -> "_Lowerer":
        other = _Lowerer(0, self.numeric)
        other.d = list(self.d)
        other.pending = dict(self.pending)
        mapping = {id(b): b.copy() for b in self.order}
        other.order = [mapping[id(b)] for b in self.order]
        other.open = {q: mapping[id(b)] for q, b in self.open.items()}
        return other

    # -- single-qubit fusion and depth --

    def _unitary(self, q: int, m: np.ndarray | None, kind: str) -> None:
        if q in self.pending:
            prev, pkind = self.pending[q]
            fused = m @ prev if self.numeric else None
            self.pending[q] = (fused, "diag" if kind == pkind == "diag" else "general")
        else:
            self.pending[q] = (m, kind)

    def _flush(self, q: int) -> None:
        if q not in self.pending:
            return
        m, kind = self.pending.pop(q)
        if kind == "diag":
            self.d[q] += 1
            if self.numeric:
                self.out.append(GateOp("RZ", (q,), (diagonal_angle(m),)))
            return
        self.d[q] += 5
        if self.numeric:
            a, b, c = zsx_angles(m)
            self.out.extend([
                GateOp("RZ", (q,), (c,)),
                GateOp("SX", (q,)),
                GateOp("RZ", (q,), (b,)),
                GateOp("SX", (q,)),
                GateOp("RZ", (q,), (a,)),
            ])

    def _cx(self, c: int, t: int, flush: bool = True) -> None:
        if flush:
            self._flush(c)
            self._flush(t)
        top = max(self.d[c], self.d[t]) + 1
        self.d[c] = self.d[t] = top
        if self.numeric:
            self.out.append(GateOp("CX", (c, t)))

    def _one_qubit_op(self, op) -> None:
        kind = "diag" if op.name == "RZ" else "general"
        self._unitary(op.qubits[0], op.matrix() if self.numeric else None, kind)

    # -- blocks --

    def _close(self, block: _Block | None) -> None:
        if block is None or block not in self.order:
            return
        self.order.remove(block)
        for q in block.qubits:
            self.open.pop(q, None)
        local = block.qubits
        if block.needs_synthesis():
            if self.numeric:
                seq = decompose_two_qubit(block.matrix())
                for item in seq:
                    if item[0] == "CX":
                        self._cx(local[item[1][0]], local[item[1][1]])
                    else:
                        self._unitary(local[item[1][0]], item[2], item[3])
            else:
                for item in _SYNTH_SHAPE:
                    if item[0] == "CX":
                        self._cx(local[item[1][0]], local[item[1][1]])
                    else:
                        self._unitary(local[item[1]], None, item[2])
            return
        for op in block.ops:
            if op.name == "CX":
                self._cx(*op.qubits)
            elif op.name == "SWAP":
                # SWAP (A x B) = (B x A) SWAP: carry pending rotations across
                # instead of flushing them, so they fuse on the far side.
                a, b = op.qubits
                pa, pb = self.pending.pop(a, None), self.pending.pop(b, None)
                if pa is not None:
                    self.pending[b] = pa
                if pb is not None:
                    self.pending[a] = pb
                self._cx(a, b, flush=False)
                self._cx(b, a, flush=False)
                self._cx(a, b, flush=False)
            else:
                self._one_qubit_op(op)

    def feed(self, ops: Iterable, placeholder: bool = False) -> None:
        for op in ops:
            if placeholder:
                op = _Shape("SU4", op.qubits)
            name = op.name
            if name in ("SX", "X", "RZ"):
                block = self.open.get(op.qubits[0])
                if block is not None:
                    block.ops.append(op)
                else:
                    self._one_qubit_op(op)
            elif name in ("CX", "SU4", "SWAP"):
                a, b = op.qubits
                ba, bb = self.open.get(a), self.open.get(b)
                if ba is not None and ba is bb:
                    ba.ops.append(op)
                    continue
                self._close(ba)
                self._close(bb)
                block = _Block((a, b), op)
                self.open[a] = self.open[b] = block
                self.order.append(block)
            elif name == "PERM":
                raise ValidationError("PERM must be routed before lowering")
            else:
                for q in op.qubits:
                    self._close(self.open.get(q))
                    self._flush(q)
                if name == "BARRIER":
                    if op.qubits:
                        top = max(self.d[q] for q in op.qubits)
                        for q in op.qubits:
                            self.d[q] = top
                else:
                    self.d[op.qubits[0]] += 1
                if self.numeric:
                    self.out.append(op)

    def finish(self) -> None:
        for block in list(self.order):
            self._close(block)
        for q in sorted(self.pending):
            self._flush(q)

    def depth(self) -> int:
        trial = self.copy()
        trial.finish()
        return max(trial.d, default=0)


def lower(routed: RoutedCircuit) -> NativeCircuit:
    lowerer = _Lowerer(routed.cmap.num_qubits)
    lowerer.feed(routed.ops)
    lowerer.finish()
    for op in lowerer.out:
        if op.name == "CX" and not routed.cmap.adjacent(*op.qubits):
            raise RoutingError(f"CX on {op.qubits} is not a coupling edge")
    circuit = Circuit(routed.cmap.num_qubits, tuple(lowerer.out), routed.num_clbits)
    return NativeCircuit(circuit, routed.initial_layout, routed.final_layout)


def routed_depth(routed: RoutedCircuit) -> int:
    """Depth that ``lower(routed)`` will have, found without any matrix work."""
    lowerer = _Lowerer(routed.cmap.num_qubits, numeric=False)
    lowerer.feed(routed.ops)
    lowerer.finish()
    return max(lowerer.d, default=0)


def transpile(circuit: Circuit, cmap: CouplingMap) -> NativeCircuit:
    """Compile ``circuit`` to native gates on ``cmap``, up to global phase and layout."""
    return lower(route(circuit, cmap))


def logical_statevector(native: NativeCircuit, max_qubits: int = 14) -> np.ndarray:
    """Statevector of ``native`` re-expressed on logical qubits.

    Physical qubits that hold no logical qubit must end in |0>.
    """
    from .simulator import simulate

    used = sorted({q for op in native.ops for q in op.qubits} | set(native.final_layout))
    local = {p: i for i, p in enumerate(used)}
    ops = tuple(
        GateOp(op.name, tuple(local[q] for q in op.qubits), op.params) for op in native.ops
    )
    sv = simulate(Circuit(len(used), ops, native.circuit.num_clbits), max_qubits).amplitudes
    tensor = sv.reshape((2,) * len(used))
    logical_axes = [local[p] for p in native.final_layout]
    rest = [a for a in range(len(used)) if a not in logical_axes]
    tensor = np.transpose(tensor, logical_axes + rest)
    width = len(logical_axes)
    return tensor.reshape(2**width, -1)[:, 0]


# ------------------------------------------------------------------ depth ----

@dataclass(frozen=True)
class DepthReport:
    depth: int
    qubit_depths: tuple[int, ...]

    def __post_init__(self) -> None:
        assert self.depth == max(self.qubit_depths, default=0)


def depth(circuit: Circuit | NativeCircuit) -> DepthReport:
    """Per-qubit and overall depth.

    One unit for every 1-qubit gate, measurement and reset; a CX first
    synchronises its two qubits then adds one; a barrier adds nothing but
    synchronises its qubits. Circuit depth is the maximum over qubits.
    """
    if isinstance(circuit, NativeCircuit):
        circuit = circuit.circuit
    d = [0] * circuit.width
    for op in circuit.ops:
        if op.name not in NATIVE:
            raise ValidationError(f"{op.name} is not a native gate")
        qs = op.qubits
        if op.name == "BARRIER":
            if qs:
                top = max(d[q] for q in qs)
                for q in qs:
                    d[q] = top
        elif op.name == "CX":
            top = max(d[qs[0]], d[qs[1]]) + 1
            d[qs[0]] = d[qs[1]] = top
        else:
            d[qs[0]] += 1
    return DepthReport(max(d, default=0), tuple(d))


def average_template_depth(templates, cmap: CouplingMap, theta: Sequence[Sequence[float]] | None = None) -> float:
    """Mean native depth of the templates bound to their first parameter vectors.

    Depth does not depend on the angle values, so any binding gives the same
    answer; by default every slot is bound to zero.
    """
    from .circuit import bind_parameters

    templates = list(templates)
    if not templates:
        raise ParameterError("no templates")
    total = 0
    for i, t in enumerate(templates):
        values = theta[i] if theta is not None else [0.0] * t.num_params
        total += depth(transpile(bind_parameters(t, values), cmap)).depth
    return total / len(templates)
