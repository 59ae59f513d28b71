"""Random circuit generators and independent oracles shared by the tests."""

from __future__ import annotations

import networkx as nx
import numpy as np

from clopsbench.circuit import Circuit, GateOp, measure, random_su4_haar, su4_op
from clopsbench.rng import SplitMix64
from clopsbench.transpiler import CouplingMap


def random_logical_circuit(rng: SplitMix64, n: int, nops: int) -> Circuit:
    ops = []
    for _ in range(nops):
        k = rng.randbelow(7)
        if k == 0:
            ops.append(GateOp("SX", (rng.randbelow(n),)))
        elif k == 1:
            ops.append(GateOp("RZ", (rng.randbelow(n),), (rng.random() * 6.3,)))
        elif k == 2:
            ops.append(GateOp("X", (rng.randbelow(n),)))
        elif k == 3:
            a, b = rng.shuffle(list(range(n)))[:2]
            ops.append(GateOp("CX", (a, b)))
        elif k == 4:
            a, b = rng.shuffle(list(range(n)))[:2]
            ops.append(su4_op(a, b, random_su4_haar(rng)))
        elif k == 5:
            a, b = rng.shuffle(list(range(n)))[:2]
            ops.append(GateOp("SWAP", (a, b)))
        else:
            m = 2 + rng.randbelow(n - 1)
            ops.append(GateOp("PERM", tuple(rng.shuffle(list(range(n)))[:m])))
    return Circuit(n, tuple(ops))


def coupling_maps(n: int, rng: SplitMix64) -> list[CouplingMap]:
    maps = [CouplingMap.line(n), CouplingMap(n, [(0, i) for i in range(1, n)]), CouplingMap.line(n + 2)]
    if n > 2:
        maps.append(CouplingMap(n, [(i, (i + 1) % n) for i in range(n)]))
    # Random spanning tree plus an extra edge.
    order = rng.shuffle(list(range(n)))
    edges = [(order[i], order[rng.randbelow(i)]) for i in range(1, n)]
    if n > 3:
        a, b = rng.shuffle(list(range(n)))[:2]
        if (a, b) not in edges and (b, a) not in edges:
            edges.append((a, b))
    maps.append(CouplingMap(n, edges))
    return maps


def random_native_circuit(rng: SplitMix64, n: int, nops: int) -> Circuit:
    ops = []
    measured: set[int] = set()
    for _ in range(nops):
        free = [q for q in range(n) if q not in measured]
        k = rng.randbelow(8)
        if k <= 2 and free:
            q = free[rng.randbelow(len(free))]
            ops.append(GateOp(("SX", "X", "RZ")[k], (q,), (rng.random(),) if k == 2 else ()))
        elif k == 3 and len(free) >= 2:
            a, b = rng.shuffle(free)[:2]
            ops.append(GateOp("CX", (a, b)))
        elif k == 4:
            m = rng.randbelow(n + 1)
            ops.append(GateOp("BARRIER", tuple(rng.shuffle(list(range(n)))[:m])))
        elif k == 5 and free:
            ops.append(GateOp("RESET", (free[rng.randbelow(len(free))],)))
        elif k == 6 and free and rng.random() < 0.3:
            q = free[rng.randbelow(len(free))]
            measured.add(q)
            ops.append(measure(q))
        elif free:
            ops.append(GateOp("SX", (free[0],)))
    return Circuit(n, tuple(ops))


def dag_depth(circuit: Circuit) -> int:
    """Longest weighted path through the op dependency DAG.

    Each op is a node weighted 0 for a barrier and 1 otherwise, with an edge
    from the previous op on each of its qubits.
    """
    g = nx.DiGraph()
    g.add_node("src", w=0)
    last = {q: "src" for q in range(circuit.width)}
    for i, op in enumerate(circuit.ops):
        g.add_node(i, w=0 if op.name == "BARRIER" else 1)
        for q in op.qubits:
            g.add_edge(last[q], i)
            last[q] = i
    best = {}
    for node in nx.topological_sort(g):
        preds = [best[p] for p in g.predecessors(node)]
        best[node] = max(preds, default=0) + g.nodes[node]["w"]
    return max(best.values())


def apply_swaps_to_labels(n: int, swaps) -> list[int]:
    labels = list(range(n))
    for a, b in swaps:
        labels[a], labels[b] = labels[b], labels[a]
    return labels


def gf2_cx_network(n: int, ops) -> list[int]:
    """Where each basis bit ends up after a CX-only network (independent of any simulator)."""
    rows = np.eye(n, dtype=np.uint8)
    for op in ops:
        c, t = op.qubits
        rows[t] ^= rows[c]
    out = []
    for i in range(n):
        hits = np.flatnonzero(rows[:, i])
        out.append(int(hits[0]) if hits.size == 1 else -1)
    return out
