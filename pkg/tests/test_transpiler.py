from __future__ import annotations

import itertools

import numpy as np
import pytest
from helpers import apply_swaps_to_labels, coupling_maps, dag_depth, gf2_cx_network, random_logical_circuit, random_native_circuit

from clopsbench.circuit import Circuit, GateOp, bind_parameters, generate_qv_templates, measure
from clopsbench.kak import phase_distance
from clopsbench.rng import SplitMix64, next_params
from clopsbench.simulator import run_counts, simulate
from clopsbench.transpiler import (
    CouplingMap,
    RoutedCircuit,
    RoutingError,
    ValidationError,
    average_template_depth,
    depth,
    logical_statevector,
    lower,
    permutation_swaps,
    route,
    route_permutation,
    routed_depth,
    transpile,
)

NATIVE_OUT = {"SX", "X", "RZ", "CX", "MEASURE", "BARRIER"}


def test_coupling_map_basics():
    cm = CouplingMap(4, [(1, 0), (2, 1), (1, 2), (3, 2)])
    assert cm.edges == frozenset({(0, 1), (1, 2), (2, 3)})
    assert cm.line_order in ((0, 1, 2, 3), (3, 2, 1, 0))
    assert CouplingMap.from_json(cm.to_json()) == cm
    star = CouplingMap(4, [(0, 1), (0, 2), (0, 3)])
    assert star.line_order is None
    with pytest.raises(Exception):
        CouplingMap(2, [(0, 2)])


def test_select_qubits_finds_connected_paths():
    edges = [(0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7), (7, 10)]
    cm = CouplingMap(11, edges)
    for n in range(1, 7):
        qs = cm.select_qubits(n)
        assert len(set(qs)) == n
        assert cm.subgraph(qs).is_connected
    with pytest.raises(RoutingError):
        CouplingMap(4, [(0, 1), (2, 3)]).select_qubits(3)


def test_all_permutations_on_a_line_route_correctly():
    cm = CouplingMap.line(5)
    for perm in itertools.permutations(range(5)):
        ops = route_permutation(perm, cm)
        assert all(cm.adjacent(*op.qubits) for op in ops)
        # PERM sends the state on perm[j] to j.
        moved = gf2_cx_network(5, ops)
        assert all(moved[perm[j]] == j for j in range(5))


@pytest.mark.parametrize("seed", range(20))
def test_token_swapping_on_general_graphs(seed):
    rng = SplitMix64(seed)
    n = 3 + rng.randbelow(5)
    for cm in coupling_maps(n, rng)[1:]:
        if cm.num_qubits != n:
            continue
        perm = rng.shuffle(list(range(n)))
        swaps = permutation_swaps(perm, cm)
        assert all(cm.adjacent(a, b) for a, b in swaps)
        labels = apply_swaps_to_labels(n, swaps)
        assert [labels[j] for j in range(n)] == list(perm)


def test_disconnected_map_cannot_route():
    with pytest.raises(RoutingError):
        permutation_swaps([1, 0, 2, 3], CouplingMap(4, [(0, 2), (1, 3)]))


@pytest.mark.parametrize("seed", range(8))
def test_transpile_preserves_semantics(seed):
    rng = SplitMix64(100 + seed)
    for _ in range(6):
        n = 2 + rng.randbelow(4)
        c = random_logical_circuit(rng, n, 1 + rng.randbelow(20))
        ideal = simulate(c).amplitudes
        for cm in coupling_maps(n, rng):
            native = transpile(c, cm)
            assert {op.name for op in native.ops} <= NATIVE_OUT
            assert all(cm.adjacent(*op.qubits) for op in native.ops if op.name == "CX")
            assert phase_distance(logical_statevector(native), ideal) < 1e-8


def test_measurements_follow_logical_qubits():
    c = Circuit(3, (GateOp("X", (0,)), GateOp("PERM", (0, 2, 1)), measure(0), measure(1), measure(2)))
    native = transpile(c, CouplingMap.line(3))
    assert run_counts(native.circuit, 4, SplitMix64(0)).counts == {"100": 4}


def test_lowering_rejects_unrouted_perm():
    c = Circuit(2, (GateOp("PERM", (1, 0)),))
    routed = route(c, CouplingMap.line(2))
    bad = RoutedCircuit(routed.cmap, 2, c.ops, (0,), (0, 1), (0, 1), 0)
    with pytest.raises(ValidationError):
        lower(bad)


def test_depth_rules_by_hand():
    c = Circuit(3, (
        GateOp("SX", (0,)),
        GateOp("RZ", (0,), (0.2,)),
        GateOp("CX", (0, 1)),
        GateOp("BARRIER", (1, 2)),
        GateOp("X", (2,)),
        measure(0),
    ))
    report = depth(c)
    assert report.qubit_depths == (4, 3, 4)
    assert report.depth == 4
    with pytest.raises(ValidationError):
        depth(Circuit(2, (GateOp("SWAP", (0, 1)),)))


def test_depth_matches_dag_oracle():
    rng = SplitMix64(77)
    for _ in range(200):
        c = random_native_circuit(rng, 1 + rng.randbelow(6), rng.randbelow(40))
        assert depth(c).depth == dag_depth(c)


def test_smallest_template_depth():
    # One SU4 on two qubits: 5 + CX + 5 + CX + 5 + CX + 5 single-qubit
    # slices along the critical path, then the measurement.
    t = generate_qv_templates(2, 1, 1, 0)[0]
    assert average_template_depth([t], CouplingMap.line(2)) == 24


def test_depth_is_parameter_independent():
    cm = CouplingMap.line(5)
    for t in generate_qv_templates(5, 5, 5, 3):
        routed = route(bind_parameters(t, np.zeros(t.num_params)), cm)
        shapes = set()
        for seed in range(3):
            bound = bind_parameters(t, next_params(seed, t.num_params))
            native = lower(routed.rebind(bound))
            shapes.add(tuple((op.name, op.qubits) for op in native.ops))
            assert depth(native).depth == routed_depth(routed)
        assert len(shapes) == 1


def test_rebind_rejects_structure_change():
    t = generate_qv_templates(3, 2, 1, 0)[0]
    routed = route(bind_parameters(t, np.zeros(t.num_params)), CouplingMap.line(3))
    other = Circuit(3, tuple(GateOp("SX", (0,)) for _ in range(len(bind_parameters(t, np.zeros(t.num_params)).ops))))
    with pytest.raises(ValidationError):
        routed.rebind(other)


def test_embed_relabels_to_device_qubits():
    c = Circuit(2, (GateOp("CX", (0, 1)), measure(0), measure(1)))
    native = transpile(c, CouplingMap.line(2)).embed((7, 8), 10)
    assert native.width == 10
    assert {q for op in native.ops for q in op.qubits} == {7, 8}
