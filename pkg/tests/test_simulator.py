from __future__ import annotations

import math
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clopsbench import gates
from clopsbench.circuit import Circuit, GateOp, ParameterError, measure, qv_model_circuit
from clopsbench.rng import SplitMix64
from clopsbench.simulator import (
    CapacityError,
    Counts,
    NoiseModel,
    heavy_bitstrings,
    heavy_output_probability,
    heavy_set,
    ideal_heavy_mass,
    run_counts,
    sample,
    simulate,
)


def embed(u: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """Dense 2^n operator for ``u`` on ``qubits`` (qubit 0 most significant)."""
    k = len(qubits)
    full = np.zeros((2**n, 2**n), dtype=complex)
    for col in range(2**n):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub = int("".join(str(bits[q]) for q in qubits), 2)
        for row_sub in range(2**k):
            amp = u[row_sub, sub]
            if amp == 0:
                continue
            out = list(bits)
            for j, q in enumerate(qubits):
                out[q] = (row_sub >> (k - 1 - j)) & 1
            full[int("".join(map(str, out)), 2), col] += amp
    return full


def perm_matrix(qubits: tuple[int, ...], n: int) -> np.ndarray:
    targets = sorted(qubits)
    full = np.zeros((2**n, 2**n))
    for col in range(2**n):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        out = list(bits)
        for src, dst in zip(qubits, targets):
            out[dst] = bits[src]
        full[int("".join(map(str, out)), 2), col] = 1
    return full


@st.composite
def small_circuits(draw):
    n = draw(st.integers(1, 4))
    ops = []
    for _ in range(draw(st.integers(0, 12))):
        kind = draw(st.sampled_from(["SX", "X", "RZ", "CX", "SU4", "PERM"] if n > 1 else ["SX", "X", "RZ"]))
        if kind in ("SX", "X", "RZ"):
            q = draw(st.integers(0, n - 1))
            params = (draw(st.floats(-4, 4)),) if kind == "RZ" else ()
            ops.append(GateOp(kind, (q,), params))
        elif kind == "PERM":
            qs = draw(st.permutations(range(n)))
            ops.append(GateOp("PERM", tuple(qs[: draw(st.integers(2, n))])))
        else:
            a, b = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
            params = tuple(draw(st.lists(st.floats(-4, 4), min_size=15, max_size=15))) if kind == "SU4" else ()
            ops.append(GateOp(kind, (a, b), params))
    return Circuit(n, tuple(ops))


@settings(max_examples=150, deadline=None)
@given(small_circuits())
def test_statevector_matches_dense_operator_oracle(circuit):
    n = circuit.width
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    for op in circuit.ops:
        m = perm_matrix(op.qubits, n) if op.name == "PERM" else embed(op.matrix(), op.qubits, n)
        psi = m @ psi
    assert np.allclose(simulate(circuit).amplitudes, psi, atol=1e-12)


def test_bit_order_convention():
    sv = simulate(Circuit(3, (GateOp("X", (0,)),)))
    assert np.argmax(np.abs(sv.amplitudes)) == 0b100


def test_counts_validation_and_json():
    c = Counts({"01": 3, "10": 2})
    assert c.shots == 5
    assert Counts.from_json(c.to_json()) == c
    with pytest.raises(ParameterError):
        Counts({"01": 3}, 4)
    with pytest.raises(ParameterError):
        Counts({"01": 1, "1": 1})
    assert Counts({"0": 2, "1": 0}) == Counts({"0": 2})


def test_sampling_matches_binomial_bounds():
    # RZ-free SX puts qubit 0 in an equal superposition: p(1) = 1/2.
    # A second SX on qubit 1 preceded by RZ(theta) gives p(1) = (1 - cos theta)/2 after SX RZ SX.
    theta = 1.1
    c = Circuit(2, (GateOp("SX", (0,)), GateOp("SX", (1,)), GateOp("RZ", (1,), (theta,)), GateOp("SX", (1,))))
    shots = 20_000
    counts = sample(simulate(c), shots, SplitMix64(5)).counts
    p0 = sum(v for k, v in counts.items() if k[0] == "1") / shots
    p1 = sum(v for k, v in counts.items() if k[1] == "1") / shots
    expect1 = (1 + math.cos(theta)) / 2
    for got, p in ((p0, 0.5), (p1, expect1)):
        assert abs(got - p) < 5 * math.sqrt(p * (1 - p) / shots)


def test_measure_to_named_clbits_and_partial_readout():
    c = Circuit(3, (GateOp("X", (0,)), measure(0, 1), measure(2, 0)))
    assert run_counts(c, 10, SplitMix64(0)).counts == {"01": 10}


def test_empty_circuit_reads_all_zero():
    assert run_counts(Circuit(4), 7, SplitMix64(0)).counts == {"0000": 7}


def test_idle_qubits_are_not_simulated():
    c = Circuit(40, (GateOp("X", (37,)), measure(37, 0), measure(3, 1)))
    assert run_counts(c, 5, SplitMix64(0)).counts == {"10": 5}


def test_capacity_and_measure_ordering_errors():
    wide = Circuit(16, tuple(GateOp("X", (q,)) for q in range(16)))
    with pytest.raises(CapacityError):
        run_counts(wide, 1, SplitMix64(0))
    with pytest.raises(ParameterError):
        simulate(Circuit(1, (measure(0), GateOp("X", (0,)))))


def test_full_depolarizing_scrambles_two_qubits():
    c = Circuit(2, (GateOp("CX", (0, 1)),))
    counts = run_counts(c, 8000, SplitMix64(1), NoiseModel(0.0, 1.0)).counts
    for key in ("00", "01", "10", "11"):
        assert abs(counts.get(key, 0) / 8000 - 0.25) < 0.03


def test_zero_noise_matches_noiseless_sampling():
    c = qv_model_circuit(3, SplitMix64(3))
    a = run_counts(c, 200, SplitMix64(9))
    b = run_counts(c, 200, SplitMix64(9), NoiseModel(0.0, 0.0))
    assert a == b


def test_heavy_set_is_strictly_above_median():
    assert heavy_set([0.1, 0.2, 0.3, 0.4]) == {2, 3}
    assert heavy_set([0.25] * 4) == set()
    assert heavy_bitstrings([0.1, 0.2, 0.3, 0.4], 2) == {"10", "11"}


def test_heavy_mass_can_fall_below_half_with_ties():
    # Ties at the median shrink the heavy set; the bound only holds without ties.
    assert ideal_heavy_mass(np.array([0.4, 0.3, 0.3, 0.0])) == pytest.approx(0.4)


@given(st.integers(1, 6).flatmap(
    lambda n: st.lists(st.floats(0.01, 1.0), min_size=2**n, max_size=2**n, unique=True)
))
def test_heavy_mass_at_least_half_without_ties(weights):
    # Outcome spaces have 2^n entries; with distinct values the heavy half
    # dominates the light half element by element.
    p = np.asarray(weights) / np.sum(weights)
    if len(set(p.tolist())) < len(p):
        return
    assert ideal_heavy_mass(p) >= 0.5 - 1e-12


def test_hop_accepts_strings_or_indices():
    counts = Counts({"00": 3, "11": 1})
    assert heavy_output_probability(counts, {"11"}) == 0.25
    assert heavy_output_probability(counts, {3, 0}) == 1.0
