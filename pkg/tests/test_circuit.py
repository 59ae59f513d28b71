from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clopsbench import gates
from clopsbench.circuit import (
    Circuit,
    GateOp,
    ParameterError,
    QVTemplate,
    bind_parameters,
    generate_qv_templates,
    measure,
    qv_model_circuit,
    random_su4_haar,
    su4_from_params,
    su4_op,
)
from clopsbench.rng import SplitMix64, next_params

angles = st.lists(st.floats(-10, 10, allow_nan=False), min_size=15, max_size=15)


@pytest.mark.parametrize(
    "name, qubits, params",
    [
        ("CX", (0, 0), ()),
        ("CX", (0,), ()),
        ("RZ", (0,), ()),
        ("SU4", (0, 1), (0.0,) * 14),
        ("FOO", (0,), ()),
        ("SX", (-1,), ()),
        ("RZ", (0,), (float("nan"),)),
        ("PERM", (0, 0), ()),
        ("MEASURE", (0,), ()),
    ],
)
def test_invalid_ops_rejected(name, qubits, params):
    with pytest.raises(ParameterError):
        GateOp(name, qubits, params)


def test_circuit_bounds_and_double_measure():
    with pytest.raises(ParameterError):
        Circuit(2, (GateOp("CX", (0, 2)),))
    with pytest.raises(ParameterError):
        Circuit(2, (measure(0), measure(0)))
    assert Circuit(3, (measure(2),)).num_clbits == 3


def test_json_round_trip():
    c = qv_model_circuit(4, SplitMix64(2))
    assert Circuit.from_json(c.to_json()) == c
    assert Circuit.from_json(c.to_json()).dumps() == c.dumps()


def test_su4_zero_angles_is_identity():
    assert np.allclose(su4_from_params(np.zeros(15)), np.eye(4), atol=1e-14)


@given(angles)
def test_su4_params_give_special_unitaries(a):
    u = su4_from_params(a)
    assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-10)
    assert abs(abs(np.linalg.det(u)) - 1) < 1e-10


def test_su4_layout_first_and_last_locals():
    # Zero local angles give X on each qubit (SX SX), so only the leading
    # qubit-0 unitary survives, sandwiched by the trailing X.
    a = np.zeros(15)
    a[0] = 0.3
    expected = np.kron(gates.X @ gates.euler_zsx(0.3, 0, 0), gates.I2)
    assert np.allclose(su4_from_params(a), expected)
    b = np.zeros(15)
    b[12] = 0.3
    assert np.allclose(su4_from_params(b), np.kron(gates.I2, gates.euler_zsx(0.3, 0, 0) @ gates.X))


def test_explicit_matrix_op_round_trips():
    u = random_su4_haar(SplitMix64(4))
    assert np.allclose(su4_op(0, 1, u).matrix(), u)


def test_haar_trace_moment():
    # E|tr U|^2 = 1 for Haar U(d), d >= 2; SU(d) shares the value for d = 4.
    rng = SplitMix64(21)
    vals = []
    for _ in range(4000):
        u = random_su4_haar(rng)
        assert abs(np.linalg.det(u) - 1) < 1e-10
        vals.append(abs(np.trace(u)) ** 2)
    assert abs(np.mean(vals) - 1.0) < 0.08


def test_templates_are_deterministic_permutations():
    a = generate_qv_templates(5, 5, 20, 42)
    b = generate_qv_templates(5, 5, 20, 42)
    assert a == b
    for t in a:
        assert t.num_params == 5 * 2 * 15
        assert len(t.slot_names()) == t.num_params
        for p in t.permutations:
            assert sorted(p) == list(range(5))
    assert len({t.permutations for t in a}) == 20
    assert QVTemplate.from_json(a[3].to_json()) == a[3]


def test_bind_parameters_shape_and_errors():
    t = generate_qv_templates(4, 4, 1, 0)[0]
    c = bind_parameters(t, next_params(1, t.num_params))
    counts = c.count_ops()
    assert counts == {"PERM": 4, "SU4": 8, "MEASURE": 4}
    with pytest.raises(ParameterError):
        bind_parameters(t, np.zeros(t.num_params - 1))
    with pytest.raises(ParameterError):
        bind_parameters(t, np.full(t.num_params, np.inf))


@pytest.mark.parametrize("width", [2, 3, 5, 6])
def test_model_circuits_are_square(width):
    c = qv_model_circuit(width, SplitMix64(width))
    assert c.count_ops()["PERM"] == width
    assert c.count_ops()["SU4"] == width * (width // 2)


def test_generation_rejects_degenerate_sizes():
    with pytest.raises(ParameterError):
        generate_qv_templates(1, 5, 1, 0)
    with pytest.raises(ParameterError):
        generate_qv_templates(5, 0, 1, 0)
