from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clopsbench import gates
from clopsbench.circuit import random_su4_haar, su4_from_params
from clopsbench.kak import (
    DecompositionError,
    decompose_two_qubit,
    is_local,
    kak_decompose,
    kron_factor,
    phase_distance,
    sequence_matrix,
    zsx_angles,
)
from clopsbench.rng import SplitMix64


def test_haar_unitaries_reconstruct():
    rng = SplitMix64(1000)
    worst = 0.0
    for _ in range(1000):
        u = random_su4_haar(rng)
        seq = decompose_two_qubit(u)
        assert sum(item[0] == "CX" for item in seq) == 3
        worst = max(worst, phase_distance(sequence_matrix(seq), u), phase_distance(kak_decompose(u).matrix(), u))
    assert worst < 1e-9


@pytest.mark.parametrize(
    "u",
    [
        np.eye(4),
        gates.CX,
        gates.SWAP,
        gates.SWAP @ gates.CX @ gates.SWAP,
        np.kron(gates.SX, gates.X),
        gates.interaction(np.pi / 4, np.pi / 4, np.pi / 4),
        gates.interaction(0.3, 0.0, 0.0),
        np.diag(np.exp(1j * np.array([0.1, 0.7, -0.4, 1.3]))),
    ],
)
def test_special_gates_reconstruct(u):
    assert phase_distance(sequence_matrix(decompose_two_qubit(u)), u) < 1e-9


@given(st.lists(st.floats(-7, 7), min_size=15, max_size=15))
def test_parameterised_su4_reconstruct(angles):
    u = su4_from_params(angles)
    assert phase_distance(sequence_matrix(decompose_two_qubit(u)), u) < 1e-8


@given(st.floats(-7, 7), st.floats(-7, 7), st.floats(-7, 7))
def test_zsx_angles_round_trip(a, b, c):
    u = gates.euler_zsx(a, b, c)
    x, y, z = zsx_angles(u)
    assert phase_distance(gates.euler_zsx(x, y, z), u) < 1e-9


def test_kron_factor_and_locality():
    a = gates.euler_zsx(0.2, 1.1, -0.4)
    b = gates.euler_zsx(-1.0, 0.3, 2.2)
    phase, fa, fb = kron_factor(np.kron(a, b))
    assert np.allclose(phase * np.kron(fa, fb), np.kron(a, b))
    assert is_local(np.kron(a, b))
    assert not is_local(gates.CX)


def test_non_unitary_rejected():
    with pytest.raises(DecompositionError):
        kak_decompose(np.ones((4, 4)))
    with pytest.raises(DecompositionError):
        kak_decompose(np.eye(2))
