import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from univcheck.gates import (GateSet, GateSetError, ProjectiveClass, builtin, canonical_phase,
                             dump_gate_set, parse_gate_set, project_unitary, projectively_equal,
                             unitarity_defect)


def test_builtin_standard_matrices():
    assert np.allclose(builtin("H", 2), np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    assert np.allclose(builtin("T", 2), np.diag([1, np.exp(1j * np.pi / 4)]))
    f = builtin("F", 3)
    assert f.shape == (3, 3)
    assert unitarity_defect(f) < 1e-12


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_qudit_builtins_unitary(d):
    for name in ["I", "X", "Z", "F", "PHASE(pi/4)", "phase(0.3)"]:
        assert unitarity_defect(builtin(name, d)) < 1e-12


def test_weyl_relation():
    d = 5
    x, z = builtin("X", d), builtin("Z", d)
    omega = np.exp(2j * np.pi / d)
    assert np.allclose(z @ x, omega * x @ z)


def test_phase_gate_values():
    assert np.allclose(builtin("PHASE(pi/4)", 3), np.diag([1, 1, np.exp(1j * np.pi / 4)]))
    assert np.allclose(builtin("PHASE(-2*pi/3)", 2), np.diag([1, np.exp(-2j * np.pi / 3)]))
    with pytest.raises(GateSetError):
        builtin("PHASE(tau)", 2)


def test_builtin_dimension_rules():
    with pytest.raises(GateSetError):
        builtin("H", 3)
    with pytest.raises(GateSetError):
        builtin("CNOT", 2)
    assert builtin("CNOT", 4)[3, 2] == 1
    with pytest.raises(GateSetError):
        builtin("NOPE", 2)


def test_projectively_equal_examples():
    u = unitary_group.rvs(3, random_state=0)
    assert projectively_equal(u, np.exp(1j * np.pi / 7) * u)
    assert not projectively_equal(np.eye(2), builtin("X", 2))
    t = builtin("T", 2)
    # |tr(T^H T^H)| = |1 + e^{-i pi/2}| = sqrt(2)
    assert abs(abs(np.trace(t.conj().T @ t.conj().T)) - np.sqrt(2)) < 1e-12
    assert not projectively_equal(t, t.conj().T)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), st.floats(-np.pi, np.pi), st.integers(0, 2 ** 31))
def test_canonical_phase_is_class_invariant(d, phi, seed):
    u = unitary_group.rvs(d, random_state=seed)
    a, b = canonical_phase(u), canonical_phase(np.exp(1j * phi) * u)
    assert np.allclose(a, b, atol=1e-9)
    assert ProjectiveClass.of(u).contains(b)


def test_from_gates_inserts_identity():
    s = GateSet.from_gates([("H", builtin("H", 2)), ("T", builtin("T", 2))])
    assert len(s) == 3 and s.labels[0] == "I" and s.identity_inserted
    s2 = GateSet.from_gates([1j * np.eye(2), builtin("H", 2)])
    assert len(s2) == 2 and not s2.identity_inserted


def test_from_gates_dedups_projectively():
    h = builtin("H", 2)
    s = GateSet.from_gates([("H", h), ("H'", -1j * h)])
    assert s.labels == ("I", "H")
    assert s.multiplicities == (0, 2)


def test_from_gates_rejects_bad_input():
    with pytest.raises(GateSetError):
        GateSet.from_gates([np.array([[1, 0], [0, 1 + 1e-3]])])
    with pytest.raises(GateSetError):
        GateSet.from_gates([np.eye(2), np.eye(3)])
    with pytest.raises(GateSetError):
        GateSet.from_gates([])


def test_project_unitary_repairs_drift():
    h = builtin("H", 2) + 1e-6
    with pytest.raises(GateSetError):
        GateSet.from_gates([h])
    s = GateSet.from_gates([h], project=True)
    assert unitarity_defect(s.matrices[1]) < 1e-12
    assert unitarity_defect(project_unitary(h)) < 1e-12


def test_matrices_are_readonly():
    s = GateSet.from_gates([builtin("H", 2)])
    with pytest.raises(ValueError):
        s.matrices[0][0, 0] = 5


def test_symmetrized_adds_adjoints():
    s = GateSet.from_gates([builtin("T", 2), builtin("H", 2)])
    assert len(s.symmetrized()) == 4


def test_parse_builtin_file():
    doc = {"d": 2, "gates": [{"name": "H", "builtin": True}, {"name": "T", "builtin": True}]}
    s = parse_gate_set(json.dumps(doc).encode())
    assert len(s) == 3 and s.d == 2


def test_parse_round_trip():
    u = unitary_group.rvs(3, random_state=5)
    s = parse_gate_set(io.StringIO(dump_gate_set([("U", u)], 3)))
    assert np.allclose(s.matrices[1], u)


def test_parse_rejects_nonunitary():
    m = np.eye(2)
    m[1, 1] = 1 + 1e-3
    with pytest.raises(GateSetError, match="unitary"):
        parse_gate_set(dump_gate_set([("A", m)], 2))


@pytest.mark.parametrize("text", [
    '{"d": 1, "gates": [{"name": "I", "builtin": true}]}',
    '{"d": 2}',
    'not json',
    '{"d": 2, "gates": []}',
    '{"d": 2, "gates": [{"name": "A", "matrix": [[[1, 0]]]}]}',
    '{"d": 2, "gates": [{"name": "A"}]}',
    '{"d": 2.5, "gates": [{"name": "H", "builtin": true}]}',
])
def test_parse_rejects_malformed(text):
    with pytest.raises(GateSetError):
        parse_gate_set(text)
