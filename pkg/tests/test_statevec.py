"""Statevector representation, gate kernels, and the matrix oracle."""

import numpy as np
import pytest

from qnntest.statevec import (Circuit, GateKind, GateOp, StateVector, apply_circuit,
                              apply_gate, circuit_matrix, measure_probs)

from conftest import random_state

INV_SQRT2 = 1.0 / np.sqrt(2.0)


def random_circuit(rng, n_qubits, n_gates=12):
    """Random circuit drawing from every gate kind that fits."""
    kinds_1q = [GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.U3, GateKind.H, GateKind.X]
    kinds_2q = [GateKind.CNOT, GateKind.CZ, GateKind.CROT, GateKind.SU4]
    slots_of = {GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.U3: 3,
                GateKind.H: 0, GateKind.X: 0, GateKind.CNOT: 0, GateKind.CZ: 0,
                GateKind.CROT: 3, GateKind.SU4: 15}
    gates = []
    slot = 0
    for _ in range(n_gates):
        if n_qubits >= 2 and rng.random() < 0.5:
            kind = kinds_2q[rng.integers(len(kinds_2q))]
            q1, q2 = rng.choice(n_qubits, size=2, replace=False)
            targets = (int(q1), int(q2))
        else:
            kind = kinds_1q[rng.integers(len(kinds_1q))]
            targets = (int(rng.integers(n_qubits)),)
        k = slots_of[kind]
        gates.append(GateOp(kind, targets, tuple(range(slot, slot + k))))
        slot += k
    circuit = Circuit(n_qubits, tuple(gates), slot)
    params = rng.uniform(0, 2 * np.pi, slot)
    return circuit, params


class TestBasics:
    def test_x_flips_zero(self):
        out = apply_gate(StateVector.basis(1, 0), GateOp(GateKind.X, (0,)))
        np.testing.assert_allclose(out.amps, [0, 1], atol=1e-15)

    def test_hadamard_on_zero(self):
        out = apply_gate(StateVector.basis(1, 0), GateOp(GateKind.H, (0,)))
        np.testing.assert_allclose(out.amps, [INV_SQRT2, INV_SQRT2], atol=1e-15)

    def test_cnot_completes_bell(self):
        plus = StateVector.from_unnormalized(np.array([1, 0, 1, 0]))  # (|00>+|10>)/sqrt2
        out = apply_gate(plus, GateOp(GateKind.CNOT, (0, 1)))
        np.testing.assert_allclose(out.amps, [INV_SQRT2, 0, 0, INV_SQRT2], atol=1e-15)

    def test_empty_circuit_is_identity(self):
        rng = np.random.default_rng(0)
        state = random_state(rng, 3)
        out = apply_circuit(state, Circuit(3, (), 0), [])
        np.testing.assert_allclose(out.amps, state.amps, atol=0)

    def test_standard_entangler_gives_bell(self):
        circuit = Circuit(2, (GateOp(GateKind.H, (0,)), GateOp(GateKind.CNOT, (0, 1))), 0)
        out = apply_circuit(StateVector.basis(2, 0), circuit, [])
        np.testing.assert_allclose(out.amps, [INV_SQRT2, 0, 0, INV_SQRT2], atol=1e-15)

    def test_value_semantics(self):
        state = StateVector.basis(2, 0)
        before = state.amps.copy()
        apply_gate(state, GateOp(GateKind.H, (0,)))
        np.testing.assert_array_equal(state.amps, before)


class TestValidation:
    def test_state_requires_normalization(self):
        with pytest.raises(ValueError, match="not normalized"):
            StateVector(1, np.array([1.0, 1.0]))

    def test_state_requires_power_of_two(self):
        with pytest.raises(ValueError, match="expected 2"):
            StateVector(2, np.array([1.0, 0.0]))

    def test_gate_target_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            apply_gate(StateVector.basis(1, 0), GateOp(GateKind.X, (1,)))

    def test_missing_parameter_slot(self):
        with pytest.raises(ValueError, match="does not cover"):
            apply_gate(StateVector.basis(1, 0), GateOp(GateKind.RX, (0,), (0,)), [])

    def test_duplicate_targets_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            GateOp(GateKind.CNOT, (0, 0))

    def test_param_slot_count_enforced(self):
        with pytest.raises(ValueError, match="parameter slots"):
            GateOp(GateKind.U3, (0,), (0,))

    def test_circuit_rejects_slot_overflow(self):
        with pytest.raises(ValueError, match="slot"):
            Circuit(1, (GateOp(GateKind.RX, (0,), (3,)),), 2)

    def test_circuit_dimension_mismatch(self):
        with pytest.raises(ValueError, match="qubits"):
            apply_circuit(StateVector.basis(2, 0), Circuit(3, (), 0), [])

    def test_param_length_must_match_circuit(self):
        circuit = Circuit(1, (GateOp(GateKind.RX, (0,), (0,)),), 1)
        with pytest.raises(ValueError, match="n_params"):
            apply_circuit(StateVector.basis(1, 0), circuit, [0.3, 0.4])


class TestMatrixOracle:
    def test_empty_two_qubit_circuit_is_identity_matrix(self):
        np.testing.assert_array_equal(circuit_matrix(Circuit(2, (), 0), []), np.eye(4))

    def test_single_x_matrix(self):
        mat = circuit_matrix(Circuit(1, (GateOp(GateKind.X, (0,)),), 0), [])
        np.testing.assert_allclose(mat, [[0, 1], [1, 0]], atol=1e-15)

    def test_random_circuits_match_matrix(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            circuit, params = random_circuit(rng, 3)
            mat = circuit_matrix(circuit, params)
            state = random_state(rng, 3)
            out = apply_circuit(state, circuit, params)
            np.testing.assert_allclose(mat @ state.amps, out.amps, atol=1e-12)

    def test_random_circuit_unitary(self):
        rng = np.random.default_rng(7)
        circuit, params = random_circuit(rng, 3, n_gates=20)
        mat = circuit_matrix(circuit, params)
        np.testing.assert_allclose(mat.conj().T @ mat, np.eye(8), atol=1e-10)

    def test_qubit_guard(self):
        with pytest.raises(ValueError, match="limited"):
            circuit_matrix(Circuit(7, (), 0), [])


class TestMeasureProbs:
    def test_one_state(self):
        np.testing.assert_allclose(measure_probs(StateVector.basis(1, 1), [0]), [0, 1])

    def test_bell_marginal(self):
        bell = StateVector.from_unnormalized(np.array([1, 0, 0, 1]))
        np.testing.assert_allclose(measure_probs(bell, [0]), [0.5, 0.5], atol=1e-15)

    def test_marginal_matches_bruteforce(self):
        rng = np.random.default_rng(3)
        state = random_state(rng, 4)
        for qubits in ([1, 3], [3, 1], [0, 2, 3], [2]):
            got = measure_probs(state, qubits)
            want = np.zeros(1 << len(qubits))
            for i, amp in enumerate(state.amps):
                outcome = 0
                for pos, q in enumerate(qubits):
                    bit = (i >> (4 - 1 - q)) & 1
                    outcome |= bit << (len(qubits) - 1 - pos)
                want[outcome] += abs(amp) ** 2
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_duplicate_qubit_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            measure_probs(StateVector.basis(2, 0), [0, 0])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            measure_probs(StateVector.basis(2, 0), [2])


class TestInvariants:
    def test_norm_preservation_1000_random_gates(self):
        rng = np.random.default_rng(11)
        kinds = [GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.U3, GateKind.H,
                 GateKind.X, GateKind.CNOT, GateKind.CZ, GateKind.CROT, GateKind.SU4]
        slots_of = {GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.U3: 3,
                    GateKind.H: 0, GateKind.X: 0, GateKind.CNOT: 0, GateKind.CZ: 0,
                    GateKind.CROT: 3, GateKind.SU4: 15}
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(2, 5))
            state = random_state(rng, n)
            kind = kinds[rng.integers(len(kinds))]
            if kind in (GateKind.CNOT, GateKind.CZ, GateKind.CROT, GateKind.SU4):
                q1, q2 = rng.choice(n, size=2, replace=False)
                targets = (int(q1), int(q2))
            else:
                targets = (int(rng.integers(n)),)
            k = slots_of[kind]
            out = apply_gate(state, GateOp(kind, targets, tuple(range(k))),
                             rng.uniform(0, 2 * np.pi, k))
            worst = max(worst, out.norm_error())
        assert worst < 1e-12

    def test_unitarity_across_sizes(self):
        rng = np.random.default_rng(13)
        for n in (2, 3, 4):
            circuit, params = random_circuit(rng, n, n_gates=15)
            mat = circuit_matrix(circuit, params)
            assert np.max(np.abs(mat.conj().T @ mat - np.eye(1 << n))) < 1e-10

    def test_composition_equals_sequential_gates(self):
        rng = np.random.default_rng(17)
        state = random_state(rng, 3)
        g1 = GateOp(GateKind.U3, (0,), (0, 1, 2))
        g2 = GateOp(GateKind.CROT, (0, 2), (3, 4, 5))
        params = rng.uniform(0, 2 * np.pi, 6)
        via_circuit = apply_circuit(state, Circuit(3, (g1, g2), 6), params)
        via_gates = apply_gate(apply_gate(state, g1, params), g2, params)
        np.testing.assert_array_equal(via_circuit.amps, via_gates.amps)

    def test_basis_completeness(self):
        rng = np.random.default_rng(19)
        state = random_state(rng, 4)
        np.testing.assert_allclose(measure_probs(state, [0, 1, 2, 3]),
                                   np.abs(state.amps) ** 2, atol=1e-12)
