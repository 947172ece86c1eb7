import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import CNOT_MATRIX, X, Z, kron_hamiltonian, kron_word, random_state, single, xxz_terms
from floquet_vqe.errors import ContractViolation, ResourceLimitError
from floquet_vqe.simulator import (Circuit, Gate, GateKind, PauliHamiltonian, StateVector,
                                   apply_circuit, apply_gate, cnot, dense_unitary, expectation,
                                   inner_product, new_zero_state, rx, ry, rz, rzz, simulate)


def fixed(matrix):
    return Gate(GateKind.FIXED_SINGLE_QUBIT_UNITARY, (0,), matrix=tuple(np.ravel(matrix)))


class TestNewZeroState:
    def test_one_qubit(self):
        np.testing.assert_array_equal(new_zero_state(1).amplitudes, [1, 0])

    def test_three_qubits(self):
        amps = new_zero_state(3).amplitudes
        assert amps.shape == (8,)
        assert amps[0] == 1 and np.count_nonzero(amps) == 1

    def test_norm_twelve(self):
        assert new_zero_state(12).norm() == 1.0

    def test_twenty_supported(self):
        assert new_zero_state(20).amplitudes.size == 2**20

    def test_cap_names_requested_count(self):
        with pytest.raises(ResourceLimitError, match="21"):
            new_zero_state(21)

    def test_zero_qubits_rejected(self):
        with pytest.raises(ContractViolation):
            new_zero_state(0)


class TestGateValidation:
    @pytest.mark.parametrize("kind,targets", [
        (GateKind.RZZ, (0,)), (GateKind.CNOT, (1,)), (GateKind.RX, (0, 1)), (GateKind.RZZ, (2, 2)),
    ])
    def test_bad_targets(self, kind, targets):
        with pytest.raises(ContractViolation):
            Gate(kind, targets, 0 if kind.parameterized else None)

    def test_parameterized_needs_slot(self):
        with pytest.raises(ContractViolation):
            Gate(GateKind.RX, (0,))

    def test_fixed_rejects_slot(self):
        with pytest.raises(ContractViolation):
            Gate(GateKind.FIXED_X, (0,), 0)

    def test_fixed_matrix_must_be_unitary(self):
        with pytest.raises(ContractViolation):
            fixed([[1, 1], [0, 1]])

    def test_circuit_rejects_unreferenced_slot(self):
        with pytest.raises(ContractViolation, match="never referenced"):
            Circuit(1, (rx(0, 0),), 2)

    def test_circuit_rejects_out_of_range_target(self):
        with pytest.raises(ContractViolation):
            Circuit(2, (rx(2, 0),), 1)


class TestApplyGate:
    def test_rx_zero_is_identity(self, rng):
        psi = StateVector.from_amplitudes(random_state(3, rng))
        before = psi.amplitudes.copy()
        apply_gate(psi, rx(1, 0), [0.0])
        np.testing.assert_allclose(psi.amplitudes, before, atol=1e-15)

    def test_rzz_on_00_is_a_phase(self):
        theta = 0.73
        psi = apply_gate(new_zero_state(2), rzz(0, 1, 0), [theta])
        np.testing.assert_allclose(psi.amplitudes, [np.exp(-0.5j * theta), 0, 0, 0], atol=1e-15)
        np.testing.assert_allclose(psi.probabilities(), [1, 0, 0, 0], atol=1e-15)

    def test_rx_pi_flips_with_phase_minus_i(self):
        psi = apply_gate(new_zero_state(1), rx(0, 0), [np.pi])
        np.testing.assert_allclose(psi.amplitudes, [0, -1j], atol=1e-15)

    def test_scale_multiplies_parameter(self):
        a = apply_gate(new_zero_state(1), rx(0, 0, scale=2.0), [0.3])
        b = apply_gate(new_zero_state(1), rx(0, 0), [0.6])
        np.testing.assert_allclose(a.amplitudes, b.amplitudes, atol=1e-15)

    def test_out_of_range_qubit(self):
        with pytest.raises(ContractViolation):
            apply_gate(new_zero_state(2), rx(2, 0), [0.1])

    def test_missing_parameter(self):
        with pytest.raises(ContractViolation):
            apply_gate(new_zero_state(2), rx(0, 3), [0.1, 0.2])

    @pytest.mark.parametrize("make,op", [
        (lambda: rx(1, 0), lambda a: np.cos(a / 2) * np.eye(8) - 1j * np.sin(a / 2) * single(X, 1, 3)),
        (lambda: ry(2, 0), lambda a: np.cos(a / 2) * np.eye(8) - 1j * np.sin(a / 2) * kron_word("IIY")),
        (lambda: rz(0, 0), lambda a: np.cos(a / 2) * np.eye(8) - 1j * np.sin(a / 2) * single(Z, 0, 3)),
        (lambda: rzz(0, 2, 0), lambda a: np.cos(a / 2) * np.eye(8) - 1j * np.sin(a / 2) * kron_word("ZIZ")),
        (lambda: Gate(GateKind.FIXED_X, (2,)), lambda a: kron_word("IIX")),
    ])
    def test_matches_kronecker_oracle(self, rng, make, op):
        angle = 1.234
        v = random_state(3, rng)
        psi = apply_gate(StateVector.from_amplitudes(v), make(), [angle])
        np.testing.assert_allclose(psi.amplitudes, op(angle) @ v, atol=1e-12)

    def test_cnot_control_is_first_target(self):
        # |q1 q0> = |01>: control qubit 0 set, so qubit 1 flips -> |11>
        psi = StateVector.from_amplitudes([0, 1, 0, 0])
        apply_gate(psi, cnot(0, 1))
        np.testing.assert_array_equal(psi.amplitudes, [0, 0, 0, 1])

    def test_fixed_single_qubit_unitary(self, rng):
        h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        v = random_state(2, rng)
        psi = apply_gate(StateVector.from_amplitudes(v), Gate(
            GateKind.FIXED_SINGLE_QUBIT_UNITARY, (1,), matrix=tuple(h.ravel())))
        np.testing.assert_allclose(psi.amplitudes, np.kron(h, np.eye(2)) @ v, atol=1e-12)


class TestExpectation:
    def test_z_on_zero(self):
        assert expectation(new_zero_state(1), PauliHamiltonian(1, ((1.0, "Z"),))) == 1.0

    def test_xxz_on_zero_state(self):
        h = PauliHamiltonian(6, tuple(xxz_terms(6)))
        assert expectation(new_zero_state(6), h) == pytest.approx(5.0, abs=1e-12)

    def test_random_state_matches_dense_oracle(self, rng):
        words = ["XYZI", "ZZII", "IYYX", "XIIZ", "YXZY"]
        terms = [(float(c), w) for c, w in zip(rng.normal(size=5), words)]
        v = random_state(4, rng)
        ref = np.vdot(v, kron_hamiltonian(4, terms) @ v).real
        got = expectation(StateVector.from_amplitudes(v), PauliHamiltonian(4, tuple(terms)))
        assert got == pytest.approx(ref, abs=1e-10)

    def test_mismatched_qubits(self):
        with pytest.raises(ContractViolation):
            expectation(new_zero_state(2), PauliHamiltonian(3, ((1.0, "ZII"),)))


class TestPauliHamiltonian:
    def test_duplicates_rejected(self):
        with pytest.raises(ContractViolation, match="duplicate"):
            PauliHamiltonian(2, ((1.0, "ZZ"), (2.0, "ZZ")))

    def test_from_terms_merges(self):
        h = PauliHamiltonian.from_terms(2, [(1.0, "ZZ"), (2.0, "zz"), (1.0, "XI"), (-1.0, "XI")])
        assert h.terms == ((3.0, "ZZ"),)

    @pytest.mark.parametrize("terms", [((np.nan, "Z"),), ((1.0, "ZZ"),), ((1.0, "A"),)])
    def test_invalid_terms(self, terms):
        with pytest.raises(ContractViolation):
            PauliHamiltonian(1, terms)

    def test_to_matrix_matches_kronecker(self, rng):
        terms = [(float(c), w) for c, w in zip(rng.normal(size=4), ["XYZ", "YYI", "ZIX", "III"])]
        np.testing.assert_allclose(PauliHamiltonian(3, tuple(terms)).to_matrix(),
                                   kron_hamiltonian(3, terms), atol=1e-14)


class TestDenseUnitary:
    def test_empty_circuit_is_identity(self):
        u = dense_unitary(Circuit(3, (), 0, 0), [])
        np.testing.assert_array_equal(u, np.eye(8))

    def test_single_cnot(self):
        u = dense_unitary(Circuit(2, (cnot(0, 1),), 0), [])
        np.testing.assert_array_equal(u, CNOT_MATRIX)

    def test_first_column_is_simulation(self, rng):
        gates = (rx(0, 0), rzz(0, 1, 1), ry(2, 2), cnot(2, 0), rz(1, 3))
        c = Circuit(3, gates, 4)
        p = rng.uniform(0, 2 * np.pi, 4)
        np.testing.assert_allclose(dense_unitary(c, p)[:, 0], simulate(c, p).amplitudes, atol=1e-10)

    def test_dense_cap(self):
        with pytest.raises(ResourceLimitError):
            dense_unitary(Circuit(13, (rx(0, 0),), 1), [0.1])


class TestInnerProduct:
    def test_self_overlap(self, rng):
        psi = StateVector.from_amplitudes(random_state(5, rng))
        assert inner_product(psi, psi) == pytest.approx(1.0, abs=1e-10)

    def test_orthogonal_basis(self):
        assert inner_product(StateVector.from_amplitudes([1, 0]), StateVector.from_amplitudes([0, 1])) == 0

    def test_plus_zero(self):
        plus = StateVector.from_amplitudes([1, 1], normalize=True)
        assert inner_product(plus, new_zero_state(1)) == pytest.approx(1 / np.sqrt(2), abs=1e-15)

    def test_conjugates_first_argument(self):
        a = StateVector.from_amplitudes([1j, 0])
        assert inner_product(a, new_zero_state(1)) == pytest.approx(-1j)

    def test_mismatched(self):
        with pytest.raises(ContractViolation):
            inner_product(new_zero_state(1), new_zero_state(2))


def random_circuit(num_qubits, num_gates, rng):
    gates = []
    slot = 0
    for _ in range(num_gates):
        k = rng.integers(6)
        q = int(rng.integers(num_qubits))
        other = int((q + 1 + rng.integers(num_qubits - 1)) % num_qubits) if num_qubits > 1 else q
        if k == 0:
            gates.append(rx(q, slot))
        elif k == 1:
            gates.append(ry(q, slot))
        elif k == 2:
            gates.append(rz(q, slot, scale=float(rng.uniform(0.5, 2))))
        elif k == 3 and num_qubits > 1:
            gates.append(rzz(q, other, slot, scale=2.0))
        elif k == 4 and num_qubits > 1:
            gates.append(cnot(q, other))
            continue
        else:
            gates.append(Gate(GateKind.FIXED_X, (q,)))
            continue
        slot += 1
    return Circuit(num_qubits, tuple(gates), slot)


def kron_circuit(circuit, params):
    """Dense product of per-gate Kronecker matrices."""
    n = circuit.num_qubits
    u = np.eye(2**n, dtype=complex)
    for g in circuit.gates:
        a = g.scale * params[g.param_slot] if g.param_slot is not None else 0.0
        if g.kind is GateKind.CNOT:
            c, t = g.targets
            p0 = single(np.diag([1, 0]), c, n)
            p1 = single(np.diag([0, 1]), c, n)
            m = p0 + p1 @ single(X, t, n)
        elif g.kind is GateKind.RZZ:
            w = ["I"] * n
            for t in g.targets:
                w[t] = "Z"
            m = np.cos(a / 2) * np.eye(2**n) - 1j * np.sin(a / 2) * kron_word("".join(w))
        else:
            m = single(g.local_unitary(a), g.targets[0], n)
        u = m @ u
    return u


class TestProperties:
    def test_norm_preserved_over_ten_thousand_gates(self, rng):
        c = random_circuit(6, 10_000, rng)
        psi = simulate(c, rng.uniform(-np.pi, np.pi, c.num_params))
        assert abs(psi.norm() - 1) <= 1e-8

    @pytest.mark.parametrize("n", [2, 5, 8])
    def test_unitarity(self, rng, n):
        c = random_circuit(n, 60, rng)
        u = dense_unitary(c, rng.uniform(-np.pi, np.pi, c.num_params))
        assert np.max(np.abs(u.conj().T @ u - np.eye(2**n))) <= 1e-8

    @pytest.mark.parametrize("n", [1, 3, 4])
    def test_program_matches_kronecker_product(self, rng, n):
        c = random_circuit(n, 40, rng)
        p = rng.uniform(-np.pi, np.pi, c.num_params)
        np.testing.assert_allclose(dense_unitary(c, p), kron_circuit(c, p), atol=1e-10)

    def test_linearity(self, rng):
        c = random_circuit(4, 30, rng)
        p = rng.uniform(-np.pi, np.pi, c.num_params)
        a, b = random_state(4, rng), random_state(4, rng)
        alpha, beta = 0.3 - 0.8j, 1.1 + 0.2j

        def run(v):
            return apply_circuit(StateVector(4, v.astype(complex)), c, p).amplitudes

        np.testing.assert_allclose(run(alpha * a + beta * b), alpha * run(a) + beta * run(b), atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 6), seed=st.integers(0, 2**32 - 1), num_terms=st.integers(1, 8))
    def test_expectation_oracle_equivalence(self, n, seed, num_terms):
        rng = np.random.default_rng(seed)
        words = {"".join(rng.choice(list("IXYZ"), n)) for _ in range(num_terms)}
        terms = [(float(rng.normal()), w) for w in sorted(words)]
        v = random_state(n, rng)
        ref = np.vdot(v, kron_hamiltonian(n, terms) @ v).real
        got = expectation(StateVector(n, v), PauliHamiltonian(n, tuple(terms)))
        assert got == pytest.approx(ref, abs=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
    def test_random_circuits_preserve_norm_per_gate(self, seed, n):
        rng = np.random.default_rng(seed)
        c = random_circuit(n, 25, rng)
        p = rng.uniform(-10, 10, c.num_params)
        psi = StateVector(n, random_state(n, rng))
        for g in c.gates:
            apply_gate(psi, g, p)
            assert abs(psi.norm() - 1) <= 1e-12


def test_fixed_unitary_inverse_is_used_in_reverse():
    # FIXED gates are not parameterized, so the adjoint must conjugate-transpose them
    from floquet_vqe.gradients import adjoint_gradient, finite_difference_gradient
    s = np.array([[1, 0], [0, 1j]])
    c = Circuit(1, (rx(0, 0), fixed(s), ry(0, 1)), 2)
    h = PauliHamiltonian(1, ((1.0, "X"), (0.5, "Y")))
    p = np.array([0.4, -0.9])
    np.testing.assert_allclose(adjoint_gradient(c, p, h).grad, finite_difference_gradient(c, p, h),
                               atol=1e-8)
