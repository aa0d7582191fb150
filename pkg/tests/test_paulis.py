import numpy as np
import pytest

from qscramble.paulis import (
    MULT_LABEL,
    MULT_PHASE,
    PAULI_MATS,
    PauliString,
    apply_pauli_to_matrix,
    identity_probability_profile,
    majorana_operators,
    majorana_string,
    matrix_from_pauli_coefficients,
    pauli_coefficients,
    qudit_basis_op,
    qudit_operator_basis,
)


def test_multiplication_table_matches_matrices():
    for a in range(4):
        for b in range(4):
            lhs = PAULI_MATS[a] @ PAULI_MATS[b]
            rhs = MULT_PHASE[a, b] * PAULI_MATS[MULT_LABEL[a, b]]
            assert np.allclose(lhs, rhs)


def test_string_weights_and_names():
    s = PauliString.from_name("IXZY", 4)
    assert s.weight == 3
    assert s.name() == "IXZY"
    assert PauliString((0, 0, 0), 3).weight == 0


def test_string_orthonormality():
    strings = [PauliString((a, b), 2) for a in range(4) for b in range(4)]
    for s1 in strings:
        for s2 in strings:
            ip = np.trace(s1.to_matrix().conj().T @ s2.to_matrix()) / 4
            assert ip == pytest.approx(1.0 if s1.labels == s2.labels else 0.0)


def test_string_multiplication_and_commutation():
    a = PauliString.from_name("XY", 2)
    b = PauliString.from_name("ZZ", 2)
    phase, prod = a * b
    dense = a.to_matrix() @ b.to_matrix()
    assert np.allclose(dense, phase * prod.to_matrix())
    assert a.commutes_with(a)
    x = PauliString.from_name("X", 1)
    z = PauliString.from_name("Z", 1)
    assert not x.commutes_with(z)


def test_pauli_completeness():
    # (1/2) sum_S S^dag_{ab} S_{cd} = delta_{ad} delta_{bc}
    comp = sum(np.einsum("ab,cd->abcd", s.conj().T, s) for s in PAULI_MATS) / 2
    target = np.einsum("ad,bc->abcd", np.eye(2), np.eye(2))
    assert np.allclose(comp, target)
    # completeness reproduces matrix elements of random operators
    rng = np.random.default_rng(0)
    A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    rebuilt = sum(np.trace(s.conj().T @ A) * s for s in PAULI_MATS) / 2
    assert np.allclose(rebuilt, A)


def test_decomposition_round_trip_and_norm():
    rng = np.random.default_rng(1)
    W = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
    c = pauli_coefficients(W, 5)
    assert np.allclose(matrix_from_pauli_coefficients(c), W)
    assert np.sum(np.abs(c) ** 2) == pytest.approx(
        np.real(np.trace(W @ W.conj().T)) / 32)


def test_identity_probability_profile():
    m = PauliString.from_name("IZI", 3).to_matrix()
    assert np.allclose(identity_probability_profile(m, 3), [1, 0, 1])
    with pytest.raises(ValueError):
        identity_probability_profile(np.zeros((4, 4)), 2)


def test_apply_pauli_to_matrix_both_sides():
    rng = np.random.default_rng(2)
    M = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    for label in (1, 2, 3):
        for site in range(4):
            P = PauliString.single_site("IXYZ"[label], site, 4).to_matrix()
            assert np.allclose(apply_pauli_to_matrix(label, site, M, 4, "left"),
                               P @ M)
            assert np.allclose(apply_pauli_to_matrix(label, site, M, 4, "right"),
                               M @ P)


@pytest.mark.parametrize("q", [2, 3, 5])
def test_qudit_basis_orthonormal_unitary_complete(q):
    ops = qudit_operator_basis(q)
    assert len(ops) == q * q
    assert np.allclose(ops[0], np.eye(q))
    for a in ops:
        assert np.allclose(a.conj().T @ a, np.eye(q))  # unitary
    gram = np.array([[np.trace(a.conj().T @ b) / q for b in ops] for a in ops])
    assert np.allclose(gram, np.eye(q * q))
    comp = sum(np.einsum("ab,cd->abcd", o.conj().T, o) for o in ops) / q
    target = np.einsum("ad,bc->abcd", np.eye(q), np.eye(q))
    assert np.allclose(comp, target)


def test_qudit_q2_reproduces_pauli_span():
    ops = qudit_operator_basis(2)
    # sigma^{01} has the spectrum of Z, sigma^{10} of X (up to phases)
    assert np.allclose(ops[1], np.diag([1, -1]))
    assert np.allclose(np.abs(ops[2]), np.abs(PAULI_MATS[1]))


def test_majorana_anticommutators():
    chis = majorana_operators(6)
    for a in range(6):
        for b in range(6):
            ac = chis[a] @ chis[b] + chis[b] @ chis[a]
            expect = np.eye(chis[0].shape[0]) * (1.0 if a == b else 0.0)
            assert np.allclose(ac, expect)


def test_majorana_string_normalization():
    chis = majorana_operators(6)
    dim = chis[0].shape[0]
    for occ in ([1, 0, 0, 0, 0, 0], [1, 1, 0, 1, 0, 0], [1, 1, 1, 1, 1, 1]):
        s = majorana_string(chis, occ)
        assert np.allclose(s, s.conj().T)  # Hermitian
        assert np.trace(s @ s).real == pytest.approx(dim)
