import numpy as np
import pytest

from qscramble.core import (
    DenseOperator,
    DenseState,
    NumericalError,
    ResourceLimitError,
    Subsystem,
    apply_to_sites,
    apply_unitary,
    basis_state,
    entropy,
    haar_matrices,
    haar_matrix,
    haar_unitary,
    matrix_norms,
    mutual_information,
    partial_trace,
    random_state,
    tensor_embed,
)
from qscramble.paulis import PAULI_MATS

BELL = DenseState(np.array([1, 0, 0, 1]) / np.sqrt(2), 2)
GHZ3 = DenseState(np.concatenate([[1], np.zeros(6), [1]]) / np.sqrt(2), 3)


def test_tensor_embed_single_site():
    op = tensor_embed(PAULI_MATS[1], 0, 1)
    assert np.allclose(op.matrix, [[0, 1], [1, 0]])


def test_tensor_embed_identity():
    op = tensor_embed(np.eye(2), 1, 3)
    assert np.allclose(op.matrix, np.eye(8))


def test_tensor_embed_kronecker_placement():
    # site 0 is the most significant bit: Z on site 1 of 2 alternates fast
    op = tensor_embed(PAULI_MATS[3], 1, 2)
    assert np.allclose(np.diag(op.matrix), [1, -1, 1, -1])


def test_tensor_embed_dimension_mismatch():
    with pytest.raises(ValueError):
        tensor_embed(np.eye(3), 0, 2)


def test_apply_unitary_identity_and_flip():
    psi = basis_state([0, 0])
    assert np.allclose(apply_unitary(psi, np.eye(4)).amplitudes, psi.amplitudes)
    one = apply_unitary(basis_state([0]), PAULI_MATS[1])
    assert np.allclose(one.amplitudes, basis_state([1]).amplitudes)


def test_apply_unitary_norm_preserved_many_seeds():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        psi = random_state(3, rng)
        U = haar_matrix(8, rng)
        out = apply_unitary(psi, U)
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-10


def test_apply_unitary_rejects_nonunitary_when_checked():
    psi = basis_state([0])
    with pytest.raises(ValueError):
        apply_unitary(psi, np.array([[1.0, 0.0], [0.0, 2.0]]), check_unitary=True)


def test_apply_to_sites_matches_embedding():
    rng = np.random.default_rng(3)
    psi = random_state(4, rng)
    u = haar_matrix(4, rng)
    direct = apply_to_sites(psi, u, [1, 2])
    full = np.kron(np.kron(np.eye(2), u), np.eye(2))
    assert np.allclose(direct.amplitudes, full @ psi.amplitudes)


def test_apply_to_sites_nonadjacent_ordering():
    rng = np.random.default_rng(4)
    psi = random_state(3, rng)
    u = haar_matrix(4, rng)
    out = apply_to_sites(psi, u, [2, 0])
    # swap sites into listed order via explicit permutation oracle
    perm = np.zeros((8, 8))
    for b in range(8):
        b2, b1, b0 = (b >> 2) & 1, (b >> 1) & 1, b & 1  # sites 0,1,2
        idx = (b0 << 2) | (b2 << 1) | b1  # new order [2, 0, 1]
        perm[idx, b] = 1.0
    ref = perm.T @ np.kron(u, np.eye(2)) @ perm @ psi.amplitudes
    assert np.allclose(out.amplitudes, ref)


def test_partial_trace_product_state():
    rho = partial_trace(basis_state([0, 1]), [0])
    assert np.allclose(rho.matrix, [[1, 0], [0, 0]])


def test_partial_trace_bell():
    rho = partial_trace(BELL, [0])
    assert np.allclose(rho.matrix, np.eye(2) / 2)


def test_partial_trace_ghz_two_site():
    rho = partial_trace(GHZ3, [0, 1])
    expect = np.zeros((4, 4))
    expect[0, 0] = expect[3, 3] = 0.5
    assert np.allclose(rho.matrix, expect, atol=1e-12)


def test_partial_trace_of_operator_input():
    rng = np.random.default_rng(0)
    psi = random_state(3, rng)
    rho_full = DenseOperator(np.outer(psi.amplitudes, psi.amplitudes.conj()), 3)
    a = partial_trace(rho_full, [1]).matrix
    b = partial_trace(psi, [1]).matrix
    assert np.allclose(a, b)


def test_partial_trace_empty_keep_errors():
    with pytest.raises(ValueError):
        partial_trace(BELL, [])


def test_entropy_examples():
    assert entropy(DenseOperator(np.eye(2) / 2, 1), 1) == pytest.approx(1.0)
    proj = DenseOperator(np.diag([1.0, 0.0]), 1)
    assert entropy(proj, 2) == pytest.approx(0.0, abs=1e-12)
    rho = DenseOperator(np.diag([0.75, 0.25]), 1)
    assert entropy(rho, 2) == pytest.approx(-np.log2(10 / 16), abs=1e-12)


def test_entropy_negative_eigenvalue_raises():
    with pytest.raises(NumericalError):
        entropy(DenseOperator(np.diag([1.1, -0.1]), 1))


def test_entropy_order_inequality_and_range():
    rng = np.random.default_rng(1)
    for _ in range(50):
        psi = random_state(4, rng)
        rho = partial_trace(psi, [0, 1])
        s1, s2 = entropy(rho, 1), entropy(rho, 2)
        assert -1e-9 <= s2 <= s1 + 1e-9
        assert s1 <= 2.0 + 1e-9


def test_entropy_complement_symmetry():
    rng = np.random.default_rng(2)
    for _ in range(50):
        psi = random_state(4, rng)
        sa = entropy(partial_trace(psi, [0, 2]))
        sb = entropy(partial_trace(psi, [1, 3]))
        assert abs(sa - sb) < 1e-9


def test_entropy_inequalities_random_states():
    # subadditivity, triangle, strong subadditivity on 3-qubit pure states
    rng = np.random.default_rng(5)
    for _ in range(200):
        psi = random_state(3, rng)
        s = {}
        for region in [(0,), (1,), (2,), (0, 1), (1, 2), (0, 1, 2)]:
            s[region] = entropy(partial_trace(psi, region))
        assert s[(0,)] + s[(1,)] >= s[(0, 1)] - 1e-9
        assert abs(s[(0,)] - s[(1,)]) <= s[(0, 1)] + 1e-9
        assert s[(0, 1)] + s[(1, 2)] >= s[(0, 1, 2)] + s[(1,)] - 1e-9


def test_mutual_information_examples():
    assert mutual_information(BELL, [0], [1]) == pytest.approx(2.0)
    prod = basis_state([0, 1])
    assert mutual_information(prod, [0], [1]) == pytest.approx(0.0, abs=1e-12)
    assert mutual_information(GHZ3, [0], [1]) == pytest.approx(1.0)


def test_mutual_information_bounds_and_overlap_error():
    rng = np.random.default_rng(7)
    for _ in range(30):
        psi = random_state(4, rng)
        i = mutual_information(psi, [0], [1, 2])
        cap = 2 * min(entropy(partial_trace(psi, [0])),
                      entropy(partial_trace(psi, [1, 2])))
        assert -1e-9 <= i <= cap + 1e-9
    with pytest.raises(ValueError):
        mutual_information(BELL, [0], [0])


def test_haar_first_moment_dim2():
    rng = np.random.default_rng(11)
    us = haar_matrices(2, 100_000, rng)
    # E U_{a'a} U*_{b'b} = delta_{a'b'} delta_{ab} / 2
    prod = np.einsum("nxa,nyb->nxayb", us, us.conj())
    mean = prod.mean(axis=0)
    sig = prod.std(axis=0) / np.sqrt(us.shape[0])
    target = np.einsum("xy,ab->xayb", np.eye(2), np.eye(2)) / 2
    assert np.all(np.abs(mean - target) <= 3 * np.abs(sig) + 1e-4)


def test_haar_fourth_moment_contraction_dim4():
    d = 4
    rng = np.random.default_rng(13)
    us = haar_matrices(d, 100_000, rng)
    # E |U_00|^2 |U_11|^2: in the second-moment formula only the direct
    # term survives (all swap deltas vanish for these indices), giving
    # 1/(d^2 - 1)
    samples = np.abs(us[:, 0, 0]) ** 2 * np.abs(us[:, 1, 1]) ** 2
    expect = 1.0 / (d ** 2 - 1)
    sig = samples.std() / np.sqrt(samples.size)
    assert abs(samples.mean() - expect) < 3 * sig + 1e-5


def test_haar_mean_convergence_rate():
    # MC error of the first moment shrinks like 1/sqrt(samples)
    rng = np.random.default_rng(17)
    errs = []
    for n in (500, 50_000):
        us = haar_matrices(2, n, rng)
        mean = np.einsum("nxa,nya->nxy", us, us.conj()).mean(axis=0)
        errs.append(np.abs(mean - np.eye(2) / 2 * np.trace(np.eye(2))).max())
    assert errs[1] < errs[0] / 3  # expect ~1/10


def test_haar_unitary_properties():
    u = haar_unitary(8, 5)
    assert u.num_sites == 3
    dev = np.abs(u.matrix.conj().T @ u.matrix - np.eye(8)).max()
    assert dev < 1e-9
    phase = haar_unitary(1, 3)
    assert abs(abs(phase.matrix[0, 0]) - 1.0) < 1e-12


def test_matrix_norms_examples():
    tn, fro, on = matrix_norms(PAULI_MATS[1])
    assert (tn, fro, on) == pytest.approx((2.0, np.sqrt(2.0), 1.0))
    assert matrix_norms(np.zeros((3, 3))) == pytest.approx((0.0, 0.0, 0.0))
    assert matrix_norms(np.eye(4)) == pytest.approx((4.0, 2.0, 1.0))


def test_matrix_norm_inequality():
    rng = np.random.default_rng(23)
    for _ in range(20):
        m = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        _, fro, on = matrix_norms(m)
        assert fro ** 2 / 8 <= on ** 2 + 1e-9


def test_state_caps():
    with pytest.raises(ResourceLimitError):
        basis_state([0] * 27)
    with pytest.raises(ResourceLimitError):
        tensor_embed(np.eye(2), 0, 15)


def test_subsystem_validation():
    with pytest.raises(ValueError):
        Subsystem((0, 0), 3)
    with pytest.raises(ValueError):
        Subsystem((5,), 3)
    assert Subsystem((0, 2), 4).complement().site_indices == (1, 3)
