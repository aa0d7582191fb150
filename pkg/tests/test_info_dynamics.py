import numpy as np
import pytest

from qscramble.core import haar_matrix, mutual_information
from qscramble.info_dynamics import (
    ReferenceSetup,
    haar_average_mutual_info_profile,
    haar_average_purity_exact,
    haar_renyi_mutual_closed_form,
    haar_renyi_mutual_exact_mean,
    mutual_info_otoc_bound_check,
    mutual_info_profile,
    purity_as_otoc_check,
    tripartite_I3,
)
from qscramble.random_circuit import brickwork_heisenberg


def brickwork_unitary(n, depth, rng):
    from qscramble.random_circuit import layer_bonds
    from qscramble.core import haar_matrix as hm

    U = np.eye(2 ** n, dtype=complex)
    for layer in range(depth):
        for bond in layer_bonds(n, layer):
            g = hm(4, rng)
            full = np.kron(np.kron(np.eye(2 ** bond), g),
                           np.eye(2 ** (n - bond - 2)))
            U = full @ U
    return U


def test_initial_state_entanglement_pattern():
    st = ReferenceSetup(4, "pure")
    assert mutual_info_profile(st, np.eye(16), [(1,)])[0] == pytest.approx(2.0)
    assert mutual_info_profile(st, np.eye(16), [(2,)])[0] == pytest.approx(
        0.0, abs=1e-12)


def test_pure_complementarity_and_monotonicity():
    st = ReferenceSetup(5, "pure")
    rng = np.random.default_rng(0)
    U = haar_matrix(32, rng)
    state = st.evolve(U)
    for split in range(1, 5):
        b = tuple(range(1, 1 + split))
        bbar = tuple(range(1 + split, 6))
        total = mutual_information(state, (0,), b) + \
            mutual_information(state, (0,), bbar)
        assert total == pytest.approx(2.0, abs=1e-9)
    profile = [mutual_information(state, (0,), tuple(range(1, 1 + l)))
               for l in range(1, 6)]
    assert np.all(np.diff(profile) >= -1e-9)


def test_mixed_setup_memory_isolated():
    st = ReferenceSetup(4, "maximally_mixed")
    rng = np.random.default_rng(1)
    state = st.evolve(haar_matrix(16, rng))
    assert mutual_information(state, (0,), st.memory_sites) == pytest.approx(
        0.0, abs=1e-9)
    assert mutual_information(state, (0,), st.system_sites) == pytest.approx(
        2.0, abs=1e-9)


def test_closed_form_examples():
    # half system for the pure state: exactly 1 up to the finite-N term
    assert haar_renyi_mutual_closed_form(10, 5, "pure") == pytest.approx(
        1.0, abs=2 ** -9)
    assert haar_renyi_mutual_closed_form(6, 6, "maximally_mixed") == \
        pytest.approx(2.0)
    assert haar_renyi_mutual_closed_form(6, 5, "maximally_mixed") == \
        pytest.approx(np.log2(1.75))
    # mixed formula reduces to the pure one exactly at s=0
    for l in range(9):
        assert haar_renyi_mutual_closed_form(8, l, "mixed", 0) == \
            haar_renyi_mutual_closed_form(8, l, "pure")


def test_exact_mean_endpoints():
    assert haar_average_purity_exact(8, 0) == pytest.approx(1.0)
    assert haar_average_purity_exact(8, 8) == pytest.approx(0.5)
    assert haar_renyi_mutual_exact_mean(8, 4) == pytest.approx(1.0)
    assert haar_renyi_mutual_exact_mean(8, 8) == pytest.approx(2.0)


def test_mc_profile_matches_exact_mean_small_n():
    st = ReferenceSetup(5, "pure")
    ls, est, sig = haar_average_mutual_info_profile(
        st, 400, np.random.default_rng(3))
    for l, e, s in zip(ls, est, sig):
        assert abs(e - haar_renyi_mutual_exact_mean(5, l)) <= \
            3 * s + 1e-9, f"l={l}"


def test_mc_matches_maximally_mixed_closed_form():
    st = ReferenceSetup(4, "maximally_mixed")
    rng = np.random.default_rng(4)
    import qscramble.core as core
    from qscramble.core import partial_trace, purity

    vals = {1: [], 2: []}
    for _ in range(300):
        state = st.evolve(haar_matrix(16, rng))
        for e in (1, 2):
            region = st.system_sites[:4 - e]
            pr = purity(partial_trace(state, (0,)))
            pb = purity(partial_trace(state, region))
            prb = purity(partial_trace(state, (0,) + region))
            vals[e].append((pr, pb, prb))
    for e in (1, 2):
        arr = np.array(vals[e]).mean(axis=0)
        i2 = -np.log2(arr[0]) - np.log2(arr[1]) + np.log2(arr[2])
        target = haar_renyi_mutual_closed_form(4, 4 - e, "maximally_mixed")
        assert abs(i2 - target) < 0.03


def test_tripartite_examples():
    mm = ReferenceSetup(4, "maximally_mixed")
    # identity circuit, E away from the injection qubit
    assert tripartite_I3(mm, np.eye(16), (4,)) == pytest.approx(0.0, abs=1e-9)
    # scrambled: approach -2, and never below it
    rng = np.random.default_rng(5)
    vals = [tripartite_I3(mm, haar_matrix(16, rng), (3, 4)) for _ in range(40)]
    assert np.mean(vals) == pytest.approx(-2.0, abs=0.15)
    assert np.all(np.array(vals) >= -2.0 - 1e-9)


def test_purity_otoc_identity_identity_circuit():
    d, o = purity_as_otoc_check(np.eye(16), 3, 4)
    assert d == pytest.approx(o, abs=1e-12)


def test_purity_otoc_identity_swap_layer():
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]],
                    dtype=float)
    U = np.kron(swap, swap)  # one layer of swaps on 4 qubits
    d, o = purity_as_otoc_check(U, 2, 4)
    assert d == pytest.approx(o, abs=1e-12)


def test_purity_otoc_identity_haar_and_late_value():
    rng = np.random.default_rng(6)
    N = 6
    for _ in range(5):
        U = haar_matrix(2 ** N, rng)
        d, o = purity_as_otoc_check(U, 3, N)
        assert d == pytest.approx(o, abs=1e-9)
    # scrambled value approaches 7 / 2^{N+2}
    assert d == pytest.approx(7.0 / 2 ** (N + 2), rel=0.1)


def test_mutual_info_bound_trivial_and_scrambled():
    lhs, rhs = mutual_info_otoc_bound_check(np.eye(16), 3, 4)
    assert rhs == pytest.approx(0.0, abs=1e-9)
    assert lhs == pytest.approx(0.0, abs=1e-9)
    rng = np.random.default_rng(7)
    lhs, rhs = mutual_info_otoc_bound_check(haar_matrix(16, rng), 3, 4)
    assert rhs == pytest.approx(4 - np.log2(7), abs=0.25)
    assert lhs >= rhs - 1e-9


def test_mutual_info_bound_holds_on_brickwork_sweep():
    rng = np.random.default_rng(8)
    for depth in range(0, 10):
        U = brickwork_unitary(4, depth, rng)
        for n in (2, 3, 4):
            lhs, rhs = mutual_info_otoc_bound_check(U, n, 4)
            assert lhs >= rhs - 1e-9


def test_probe_on_injection_qubit_rejected():
    with pytest.raises(ValueError):
        purity_as_otoc_check(np.eye(16), 1, 4)
