import numpy as np
import pytest

from qscramble.core import haar_matrix, mutual_information, partial_trace
from qscramble.hayden_preskill import (
    HPInstance,
    average_teleportation_fidelity,
    build_hp_state,
    conventional_teleportation_fidelities,
    f_epr_from_otocs,
    f_epr_haar,
    renyi2_mutual_r_mem_e,
    teleportation_fidelity,
    yk_decode_probabilistic,
    yk_decode_sampled,
)

N = 5
RNG = np.random.default_rng(0)
U_HAAR = haar_matrix(2 ** N, RNG)


def test_instance_validation():
    with pytest.raises(ValueError):
        HPInstance(N, (1,), U_HAAR)  # E cannot contain q_1
    with pytest.raises(ValueError):
        HPInstance(N, (0,), U_HAAR)
    with pytest.raises(ValueError):
        HPInstance(N, (2,), np.eye(4))


def test_build_state_marginals():
    st = build_hp_state(N, U_HAAR)
    assert np.abs(partial_trace(st, (0,)).matrix - np.eye(2) / 2).max() < 1e-10
    mem = tuple(range(N + 1, 2 * N))
    rho_mem = partial_trace(st, mem).matrix
    assert np.abs(rho_mem - np.eye(2 ** (N - 1)) / 2 ** (N - 1)).max() < 1e-10
    assert mutual_information(st, (0,), mem) == pytest.approx(0.0, abs=1e-9)
    sys_sites = tuple(range(1, N + 1))
    assert mutual_information(st, (0,), sys_sites) == pytest.approx(2.0, abs=1e-9)


@pytest.mark.parametrize("e_size", [1, 2, 3])
def test_decoder_identities_per_draw(e_size):
    for seed in range(5):
        U = haar_matrix(2 ** N, np.random.default_rng(10 + seed))
        inst = HPInstance.default_window(N, e_size, U)
        res = yk_decode_probabilistic(inst)
        assert 4.0 * res.delta * res.f_epr == pytest.approx(1.0, abs=1e-9)
        i2 = renyi2_mutual_r_mem_e(inst)
        assert res.delta == pytest.approx(2.0 ** (-i2), abs=1e-9)
        assert 0.25 - 1e-12 <= res.delta <= 1.0 + 1e-12
        assert 0.25 - 1e-12 <= res.f_epr <= 1.0 + 1e-12


def test_identity_circuit_no_transfer():
    inst = HPInstance.default_window(N, 1, np.eye(2 ** N))
    res = yk_decode_probabilistic(inst)
    assert res.delta == pytest.approx(1.0, abs=1e-10)
    assert res.f_epr == pytest.approx(0.25, abs=1e-10)


def test_haar_average_f_epr():
    vals = {1: [], 2: []}
    for seed in range(40):
        U = haar_matrix(64, np.random.default_rng(100 + seed))
        for e in (1, 2):
            inst = HPInstance.default_window(6, e, U)
            vals[e].append(yk_decode_probabilistic(inst).f_epr)
    assert np.mean(vals[1]) == pytest.approx(f_epr_haar(1), abs=0.03)
    assert np.mean(vals[2]) == pytest.approx(f_epr_haar(2), abs=0.03)
    assert f_epr_haar(1) == pytest.approx(4 / 7)
    assert f_epr_haar(2) == pytest.approx(16 / 19)


def test_f_epr_from_otocs_equals_projection():
    for e_size in (1, 2):
        inst = HPInstance.default_window(N, e_size, U_HAAR)
        assert f_epr_from_otocs(inst) == pytest.approx(
            yk_decode_probabilistic(inst).f_epr, abs=1e-9)


def test_f_epr_from_otocs_identity_circuit():
    inst = HPInstance.default_window(N, 1, np.eye(2 ** N))
    assert f_epr_from_otocs(inst) == pytest.approx(0.25, abs=1e-12)


def test_brickwork_depth_sweep_monotone_start_to_end():
    from qscramble.random_circuit import layer_bonds

    def brickwork(depth, rng):
        U = np.eye(2 ** N, dtype=complex)
        for layer in range(depth):
            for bond in layer_bonds(N, layer):
                g = haar_matrix(4, rng)
                U = np.kron(np.kron(np.eye(2 ** bond), g),
                            np.eye(2 ** (N - bond - 2))) @ U
        return U

    rng = np.random.default_rng(5)
    f0 = yk_decode_probabilistic(
        HPInstance.default_window(N, 2, brickwork(0, rng))).f_epr
    f_deep = np.mean([yk_decode_probabilistic(
        HPInstance.default_window(N, 2, brickwork(10, rng))).f_epr
        for _ in range(5)])
    assert f_deep > f0


def test_teleportation_average_identity():
    inst = HPInstance.default_window(N, 2, U_HAAR)
    favg = average_teleportation_fidelity(inst)
    fep = yk_decode_probabilistic(inst).f_epr
    assert favg == pytest.approx((1 + 2 * fep) / 3, abs=1e-9)


def test_teleportation_limit_formulas():
    # F_EPR = 1/4 (no transfer) -> average fidelity 1/2
    inst = HPInstance.default_window(N, 1, np.eye(2 ** N))
    assert average_teleportation_fidelity(inst) == pytest.approx(0.5, abs=1e-9)
    # perfect-decoder formula value
    assert (1 + 2 * 1.0) / 3 == pytest.approx(1.0)


def test_sampled_mode_consistent():
    inst = HPInstance.default_window(N, 1, U_HAAR)
    out = yk_decode_sampled(inst, 4000, np.random.default_rng(2))
    assert abs(out["delta_estimate"] - out["delta_exact"]) < 0.05
    assert out["f_epr"] == pytest.approx(
        yk_decode_probabilistic(inst).f_epr)


def test_conventional_teleportation_all_outcomes():
    fids = conventional_teleportation_fidelities()
    assert set(fids) == {"I", "X", "Y", "Z"}
    for v in fids.values():
        assert v == pytest.approx(1.0, abs=1e-10)
