import numpy as np
import pytest
import scipy.linalg as sla

from qscramble.core import NumericalError, ResourceLimitError, basis_state, random_state
from qscramble.hamiltonian import mixed_field_ising
from qscramble.otoc_exact import (
    OtocRequest,
    chebyshev_expm_block,
    krylov_evolve_state,
    krylov_evolve_vec,
    lieb_robinson_certificate,
    otoc_ed,
    otoc_krylov_operator,
    otoc_krylov_state,
    pauli_weight_profile,
    spectral_bounds,
)
from qscramble.paulis import PauliString


H6 = mixed_field_ising(6)
TS = np.linspace(0.0, 4.0, 9)


def test_request_validation():
    with pytest.raises(ValueError):
        OtocRequest("Z", 0, "Z", [1.0, 0.5])
    with pytest.raises(ValueError):
        OtocRequest("Z", 0, "Z", [0.0], krylov_dim=1)


def test_otoc_t0_commuting_and_anticommuting():
    f = otoc_ed(mixed_field_ising(4), OtocRequest("Z", 0, "Z", [0.0]))
    assert np.allclose(f.F.values[:, 0], 1.0)
    assert np.allclose(f.C.values[:, 0], 0.0, atol=1e-12)
    f2 = otoc_ed(mixed_field_ising(4),
                 OtocRequest("X", 0, "Z", [0.0], probe_sites=(0,)))
    assert f2.F.values[0, 0] == pytest.approx(-1.0)
    assert f2.C.values[0, 0] == pytest.approx(4.0)


def test_c_range_and_disjoint_start():
    f = otoc_ed(H6, OtocRequest("Z", 0, "Z", TS))
    assert np.all(f.C.values >= -1e-8)
    assert np.all(f.C.values <= 4.0 + 1e-8)
    assert np.allclose(f.C.values[1:, 0], 0.0, atol=1e-12)


def test_krylov_evolve_state_identity_and_exact():
    psi = basis_state([0, 1, 0, 1, 0, 1])
    out = krylov_evolve_state(H6, psi, 0.0)
    assert np.allclose(out.amplitudes, psi.amplitudes)
    # single-qubit oracle: H = sigma_z, |+>, t = pi/4
    got = krylov_evolve_vec(np.diag([1.0, -1.0]),
                            np.array([1, 1], dtype=complex) / np.sqrt(2),
                            np.pi / 4, 2)
    want = np.array([np.exp(-1j * np.pi / 4), np.exp(1j * np.pi / 4)]) / np.sqrt(2)
    assert np.abs(got - want).max() < 1e-12


def test_krylov_matches_dense_expm_n8():
    H = mixed_field_ising(8)
    rng = np.random.default_rng(5)
    psi = random_state(8, rng)
    out = krylov_evolve_state(H, psi, 5.0)
    ref = sla.expm(-1j * H.sparse().toarray() * 5.0) @ psi.amplitudes
    overlap = abs(np.vdot(ref, out.amplitudes))
    assert overlap >= 1 - 1e-7
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-10


def test_time_reversal_consistency():
    H = mixed_field_ising(7)
    rng = np.random.default_rng(8)
    psi = random_state(7, rng)
    fwd = krylov_evolve_state(H, psi, 3.3)
    back = krylov_evolve_state(H, fwd, -3.3)
    assert np.abs(back.amplitudes - psi.amplitudes).max() < 1e-7


def test_chebyshev_block_matches_expm():
    Hs = H6.sparse().real
    bounds = spectral_bounds(Hs)
    rng = np.random.default_rng(3)
    B = rng.standard_normal((64, 7)) + 1j * rng.standard_normal((64, 7))
    for t in (0.7, -2.9):
        ref = sla.expm(-1j * Hs.toarray() * t) @ B
        assert np.abs(chebyshev_expm_block(Hs, B, t, bounds) - ref).max() < 1e-12


def test_method_equivalence_exact_routes():
    req = OtocRequest("Z", 0, "Z", TS, probe_sites=(3,), krylov_dim=25)
    fed = otoc_ed(H6, req)
    fko = otoc_krylov_operator(H6, req)
    assert np.abs(fed.F.values - fko.F.values).max() < 1e-6


def test_typicality_agrees_within_3_sigma():
    req = OtocRequest("Z", 0, "Z", TS, probe_sites=(3,),
                      num_typical_states=32, seed=5)
    fks = otoc_krylov_state(H6, req)
    fed = otoc_ed(H6, OtocRequest("Z", 0, "Z", TS, probe_sites=(3,)))
    dev = np.abs(fks.F.values - fed.F.values)
    # 3 sigma pointwise with a small floor for the exactly-clamped t=0 point
    assert np.all(dev <= 3.0 * fks.stderr.values + 1e-9)


def test_typicality_variance_shrinks_with_system_size():
    # per-state fluctuation at fixed late time decreases from N=6 to N=8
    out = {}
    for n in (6, 8):
        H = mixed_field_ising(n)
        req = OtocRequest("Z", 0, "Z", np.array([0.0, 6.0]),
                          probe_sites=(n - 1,), num_typical_states=20, seed=9)
        f = otoc_krylov_state(H, req)
        out[n] = f.stderr.values[0, -1] * np.sqrt(20)
    assert out[8] < out[6]


def test_heisenberg_norm_conservation():
    # Frobenius norm of W(t) under the exact Heisenberg map
    H = mixed_field_ising(5)
    Hd = H.sparse().toarray()
    W = PauliString.single_site("Z", 2, 5).to_matrix()
    for t in (0.5, 2.0):
        U = sla.expm(-1j * Hd * t)
        Wt = U.conj().T @ W @ U
        assert np.linalg.norm(Wt) == pytest.approx(np.linalg.norm(W), abs=1e-8)


def test_pauli_weight_profile_examples():
    W = PauliString.single_site("Z", 0, 4).to_matrix()
    prof0 = pauli_weight_profile(W, 0)
    assert prof0.prob_identity == pytest.approx(0.0, abs=1e-12)
    assert prof0.avg_C == pytest.approx(8.0 / 3.0)
    assert prof0.avg_F == pytest.approx(-1.0 / 3.0)
    prof1 = pauli_weight_profile(W, 1)
    assert prof1.prob_identity == pytest.approx(1.0)
    assert prof1.avg_C == pytest.approx(0.0, abs=1e-12)


def test_pauli_weight_profile_matches_direct_trace_average():
    # avg_F equals the direct (1/3) sum of traces over non-identity probes
    H = mixed_field_ising(6)
    Hd = H.sparse().toarray()
    U = sla.expm(-1j * Hd * 1.3)
    W = PauliString.single_site("Z", 0, 6).to_matrix()
    Wt = U.conj().T @ W @ U
    r = 2
    prof = pauli_weight_profile(Wt, r)
    acc = 0.0
    for vl in "XYZ":
        V = PauliString.single_site(vl, r, 6).to_matrix()
        acc += np.real(np.trace(Wt @ V @ Wt @ V)) / 64 / 3
    assert prof.avg_F == pytest.approx(acc, abs=1e-9)


def test_ed_cap_direct():
    H = mixed_field_ising(15)
    with pytest.raises(ResourceLimitError):
        otoc_ed(H, OtocRequest("Z", 0, "Z", [0.0]))


def test_lieb_robinson_certificate_small():
    H = mixed_field_ising(8)
    cert = lieb_robinson_certificate(H, "Z", 0, "Z", np.arange(1, 8),
                                     np.linspace(0.01, 0.25, 6))
    assert cert.certified
    assert cert.regime_mask.sum() > 10
    # exact norm vanishes at our smallest time for far separations
    assert cert.exact_norms[-1, 0] < cert.bound_values[-1, 0]


def test_lieb_robinson_rejects_long_range():
    from qscramble.hamiltonian import SpinChainHamiltonian

    long_range = SpinChainHamiltonian(
        4, ((PauliString.from_name("ZIIZ", 4), 1.0),), J=1.0)
    with pytest.raises(ValueError):
        lieb_robinson_certificate(long_range, "Z", 0, "Z", [1], [0.1])
