"""Hayden-Preskill thought experiment with the probabilistic decoder.

Full-state simulation on 2N+2 qubits laid out as

    [R | q_1 .. q_N | m_2 .. m_N | q_1' | R']

R is Bell-paired with q_1, each m_j with q_j, and R' with q_1'.  The
scrambler U acts on the system, its entrywise conjugate U* on the mirror
register (q_1', m_2..m_N) in matching site order.  Bell post-selection on
the pairs (q_e, m_e) for e in E succeeds with probability Delta, and the
decoded fidelity obeys F_EPR = 1/(4 Delta) for every unitary U.

Conjugation is taken entrywise in the fixed computational basis (site 0
most significant), matching the conventions of the rest of the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .core import (
    DenseState,
    NumericalError,
    ResourceLimitError,
    Subsystem,
    apply_to_sites,
    mutual_information,
    partial_trace,
    purity,
)
from .paulis import PAULI_MATS

BELL = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)


@dataclass(frozen=True)
class HPInstance:
    """One protocol run: N system qubits, Bob's window E, the scrambler U."""

    N: int
    E: tuple
    U: np.ndarray
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "E", tuple(int(e) for e in self.E))
        if any(not 1 <= e <= self.N for e in self.E):
            raise ValueError("E must list system qubit indices in 1..N")
        if 1 in self.E:
            raise ValueError("E must not contain the injection qubit q_1")
        U = np.asarray(self.U, dtype=complex)
        if U.shape != (2 ** self.N, 2 ** self.N):
            raise ValueError(f"U has shape {U.shape}, expected {(2**self.N,)*2}")
        object.__setattr__(self, "U", U)

    @classmethod
    def default_window(cls, N, e_size, U, seed=0):
        """E = the last e_size system qubits."""
        return cls(N, tuple(range(N - e_size + 1, N + 1)), U, seed)


def _registers(N):
    r = 0
    sys_sites = list(range(1, N + 1))
    mem_sites = list(range(N + 1, 2 * N))      # m_2 .. m_N
    q1p = 2 * N
    rp = 2 * N + 1
    return r, sys_sites, mem_sites, q1p, rp


def _bell_pairs(N):
    r, sys_sites, mem_sites, q1p, rp = _registers(N)
    pairs = [(r, sys_sites[0])]
    pairs += list(zip(sys_sites[1:], mem_sites))
    pairs += [(q1p, rp)]
    return pairs


def build_hp_state(N, U) -> DenseState:
    """State after U on the system and U* on the mirror, before measurement."""
    total = 2 * N + 2
    if total > 22:
        raise ResourceLimitError(
            f"HP register needs {total} qubits, capped at 22 (N <= 10)")
    vec = np.zeros(2 ** total, dtype=complex)
    vec[0] = 1.0
    state = DenseState(vec, total)
    had = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                    dtype=float)
    for a, b in _bell_pairs(N):
        state = apply_to_sites(state, had, [a])
        state = apply_to_sites(state, cnot, [a, b])
    r, sys_sites, mem_sites, q1p, rp = _registers(N)
    state = apply_to_sites(state, U, sys_sites)
    mirror_sites = [q1p] + mem_sites  # mirrored site order: q_1 -> q_1', q_j -> m_j
    state = apply_to_sites(state, np.conj(U), mirror_sites)
    return state


def _project_bell_pairs(state: DenseState, pairs):
    """Unnormalized projection of each listed pair onto the |I> Bell state."""
    vec = state.amplitudes
    n = state.num_sites
    proj = np.outer(BELL, BELL)
    for a, b in pairs:
        vec = apply_to_sites(vec, proj, [a, b], num_sites=n)
    return vec


@dataclass(frozen=True)
class DecodeResult:
    delta: float
    f_epr: float
    seed: int = 0


def yk_decode_probabilistic(instance: HPInstance) -> DecodeResult:
    """Bell post-selection on (q_e, m_e) pairs; Delta and F_EPR.

    Implemented as an exact projection rather than sampling, so Delta is
    the exact success probability for this U.  A vanishing Delta means
    the protocol never post-selects; that is surfaced as an error instead
    of a silent NaN.
    """
    N = instance.N
    state = build_hp_state(N, instance.U)
    _, sys_sites, mem_sites, q1p, rp = _registers(N)
    pairs = [(e, mem_sites[e - 2]) for e in instance.E]
    vec = _project_bell_pairs(state, pairs)
    delta = float(np.real(np.vdot(vec, vec)))
    if delta < 1e-14:
        raise NumericalError("post-selection probability vanished for this U")
    post = vec / np.sqrt(delta)
    post_state = DenseState(post, state.num_sites)
    rho = partial_trace(post_state, (0, rp)).matrix
    f_epr = float(np.real(BELL @ rho @ BELL))
    return DecodeResult(delta, f_epr, instance.seed)


def yk_decode_sampled(instance: HPInstance, shots, rng) -> dict:
    """Protocol-realism mode: sample Bell outcomes and count post-selections.

    Returns the acceptance frequency (a Monte Carlo estimate of Delta) plus
    the exact fidelity conditioned on acceptance.
    """
    res = yk_decode_probabilistic(instance)
    accepted = int(np.sum(rng.random(shots) < res.delta))
    return {"shots": shots, "accepted": accepted,
            "delta_estimate": accepted / shots, "delta_exact": res.delta,
            "f_epr": res.f_epr}


def renyi2_mutual_r_mem_e(instance: HPInstance) -> float:
    """I2(R : MEM u E) in the state before decoding, from purities.

    Evaluated on the 2N-qubit register (R + SYS + MEM) after U alone;
    the decoder registers play no role in the mutual information that
    fixes Delta.
    """
    from .info_dynamics import ReferenceSetup

    setup = ReferenceSetup(instance.N, "maximally_mixed")
    state = setup.evolve(instance.U)
    region = setup.memory_sites + tuple(instance.E)
    p_r = purity(partial_trace(state, (0,)))
    p_b = purity(partial_trace(state, region))
    p_rb = purity(partial_trace(state, (0,) + region))
    return float(-np.log2(p_r) - np.log2(p_b) + np.log2(p_rb))


def f_epr_haar(e_size):
    """Fully scrambling limit: F_EPR = 1 / (1 + 3 * 4^{-|E|})."""
    return 1.0 / (1.0 + 3.0 * 4.0 ** (-e_size))


def f_epr_from_otocs(instance: HPInstance) -> float:
    """F_EPR as the inverse of an OTOC sum over probes on q_1 and E.

    F_EPR = ( 4^{-|E|} 2^{-N} sum_{W_1, V_E} tr(W(-t) V W(-t) V) )^{-1}
    with W(-t) = U W U^dag; both sums include the identity.  Exponential
    in |E| and dense in N, so capped at N <= 8.
    """
    N = instance.N
    if N > 8:
        raise ResourceLimitError("OTOC-sum route capped at 8 qubits")
    U = instance.U
    d = 2 ** N
    total = 0.0
    e_local = [e - 1 for e in instance.E]  # positions inside the system register
    for wl in range(4):
        w = np.kron(PAULI_MATS[wl], np.eye(d // 2))
        wt = U @ w @ U.conj().T
        for labels in product(range(4), repeat=len(e_local)):
            v = np.eye(d, dtype=complex)
            for pos, vl in zip(e_local, labels):
                if vl:
                    v = v @ np.kron(np.kron(np.eye(2 ** pos), PAULI_MATS[vl]),
                                    np.eye(2 ** (N - pos - 1)))
            total += np.real(np.einsum("ij,jk,kl,li->", wt, v, wt, v)) / d
    denom = total / 4.0 ** len(instance.E)
    return float(1.0 / denom)


def teleportation_fidelity(instance: HPInstance, a_state) -> float:
    """Fidelity that a state injected at q_1 reappears on R' after decoding.

    Runs the protocol without the reference: q_1 holds |a>, the rest of
    the system is maximally mixed (purified by MEM), and the post-selected
    output on R' is compared with |a>.
    """
    N = instance.N
    a_state = np.asarray(a_state, dtype=complex)
    a_state = a_state / np.linalg.norm(a_state)
    total = 2 * N + 2
    vec = np.zeros(2 ** total, dtype=complex)
    vec[0] = 1.0
    state = DenseState(vec, total)
    had = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                    dtype=float)
    r, sys_sites, mem_sites, q1p, rp = _registers(N)
    for a, b in _bell_pairs(N)[1:]:
        state = apply_to_sites(state, had, [a])
        state = apply_to_sites(state, cnot, [a, b])
    # inject |a> on q_1 (R stays |0> and is ignored); q_1 is exactly |0>
    # here so the column map |0> -> |a> keeps the state normalized
    inject = np.zeros((2, 2), dtype=complex)
    inject[:, 0] = a_state
    state = apply_to_sites(state, inject, sys_sites[:1])
    state = apply_to_sites(state, instance.U, sys_sites)
    state = apply_to_sites(state, np.conj(instance.U), [q1p] + mem_sites)
    pairs = [(e, mem_sites[e - 2]) for e in instance.E]
    vec = _project_bell_pairs(state, pairs)
    delta = float(np.real(np.vdot(vec, vec)))
    if delta < 1e-14:
        raise NumericalError("post-selection probability vanished for this U")
    post = DenseState(vec / np.sqrt(delta), total)
    rho_out = partial_trace(post, (rp,)).matrix
    return float(np.real(a_state.conj() @ rho_out @ a_state))


def pauli_eigenstates():
    """The six single-qubit Pauli eigenstates used for fidelity averaging."""
    s2 = 1 / np.sqrt(2)
    return [np.array([1, 0]), np.array([0, 1]),
            np.array([s2, s2]), np.array([s2, -s2]),
            np.array([s2, 1j * s2]), np.array([s2, -1j * s2])]


def average_teleportation_fidelity(instance: HPInstance) -> float:
    """Average over the six Pauli eigenstates; equals (1 + 2 F_EPR)/3."""
    vals = [teleportation_fidelity(instance, a) for a in pauli_eigenstates()]
    return float(np.mean(vals))


def conventional_teleportation_fidelities():
    """Single-Bell-pair teleportation on 3 qubits, all 4 outcomes corrected.

    Returns the four post-measurement fidelities; each must be 1 once the
    matching Pauli correction is applied.
    """
    rng = np.random.default_rng(11)
    a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    a /= np.linalg.norm(a)
    bells = {
        "I": np.array([1, 0, 0, 1]) / np.sqrt(2),
        "X": np.array([0, 1, 1, 0]) / np.sqrt(2),
        "Y": np.array([0, 1, -1, 0]) / np.sqrt(2),
        "Z": np.array([1, 0, 0, -1]) / np.sqrt(2),
    }
    corrections = {"I": 0, "X": 1, "Y": 2, "Z": 3}
    # registers: [alice_data, alice_half, bob_half]
    vec = np.zeros(8, dtype=complex)
    vec[0] = 1.0
    state = DenseState(vec, 3)
    state = apply_to_sites(state, np.outer(a, [1, 0]), [0])
    had = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                    dtype=float)
    state = apply_to_sites(state, had, [1])
    state = apply_to_sites(state, cnot, [1, 2])
    out = {}
    for name, bell in bells.items():
        proj = np.outer(bell, bell.conj())
        branch = apply_to_sites(state.amplitudes, proj, [0, 1], num_sites=3)
        p = np.real(np.vdot(branch, branch))
        branch = branch / np.sqrt(p)
        fixed = apply_to_sites(branch, PAULI_MATS[corrections[name]], [2],
                               num_sites=3)
        rho = partial_trace(DenseState(fixed, 3), (2,)).matrix
        out[name] = float(np.real(a.conj() @ rho @ a))
    return out
