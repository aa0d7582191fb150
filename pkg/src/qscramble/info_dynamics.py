"""Reference-qubit entanglement spreading and its OTOC fingerprints.

A reference qubit R is Bell-paired with system qubit q_1; the system then
evolves under some unitary while R (and any purifying memory) sits idle.
Mutual information between R and chosen regions tracks where the initial
bit of entanglement went.  For Haar dynamics the Renyi-2 averages have
closed forms, and for the maximally mixed setup the purity of MEM plus
one system qubit is exactly a sum of OTOCs.

Register layout: global site 0 is R, sites 1..N are the system qubits
q_1..q_N, and memory qubits (when present) follow, m_j Bell-paired with
q_j.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import (
    DenseState,
    Subsystem,
    apply_to_sites,
    entropy,
    mutual_information,
    partial_trace,
    purity,
)
from .paulis import PAULI_MATS

BELL = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)


@dataclass(frozen=True)
class ReferenceSetup:
    """Initial-state recipe: pure system, entropy-s mixed, or maximally mixed.

    Mixed initial states of integer entropy s are realized as s maximally
    mixed qubits (purified by s memory Bell pairs) next to pure qubits.
    """

    N: int
    state_kind: str = "pure"
    s: int = 0

    def __post_init__(self):
        if self.state_kind not in ("pure", "mixed", "maximally_mixed"):
            raise ValueError(f"unknown state_kind {self.state_kind!r}")
        if self.state_kind == "mixed" and not 0 <= self.s <= self.N - 1:
            raise ValueError("mixed-state entropy s must be in 0..N-1")

    @property
    def num_memory(self):
        if self.state_kind == "pure":
            return 0
        if self.state_kind == "mixed":
            return self.s
        return self.N - 1

    @property
    def total_qubits(self):
        return 1 + self.N + self.num_memory

    @property
    def system_sites(self):
        return tuple(range(1, self.N + 1))

    @property
    def memory_sites(self):
        return tuple(range(self.N + 1, self.total_qubits))

    def initial_state(self) -> DenseState:
        """R Bell-paired with q_1; memory Bell pairs on q_2.. as needed."""
        n_tot = self.total_qubits
        vec = np.zeros(2 ** n_tot, dtype=complex)
        vec[0] = 1.0
        state = DenseState(vec, n_tot)
        pairs = [(0, 1)]
        pairs += [(self.N + 1 + j, 2 + j) for j in range(self.num_memory)]
        for a, b in pairs:
            state = _entangle_bell(state, a, b)
        return state

    def evolve(self, U) -> DenseState:
        """Apply the scrambler to the system block only."""
        return apply_to_sites(self.initial_state(), U, list(self.system_sites))


def _entangle_bell(state, a, b):
    """Turn |00> on sites (a, b) into a Bell pair (H on a, then CNOT a->b)."""
    had = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                    dtype=float)
    state = apply_to_sites(state, had, [a])
    return apply_to_sites(state, cnot, [a, b])


def mutual_info_profile(setup: ReferenceSetup, U, regions, alpha=1):
    """I_alpha(R : region) for each listed region of global sites."""
    state = setup.evolve(U)
    out = []
    for region in regions:
        region = tuple(region)
        if 0 in region:
            raise ValueError("region must not contain the reference qubit")
        out.append(mutual_information(state, (0,), region, alpha))
    return out


def haar_renyi_mutual_closed_form(N, l, state_kind="pure", s=0):
    """Haar-averaged Renyi-2 mutual information I2(R : first l qubits).

    For pure and entropy-s mixed initial states,

        I2 = 1 + log2( 2 - 3 (1 - 2^{2l-2N}) / (2 + (2^{-s} - 2^{-N+1}) 4^{l-N/2}) ),

    the pure case being s = 0.  For the maximally mixed setup the region
    is SYS minus |E| = N - l excluded qubits and

        I2(R : SYS-E) = log2(1 + 3 * 4^{-|E|}).
    """
    if not 0 <= l <= N:
        raise ValueError(f"region size l={l} out of range for N={N}")
    if state_kind == "maximally_mixed":
        e = N - l
        return float(np.log2(1.0 + 3.0 * 4.0 ** (-e)))
    if state_kind == "pure":
        s = 0
    x = 4.0 ** (l - N / 2.0)
    num = 3.0 * (1.0 - 2.0 ** (2 * l - 2 * N))
    den = 2.0 + (2.0 ** (-s) - 2.0 ** (-N + 1)) * x
    return float(1.0 + np.log2(2.0 - num / den))


def haar_average_purity_exact(N, l):
    """Exact Haar mean of tr rho_B^2 for the pure reference setup.

    B is l system qubits out of N.  Obtained from the two-copy twirl of
    |0>_R U|psi_0> + |1>_R U|psi_1> with orthonormal psi_i:

        E tr rho_B^2 = 1/2 [ (d_B + d_Bbar)/(d+1)
                             + d_B (d_Bbar^2 - 1)/(d^2 - 1) ],

    exact at every finite N (reduces to 1 at l = 0 and 1/2 at l = N); the
    quoted closed forms drop the subleading parts of this expression.
    """
    d = 2.0 ** N
    db = 2.0 ** l
    dbb = 2.0 ** (N - l)
    return 0.5 * ((db + dbb) / (d + 1.0) + db * (dbb ** 2 - 1.0) / (d ** 2 - 1.0))


def haar_renyi_mutual_exact_mean(N, l):
    """Annealed I2(R : first l) with exact finite-N Haar purities."""
    p_b = haar_average_purity_exact(N, l)
    p_rb = haar_average_purity_exact(N, N - l)  # complement of RB is SYS-B
    return float(1.0 - np.log2(p_b) + np.log2(p_rb))


def renyi2_mutual_via_purities(state, region_a, region_b):
    """- log2 of purities combined into I2; the annealed-average building block."""
    pa = purity(partial_trace(state, region_a))
    pb = purity(partial_trace(state, region_b))
    pab = purity(partial_trace(state, tuple(region_a) + tuple(region_b)))
    return -np.log2(pa) - np.log2(pb) + np.log2(pab)


def haar_average_mutual_info(setup: ReferenceSetup, l, num_samples, rng,
                             batches=10):
    """Monte Carlo Haar average of I2(R : first l system qubits).

    Purities are averaged over draws before taking logs (the annealed
    combination the closed forms describe).  The standard error is
    estimated by batch means.
    """
    from .core import haar_matrix

    region = setup.system_sites[:l]
    pur = np.empty((num_samples, 3))
    for i in range(num_samples):
        U = haar_matrix(2 ** setup.N, rng)
        state = setup.evolve(U)
        pur[i, 0] = purity(partial_trace(state, (0,)))
        pur[i, 1] = purity(partial_trace(state, region))
        pur[i, 2] = purity(partial_trace(state, (0,) + tuple(region)))
    def combine(block):
        m = block.mean(axis=0)
        return -np.log2(m[0]) - np.log2(m[1]) + np.log2(m[2])
    est = combine(pur)
    idx = np.array_split(np.arange(num_samples), batches)
    bm = np.array([combine(pur[ix]) for ix in idx if len(ix)])
    sigma = bm.std(ddof=1) / np.sqrt(len(bm))
    return float(est), float(sigma)


def haar_average_mutual_info_profile(setup: ReferenceSetup, num_samples, rng,
                                     batches=10, ls=None):
    """Monte Carlo Haar average of I2(R : first l) for every l at once.

    Each Haar draw contributes the purities of all regions, so 200 draws
    cost 200 unitaries rather than 200 per region.  Returns (ls, estimates,
    sigmas) with batch-means standard errors.
    """
    if ls is None:
        ls = list(range(1, setup.N + 1))
    sys_sites = setup.system_sites
    pur = np.empty((num_samples, len(ls), 3))
    for i in range(num_samples):
        U = _haar(2 ** setup.N, rng)
        state = setup.evolve(U)
        p_r = purity(partial_trace(state, (0,)))
        for j, l in enumerate(ls):
            region = sys_sites[:l]
            pur[i, j, 0] = p_r
            pur[i, j, 1] = purity(partial_trace(state, region))
            pur[i, j, 2] = purity(partial_trace(state, (0,) + tuple(region)))

    def combine(block):
        m = block.mean(axis=0)
        return -np.log2(m[:, 0]) - np.log2(m[:, 1]) + np.log2(m[:, 2])

    est = combine(pur)
    idx = np.array_split(np.arange(num_samples), batches)
    bm = np.stack([combine(pur[ix]) for ix in idx if len(ix)])
    sig = bm.std(axis=0, ddof=1) / np.sqrt(bm.shape[0])
    return list(ls), est, sig


def _haar(dim, rng):
    from .core import haar_matrix
    return haar_matrix(dim, rng)


def tripartite_I3(setup: ReferenceSetup, U, region_e):
    """I3 = I(R:E) + I(R:SYS-E) - I(R:SYS); -2 signals full scrambling."""
    if setup.state_kind != "maximally_mixed":
        raise ValueError("tripartite diagnostic defined for the maximally mixed setup")
    state = setup.evolve(U)
    region_e = tuple(region_e)
    sys_sites = setup.system_sites
    rest = tuple(sorted(set(sys_sites) - set(region_e)))
    i_e = mutual_information(state, (0,), region_e, alpha=1)
    i_rest = mutual_information(state, (0,), rest, alpha=1)
    i_sys = mutual_information(state, (0,), sys_sites, alpha=1)
    return i_e + i_rest - i_sys


def _heisenberg_minus_t(U, mat):
    """W(-t) = U W U^dag for the circuit unitary U."""
    return U @ mat @ U.conj().T


def otoc_sum_mem_qn(U, n, N):
    """sum over non-identity (W_1, V_n) of tr(W_1(-t) V_n W_1(-t) V_n)/2^N."""
    if n == 1:
        raise ValueError("probe qubit must differ from the injection qubit q_1")
    d = 2 ** N
    total = 0.0
    for wl in (1, 2, 3):
        w = np.kron(PAULI_MATS[wl], np.eye(d // 2))
        wt = _heisenberg_minus_t(np.asarray(U), w)
        for vl in (1, 2, 3):
            left = np.eye(2 ** (n - 1))
            right = np.eye(2 ** (N - n))
            v = np.kron(np.kron(left, PAULI_MATS[vl]), right)
            total += np.real(np.einsum("ij,jk,kl,li->", wt, v, wt, v)) / d
    return total


def purity_as_otoc_check(U, n, N):
    """tr rho^2(MEM u q_n) two ways: partial trace vs the OTOC sum.

    In the maximally mixed setup the purity equals
    (7 + sum_{W_1 != I, V_n != I} OTOC) / 2^{N+2}.
    """
    setup = ReferenceSetup(N, "maximally_mixed")
    state = setup.evolve(U)
    region = setup.memory_sites + (n,)
    direct = purity(partial_trace(state, region))
    from_otocs = (7.0 + otoc_sum_mem_qn(U, n, N)) / 2 ** (N + 2)
    return direct, from_otocs


def mutual_info_otoc_bound_check(U, n, N):
    """lhs I(R : MEM u q_n) vs rhs 4 - log2(7 + sum OTOC); lhs >= rhs always."""
    setup = ReferenceSetup(N, "maximally_mixed")
    state = setup.evolve(U)
    region = setup.memory_sites + (n,)
    lhs = mutual_information(state, (0,), region, alpha=1)
    rhs = 4.0 - np.log2(7.0 + otoc_sum_mem_qn(U, n, N))
    return lhs, rhs
