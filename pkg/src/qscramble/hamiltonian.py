"""Nearest-neighbor spin-chain Hamiltonians, chiefly the mixed-field Ising model

    H = sum_i ( J Z_i Z_{i+1} + H_x X_i + H_z Z_i ).

The default couplings (J, H_x, H_z) = (1, 1.05, 0.5) put the chain deep in
the strongly chaotic regime and are recorded in all output metadata; they
are not a property of the model itself, just a conventional benchmark
point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import DenseOperator, ResourceLimitError, MAX_OPERATOR_QUBITS
from .paulis import PAULI_MATS, PauliString

DEFAULT_COUPLINGS = (1.0, 1.05, 0.5)


@dataclass(frozen=True)
class SpinChainHamiltonian:
    """Sum of real-coefficient Pauli-string terms on an N-site chain."""

    num_sites: int
    terms: tuple  # of (PauliString, float)
    J: float = 0.0
    H_x: float = 0.0
    H_z: float = 0.0
    boundary: str = "open"

    def __post_init__(self):
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"boundary must be open|periodic, got {self.boundary!r}")
        for p, c in self.terms:
            if p.num_sites != self.num_sites:
                raise ValueError("term length mismatch")
            if abs(np.imag(c)) > 0:
                raise ValueError("term coefficients must be real")

    def sparse(self):
        """CSR matrix of H; fine up to ~26 sites since each term is sparse."""
        d = 2 ** self.num_sites
        mat = sp.csr_matrix((d, d), dtype=complex)
        for pauli, coeff in self.terms:
            term = sp.identity(1, dtype=complex, format="csr")
            for l in pauli.labels:
                term = sp.kron(term, sp.csr_matrix(PAULI_MATS[l]), format="csr")
            mat = mat + coeff * term
        mat.sum_duplicates()
        return mat

    def dense(self):
        if self.num_sites > MAX_OPERATOR_QUBITS:
            raise ResourceLimitError(
                f"dense Hamiltonian capped at {MAX_OPERATOR_QUBITS} qubits")
        return DenseOperator(self.sparse().toarray(), self.num_sites, 2)

    def bond_terms(self):
        """Two-site blocks h_r with single-site fields split half/half.

        Edge bonds absorb the full field of the edge site so that
        sum_r h_r = H exactly (open boundary).  Returns a list of 4x4
        matrices, one per bond (r, r+1).
        """
        if self.boundary != "open":
            raise ValueError("bond grouping implemented for open chains")
        n = self.num_sites
        if n < 2:
            raise ValueError("need at least two sites")
        X, Z = PAULI_MATS[1], PAULI_MATS[3]
        eye = np.eye(2)
        blocks = []
        for r in range(n - 1):
            wl = 1.0 if r == 0 else 0.5
            wr = 1.0 if r == n - 2 else 0.5
            h = self.J * np.kron(Z, Z)
            h = h + wl * (self.H_x * np.kron(X, eye) + self.H_z * np.kron(Z, eye))
            h = h + wr * (self.H_x * np.kron(eye, X) + self.H_z * np.kron(eye, Z))
            blocks.append(h)
        return blocks

    def max_bond_norm(self):
        """max_r ||h_r||_inf, the local energy scale entering lightcone bounds."""
        norms = []
        for h in self.bond_terms():
            sv = np.linalg.svd(h, compute_uv=False)
            norms.append(sv[0])
        return float(max(norms))


def mixed_field_ising(num_sites, J=DEFAULT_COUPLINGS[0], H_x=DEFAULT_COUPLINGS[1],
                      H_z=DEFAULT_COUPLINGS[2], boundary="open"):
    """Mixed-field Ising chain; the workhorse chaotic benchmark model."""
    n = num_sites
    terms = []
    bonds = n - 1 if boundary == "open" else n
    for r in range(bonds):
        labels = [0] * n
        labels[r] = 3
        labels[(r + 1) % n] = 3
        terms.append((PauliString(tuple(labels), n), float(J)))
    for r in range(n):
        if H_x != 0.0:
            terms.append((PauliString.single_site("X", r, n), float(H_x)))
        if H_z != 0.0:
            terms.append((PauliString.single_site("Z", r, n), float(H_z)))
    return SpinChainHamiltonian(n, tuple(terms), J=float(J), H_x=float(H_x),
                                H_z=float(H_z), boundary=boundary)
