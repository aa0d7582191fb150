"""Pauli-string algebra, operator-basis transforms, and qudit/Majorana bases.

A Pauli string is a length-N word over {I, X, Y, Z} stored as integer
labels 0..3.  The strings form an orthogonal operator basis:
tr(S^dag S') / 2^N = delta_{SS'}, and any operator W expands as
W = sum_S alpha(S) S with sum_S |alpha(S)|^2 = tr(W^dag W) / 2^N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DenseOperator, ResourceLimitError

PAULI_NAMES = "IXYZ"

PAULI_MATS = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)

# sigma_a sigma_b = MULT_PHASE[a,b] * sigma_{MULT_LABEL[a,b]}
MULT_LABEL = np.zeros((4, 4), dtype=int)
MULT_PHASE = np.zeros((4, 4), dtype=complex)
for _a in range(4):
    for _b in range(4):
        prod = PAULI_MATS[_a] @ PAULI_MATS[_b]
        for _c in range(4):
            ip = np.trace(PAULI_MATS[_c].conj().T @ prod) / 2
            if abs(ip) > 0.5:
                MULT_LABEL[_a, _b] = _c
                MULT_PHASE[_a, _b] = ip
                break

MAX_DECOMPOSE_QUBITS = 10


def pauli_label(name):
    name = name.upper()
    if name not in PAULI_NAMES:
        raise ValueError(f"unknown Pauli name {name!r}")
    return PAULI_NAMES.index(name)


@dataclass(frozen=True)
class PauliString:
    """Product of single-site Pauli operators, label 0 meaning identity."""

    labels: tuple
    num_sites: int

    def __post_init__(self):
        labels = tuple(int(l) for l in self.labels)
        if len(labels) != self.num_sites:
            raise ValueError(f"{len(labels)} labels for {self.num_sites} sites")
        if any(l not in (0, 1, 2, 3) for l in labels):
            raise ValueError(f"labels must be in 0..3, got {labels}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_name(cls, spec, num_sites):
        """Parse e.g. 'IXZI' or build from a dict {site: name}."""
        if isinstance(spec, str):
            if len(spec) != num_sites:
                raise ValueError(f"string {spec!r} has wrong length for N={num_sites}")
            return cls(tuple(pauli_label(ch) for ch in spec), num_sites)
        labels = [0] * num_sites
        for site, name in spec.items():
            labels[site] = pauli_label(name)
        return cls(tuple(labels), num_sites)

    @classmethod
    def single_site(cls, name, site, num_sites):
        labels = [0] * num_sites
        labels[site] = pauli_label(name)
        return cls(tuple(labels), num_sites)

    @property
    def weight(self):
        return sum(1 for l in self.labels if l != 0)

    def name(self):
        return "".join(PAULI_NAMES[l] for l in self.labels)

    def to_matrix(self):
        if self.num_sites > MAX_DECOMPOSE_QUBITS + 4:
            raise ResourceLimitError(
                f"refusing to materialize a {self.num_sites}-qubit Pauli string")
        mat = np.array([[1.0 + 0j]])
        for l in self.labels:
            mat = np.kron(mat, PAULI_MATS[l])
        return mat

    def to_operator(self):
        return DenseOperator(self.to_matrix(), self.num_sites, 2)

    def __mul__(self, other):
        if self.num_sites != other.num_sites:
            raise ValueError("length mismatch")
        phase = 1.0 + 0j
        labels = []
        for a, b in zip(self.labels, other.labels):
            phase *= MULT_PHASE[a, b]
            labels.append(MULT_LABEL[a, b])
        return phase, PauliString(tuple(labels), self.num_sites)

    def commutes_with(self, other):
        """Pauli strings either commute or anticommute; True if they commute."""
        p1, _ = self * other
        p2, _ = other * self
        return bool(abs(p1 - p2) < 1e-12)


def apply_pauli_to_matrix(label, site, mat, num_sites, side="left"):
    """sigma_label at `site` times a 2^N x 2^N matrix, without a kron.

    side='left' computes (sigma x I) @ mat, side='right' computes
    mat @ (sigma x I), using reshapes only.
    """
    d = 2 ** num_sites
    if mat.shape != (d, d):
        raise ValueError(f"matrix shape {mat.shape} does not match N={num_sites}")
    sig = PAULI_MATS[label]
    if side == "left":
        t = mat.reshape(2 ** site, 2, -1)
        out = np.einsum("ab,ibj->iaj", sig, t)
    elif side == "right":
        t = mat.reshape(d, 2 ** site, 2, 2 ** (num_sites - site - 1))
        out = np.einsum("miaj,ab->mibj", t, sig)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return out.reshape(d, d)


def apply_pauli_string_to_vector(pauli, vec):
    """sigma_S |psi> for a dense amplitude vector, one site at a time."""
    n = pauli.num_sites
    psi = vec.reshape((2,) * n)
    for site, l in enumerate(pauli.labels):
        if l == 0:
            continue
        psi = np.moveaxis(np.tensordot(PAULI_MATS[l], psi, axes=([1], [site])), 0, site)
    return psi.reshape(-1)


_DECOMP_SITE = (PAULI_MATS.conj().reshape(4, 4) / 2.0)  # alpha_s = tr(sigma_s W)/2 per site


def pauli_coefficients(mat, num_sites):
    """Expansion coefficients alpha(S) of W = sum_S alpha(S) sigma_S.

    Returns a (4,)*N tensor indexed by the per-site labels, with
    sum |alpha|^2 = tr(W^dag W)/2^N.  Requires N <= 10 (4^N coefficients).
    """
    if num_sites > MAX_DECOMPOSE_QUBITS:
        raise ResourceLimitError(
            f"Pauli decomposition capped at {MAX_DECOMPOSE_QUBITS} qubits, "
            f"got {num_sites}")
    m = mat.matrix if isinstance(mat, DenseOperator) else np.asarray(mat)
    t = m.reshape((2,) * (2 * num_sites))
    order = []
    for r in range(num_sites):
        order += [r, num_sites + r]
    t = np.transpose(t, order).reshape((4,) * num_sites)
    for ax in range(num_sites):
        t = np.moveaxis(np.tensordot(_DECOMP_SITE, t, axes=([1], [ax])), 0, ax)
    return t


def matrix_from_pauli_coefficients(coeffs):
    """Inverse of pauli_coefficients."""
    coeffs = np.asarray(coeffs)
    n = coeffs.ndim
    t = coeffs
    site = PAULI_MATS.reshape(4, 4)  # [label, row*2+col]
    for ax in range(n):
        t = np.moveaxis(np.tensordot(site, t, axes=([0], [ax])), 0, ax)
    t = t.reshape((2, 2) * n)
    order = [2 * r for r in range(n)] + [2 * r + 1 for r in range(n)]
    return np.transpose(t, order).reshape(2 ** n, 2 ** n)


def identity_probability_profile(mat, num_sites):
    """P(S_r = I) for each site r, under the weight |alpha(S)|^2.

    The input operator is normalized so that the probabilities sum to one;
    raises if the operator has zero norm.
    """
    prob = np.abs(pauli_coefficients(mat, num_sites)) ** 2
    total = prob.sum()
    if total <= 0:
        raise ValueError("zero operator has no Pauli weight distribution")
    prob /= total
    out = np.empty(num_sites)
    for r in range(num_sites):
        axes = tuple(ax for ax in range(num_sites) if ax != r)
        out[r] = prob.sum(axis=axes)[0]
    return out


def qudit_basis_op(q, m, n):
    """Clock-and-shift basis element sigma^{mn} on a q-dimensional site.

    sigma^{mn} = sum_k |k><k+m| exp(i 2 pi k n / q); unitary, and
    orthonormal under tr(A^dag B)/q.
    """
    op = np.zeros((q, q), dtype=complex)
    for k in range(q):
        op[k, (k + m) % q] = np.exp(2j * np.pi * k * n / q)
    return op


def qudit_operator_basis(q):
    """All q^2 clock-and-shift operators, identity (m=n=0) first."""
    return [qudit_basis_op(q, m, n) for m in range(q) for n in range(q)]


def majorana_operators(num_modes):
    """Majorana operators on ceil(num_modes/2) qubits via Jordan-Wigner.

    Normalized so {chi_a, chi_b} = delta_{ab} (each chi has square 1/2).
    """
    n_qubits = (num_modes + 1) // 2
    ops = []
    for a in range(num_modes):
        j, which = divmod(a, 2)
        labels = [3] * j + [1 if which == 0 else 2] + [0] * (n_qubits - j - 1)
        mat = PauliString(tuple(labels), n_qubits).to_matrix() / np.sqrt(2)
        ops.append(mat)
    return ops


def majorana_string(chis, occupied):
    """Hermitian, normalized product of Majorana operators.

    `occupied` flags which modes appear; the prefactor i^{m(m-1)/2} 2^{m/2}
    makes the string Hermitian with tr(S^2) = tr(I).
    """
    m = int(np.sum(occupied))
    dim = chis[0].shape[0]
    out = np.eye(dim, dtype=complex)
    for chi, occ in zip(chis, occupied):
        if occ:
            out = out @ chi
    return (1j) ** (m * (m - 1) // 2) * 2 ** (m / 2) * out
