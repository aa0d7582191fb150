"""Dense linear-algebra substrate for small quantum registers.

States are complex vectors of dimension q^N, operators are q^N x q^N
matrices.  Site 0 is the most significant digit of the computational-basis
index throughout the package, i.e. the basis index of |b_0 b_1 ... b_{N-1}>
is sum_r b_r * q^(N-1-r).  Everything here is a pure function over
immutable values; random number generators are passed explicitly.

Dense operators are capped at 14 qubits and dense states at 26 qubits;
larger requests raise ResourceLimitError rather than thrashing memory.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

MAX_OPERATOR_QUBITS = 14
MAX_STATE_QUBITS = 26

NORM_ATOL = 1e-10
EIG_CLAMP = 1e-9  # eigenvalues in (-EIG_CLAMP, 0] are clamped to 0


class ResourceLimitError(RuntimeError):
    """Requested register exceeds the dense-method size caps."""


class NumericalError(RuntimeError):
    """A numerical invariant was violated (non-PSD matrix, dead branch, ...)."""


def _check_state_size(num_sites, local_dim=2):
    if local_dim == 2 and num_sites > MAX_STATE_QUBITS:
        raise ResourceLimitError(
            f"dense states capped at {MAX_STATE_QUBITS} qubits, got {num_sites}")


def _check_operator_size(num_sites, local_dim=2):
    if local_dim == 2 and num_sites > MAX_OPERATOR_QUBITS:
        raise ResourceLimitError(
            f"dense operators capped at {MAX_OPERATOR_QUBITS} qubits, got {num_sites}")


@dataclass(frozen=True)
class Subsystem:
    """An ordered set of site indices inside a register of num_sites sites."""

    site_indices: tuple
    num_sites: int

    def __post_init__(self):
        sites = tuple(int(s) for s in self.site_indices)
        object.__setattr__(self, "site_indices", sites)
        if len(set(sites)) != len(sites):
            raise ValueError(f"duplicate site indices: {sites}")
        if sites and (min(sites) < 0 or max(sites) >= self.num_sites):
            raise ValueError(f"site indices {sites} out of range for N={self.num_sites}")

    def __len__(self):
        return len(self.site_indices)

    def __iter__(self):
        return iter(self.site_indices)

    def complement(self):
        rest = tuple(s for s in range(self.num_sites) if s not in set(self.site_indices))
        return Subsystem(rest, self.num_sites)

    def overlaps(self, other):
        return bool(set(self.site_indices) & set(other.site_indices))


@dataclass(frozen=True)
class DenseState:
    """Normalized wavefunction on num_sites qudits of local dimension local_dim."""

    amplitudes: np.ndarray
    num_sites: int
    local_dim: int = 2

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size != self.local_dim ** self.num_sites:
            raise ValueError(
                f"amplitude vector has size {amps.size}, expected "
                f"{self.local_dim}^{self.num_sites}")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > NORM_ATOL:
            raise ValueError(f"state not normalized: |psi| = {nrm!r}")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self):
        return self.amplitudes.size


@dataclass(frozen=True)
class DenseOperator:
    """Dense matrix acting on num_sites qudits of local dimension local_dim."""

    matrix: np.ndarray
    num_sites: int
    local_dim: int = 2

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        d = self.local_dim ** self.num_sites
        if mat.shape != (d, d):
            raise ValueError(f"matrix has shape {mat.shape}, expected {(d, d)}")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self):
        return self.matrix.shape[0]


def basis_state(bits, local_dim=2):
    """Computational basis state |b_0 b_1 ... >, site 0 most significant."""
    bits = [int(b) for b in bits]
    n = len(bits)
    _check_state_size(n, local_dim)
    idx = 0
    for b in bits:
        if not 0 <= b < local_dim:
            raise ValueError(f"basis label {b} out of range for local_dim={local_dim}")
        idx = idx * local_dim + b
    amps = np.zeros(local_dim ** n, dtype=complex)
    amps[idx] = 1.0
    return DenseState(amps, n, local_dim)


def random_state(num_sites, rng, local_dim=2):
    """Haar-random pure state (normalized complex Gaussian vector)."""
    _check_state_size(num_sites, local_dim)
    d = local_dim ** num_sites
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return DenseState(v / np.linalg.norm(v), num_sites, local_dim)


def tensor_embed(local_op, site, num_sites, local_dim=2):
    """Embed a q x q operator at the given site: I x ... x op x ... x I."""
    local_op = np.asarray(local_op, dtype=complex)
    if local_op.shape != (local_dim, local_dim):
        raise ValueError(
            f"local operator has shape {local_op.shape}, expected "
            f"{(local_dim, local_dim)}")
    if not 0 <= site < num_sites:
        raise ValueError(f"site {site} out of range for N={num_sites}")
    _check_operator_size(num_sites, local_dim)
    left = np.eye(local_dim ** site)
    right = np.eye(local_dim ** (num_sites - site - 1))
    mat = np.kron(np.kron(left, local_op), right)
    return DenseOperator(mat, num_sites, local_dim)


def _as_vector(state):
    return state.amplitudes if isinstance(state, DenseState) else np.asarray(state)


def apply_unitary(state, U, check_unitary=False):
    """Apply a full-register unitary to a state, |psi'> = U |psi>."""
    mat = U.matrix if isinstance(U, DenseOperator) else np.asarray(U)
    vec = _as_vector(state)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"U must be square, got shape {mat.shape}")
    if mat.shape[1] != vec.size:
        raise ValueError(f"dimension mismatch: U is {mat.shape}, state has {vec.size}")
    if check_unitary:
        dev = np.linalg.norm(mat.conj().T @ mat - np.eye(mat.shape[0]))
        if dev > 1e-9 * mat.shape[0]:
            raise ValueError(f"matrix is not unitary, |U^dag U - I| = {dev:.3e}")
    out = mat @ vec
    if isinstance(state, DenseState):
        return DenseState(out, state.num_sites, state.local_dim)
    return out


def apply_to_sites(state, U, sites, num_sites=None, local_dim=2):
    """Apply a q^k x q^k unitary to the listed sites of a larger register.

    The row/column ordering of U follows the order in which the sites are
    listed (first listed site is the most significant digit of U's index).
    Accepts and returns either a DenseState or a bare amplitude vector.
    """
    is_state = isinstance(state, DenseState)
    vec = _as_vector(state)
    if is_state:
        num_sites, local_dim = state.num_sites, state.local_dim
    if num_sites is None:
        raise ValueError("num_sites required when passing a bare vector")
    sites = [int(s) for s in sites]
    k = len(sites)
    Umat = np.asarray(U.matrix if isinstance(U, DenseOperator) else U, dtype=complex)
    if Umat.shape != (local_dim ** k, local_dim ** k):
        raise ValueError(
            f"operator shape {Umat.shape} does not match {k} sites of dim {local_dim}")
    psi = vec.reshape((local_dim,) * num_sites)
    rest = [ax for ax in range(num_sites) if ax not in sites]
    psi = np.transpose(psi, sites + rest)
    psi = psi.reshape(local_dim ** k, -1)
    psi = Umat @ psi
    psi = psi.reshape((local_dim,) * num_sites)
    inv = np.argsort(sites + rest)
    psi = np.transpose(psi, inv).reshape(-1)
    if is_state:
        return DenseState(psi, num_sites, local_dim)
    return psi


def partial_trace(state_or_op, keep):
    """Reduced density matrix on the kept subsystem.

    Accepts a DenseState (pure-state input) or a DenseOperator (density
    matrix input).  The kept sites appear in the order listed in `keep`.
    """
    if isinstance(keep, Subsystem):
        sites = list(keep.site_indices)
    else:
        sites = [int(s) for s in keep]
    if not sites:
        raise ValueError("cannot keep an empty subsystem")

    if isinstance(state_or_op, DenseState):
        n, q = state_or_op.num_sites, state_or_op.local_dim
        psi = state_or_op.amplitudes.reshape((q,) * n)
        rest = [ax for ax in range(n) if ax not in sites]
        psi = np.transpose(psi, sites + rest).reshape(q ** len(sites), -1)
        rho = psi @ psi.conj().T
        return DenseOperator(rho, len(sites), q)

    if isinstance(state_or_op, DenseOperator):
        n, q = state_or_op.num_sites, state_or_op.local_dim
        rho = state_or_op.matrix.reshape((q,) * (2 * n))
        rest = [ax for ax in range(n) if ax not in sites]
        perm = sites + rest
        # interleave row and column site axes, then trace the rest pairwise
        rho = np.transpose(rho, perm + [n + ax for ax in perm])
        dk, dr = q ** len(sites), q ** len(rest)
        rho = rho.reshape(dk, dr, dk, dr)
        out = np.einsum("arbr->ab", rho)
        return DenseOperator(out, len(sites), q)

    raise TypeError(f"expected DenseState or DenseOperator, got {type(state_or_op)}")


def purity(rho):
    """tr(rho^2) of a density matrix."""
    m = rho.matrix if isinstance(rho, DenseOperator) else np.asarray(rho)
    return float(np.real(np.einsum("ij,ji->", m, m)))


def _clamped_spectrum(rho):
    m = rho.matrix if isinstance(rho, DenseOperator) else np.asarray(rho)
    evals = np.linalg.eigvalsh((m + m.conj().T) / 2)
    if evals.min() < -EIG_CLAMP:
        raise NumericalError(
            f"density matrix has negative eigenvalue {evals.min():.3e}")
    return np.clip(evals, 0.0, None)


def entropy(rho, alpha=1):
    """Entanglement entropy of a density matrix in bits (log base 2).

    alpha=1 is the von Neumann entropy, alpha=2 the second Renyi entropy
    S2 = -log2 tr(rho^2).  Eigenvalues within the clamping window below
    zero are treated as exact zeros.
    """
    evals = _clamped_spectrum(rho)
    if alpha == 1:
        nz = evals[evals > 0]
        return float(-np.sum(nz * np.log2(nz)))
    if alpha == 2:
        return float(-np.log2(np.sum(evals ** 2)))
    if alpha <= 0:
        raise ValueError(f"Renyi order must be positive, got {alpha}")
    return float(np.log2(np.sum(evals ** alpha)) / (1 - alpha))


def mutual_information(state, region_a, region_b, alpha=1):
    """I(A:B) = S(A) + S(B) - S(AB) in bits, for disjoint regions."""
    if not isinstance(region_a, Subsystem):
        region_a = Subsystem(tuple(region_a), state.num_sites)
    if not isinstance(region_b, Subsystem):
        region_b = Subsystem(tuple(region_b), state.num_sites)
    if region_a.overlaps(region_b):
        raise ValueError("regions overlap")
    s_a = entropy(partial_trace(state, region_a), alpha)
    s_b = entropy(partial_trace(state, region_b), alpha)
    s_ab = entropy(
        partial_trace(state, Subsystem(region_a.site_indices + region_b.site_indices,
                                       state.num_sites)), alpha)
    return s_a + s_b - s_ab


def haar_matrix(dim, rng):
    """Haar-random unitary matrix via QR of a complex Gaussian matrix.

    The R diagonal phases are divided out so the distribution is exactly
    Haar rather than QR-convention dependent.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_matrices(dim, count, rng):
    """Batch of Haar-random unitaries, shape (count, dim, dim)."""
    z = rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))
    q, r = np.linalg.qr(z)
    d = np.einsum("...ii->...i", r)
    return q * (d / np.abs(d))[:, None, :]


def haar_unitary(dim, seed):
    """Haar-random unitary wrapped as a DenseOperator.

    `seed` may be an integer or a numpy Generator.  For dim = 2^k the
    result is tagged as k qubits, otherwise as a single site of dimension
    `dim`.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    mat = haar_matrix(dim, rng)
    k = dim.bit_length() - 1
    if dim == 2 ** k:
        return DenseOperator(mat, k, 2)
    return DenseOperator(mat, 1, dim)


MatrixNorms = namedtuple("MatrixNorms", ["trace_norm", "frobenius", "operator_norm"])


def matrix_norms(op):
    """Trace norm, Frobenius norm and operator norm from singular values."""
    m = op.matrix if isinstance(op, DenseOperator) else np.asarray(op)
    sv = np.linalg.svd(m, compute_uv=False)
    return MatrixNorms(float(sv.sum()), float(np.sqrt(np.sum(sv ** 2))), float(sv[0]))


def operator_norm_power_iteration(matvec, rmatvec, dim, tol=1e-10, max_iter=400,
                                  seed=7):
    """Largest singular value of a linear map given only its matvec.

    Power iteration on A^dag A; used where forming the dense matrix or a
    full SVD would dominate the runtime.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = rmatvec(matvec(v))
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(nrm - prev) <= tol * max(nrm, 1.0):
            break
        prev = nrm
    return float(np.sqrt(nrm))
