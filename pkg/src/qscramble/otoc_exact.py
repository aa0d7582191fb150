"""Numerically exact OTOC / squared-commutator computation.

Three routes to F(r,t) = tr(W(t) V_r W(t) V_r) / 2^N for Pauli probes:

* ED-Operator: full diagonalization, eigenbasis phase sums (N <= 14);
* Krylov-Operator: Lanczos on the Heisenberg operator itself (N <= 12,
  dominated in practice by the state method);
* Krylov-State: Lanczos state propagation plus typicality, replacing the
  trace by Haar-random states (N <= 26), with a per-point standard error.

For Hermitian unitary W, V the squared commutator is C = 2 - 2 Re F.
Also houses the operator-probability diagnostics (which site-probabilities
the OTOC averages measure) and a Lieb-Robinson certificate checking the
exact commutator norm against the constructive nearest-neighbor bound.
"""

from __future__ import annotations

import concurrent.futures as cf
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .core import (
    MAX_STATE_QUBITS,
    NumericalError,
    ResourceLimitError,
    random_state,
)
from .fields import SpaceTimeField
from .hamiltonian import SpinChainHamiltonian
from .paulis import (
    PAULI_MATS,
    PauliString,
    apply_pauli_to_matrix,
    identity_probability_profile,
    pauli_label,
)

LR_EXPONENT_RATE = 4 * np.e  # exponent 4 e J t - r of the constructive bound


@dataclass(frozen=True)
class OtocRequest:
    """What to compute: seed operator, probe label, time grid, method knobs."""

    w_label: str
    w_site: int
    v_label: str
    times: np.ndarray
    probe_sites: tuple | None = None  # default: all sites
    method: str = "ed"
    krylov_dim: int = 30
    num_typical_states: int = 1
    seed: int = 0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if np.any(np.diff(t) < 0):
            raise ValueError("times must be sorted ascending")
        object.__setattr__(self, "times", t)
        if self.krylov_dim < 2:
            raise ValueError("krylov_dim must be >= 2")

    def sites_for(self, num_sites):
        if self.probe_sites is None:
            return tuple(range(num_sites))
        return tuple(self.probe_sites)


@dataclass
class OtocFields:
    F: SpaceTimeField
    C: SpaceTimeField
    stderr: SpaceTimeField | None = None


# ---------------------------------------------------------------- ED route


def _eigenbasis(H: SpinChainHamiltonian):
    evals, evecs = np.linalg.eigh(H.sparse().toarray())
    return evals, evecs


def _sandwich(evecs, label, site, num_sites):
    """Pauli operator rotated into the eigenbasis, E^dag sigma E."""
    sig_e = apply_pauli_to_matrix(label, site, evecs, num_sites, side="left")
    return evecs.conj().T @ sig_e


def otoc_ed(H: SpinChainHamiltonian, request: OtocRequest) -> OtocFields:
    """OTOC by full exact diagonalization, one eigh shared by all times."""
    n = H.num_sites
    if n > 14:
        raise ResourceLimitError(f"ED capped at 14 qubits, got {n}")
    evals, evecs = _eigenbasis(H)
    wl = pauli_label(request.w_label)
    vl = pauli_label(request.v_label)
    W_e = _sandwich(evecs, wl, request.w_site, n)
    sites = request.sites_for(n)
    times = request.times
    d = 2 ** n
    Fvals = np.empty((len(sites), times.size), dtype=complex)
    for i, r in enumerate(sites):
        V_e = _sandwich(evecs, vl, r, n)
        for j, t in enumerate(times):
            phase = np.exp(1j * evals * t)
            Wt = W_e * phase[:, None] * phase.conj()[None, :]
            M = Wt @ V_e
            Fvals[i, j] = np.einsum("ij,ji->", M, M) / d
    return _package_fields(Fvals, sites, times, "ed", H, request)


def _package_fields(Fvals, sites, times, method, H, request, stderr=None):
    params = {
        "J": H.J, "H_x": H.H_x, "H_z": H.H_z, "N": H.num_sites,
        "W": f"{request.w_label}@{request.w_site}", "V": request.v_label,
        "method": method,
    }
    sites = np.asarray(sites)
    f_field = SpaceTimeField(np.real(Fvals), sites, times, method, params,
                             request.seed)
    c_field = SpaceTimeField(2.0 - 2.0 * np.real(Fvals), sites, times, method,
                             params, request.seed)
    err_field = None
    if stderr is not None:
        err_field = SpaceTimeField(stderr, sites, times, method + "-stderr",
                                   params, request.seed)
    return OtocFields(f_field, c_field, err_field)


# ------------------------------------------------------------- Krylov route


def _lanczos_apply_expm(matvec, v, z, k, breakdown_tol=1e-13):
    """w = exp(z H) v via a k-dimensional Lanczos subspace (H Hermitian).

    Returns (w, err_estimate, broke_down).  The error estimate is the
    magnitude of the last Krylov component of exp(z T) e_1 times the next
    off-diagonal norm; a tiny value certifies the subspace was enough.
    """
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return v.copy(), 0.0, True
    basis = np.empty((k, v.size), dtype=complex)
    basis[0] = v / nrm
    alpha = np.empty(k)
    beta = np.zeros(k)
    broke = False
    m = k
    for j in range(k):
        w = matvec(basis[j])
        alpha[j] = np.real(np.vdot(basis[j], w))
        w = w - alpha[j] * basis[j]
        if j > 0:
            w = w - beta[j] * basis[j - 1]
        # full reorthogonalization: cheap at these subspace sizes and kills
        # the classic Lanczos loss-of-orthogonality drift
        w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        b = np.linalg.norm(w)
        if j + 1 < k:
            if b < breakdown_tol * max(1.0, abs(alpha[j])):
                m = j + 1
                broke = True
                break
            beta[j + 1] = b
            basis[j + 1] = w / b
        else:
            beta_next = b
    ew, ev = sla.eigh_tridiagonal(alpha[:m], beta[1:m])
    y = ev @ (np.exp(z * ew) * ev[0, :])
    out = nrm * (y @ basis[:m])
    if broke or m < k:
        err = 0.0
    else:
        err = float(abs(beta_next) * abs(y[-1]))
    return out, err, broke


def krylov_evolve_vec(Hmat, vec, t, krylov_dim=30, tol=1e-10, norm_scale=None):
    """exp(-i H t) vec with adaptive substepping.

    Substeps are halved until the posterior Krylov error estimate of every
    step is below tol.  Hmat may be any object with a matmul (dense array
    or scipy sparse matrix).
    """
    if t == 0:
        return vec.copy()
    matvec = (lambda x: Hmat @ x)
    if norm_scale is None:
        norm_scale = _norm_estimate(Hmat)
    n_sub = max(1, int(np.ceil(abs(t) * norm_scale / max(krylov_dim, 1))))
    while True:
        dt = t / n_sub
        out = vec
        ok = True
        for _ in range(n_sub):
            out, err, _ = _lanczos_apply_expm(matvec, out, -1j * dt, krylov_dim)
            if err > tol:
                ok = False
                break
        if ok:
            return out
        n_sub *= 2
        if n_sub > 10 ** 7:
            raise NumericalError("Krylov substepping failed to converge")


def _norm_estimate(Hmat):
    # rough spectral scale; only used to pick the initial substep count
    try:
        d = np.abs(Hmat.diagonal()).max()
        if hasattr(Hmat, "data"):
            s = np.abs(Hmat.data).sum() / Hmat.shape[0]
        else:
            s = np.abs(Hmat).sum() / Hmat.shape[0]
        return float(max(d, s, 1e-12))
    except Exception:
        return 1.0


def krylov_evolve_state(H: SpinChainHamiltonian, state, t, krylov_dim=30,
                        tol=1e-10):
    """exp(-i H t)|psi> for a DenseState, preserving the norm to ~1e-10."""
    Hs = H.sparse().real
    vec = krylov_evolve_vec(Hs, state.amplitudes.astype(complex), t,
                            krylov_dim, tol)
    drift = abs(np.linalg.norm(vec) - 1.0)
    if drift > 1e-8:
        raise NumericalError(f"Krylov propagation lost norm by {drift:.3e}")
    from .core import DenseState
    return DenseState(vec / np.linalg.norm(vec), state.num_sites, state.local_dim)


def _apply_single_pauli_vec(label, site, vec, num_sites):
    psi = vec.reshape(2 ** site, 2, -1)
    sig = PAULI_MATS[label]
    return np.einsum("ab,ibj->iaj", sig, psi).reshape(-1)


def _apply_single_pauli_block(label, site, block, num_sites):
    """Pauli on one site of every column of a (2^N, m) block."""
    d, m = block.shape
    psi = block.reshape(2 ** site, 2, -1)
    sig = PAULI_MATS[label]
    return np.einsum("ab,ibj->iaj", sig, psi).reshape(d, m)


def spectral_bounds(Hs):
    """(lambda_min, lambda_max) of a sparse Hermitian matrix, via Lanczos."""
    import scipy.sparse.linalg as spla
    hi = float(spla.eigsh(Hs, k=1, which="LA", return_eigenvectors=False,
                          tol=1e-6)[0])
    lo = float(spla.eigsh(Hs, k=1, which="SA", return_eigenvectors=False,
                          tol=1e-6)[0])
    return lo, hi


def chebyshev_expm_block(Hs, block, t, bounds):
    """exp(-i H t) applied to every column of a block, by Chebyshev expansion.

    Machine-precision propagator for Hermitian H with known spectral
    bounds; the block form turns thousands of typicality evolutions into
    sparse-times-dense products.
    """
    if t == 0:
        return block.copy()
    lo, hi = bounds
    c = (hi + lo) / 2.0
    s = (hi - lo) / 2.0 * 1.01 + 1e-12
    a = s * t
    import scipy.special as sps
    K = int(np.ceil(abs(a) + 12.0 * abs(a) ** (1.0 / 3.0) + 25))
    coeff = sps.jv(np.arange(K + 1), a)
    phase4 = (1.0, -1j, -1.0, 1j)  # (-i)^k
    # T_{k+1} = 2 Htilde T_k - T_{k-1}
    tk_prev = block
    tk = (Hs @ block - c * block) / s
    acc = coeff[0] * tk_prev + 2 * (-1j) * coeff[1] * tk
    for k in range(2, K + 1):
        tk_prev, tk = tk, 2.0 * ((Hs @ tk) - c * tk) / s - tk_prev
        if abs(coeff[k]) > 1e-17:
            acc += (2 * phase4[k % 4] * coeff[k]) * tk
    return np.exp(-1j * c * t) * acc


def _typicality_chunk(args):
    (Hs, n, wl, ws, vl, sites, times, seeds, bounds) = args
    d = 2 ** n
    m = len(seeds)
    psi = np.empty((d, m), dtype=complex)
    for i, seed in enumerate(seeds):
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        psi[:, i] = v / np.linalg.norm(v)
    evolve = lambda b, t: chebyshev_expm_block(Hs, b, t, bounds)
    nsite = len(sites)
    Fvals = np.empty((m, nsite, times.size), dtype=complex)
    u = psi.copy()
    ms = [_apply_single_pauli_block(vl, r, psi, n) for r in sites]
    t_prev = 0.0
    for j, t in enumerate(times):
        dt = t - t_prev
        if dt != 0:
            u = evolve(u, dt)
            ms = [evolve(b, dt) for b in ms]
            t_prev = t
        x = evolve(_apply_single_pauli_block(wl, ws, u, n), -t)  # W(t)|psi_i>
        for i, r in enumerate(sites):
            z = evolve(_apply_single_pauli_block(wl, ws, ms[i], n), -t)
            vz = _apply_single_pauli_block(vl, r, z, n)
            Fvals[:, i, j] = np.einsum("ds,ds->s", x.conj(), vz)
    return Fvals


def otoc_krylov_state(H: SpinChainHamiltonian, request: OtocRequest,
                      threads=1, chunk_size=64) -> OtocFields:
    """Typicality OTOC: the trace replaced by Haar-random expectation values.

    One random state already captures the OTOC up to fluctuations that
    shrink exponentially with system size; num_typical_states > 1 averages
    independent states and reports the standard error per grid point.
    States are propagated in blocks (Chebyshev expansion, machine
    precision) so large ensembles stay affordable.
    """
    n = H.num_sites
    if n > MAX_STATE_QUBITS:
        raise ResourceLimitError(f"Krylov-State capped at {MAX_STATE_QUBITS} qubits")
    if request.num_typical_states < 1:
        raise ValueError("need at least one typical state")
    Hs = H.sparse().real
    bounds = spectral_bounds(Hs)
    sites = request.sites_for(n)
    m = request.num_typical_states
    seeds = [request.seed + 1000 * i for i in range(m)]
    chunks = [seeds[i:i + chunk_size] for i in range(0, m, chunk_size)]
    jobs = [(Hs, n, pauli_label(request.w_label), request.w_site,
             pauli_label(request.v_label), sites, request.times, ch, bounds)
            for ch in chunks]
    if threads > 1 and len(jobs) > 1:
        with cf.ProcessPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(_typicality_chunk, jobs))
    else:
        samples = [_typicality_chunk(j) for j in jobs]
    stack = np.concatenate(samples, axis=0)
    Fmean = stack.mean(axis=0)
    stderr = None
    if m > 1:
        stderr = np.real(stack).std(axis=0, ddof=1) / np.sqrt(m)
    return _package_fields(Fmean, sites, request.times, "krylov-state", H,
                           request, stderr=stderr)


def otoc_krylov_operator(H: SpinChainHamiltonian, request: OtocRequest) -> OtocFields:
    """Heisenberg-picture Krylov: Lanczos on the operator with [H, .].

    Exact like ED but avoids the full diagonalization; limited to 12
    qubits by the dense W(t) storage and in practice dominated by the
    state method.
    """
    n = H.num_sites
    if n > 12:
        raise ResourceLimitError("Krylov-Operator capped at 12 qubits")
    d = 2 ** n
    Hd = H.sparse().toarray().real
    wl = pauli_label(request.w_label)
    vl = pauli_label(request.v_label)
    W0 = np.zeros((d, d), dtype=complex)
    eye = np.eye(d, dtype=complex)
    W0[:] = apply_pauli_to_matrix(wl, request.w_site, eye, n, side="left")

    def liouville(vecop):
        M = vecop.reshape(d, d)
        return (Hd @ M - M @ Hd).reshape(-1)

    sites = request.sites_for(n)
    times = request.times
    Fvals = np.empty((len(sites), times.size), dtype=complex)
    Wt = W0.reshape(-1).copy()
    t_prev = 0.0
    scale = _norm_estimate(Hd) * 2
    for j, t in enumerate(times):
        dt = t - t_prev
        if dt != 0:
            # W(t) = e^{iHt} W e^{-iHt} solves dW/dt = i [H, W]
            Wt = krylov_evolve_vec(_MatvecWrapper(liouville, d * d), Wt, -dt,
                                   request.krylov_dim, 1e-10, scale)
            t_prev = t
        M = Wt.reshape(d, d)
        for i, r in enumerate(sites):
            MV = apply_pauli_to_matrix(vl, r, M, n, side="right")
            Fvals[i, j] = np.einsum("ij,ji->", MV, MV) / d
    return _package_fields(Fvals, sites, times, "krylov-operator", H, request)


class _MatvecWrapper:
    """Adapter exposing @ for a matvec callable (ad_H acting on vec(W))."""

    def __init__(self, fn, dim):
        self.fn = fn
        self.shape = (dim, dim)

    def __matmul__(self, v):
        return self.fn(v)

    def diagonal(self):
        return np.zeros(1)


# ----------------------------------------------- operator-probability layer


@dataclass(frozen=True)
class WeightProfile:
    prob_identity: float
    avg_F: float
    avg_C: float


def pauli_weight_profile(W_t, site, num_sites=None, q=2) -> WeightProfile:
    """Identity probability at a site and the basis-averaged OTOC it fixes.

    With P = P(S_site = I) under |alpha(S)|^2, the average over the q^2-1
    non-identity probes is F_avg = (q^2 P - 1)/(q^2 - 1) and
    C_avg = 2 q^2 (1 - P) / (q^2 - 1).
    """
    mat = W_t.matrix if hasattr(W_t, "matrix") else np.asarray(W_t)
    if num_sites is None:
        num_sites = int(round(np.log2(mat.shape[0])))
    prof = identity_probability_profile(mat, num_sites)
    p = float(prof[site])
    q2 = q * q
    return WeightProfile(p, (q2 * p - 1.0) / (q2 - 1.0),
                         2.0 * q2 * (1.0 - p) / (q2 - 1.0))


# ------------------------------------------------- Lieb-Robinson certificate


@dataclass
class LrCertificate:
    r_values: np.ndarray
    t_values: np.ndarray
    exact_norms: np.ndarray   # [r, t]
    bound_values: np.ndarray  # [r, t]
    regime_mask: np.ndarray   # True where separation > 4 e J t
    local_scale: float        # J = max_r ||h_r||_inf
    certified: bool = field(init=False)

    def __post_init__(self):
        inside = self.regime_mask
        self.certified = bool(
            np.all(self.exact_norms[inside] <= self.bound_values[inside] + 1e-12))


def _check_nearest_neighbor(H: SpinChainHamiltonian):
    for pauli, _ in H.terms:
        support = [i for i, l in enumerate(pauli.labels) if l != 0]
        if support and (max(support) - min(support)) > 1:
            raise ValueError("Hamiltonian has terms beyond nearest neighbors")


def lieb_robinson_certificate(H: SpinChainHamiltonian, w_label, w_site,
                              v_label, r_values, t_values) -> LrCertificate:
    """Exact ||[W(t), V_r]||_inf against 2 min(1, e^{4 e J t - r}).

    J is the largest bond-term operator norm; the polynomial prefactor of
    the constructive derivation is replaced by the trivial cap 2|V||W|, so
    the certificate is only claimed in the regime r > 4 e J t.
    """
    _check_nearest_neighbor(H)
    n = H.num_sites
    if n > 12:
        raise ResourceLimitError("exact commutator norms capped at 12 qubits")
    evals, evecs = _eigenbasis(H)
    wl = pauli_label(w_label)
    vl = pauli_label(v_label)
    Jloc = H.max_bond_norm()
    r_values = np.asarray(r_values, dtype=int)
    t_values = np.asarray(t_values, dtype=float)
    exact = np.zeros((r_values.size, t_values.size))
    bound = np.zeros_like(exact)
    mask = np.zeros(exact.shape, dtype=bool)
    Ec = evecs.conj().T
    from .core import operator_norm_power_iteration
    for j, t in enumerate(t_values):
        ph_p = np.exp(1j * evals * t)
        ph_m = ph_p.conj()

        def w_t(x):
            y = _apply_single_pauli_vec(wl, w_site, evecs @ (ph_m * (Ec @ x)), n)
            return evecs @ (ph_p * (Ec @ y))

        for i, r in enumerate(r_values):
            site = w_site + int(r)
            if not 0 <= site < n:
                raise ValueError(f"probe site {site} outside the chain")
            sep = abs(int(r))

            def comm(x):
                return w_t(_apply_single_pauli_vec(vl, site, x, n)) - \
                    _apply_single_pauli_vec(vl, site, w_t(x), n)

            def comm_dag(x):
                return -comm(x)  # [W,V]^dag = -[W,V] for Hermitian W, V

            exact[i, j] = operator_norm_power_iteration(comm, comm_dag, 2 ** n,
                                                        tol=1e-11)
            bound[i, j] = 2.0 * min(1.0, np.exp(LR_EXPONENT_RATE * Jloc * t - sep))
            mask[i, j] = sep > LR_EXPONENT_RATE * Jloc * t
    return LrCertificate(r_values, t_values, exact, bound, mask, Jloc)
