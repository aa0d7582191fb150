"""Stochastic dynamics of operator spreading in Haar brickwork circuits.

Averaging each two-site Haar gate maps operator dynamics onto classical
stochastic rules for the identity / non-identity pattern of the operator
string.  Per gate on a bond,

    P(00) -> P(00)
    P(01), P(10) -> 1/(q^2+1) * [P(01)+P(10)+P(11)]
    P(11) -> (q^2-1)/(q^2+1) * [P(01)+P(10)+P(11)]

The right endpoint of the string performs a biased random walk,

    P'(r)   = ( P(r) + P(r+1) ) / (q^2 + 1)
    P'(r+1) = ( P(r) + P(r+1) ) q^2 / (q^2 + 1)

whose drift and spread give the butterfly velocity v_B = (q^2-1)/(q^2+1)
and front diffusion constant D = 2 q^2/(q^2+1)^2.  The full binary-string
master equation (exact Haar average) is kept as an oracle for N <= 14;
the O(N) endpoint form scales to hundreds of sites.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ResourceLimitError
from .fields import SpaceTimeField
from .paulis import identity_probability_profile

PROB_ATOL = 1e-12


@dataclass
class WeightDistribution:
    """Probability over identity/non-identity patterns (bit 1 = non-identity).

    Bit of site r lives at position N-1-r of the index (site 0 most
    significant), matching the package-wide ordering.
    """

    probs: np.ndarray
    num_sites: int

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.num_sites > 14:
            raise ResourceLimitError("binary-string master equation capped at N=14")
        if self.probs.size != 2 ** self.num_sites:
            raise ValueError("probability vector has wrong length")
        if abs(self.probs.sum() - 1.0) > PROB_ATOL:
            raise ValueError(f"probabilities sum to {self.probs.sum()!r}")

    @classmethod
    def seeded(cls, num_sites, seed_site=0):
        """Definite non-identity operator at one site, identity elsewhere."""
        p = np.zeros(2 ** num_sites)
        p[1 << (num_sites - 1 - seed_site)] = 1.0
        return cls(p, num_sites)

    def view(self):
        return self.probs.reshape((2,) * self.num_sites)

    def site_marginals(self):
        """P(bit_r = 1) for every site."""
        v = self.view()
        out = np.empty(self.num_sites)
        for r in range(self.num_sites):
            axes = tuple(ax for ax in range(self.num_sites) if ax != r)
            out[r] = v.sum(axis=axes)[1]
        return out

    def identity_probability(self):
        return float(self.probs[0])


def master_step(dist: WeightDistribution, bond, q=2) -> WeightDistribution:
    """One Haar-averaged gate on bond (r, r+1): the four-entry local rule."""
    r = int(bond)
    n = dist.num_sites
    if not 0 <= r < n - 1:
        raise ValueError(f"bond {r} out of range")
    v = dist.view().copy()
    idx = [slice(None)] * n
    def block(a, b):
        s = idx.copy()
        s[r], s[r + 1] = a, b
        return tuple(s)
    q2 = float(q * q)
    live = v[block(0, 1)] + v[block(1, 0)] + v[block(1, 1)]
    v[block(0, 1)] = live / (q2 + 1)
    v[block(1, 0)] = live / (q2 + 1)
    v[block(1, 1)] = live * (q2 - 1) / (q2 + 1)
    return WeightDistribution(v.reshape(-1), n)


def endpoint_walk_step(p_end, bond, q=2):
    """Endpoint update on bond (r, r+1); mass on the pair is conserved."""
    p = np.asarray(p_end, dtype=float).copy()
    r = int(bond)
    if not 0 <= r < p.size - 1:
        raise ValueError(f"bond {r} out of range")
    q2 = float(q * q)
    tot = p[r] + p[r + 1]
    p[r] = tot / (q2 + 1)
    p[r + 1] = tot * q2 / (q2 + 1)
    return p


def layer_bonds(num_sites, layer):
    """Brickwork bonds of one layer: even layers on even bonds, odd on odd."""
    start = 0 if layer % 2 == 0 else 1
    return list(range(start, num_sites - 1, 2))


@dataclass
class FrontResult:
    p_end: np.ndarray        # [layer, site]
    field: SpaceTimeField    # C(r, t) from the endpoint closure
    v_b: float
    diffusion: float
    v_b_expected: float
    diffusion_expected: float
    fit_layers: tuple


def evolve_front(num_sites, q, num_layers, seed_site=0, transient=20) -> FrontResult:
    """Deterministic endpoint-walk evolution plus (v_B, D) extraction.

    The squared-commutator profile uses the local-equilibrium closure
    C(r,t) = 2 * sum_{r' > r} P_end(r', t).  Drift and variance growth of
    the endpoint give v_B and D; the first `transient` layers are excluded
    from the fits and only every second layer is sampled so the even/odd
    sublattice oscillation drops out.
    """
    if seed_site != 0:
        raise ValueError("front evolution assumes the seed at site 0")
    p = np.zeros(num_sites)
    p[seed_site] = 1.0
    hist = np.empty((num_layers + 1, num_sites))
    hist[0] = p
    q2 = float(q * q)
    a, b = 1.0 / (q2 + 1.0), q2 / (q2 + 1.0)
    for layer in range(num_layers):
        start = 0 if layer % 2 == 0 else 1
        pairs = p[start:start + 2 * ((num_sites - start) // 2)].reshape(-1, 2)
        tot = pairs.sum(axis=1)
        pairs[:, 0] = a * tot
        pairs[:, 1] = b * tot
        hist[layer + 1] = p
        if p[-1] > 1e-9:
            import warnings
            warnings.warn(f"front reached the boundary at layer {layer}; "
                          "profile is truncated", RuntimeWarning)
    sites = np.arange(num_sites)
    # C(r,t) = 2 P(endpoint strictly beyond r)
    tail = np.cumsum(hist[:, ::-1], axis=1)[:, ::-1] - hist
    cvals = 2.0 * tail.T
    field = SpaceTimeField(cvals, sites, np.arange(num_layers + 1, dtype=float),
                           "endpoint-walk", {"q": q, "N": num_sites})
    ts = np.arange(transient, num_layers + 1, 2)
    means = hist[ts] @ sites
    variances = hist[ts] @ (sites ** 2) - means ** 2
    v_fit = np.polyfit(ts, means, 1)[0]
    d_fit = np.polyfit(ts, variances, 1)[0] / 2.0
    return FrontResult(hist, field, float(v_fit), float(d_fit),
                       (q2 - 1) / (q2 + 1), 2 * q2 / (q2 + 1) ** 2,
                       (int(ts[0]), int(ts[-1])))


def master_equation_profile(num_sites, q, num_layers, seed_site=0):
    """Exact Haar-averaged avg-C(r, layer) from the binary-string master equation.

    avg-C = 2 q^2/(q^2-1) * P(bit_r = 1); conservation is checked to
    1e-12 at every layer.
    """
    dist = WeightDistribution.seeded(num_sites, seed_site)
    q2 = float(q * q)
    grid = np.empty((num_sites, num_layers + 1))
    grid[:, 0] = 2 * q2 / (q2 - 1) * dist.site_marginals()
    for layer in range(num_layers):
        for bond in layer_bonds(num_sites, layer):
            dist = master_step(dist, bond, q)
        if abs(dist.probs.sum() - 1.0) > PROB_ATOL:
            raise ValueError("master equation lost probability")
        grid[:, layer + 1] = 2 * q2 / (q2 - 1) * dist.site_marginals()
    return SpaceTimeField(grid, np.arange(num_sites),
                          np.arange(num_layers + 1, dtype=float),
                          "master-equation", {"q": q, "N": num_sites})


def _apply_bond_gate_to_operator(W, u, r, num_sites):
    """W -> u^dag W u for a two-site gate on adjacent sites (r, r+1)."""
    d = 2 ** num_sites
    t = W.reshape(2 ** r, 4, -1)
    t = np.einsum("ab,ibj->iaj", u.conj().T, t)
    t = t.reshape(d, 2 ** r, 4, 2 ** (num_sites - r - 2))
    t = np.einsum("miaj,ab->mibj", t, u)
    return t.reshape(d, d)


def brickwork_heisenberg(W0, num_sites, num_layers, rng, record=None):
    """Evolve a dense operator through random brickwork layers.

    record(layer, W) is called after every layer (and once at layer 0).
    Returns the final operator.
    """
    from .core import haar_matrix

    W = np.array(W0, dtype=complex)
    if record is not None:
        record(0, W)
    for layer in range(num_layers):
        for bond in layer_bonds(num_sites, layer):
            u = haar_matrix(4, rng)
            W = _apply_bond_gate_to_operator(W, u, bond, num_sites)
        if record is not None:
            record(layer + 1, W)
    return W


@dataclass
class BrickworkComparison:
    mc_mean: SpaceTimeField
    mc_sigma: np.ndarray
    prediction: SpaceTimeField
    max_sigma_deviation: float


def brickwork_otoc_direct(num_sites, depth, num_seeds, seed=0) -> BrickworkComparison:
    """Direct seed-averaged avg-C(r,t) on qubit brickwork circuits vs the master equation.

    For each circuit realization the Heisenberg operator is evolved
    densely and its identity-probability profile converted to the
    basis-averaged squared commutator; the master equation gives the
    exact circuit average to compare with.
    """
    if num_sites > 10:
        raise ResourceLimitError("direct brickwork route capped at 10 qubits")
    from .paulis import PauliString

    W0 = PauliString.single_site("Z", 0, num_sites).to_matrix()
    samples = np.empty((num_seeds, num_sites, depth + 1))
    for i in range(num_seeds):
        rng = np.random.default_rng(seed + i)

        def record(layer, W, i=i):
            prof = identity_probability_profile(W, num_sites)
            samples[i, :, layer] = (8.0 / 3.0) * (1.0 - prof)

        brickwork_heisenberg(W0, num_sites, depth, rng, record)
    mean = samples.mean(axis=0)
    sigma = samples.std(axis=0, ddof=1) / np.sqrt(num_seeds)
    pred = master_equation_profile(num_sites, 2, depth)
    dev = np.abs(mean - pred.values) / np.maximum(sigma, 1e-12)
    mc = SpaceTimeField(mean, np.arange(num_sites),
                        np.arange(depth + 1, dtype=float), "brickwork-mc",
                        {"num_seeds": num_seeds, "N": num_sites}, seed)
    return BrickworkComparison(mc, sigma, pred, float(dev.max()))
