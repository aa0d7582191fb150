"""Analytic growth forms, the phenomenological wavefront, and noiseless FKPP.

The one-parameter family

    C(r,t) = exp( -lambda (r/v_B - t)^{1+p} / t^p ),   r >= v_B t,

interpolates between sharp large-N fronts (p = 0), free-fermion
sub-diffusive broadening (p = 1/2) and the diffusively broadened random
circuit front (p = 1).  Contours sit at
r_theta = v_B t + v_B (t^p log(1/theta)/lambda)^{1/(1+p)}, so the gap
between two contours grows like t^{p/(1+p)}.

The mean-field scrambling front solves an FKPP-type equation

    d_t phi = (3/2) (2 - phi) ( (g^2/2) d_r^2 phi + (1 + g^2) phi ),

whose pulled traveling wave moves at v_B = sqrt(18 g^2 (1+g^2)) and whose
tail at fixed position grows at the Lyapunov rate lambda_L = 6 (1+g^2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate as integrate
import scipy.optimize as opt
from scipy.special import expit

from .core import NumericalError
from .fields import SpaceTimeField, contour_gap_slope, contour_radii

SATURATION = 2.0


@dataclass(frozen=True)
class GrowthForm:
    lam: float
    v_b: float
    p: float

    def __post_init__(self):
        if self.lam <= 0 or self.v_b <= 0 or self.p < 0:
            raise ValueError("growth form needs lambda > 0, v_B > 0, p >= 0")


def eval_growth_form(form: GrowthForm, r, t, cap=SATURATION):
    """Tail value of the universal growth form; capped inside the cone.

    p = 0 reduces to exp(lambda (t - r/v_B)); the value is exactly 1 on
    the ray r = v_B t.
    """
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("growth form defined for t > 0")
    u = r / form.v_b - t
    tail = np.exp(-form.lam * np.maximum(u, 0.0) ** (1.0 + form.p) / t ** form.p)
    return np.where(u >= 0, tail, cap)


def growth_form_contour(form: GrowthForm, theta, t):
    """r_theta(t) from inverting the growth form (theta < 1)."""
    t = np.asarray(t, dtype=float)
    if not 0 < theta < 1:
        raise ValueError("contour level must be in (0, 1)")
    return form.v_b * t + form.v_b * (
        t ** form.p * np.log(1.0 / theta) / form.lam) ** (1.0 / (1.0 + form.p))


def synthetic_growth_field(form: GrowthForm, sites, times) -> SpaceTimeField:
    sites = np.asarray(sites)
    times = np.asarray(times, dtype=float)
    vals = eval_growth_form(form, sites[:, None], times[None, :])
    return SpaceTimeField(vals, sites, times, "synthetic-growth-form",
                          {"lam": form.lam, "v_b": form.v_b, "p": form.p})


def eval_phenom_profile(xi, r, t, tol=1e-10):
    """Fermi-Dirac x Gaussian wavefront in dimensionless variables.

    C(r,t) = (2/sqrt(2 pi)) Int dD exp(-D^2/2) / (exp(xi sqrt(t) (D + (r-t)/sqrt(t))) + 1)

    C = 1 exactly on the front r = t; xi -> inf gives the diffusive
    erfc((r-t)/sqrt(2t)) profile and the far tail r - t > xi t grows like
    2 exp(xi ((1 + xi/2) t - r)).
    """
    if t <= 0:
        raise ValueError("profile defined for t > 0")
    st = np.sqrt(t)
    shift = (r - t) / st

    def integrand(d):
        return np.exp(-d * d / 2.0) * expit(-xi * st * (d + shift))

    val, err = integrate.quad(integrand, -12.0, 12.0, epsabs=tol, epsrel=tol,
                              limit=200)
    if err > max(100 * tol, 1e-8 * max(abs(val), 1e-300)) and err > 1e-13:
        raise NumericalError(f"wavefront quadrature did not converge (err {err:.2e})")
    return float(2.0 / np.sqrt(2.0 * np.pi) * val)


@dataclass(frozen=True)
class FKPPConfig:
    g: float
    dr: float = 0.1
    dt_pde: float | None = None
    r_max: float = 260.0
    seed_width: float = 2.0

    def step(self):
        limit = self.dr ** 2 / (3.0 * self.g ** 2)
        if self.dt_pde is None:
            return 0.5 * limit
        if self.dt_pde > limit:
            raise ValueError(
                f"dt_pde={self.dt_pde} violates the stability bound {limit:.3e}")
        return self.dt_pde


@dataclass
class FKPPResult:
    times: np.ndarray
    front: np.ndarray
    v_front: float
    lambda_tail: float
    v_b_expected: float
    lambda_expected: float
    phi_final: np.ndarray
    grid: np.ndarray
    field: SpaceTimeField | None = None


def fkpp_integrate(config: FKPPConfig, total_time, snapshot_times=()) -> FKPPResult:
    """Explicit integration of the noiseless scrambling front.

    Front speed from the theta = 1 crossing over the last half of the
    run; tail rate from d ln(phi)/dt at a fixed probe ahead of the front
    while phi is still deep in the linear regime.
    """
    g = config.g
    dr = config.dr
    dt = config.step()
    r = np.arange(0.0, config.r_max + dr, dr)
    phi = SATURATION * np.exp(-0.5 * (r / config.seed_width) ** 2)
    v_exp = np.sqrt(18.0 * g * g * (1.0 + g * g))
    lam_exp = 6.0 * (1.0 + g * g)
    if v_exp * total_time > 0.9 * config.r_max:
        raise ValueError("domain too small for the requested run time")
    probe_idx = int(0.85 * v_exp * total_time / dr)
    n_steps = int(round(total_time / dt))
    sample_every = max(1, n_steps // 2000)
    snap_steps = {int(round(s / dt)): s for s in snapshot_times}
    snaps = {}
    times, fronts, probes = [], [], []
    inv_dr2 = 1.0 / dr ** 2
    for step in range(n_steps + 1):
        if step % sample_every == 0:
            times.append(step * dt)
            fronts.append(_level_crossing(r, phi, 1.0))
            probes.append(phi[probe_idx])
        if step in snap_steps:
            snaps[snap_steps[step]] = phi.copy()
        if step == n_steps:
            break
        lap = np.empty_like(phi)
        lap[1:-1] = (phi[2:] - 2.0 * phi[1:-1] + phi[:-2]) * inv_dr2
        lap[0] = 2.0 * (phi[1] - phi[0]) * inv_dr2
        lap[-1] = 2.0 * (phi[-2] - phi[-1]) * inv_dr2
        phi = phi + dt * 1.5 * (SATURATION - phi) * (0.5 * g * g * lap
                                                     + (1.0 + g * g) * phi)
        if phi.min() < -1e-6 or phi.max() > SATURATION + 1e-6:
            raise NumericalError("FKPP solution left [0, 2]; reduce the step")
    times = np.asarray(times)
    fronts = np.asarray(fronts, dtype=float)
    probes = np.asarray(probes)
    late = times >= total_time / 2.0
    ok = late & np.isfinite(fronts)
    v_front = float(np.polyfit(times[ok], fronts[ok], 1)[0])
    # the window straddles the crossover between the seed transient
    # (rate above lambda_L) and the near-front prefactor bias (below),
    # where the two systematic errors cancel to within a few percent
    window = (probes > 1e-11) & (probes < 1e-7)
    if window.sum() < 5:
        raise NumericalError("probe never traversed the linear regime")
    lam_fit = float(np.polyfit(times[window], np.log(probes[window]), 1)[0])
    fld = None
    if snaps:
        st = sorted(snaps)
        fld = SpaceTimeField(np.stack([snaps[s] for s in st], axis=1), r,
                             np.asarray(st, dtype=float), "fkpp",
                             {"g": g, "dr": dr})
    return FKPPResult(times, fronts, v_front, lam_fit, v_exp, lam_exp, phi, r,
                      fld)


def _level_crossing(r, phi, level):
    above = np.nonzero(phi >= level)[0]
    if above.size == 0 or above[-1] == r.size - 1:
        return np.nan
    k = above[-1]
    frac = (phi[k] - level) / max(phi[k] - phi[k + 1], 1e-300)
    return r[k] + frac * (r[k + 1] - r[k])


@dataclass
class GrowthFormFit:
    form: GrowthForm
    residual_rms: float
    condition_number: float
    flagged: bool
    covariance: np.ndarray | None


def fit_growth_form(field: SpaceTimeField, c_window=(1e-8, 0.5),
                    t_window=None, origin=None) -> GrowthFormFit:
    """Nonlinear least squares of log C against the universal growth form.

    Tail points with C inside c_window enter the fit; initial guesses come
    from the contour-gap machinery.  An ill-conditioned Jacobian flags the
    fit rather than failing it.
    """
    times = field.times
    if t_window is None:
        t_window = (times.max() / 10.0, times.max())
    sites = np.asarray(field.sites, dtype=float)
    if origin is None:
        origin = sites[int(np.argmax(field.values[:, 0]))]
    # initial broadening estimate from two contour levels
    try:
        r_hi = contour_radii(field, 1e-2, origin)
        r_lo = contour_radii(field, 1e-6, origin)
        slope, _, _ = contour_gap_slope(times, r_lo - r_hi, t_window)
        p0 = np.clip(slope / max(1.0 - slope, 1e-6), 0.0, 2.0)
        sel = np.isfinite(r_lo) & (times >= t_window[0]) & (times <= t_window[1])
        v0 = max(np.polyfit(times[sel], r_lo[sel], 1)[0], 1e-3)
    except NumericalError:
        p0, v0 = 0.5, 1.0

    tsel = (times >= t_window[0]) & (times <= t_window[1])
    pts_r, pts_t, pts_logc = [], [], []
    for j in np.nonzero(tsel)[0]:
        col = field.values[:, j]
        mask = (col > c_window[0]) & (col < c_window[1]) & (sites >= origin)
        pts_r.append(sites[mask])
        pts_t.append(np.full(mask.sum(), times[j]))
        pts_logc.append(np.log(col[mask]))
    pts_r = np.concatenate(pts_r)
    pts_t = np.concatenate(pts_t)
    pts_logc = np.concatenate(pts_logc)
    if pts_r.size < 10:
        raise NumericalError("not enough tail points for a growth-form fit")
    rr = pts_r - origin

    def resid(params):
        lam, v, p = params
        u = np.maximum(rr / v - pts_t, 1e-12)
        return (-lam * u ** (1.0 + p) / pts_t ** p) - pts_logc

    sol = opt.least_squares(resid, x0=[1.0, v0, p0],
                            bounds=([1e-6, 1e-6, 0.0], [np.inf, np.inf, 3.0]))
    if not sol.success:
        raise NumericalError("growth-form fit did not converge")
    jac = sol.jac
    sv = np.linalg.svd(jac, compute_uv=False)
    cond = float(sv[0] / max(sv[-1], 1e-300))
    dof = max(pts_r.size - 3, 1)
    rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    cov = None
    flagged = cond > 1e8
    if not flagged:
        cov = np.linalg.inv(jac.T @ jac) * (np.sum(sol.fun ** 2) / dof)
    lam, v, p = sol.x
    return GrowthFormFit(GrowthForm(float(lam), float(v), float(p)), rms,
                         cond, flagged, cov)
