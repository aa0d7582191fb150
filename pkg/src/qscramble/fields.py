"""Space-time fields C(r,t) / F(r,t) and wavefront contour extraction.

A SpaceTimeField is a real grid indexed [site][time] plus the metadata
needed to make every output file self-describing.  The contour helpers
locate level crossings r_theta(t) of a decaying tail and fit the growth of
the gap between contours, which is how the broadening exponent is
measured.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import NumericalError


@dataclass
class SpaceTimeField:
    """Real-valued field over a (sites x times) grid with provenance tags."""

    values: np.ndarray
    sites: np.ndarray
    times: np.ndarray
    method: str
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.sites = np.asarray(self.sites)
        self.times = np.asarray(self.times, dtype=float)
        if self.values.shape != (self.sites.size, self.times.size):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"{self.sites.size} sites x {self.times.size} times")

    def at(self, site, time):
        i = int(np.nonzero(self.sites == site)[0][0])
        j = int(np.argmin(np.abs(self.times - time)))
        return self.values[i, j]

    def write_csv(self, path, version="0"):
        """Long-format CSV: one (site, time, value) row per grid point."""
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"# qscramble v{version}\n")
            f.write(f"# method: {self.method}\n")
            f.write(f"# seed: {self.seed}\n")
            f.write(f"# params: {json.dumps(self.params, sort_keys=True)}\n")
            f.write("site,time,value\n")
            for i, r in enumerate(self.sites):
                for j, t in enumerate(self.times):
                    f.write(f"{r},{t:.17g},{self.values[i, j]:.17g}\n")


def read_field_csv(path):
    """Read a field written by write_csv (or any site,time,value long CSV)."""
    meta = {"method": "unknown", "seed": None, "params": {}}
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                for key in ("method", "seed", "params"):
                    if body.startswith(key + ":"):
                        val = body[len(key) + 1:].strip()
                        if key == "params":
                            meta[key] = json.loads(val)
                        elif key == "seed":
                            meta[key] = None if val == "None" else int(val)
                        else:
                            meta[key] = val
                continue
            if line.startswith("site,"):
                continue
            parts = line.split(",")
            rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
    data = np.asarray(rows)
    sites = np.unique(data[:, 0])
    times = np.unique(data[:, 1])
    vals = np.full((sites.size, times.size), np.nan)
    si = {s: i for i, s in enumerate(sites)}
    ti = {t: j for j, t in enumerate(times)}
    for s, t, v in rows:
        vals[si[s], ti[t]] = v
    return SpaceTimeField(vals, sites, times, meta["method"], meta["params"],
                          meta["seed"])


def contour_radii(field, theta, origin=None):
    """Outermost crossing radius r_theta(t) of the level C = theta.

    For each time, scan outward from the origin site and find the last
    position where the field is still >= theta; the crossing point is
    interpolated linearly in log(C).  Times where the whole profile is
    below theta (front not formed) or the crossing hits the grid edge give
    NaN.
    """
    vals = field.values
    sites = np.asarray(field.sites, dtype=float)
    if origin is None:
        # the operator is still localized at the earliest time, so the
        # seed site is where the profile peaks there
        origin = sites[int(np.argmax(vals[:, 0]))]
    mask_right = sites >= origin
    idx = np.nonzero(mask_right)[0]
    out = np.full(field.times.size, np.nan)
    for j in range(field.times.size):
        prof = vals[idx, j]
        above = np.nonzero(prof >= theta)[0]
        if above.size == 0:
            continue
        k = above[-1]
        if k == prof.size - 1:
            continue  # still above theta at the grid edge
        c1, c2 = prof[k], prof[k + 1]
        if c2 <= 0:
            frac = 0.0
        else:
            frac = (np.log(c1) - np.log(theta)) / (np.log(c1) - np.log(c2))
        out[j] = sites[idx[k]] + frac * (sites[idx[k + 1]] - sites[idx[k]])
    return out


def contour_gap_slope(times, gaps, t_window=None):
    """Log-log slope of the contour gap delta_r(t), with intercept.

    Fits log(gap) = slope * log(t) + b by least squares over the window.
    Raises NumericalError when fewer than three clean points survive or
    the gaps are not positive (noisy, non-monotone contours).
    """
    times = np.asarray(times, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    good = np.isfinite(gaps) & (gaps > 0) & (times > 0)
    if t_window is not None:
        good &= (times >= t_window[0]) & (times <= t_window[1])
    if good.sum() < 3:
        raise NumericalError("not enough clean contour points to fit a slope")
    x = np.log(times[good])
    y = np.log(gaps[good])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2)))


def fit_front_velocity(times, radii, gap_exponent, t_window=None):
    """Least-squares fit r(t) = v t + b t^gamma for a known gamma.

    Separating the ballistic part from the sub-ballistic broadening term
    gives a far less biased velocity than a plain linear fit.
    """
    times = np.asarray(times, dtype=float)
    radii = np.asarray(radii, dtype=float)
    good = np.isfinite(radii) & (times > 0)
    if t_window is not None:
        good &= (times >= t_window[0]) & (times <= t_window[1])
    if good.sum() < 3:
        raise NumericalError("not enough contour points to fit a velocity")
    t = times[good]
    design = np.stack([t, t ** gap_exponent], axis=1)
    coef, *_ = np.linalg.lstsq(design, radii[good], rcond=None)
    return float(coef[0]), float(coef[1])
