"""Sampled radial profiles with linear interpolation and exact cell moments.

A profile stores values on an ascending radius grid starting at 0 and is
treated as piecewise linear between knots and identically zero beyond its
support radius.  Besides evaluation it exposes the two quantities the
one-dimensional reduction of the homogeneous wave solution needs:

* ``derivative(x)`` of the interpolant, centred at knots so that knot queries
  (which is where the solver asks) stay second-order accurate;
* ``moment_integral(x)`` = integral of y*profile(y) from 0 to x, computed from
  per-cell closed forms so compact support is honoured to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RadialProfile", "bump_profile", "zero_profile"]


@dataclass(frozen=True)
class RadialProfile:
    r: np.ndarray
    values: np.ndarray
    rho: float
    _moments: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or v.shape != r.shape:
            raise ValueError("profile grid and values must be 1-D and congruent")
        if r.size < 2 or r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise ValueError("grid unsorted: radii must ascend strictly from 0")
        if not np.all(np.isfinite(v)):
            raise ValueError("profile values must be finite")
        if self.rho <= 0:
            raise ValueError("support radius must be positive")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", v)
        # cumulative integral of y*v(y) over whole cells, one entry per knot
        r0, r1 = r[:-1], r[1:]
        v0, v1 = v[:-1], v[1:]
        m = (v1 - v0) / (r1 - r0)
        cell = v0 * (r1**2 - r0**2) / 2 + m * (r1**3 - r0**3) / 3 - m * r0 * (r1**2 - r0**2) / 2
        object.__setattr__(self, "_moments", np.concatenate(([0.0], np.cumsum(cell))))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.r, self.values, left=self.values[0], right=0.0)
        out = np.where(x > self.rho, 0.0, out)
        return out if out.ndim else float(out)

    def derivative(self, x):
        """Slope of the interpolant; centred difference at interior knots."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        r, v = self.r, self.values
        slopes = np.diff(v) / np.diff(r)
        idx = np.clip(np.searchsorted(r, x, side="right") - 1, 0, len(slopes) - 1)
        out = slopes[idx]
        on_knot = np.isclose(x[:, None], r[None, 1:-1], rtol=0.0, atol=1e-12 * max(1.0, r[-1])).any(axis=1)
        if on_knot.any():
            knot = np.clip(np.searchsorted(r, x[on_knot]), 1, len(r) - 2)
            centred = (v[knot + 1] - v[knot - 1]) / (r[knot + 1] - r[knot - 1])
            out[on_knot] = centred
        out = np.where(x >= min(self.rho, r[-1]), 0.0, out)
        return out if out.shape != (1,) else float(out[0])

    def moment_integral(self, x):
        """Exact integral of y*profile(y) dy from 0 to |x| (even in x)."""
        x = np.abs(np.asarray(x, dtype=float))
        xc = np.minimum(x, self.r[-1])
        idx = np.clip(np.searchsorted(self.r, xc, side="right") - 1, 0, len(self.r) - 2)
        r0 = self.r[idx]
        r1 = self.r[idx + 1]
        v0 = self.values[idx]
        m = (self.values[idx + 1] - v0) / (r1 - r0)
        part = v0 * (xc**2 - r0**2) / 2 + m * (xc**3 - r0**3) / 3 - m * r0 * (xc**2 - r0**2) / 2
        out = self._moments[idx] + part
        return out if out.ndim else float(out)

    @property
    def total_moment(self):
        return float(self._moments[-1])

    def scaled(self, factor):
        return RadialProfile(self.r, factor * self.values, self.rho)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("r,value\n")
            for ri, vi in zip(self.r, self.values):
                fh.write(f"{ri:.17g},{vi:.17g}\n")

    @staticmethod
    def from_csv(path, rho=None):
        data = np.genfromtxt(path, delimiter=",", skip_header=1)
        data = np.atleast_2d(data)
        r, v = data[:, 0], data[:, 1]
        if rho is None:
            nz = np.nonzero(v)[0]
            rho = float(r[nz[-1] + 1]) if nz.size and nz[-1] + 1 < r.size else float(r[-1])
        return RadialProfile(r, v, rho)


def bump_profile(amplitude, rho, grid_r):
    """amplitude * (1 - (r/rho)^2)^3 inside the support, zero outside."""
    grid_r = np.asarray(grid_r, dtype=float)
    x = np.clip(1.0 - (grid_r / rho) ** 2, 0.0, None)
    return RadialProfile(grid_r, amplitude * x**3, rho)


def zero_profile(rho, grid_r):
    grid_r = np.asarray(grid_r, dtype=float)
    return RadialProfile(grid_r, np.zeros_like(grid_r), rho)
