"""Weighted Gronwall-type integral inequality as executable mathematics.

No continuous H: [t0, inf) -> [0, inf) with H > 0 beyond t1 can satisfy

    H(r) >= C * integral from t1 to r of H(a)^a_exp (a - t0)^b da     (*)

for all r >= t1 when C > 0, a_exp > 1 and b >= -1.  The proof is quantitative:
with J(r) the right-hand integral, J'/J^a_exp >= C^a_exp (r - t0)^b, and
integrating from t1 + 1 bounds the left side by J(t1+1)^(1-a_exp)/(a_exp - 1)
while the right side grows without bound.  Equating the two gives a closed-form
radius r_star by which (*) must already have failed:

    b > -1:  (r*-t0)^(b+1) = (t1+1-t0)^(b+1) + (b+1) J1^(1-a) / ((a-1) C^a)
    b = -1:  r* = t0 + (t1+1-t0) * exp( J1^(1-a) / ((a-1) C^a) )

This module checks (*) on sampled functions, computes r_star, and bundles both
into a certificate.  r_star is derived from the proof, not part of the
statement, and is labelled as such in reports.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

__all__ = [
    "GronwallParams",
    "GronwallCertificate",
    "WindowTooShortError",
    "check_inequality",
    "failure_radius",
    "certify",
]


class WindowTooShortError(ValueError):
    """The sampled window does not reach the guaranteed failure radius."""


@dataclass(frozen=True)
class GronwallParams:
    """Hypotheses of the inequality: C > 0, a > 1, b >= -1, t0 <= t1."""

    C: float
    a: float
    b: float
    t0: float
    t1: float

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError("need C > 0")
        if self.a <= 1:
            raise ValueError("need a > 1")
        if self.b < -1:
            raise ValueError("lemma hypothesis b >= -1 violated")
        if self.t1 < self.t0:
            raise ValueError("need t0 <= t1")


@dataclass(frozen=True)
class GronwallCertificate:
    params: GronwallParams
    J1: float
    r_star: float
    violation_found_at: Optional[float]

    def to_json_dict(self):
        p = self.params
        return {
            "C": p.C, "a": p.a, "b": p.b, "t0": p.t0, "t1": p.t1,
            "J1": self.J1, "r_star": self.r_star,
            "violation_found_at": self.violation_found_at,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _rhs_cumulative(r, H, params):
    """C * integral from t1 of H^a (alpha - t0)^b, trapezoid prefix sums.

    With b < 0 and t1 = t0 the weight is singular at the first node; that cell
    is dropped (open-left rule), which only underestimates the right side and
    matches the fact that the proof never integrates across it.
    """
    w = np.empty_like(r)
    gap = r - params.t0
    pos = gap > 0
    w[pos] = gap[pos] ** params.b
    if np.any(~pos):
        w[~pos] = 0.0 if params.b > 0 else (1.0 if params.b == 0 else np.inf)
    integrand = H**params.a * w
    if not np.isfinite(integrand[0]):
        integrand[0] = 0.0  # open-left first cell for the singular weight
    return params.C * cumulative_trapezoid(integrand, r, initial=0.0)


def check_inequality(r, H, params: GronwallParams):
    """Smallest sampled radius violating H(r) >= C * integral, or None.

    H must be sampled on an ascending grid starting at t1, nonnegative
    everywhere and strictly positive past t1 (the lemma's hypotheses, checked).
    The violation tolerance 1e-12 * max(1, |H(r)|) covers round-off only;
    discretisation slack is the caller's grid-cell allowance.
    """
    r = np.asarray(r, dtype=float)
    H = np.asarray(H, dtype=float)
    if r.ndim != 1 or H.shape != r.shape or r.size < 3:
        raise ValueError("need congruent 1-D samples with at least 3 points")
    if abs(r[0] - params.t1) > 1e-9 * max(1.0, abs(params.t1)):
        raise ValueError("samples must start at t1")
    if np.any(np.diff(r) <= 0):
        raise ValueError("sample grid must ascend")
    if np.any(H < 0):
        raise ValueError("hypothesis violated: H must be nonnegative")
    if np.any(H[1:] <= 0):
        raise ValueError("hypothesis violated: H must be positive beyond t1")
    rhs = _rhs_cumulative(r, H, params)
    tol = 1e-12 * np.maximum(1.0, np.abs(H))
    bad = np.nonzero(H < rhs - tol)[0]
    return float(r[bad[0]]) if bad.size else None


def failure_radius(params: GronwallParams, J1: float) -> float:
    """Closed-form radius by which the inequality must fail, given J1 = J(t1+1).

    Mathematically finite for every valid parameter set; this is the
    executable content of the nonexistence lemma.  With a tiny C and b close
    to -1 the closed form can exceed the double range, in which case +inf is
    returned (every finite sample window is then shorter than r_star).
    """
    if J1 <= 0:
        raise ValueError("need J1 > 0")
    base = params.t1 + 1.0 - params.t0
    gain = J1 ** (1.0 - params.a) / ((params.a - 1.0) * params.C**params.a)
    if params.b == -1.0:
        if gain > 700.0:
            return math.inf
        return params.t0 + base * math.exp(gain)
    bp1 = params.b + 1.0
    log_inner = math.log(base**bp1 + bp1 * gain)
    if log_inner / bp1 > 700.0:
        return math.inf
    return params.t0 + math.exp(log_inner / bp1)


def certify(r, H, params: GronwallParams) -> GronwallCertificate:
    """Quadrature J1, closed-form r_star, and a violation scan in one bundle.

    Requires the sample window to cover [t1, t1+1] for J1.  If no violation is
    found inside the window and the window stops short of r_star, the lemma's
    conclusion cannot be confirmed numerically and a WindowTooShortError asks
    for more samples; a window reaching r_star with no violation would refute
    the lemma (the property tests exercise exactly this contract).
    """
    r = np.asarray(r, dtype=float)
    H = np.asarray(H, dtype=float)
    if r[-1] < params.t1 + 1.0 - 1e-12:
        raise WindowTooShortError("extend window to t1 + 1 to compute J1")
    if np.any(H < 0) or np.any(H[1:] <= 0):
        raise ValueError("hypothesis violated: H must be positive beyond t1")
    gap = r - params.t0
    w = np.where(gap > 0, gap, 1.0) ** params.b * (gap > 0)
    integrand = H**params.a * w
    if not np.isfinite(integrand[0]):
        integrand[0] = 0.0
    cums = cumulative_trapezoid(integrand, r, initial=0.0)
    J1 = float(np.interp(params.t1 + 1.0, r, cums))
    r_star = failure_radius(params, J1)
    violation = check_inequality(r, H, params)
    if violation is None and r[-1] < r_star:
        raise WindowTooShortError(
            f"extend window to r_star: no violation up to {r[-1]:g} "
            f"but the lemma only forces one by {r_star:g}")
    return GronwallCertificate(params, J1, r_star, violation)
