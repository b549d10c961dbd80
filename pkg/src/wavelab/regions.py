"""Geometry of the characteristic (lambda, s) quarter-plane.

All regions used by the solver and the diagnostics are intersections of
strips whose boundaries are 45-degree lines plus horizontal rows.  In the
rotated coordinates

    alpha = lambda + s        (forward characteristic coordinate)
    beta  = s - lambda        (backward characteristic coordinate)

every region becomes an axis-aligned box ``{alpha_lo <= alpha <= alpha_hi,
beta_lo <= beta <= beta_hi, s_lo <= s <= s_hi}`` clipped to the quarter-plane
``lambda >= 0, s >= 0``.  The Jacobian of (alpha, beta) -> (lambda, s) is 1/2,
so strip-intersection areas are products of strip widths divided by two.

Seven region kinds are supported:

    R(r, t)                backward influence region of the point (r, t)
    T(t2, delta)           fixed band below the line s = lambda + t2
    Q(t2, delta)           unbounded companion band of T
    Qrt(r, t, t2, delta)   sliding parallelogram, area exactly r*delta
    Brt(r, t, t_star)      sliding parallelogram above beta = t_star
    Sigma(t_star)          interior cone {0 <= r <= t - t_star} (read as (r,t))
    SigmaPrime(t_star)     its image {t_star <= t <= r} under (r,t) -> (t+r, t-r)

Membership uses closed boundaries throughout.  Besides membership, this module
provides exact strip areas, quasi-random subset testing, and second-order
quadrature weights on a uniform characteristic lattice (full cells use the
four-corner product trapezoid, boundary cells cut by a 45-degree line use the
exact three-vertex rule on the kept triangle).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

__all__ = [
    "Cone",
    "RegionR",
    "RegionT",
    "RegionQ",
    "RegionQrt",
    "RegionBrt",
    "Sigma",
    "SigmaPrime",
    "contains",
    "area",
    "subset_check",
    "StripBounds",
    "lattice_weights",
]

_UNBOUNDED = 10**15  # integer sentinel for one-sided strips on the lattice


# ---------------------------------------------------------------------------
# Region types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cone:
    """Solid light cone with apex on the radial axis, unit wave speed.

    ``direction="forward"`` gives {(r, t): |r - apex_r| <= t - apex_t, t >= 0},
    ``direction="backward"`` the mirror image with apex_t - t.
    """

    apex_r: float
    apex_t: float
    direction: str = "forward"

    def __post_init__(self):
        if self.apex_t < 0:
            raise ValueError("cone apex must satisfy apex_t >= 0")
        if self.direction not in ("forward", "backward"):
            raise ValueError("direction must be 'forward' or 'backward'")

    def contains(self, r, t):
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.direction == "forward":
            inside = np.abs(r - self.apex_r) <= (t - self.apex_t)
        else:
            inside = np.abs(r - self.apex_r) <= (self.apex_t - t)
        return np.logical_and(inside, t >= 0)


def _quarter_plane(lam, s):
    return np.logical_and(lam >= 0, s >= 0)


@dataclass(frozen=True)
class RegionR:
    """R(r, t) = {(lam, s): 0 <= s <= t, |r - t + s| <= lam <= r + t - s}."""

    r: float
    t: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("R(r, t) requires r > 0")
        if self.t < 0:
            raise ValueError("R(r, t) requires t >= 0")

    kind = "R"

    def contains(self, lam, s):
        lam = np.asarray(lam, dtype=float)
        s = np.asarray(s, dtype=float)
        inside = (s <= self.t) & (np.abs(self.r - self.t + s) <= lam) & (lam <= self.r + self.t - s)
        return inside & _quarter_plane(lam, s)

    def strip_bounds(self):
        # alpha in [t-r, t+r], beta <= t-r; s <= t is implied by the strips.
        return (self.t - self.r, self.t + self.r, None, self.t - self.r, 0.0, self.t)

    def bounded(self):
        return True


@dataclass(frozen=True)
class RegionT:
    """T = {t2+delta <= s+lam <= t2+2*delta, s-lam <= t2, s >= 0}."""

    t2: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("T requires delta > 0")
        if self.t2 < 0:
            raise ValueError("T requires t2 >= 0")

    kind = "T"

    def contains(self, lam, s):
        lam = np.asarray(lam, dtype=float)
        s = np.asarray(s, dtype=float)
        a = lam + s
        inside = (a >= self.t2 + self.delta) & (a <= self.t2 + 2 * self.delta) & (s - lam <= self.t2)
        return inside & _quarter_plane(lam, s)

    def strip_bounds(self):
        return (self.t2 + self.delta, self.t2 + 2 * self.delta, None, self.t2, 0.0, None)

    def bounded(self):
        return True


@dataclass(frozen=True)
class RegionQ:
    """Q = {t2+2*delta <= s+lam, t2 <= s-lam <= t2+delta}; unbounded."""

    t2: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("Q requires delta > 0")
        if self.t2 < 0:
            raise ValueError("Q requires t2 >= 0")

    kind = "Q"

    def contains(self, lam, s):
        lam = np.asarray(lam, dtype=float)
        s = np.asarray(s, dtype=float)
        inside = (lam + s >= self.t2 + 2 * self.delta) & (s - lam >= self.t2) & (s - lam <= self.t2 + self.delta)
        return inside & _quarter_plane(lam, s)

    def strip_bounds(self):
        return (self.t2 + 2 * self.delta, None, self.t2, self.t2 + self.delta, 0.0, None)

    def bounded(self):
        return False


@dataclass(frozen=True)
class RegionQrt:
    """Q(r, t) = {t-r <= lam+s <= t+r, t2 <= s-lam <= t2+delta}."""

    r: float
    t: float
    t2: float
    delta: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("Qrt requires r >= 0")
        if self.delta <= 0:
            raise ValueError("Qrt requires delta > 0")

    kind = "Qrt"

    def contains(self, lam, s):
        lam = np.asarray(lam, dtype=float)
        s = np.asarray(s, dtype=float)
        a = lam + s
        b = s - lam
        inside = (a >= self.t - self.r) & (a <= self.t + self.r) & (b >= self.t2) & (b <= self.t2 + self.delta)
        return inside & _quarter_plane(lam, s)

    def strip_bounds(self):
        return (self.t - self.r, self.t + self.r, self.t2, self.t2 + self.delta, 0.0, None)

    def bounded(self):
        return True


@dataclass(frozen=True)
class RegionBrt:
    """B(r, t) = {t-r <= lam+s <= t+r, t_star <= s-lam <= t-r}."""

    r: float
    t: float
    t_star: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("Brt requires r >= 0")
        if self.t_star < 0:
            raise ValueError("Brt requires t_star >= 0")

    kind = "Brt"

    def contains(self, lam, s):
        lam = np.asarray(lam, dtype=float)
        s = np.asarray(s, dtype=float)
        a = lam + s
        b = s - lam
        inside = (a >= self.t - self.r) & (a <= self.t + self.r) & (b >= self.t_star) & (b <= self.t - self.r)
        return inside & _quarter_plane(lam, s)

    def strip_bounds(self):
        return (self.t - self.r, self.t + self.r, self.t_star, self.t - self.r, 0.0, None)

    def bounded(self):
        return True


@dataclass(frozen=True)
class Sigma:
    """Interior cone {(r, t): 0 <= r <= t - t_star}, points read as (r, t)."""

    t_star: float

    def __post_init__(self):
        if self.t_star <= 0:
            raise ValueError("Sigma requires t_star > 0")

    kind = "Sigma"

    def contains(self, r, t):
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        return (r >= 0) & (r <= t - self.t_star)

    def bounded(self):
        return False


@dataclass(frozen=True)
class SigmaPrime:
    """Characteristic image {(r, t): t_star <= t <= r} of Sigma."""

    t_star: float

    def __post_init__(self):
        if self.t_star <= 0:
            raise ValueError("SigmaPrime requires t_star > 0")

    kind = "SigmaPrime"

    def contains(self, r, t):
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        return (t >= self.t_star) & (t <= r)

    def bounded(self):
        return False


# ---------------------------------------------------------------------------
# Membership, area, subset testing
# ---------------------------------------------------------------------------

def contains(region, point):
    """Exact membership of ``point = (lam, s)`` with closed boundaries."""
    lam, s = point
    result = region.contains(lam, s)
    if np.isscalar(lam) and np.isscalar(s):
        return bool(result)
    return result


def area(region):
    """Exact area of a bounded region from its strip geometry.

    Each strip intersection is a parallelogram in (lam, s) whose area is the
    product of the strip widths times the Jacobian 1/2; T carries an extra
    exactly-integrated corner cut by the row s = 0.  Degenerate (zero-width)
    regions have area 0.
    """
    if isinstance(region, RegionQrt):
        width_b = region.delta
        # parallelogram formula needs the lowest corner above the axes
        if region.t - region.r < region.t2 + region.delta:
            raise ValueError("Qrt strip area needs t - r >= t2 + delta (point below Sigma)")
        return region.r * width_b
    if isinstance(region, RegionBrt):
        width_b = region.t - region.r - region.t_star
        if width_b <= 0:
            return 0.0
        return region.r * width_b
    if isinstance(region, RegionT):
        return region.t2 * region.delta + 0.75 * region.delta ** 2
    if isinstance(region, RegionR):
        r, t = region.r, region.t
        if r >= t:
            return t * t
        return 2.0 * r * t - r * r
    raise ValueError(f"unbounded region: {getattr(region, 'kind', type(region).__name__)}")


def _bounding_box(region):
    a_lo, a_hi, b_lo, b_hi, s_lo, s_hi = region.strip_bounds()
    if a_hi is None:
        raise ValueError("unbounded region cannot be sampled")
    if b_lo is None:
        b_lo = -a_hi  # s >= 0 forces beta >= -alpha
    lam_lo = max(0.0, 0.5 * (a_lo - b_hi))
    lam_hi = 0.5 * (a_hi - b_lo)
    s_lo_box = max(0.0, 0.5 * (a_lo + b_lo))
    s_hi_box = 0.5 * (a_hi + b_hi)
    return lam_lo, lam_hi, s_lo_box, s_hi_box


def subset_check(inner, outer, samples, seed=0):
    """Quasi-random inclusion test: every sampled point of inner lies in outer.

    Points are drawn from a seeded Halton sequence over the bounding box of
    inner and rejected against its membership predicate, so runs are
    reproducible.  A degenerate inner region (no interior) passes vacuously.
    This is a property test, not a proof.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not inner.bounded():
        raise ValueError("inner region must be bounded")
    lam_lo, lam_hi, s_lo, s_hi = _bounding_box(inner)
    if lam_hi <= lam_lo or s_hi <= s_lo:
        return True
    engine = qmc.Halton(d=2, seed=seed)
    accepted = 0
    draws = 0
    max_draws = 1000 * samples + 4096
    while accepted < samples and draws < max_draws:
        batch = engine.random(max(1024, samples))
        draws += batch.shape[0]
        lam = lam_lo + (lam_hi - lam_lo) * batch[:, 0]
        s = s_lo + (s_hi - s_lo) * batch[:, 1]
        keep = inner.contains(lam, s)
        lam, s = lam[keep], s[keep]
        if lam.size:
            take = min(lam.size, samples - accepted)
            if not np.all(outer.contains(lam[:take], s[:take])):
                return False
            accepted += take
    return True


# ---------------------------------------------------------------------------
# Lattice quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StripBounds:
    """Strip bounds in integer lattice units (grid spacing h = 1).

    ``a_lo <= alpha <= a_hi``, ``b_lo <= beta <= b_hi``, ``k_lo <= s <= k_hi``,
    one-sided strips use +/- the _UNBOUNDED sentinel.  Bounds must sit on the
    lattice; :func:`from_region` validates and converts.
    """

    a_lo: int
    a_hi: int
    b_lo: int
    b_hi: int
    k_lo: int
    k_hi: int

    @staticmethod
    def from_region(region, h):
        vals = region.strip_bounds()
        out = []
        for v, default in zip(vals, (-_UNBOUNDED, _UNBOUNDED, -_UNBOUNDED, _UNBOUNDED, 0, _UNBOUNDED)):
            if v is None:
                out.append(default)
                continue
            q = v / h
            qi = round(q)
            if abs(q - qi) > 1e-6:
                raise ValueError(f"region bound {v} is not aligned to the lattice spacing {h}")
            out.append(int(qi))
        return StripBounds(*out)

    def window(self):
        """Smallest (k_max, a_max) node window holding the clipped region.

        When the top corner falls mid-cell (odd alpha+beta parity) the kept
        quadrant lives one cell row above the last node row, hence the +1.
        """
        if self.a_hi >= _UNBOUNDED:
            raise ValueError("unbounded region has no finite lattice window")
        b_hi = min(self.b_hi, self.a_hi)   # lambda >= 0 forces beta <= alpha
        k_max = min((self.a_hi + b_hi) // 2 + 1, self.k_hi)
        a_max = self.a_hi                  # s >= 0 forces lambda <= alpha
        return int(max(k_max, 0)), int(max(a_max, 0))


def lattice_weights(bounds: StripBounds, n_k: int, n_a: int) -> np.ndarray:
    """Second-order quadrature weights for a strip region on the unit lattice.

    Returns ``W`` of shape ``(n_k + 1, n_a + 1)`` such that for samples ``g`` of
    a function on the lattice, ``(W * g).sum() * h**2`` approximates the
    integral of g over the region.  Cells fully inside contribute the bilinear
    product-trapezoid (1/4 per corner); cells cut by one 45-degree boundary
    contribute the exact linear rule on the kept triangle (1/6 per vertex);
    cells cut by two boundaries crossing at the cell centre keep the quadrant
    triangle, integrated with the cell-centre value taken as the corner mean.
    All weights are nonnegative, and the weights of a constant reproduce the
    clipped region area exactly.
    """
    W = np.zeros((n_k + 1, n_a + 1))
    if bounds.a_hi <= bounds.a_lo and not (bounds.a_hi >= _UNBOUNDED or bounds.a_lo <= -_UNBOUNDED):
        return W
    if bounds.b_hi <= bounds.b_lo and not (bounds.b_hi >= _UNBOUNDED or bounds.b_lo <= -_UNBOUNDED):
        return W

    kk, aa = np.meshgrid(np.arange(n_k), np.arange(n_a), indexing="ij")
    u = aa + kk          # alpha at the cell's lower-left corner
    v = kk - aa          # beta at the cell's lower-left corner

    rows_ok = (kk >= bounds.k_lo) & (kk + 1 <= bounds.k_hi)
    cut_r = u + 1 == bounds.a_hi
    cut_l = u + 1 == bounds.a_lo
    cut_t = v == bounds.b_hi
    cut_b = v == bounds.b_lo
    ok = rows_ok & ((u + 2 <= bounds.a_hi) | cut_r) & ((u >= bounds.a_lo) | cut_l) \
        & ((v + 1 <= bounds.b_hi) | cut_t) & ((v - 1 >= bounds.b_lo) | cut_b)
    ncuts = (cut_r.astype(np.int8) + cut_l.astype(np.int8)
             + cut_t.astype(np.int8) + cut_b.astype(np.int8))

    c00, c01, c10, c11 = (0, 0), (0, 1), (1, 0), (1, 1)

    def scatter(mask, offsets, wgt):
        # cell corners are node-aligned, so masked slice adds avoid add.at
        for dk, da in offsets:
            W[dk : dk + n_k, da : da + n_a] += wgt * mask

    scatter(ok & (ncuts == 0), (c00, c01, c10, c11), 0.25)

    # single 45-degree cut: exact triangle rule on the kept half cell
    scatter(ok & (ncuts == 1) & cut_r, (c00, c01, c10), 1.0 / 6.0)
    scatter(ok & (ncuts == 1) & cut_l, (c01, c11, c10), 1.0 / 6.0)
    scatter(ok & (ncuts == 1) & cut_t, (c00, c01, c11), 1.0 / 6.0)
    scatter(ok & (ncuts == 1) & cut_b, (c00, c10, c11), 1.0 / 6.0)

    # two cuts crossing at the cell centre: keep the quadrant triangle
    quarters = (
        (cut_r & cut_t, (c00, c01)),   # bottom quadrant
        (cut_r & cut_b, (c00, c10)),   # left quadrant
        (cut_l & cut_t, (c01, c11)),   # right quadrant
        (cut_l & cut_b, (c10, c11)),   # top quadrant
    )
    for pair_mask, edge_verts in quarters:
        mask = ok & (ncuts == 2) & pair_mask
        if not mask.any():
            continue
        scatter(mask, edge_verts, 1.0 / 12.0)
        scatter(mask, (c00, c01, c10, c11), 1.0 / 48.0)

    return W


def region_quadrature(region, h, values_window, integrand_window=None):
    """Integrate lattice samples over a region.

    ``values_window`` must cover the region's lattice window, indexed
    ``[k, a]`` for the node (a*h, k*h).  Optional ``integrand_window`` is a
    pointwise multiplier (for example the kernel lambda/2).  Returns the scalar
    integral with the h**2 cell measure applied.
    """
    b = StripBounds.from_region(region, h)
    k_max, a_max = b.window()
    if values_window.shape[0] < k_max + 1 or values_window.shape[1] < a_max + 1:
        raise ValueError("values window does not cover the region")
    W = lattice_weights(b, k_max, a_max)
    g = values_window[: k_max + 1, : a_max + 1]
    if integrand_window is not None:
        g = g * integrand_window[: k_max + 1, : a_max + 1]
    return float((W * g).sum() * h * h)
