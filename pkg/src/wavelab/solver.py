"""Characteristic-lattice solver for the radial semilinear wave equation.

For radially symmetric data the equation box(u) = A|u|^p reduces exactly to a
Volterra integral equation for the radial profile ubar(r, t):

    ubar = ubar0 + A * P(|ubar|^p),

where ubar0 is the homogeneous solution and P integrates a source over the
backward influence region R(r, t) with kernel lambda/(2r),

    P(sigma)(r, t) = integral over R(r,t) of (lambda / 2r) sigma(lambda, s),
    P(sigma)(0, t) = integral_0^t (t - s) sigma(t - s, s) ds  (the r -> 0 limit).

Everything lives on a uniform lattice with equal spacing in r and t, so the
boundaries of R(r, t) run along lattice diagonals and the quadrature decomposes
into full cells plus exactly-integrated boundary triangles.

The homogeneous part is computed in closed form: v = r*ubar0 obeys the
one-dimensional wave equation on the half line with an odd reflection at r = 0,
so d'Alembert's formula with odd-extended data gives every node directly, with
compact support honoured to round-off (sharp Huygens principle).

The inhomogeneous part w = r*ubar1 marches level by level using the
characteristic parallelogram identity

    w(r, t+h) = w(r-h, t) + w(r+h, t) - w(r, t-h) + (1/2) * I(diamond),

with the diamond source integral evaluated by the same sub-cell triangle rule
(weights h^2/6 on the four inner triangles).  The new level enters only through
the diamond's top vertex, so the march is explicit up to one predictor and one
corrector pass on that single value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .profiles import RadialProfile
from .regions import StripBounds, lattice_weights

__all__ = [
    "Problem",
    "CharGrid",
    "RadialField",
    "BlowupFit",
    "apply_P",
    "linear_radial",
    "solve_march",
    "solve_forced",
    "detect_blowup_time",
    "integral_residual",
    "normalize_coefficient",
]

DEFAULT_BLOWUP_THRESHOLD = 1.0e8
DEFAULT_DIVERGENCE_FACTOR = 10.0
_NEG_INF = -(10**15)


# ---------------------------------------------------------------------------
# Problem and grid types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Problem:
    """Instance data: exponent p > 1, coefficient A > 0, radial data, support."""

    p: float
    A: float
    f_profile: RadialProfile
    g_profile: RadialProfile
    rho: float

    def __post_init__(self):
        if self.p <= 1:
            raise ValueError("exponent p must exceed 1")
        if self.A <= 0:
            raise ValueError("coefficient A must be positive")
        if self.rho <= 0:
            raise ValueError("support radius must be positive")

    @property
    def data_scale(self):
        return max(
            float(np.max(np.abs(self.f_profile.values))),
            self.rho * float(np.max(np.abs(self.g_profile.values))),
            1e-300,
        )


def _snap(value, h, name):
    q = value / h
    qi = round(q)
    if abs(q - qi) > 1e-6:
        raise ValueError(f"{name}={value} is not an integer multiple of h={h}")
    return int(qi)


@dataclass(frozen=True)
class CharGrid:
    """Uniform characteristic lattice: nodes (i*h, j*h), equal r/t spacing."""

    h: float
    r_max: float
    t_max: float

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("spacing h must be positive")
        _snap(self.r_max, self.h, "r_max")
        _snap(self.t_max, self.h, "t_max")

    @property
    def n_r(self):
        return _snap(self.r_max, self.h, "r_max")

    @property
    def n_t(self):
        return _snap(self.t_max, self.h, "t_max")

    def r_values(self):
        return self.h * np.arange(self.n_r + 1)

    def t_values(self, n_levels=None):
        n = self.n_t + 1 if n_levels is None else n_levels
        return self.h * np.arange(n)

    def index_of(self, r, t):
        i = _snap(r, self.h, "r")
        j = _snap(t, self.h, "t")
        if not (0 <= i <= self.n_r and 0 <= j <= self.n_t):
            raise ValueError("out of grid")
        return i, j


@dataclass
class RadialField:
    """Samples of a radial function on the lattice, row-major by time level.

    ``samples[j, i]`` holds the value at (i*h, j*h).  For a blown-up field only
    levels with t < t_b are stored, so every stored value is finite.
    """

    grid: CharGrid
    samples: np.ndarray
    status: str = "complete"
    t_b: Optional[float] = None
    p: Optional[float] = None
    A: Optional[float] = None
    residual: Optional[dict] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[1] != self.grid.n_r + 1:
            raise ValueError("samples must be (levels, n_r + 1)")
        if self.status not in ("complete", "blown_up", "error"):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == "blown_up" and self.t_b is None:
            raise ValueError("blown_up status requires t_b")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("stored samples must be finite")

    @property
    def n_levels(self):
        return self.samples.shape[0]

    @property
    def defined_t_max(self):
        return self.grid.h * (self.n_levels - 1)

    def value_at(self, r, t):
        i, j = self.grid.index_of(r, t)
        if j >= self.n_levels:
            raise ValueError("time level not defined for this field")
        return float(self.samples[j, i])

    def interpolate(self, r, t):
        """Bilinear interpolation inside the defined part of the lattice."""
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        h = self.grid.h
        fi = np.clip(r / h, 0, self.grid.n_r - 1e-12)
        fj = np.clip(t / h, 0, self.n_levels - 1 - 1e-12)
        i0 = np.floor(fi).astype(int)
        j0 = np.floor(fj).astype(int)
        di = fi - i0
        dj = fj - j0
        s = self.samples
        out = ((1 - di) * (1 - dj) * s[j0, i0] + di * (1 - dj) * s[j0, i0 + 1]
               + (1 - di) * dj * s[j0 + 1, i0] + di * dj * s[j0 + 1, i0 + 1])
        return out if out.ndim else float(out)

    def level_max(self):
        return np.max(np.abs(self.samples), axis=1)

    def to_csv(self, path):
        h = self.grid.h
        n_r = self.grid.n_r
        rv = self.grid.r_values()
        tb = "none" if self.t_b is None else f"{self.t_b:.17g}"
        p = "none" if self.p is None else f"{self.p:.17g}"
        a = "none" if self.A is None else f"{self.A:.17g}"
        rows = np.empty((self.n_levels * (n_r + 1), 3))
        rows[:, 0] = np.tile(rv, self.n_levels)
        rows[:, 1] = np.repeat(self.grid.t_values(self.n_levels), n_r + 1)
        rows[:, 2] = self.samples.ravel()
        with open(path, "w", newline="") as fh:
            fh.write(f"# wavelab-field h={h:.17g} r_max={self.grid.r_max:.17g} "
                     f"t_max={self.grid.t_max:.17g} p={p} A={a} status={self.status} t_b={tb}\n")
            fh.write("r,t,value\n")
            np.savetxt(fh, rows, fmt="%.17g", delimiter=",")

    @staticmethod
    def from_csv(path):
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("# wavelab-field"):
                raise ValueError("not a wavelab field CSV (missing header)")
            meta = dict(tok.split("=", 1) for tok in header[2:].split()[1:])
            second = fh.readline().strip()
            if second != "r,t,value":
                raise ValueError("malformed field CSV (missing column line)")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        h = float(meta["h"])
        grid = CharGrid(h, float(meta["r_max"]), float(meta["t_max"]))
        n_r = grid.n_r
        if data.size == 0 or data.shape[0] % (n_r + 1) != 0 or data.shape[1] != 3:
            raise ValueError("malformed field CSV (truncated rows)")
        levels = data.shape[0] // (n_r + 1)
        values = data[:, 2].reshape(levels, n_r + 1)

        def opt(key):
            return None if meta[key] == "none" else float(meta[key])

        return RadialField(grid, values, status=meta["status"], t_b=opt("t_b"),
                           p=opt("p"), A=opt("A"))


# ---------------------------------------------------------------------------
# The P operator
# ---------------------------------------------------------------------------

def _apply_p_indices(sigma, h, i, j):
    """P(sigma) at the lattice node (i, j); sigma indexed [level, radius]."""
    if j == 0:
        return 0.0
    if i == 0:
        ks = np.arange(j)
        cols = j - ks
        vals = (cols * h) * sigma[ks, cols]
        weights = np.full(j, h)
        weights[0] = 0.5 * h
        return float(np.dot(weights, vals))
    if i + j >= sigma.shape[1] or j >= sigma.shape[0]:
        raise ValueError("out of grid")
    bounds = StripBounds(j - i, j + i, _NEG_INF, j - i, 0, j)
    W = lattice_weights(bounds, j, i + j)
    lam = h * np.arange(i + j + 1)
    window = sigma[: j + 1, : i + j + 1]
    return float((W * (lam[None, :] * window)).sum() * h * h / (2.0 * i * h))


def apply_P(source: RadialField, r: float, t: float) -> float:
    """Integral of (lambda/2r) * source over R(r, t), trapezoid on the lattice.

    At r = 0 the 1/(2r) singularity cancels against the shrinking lambda
    interval and the limit is a single integral along the backward
    characteristic; that form is used directly.
    """
    i, j = source.grid.index_of(r, t)
    if j >= source.n_levels:
        raise ValueError("out of grid")
    return _apply_p_indices(source.samples, source.grid.h, i, j)


def _apply_p_rows(f, rowcum, h, i, j):
    """Row-walk evaluation of the same R(r,t) cell quadrature, O(j) per node.

    ``f`` holds lambda*sigma samples and ``rowcum`` its column prefix sums
    (rowcum[k, a+1] = sum of f[k, :a+1]).  Each cell row of R(i*h, j*h)
    contributes its full-cell corner averages via two prefix-sum lookups plus
    one cut triangle at each end; algebraically identical to the
    lattice_weights path, which the tests cross-check.
    """
    if j == 0:
        return 0.0
    ks = np.arange(j)
    m = j - ks
    aR = i + m - 1
    left_is_beta = m <= i
    a_left = np.where(left_is_beta, i - m, m - i - 1)
    F0 = a_left + 1
    F1 = aR - 1

    def RS(rows, a0, a1, valid):
        lo = np.where(valid, a0, 0)
        hi = np.where(valid, a1 + 1, 0)
        return rowcum[rows, hi] - rowcum[rows, lo]

    has_full = F1 >= F0
    full = 0.25 * (RS(ks, F0, F1, has_full) + RS(ks, F0 + 1, F1 + 1, has_full)
                   + RS(ks + 1, F0, F1, has_full) + RS(ks + 1, F0 + 1, F1 + 1, has_full))

    right = (f[ks, aR] + f[ks, aR + 1] + f[ks + 1, aR]) / 6.0
    lb = f[ks, a_left] + f[ks, a_left + 1] + f[ks + 1, a_left + 1]
    ll = f[ks, a_left + 1] + f[ks + 1, a_left + 1] + f[ks + 1, a_left]
    left = np.where(left_is_beta, lb, ll) / 6.0

    return float((full.sum() + right.sum() + left.sum()) * h * h / (2.0 * i * h))


# ---------------------------------------------------------------------------
# Homogeneous part by d'Alembert with odd extension
# ---------------------------------------------------------------------------

def linear_radial(fbar: RadialProfile, gbar: RadialProfile, grid: CharGrid) -> RadialField:
    """Radial average of the homogeneous 3-D wave solution with data (fbar, gbar).

    v = r*ubar0 solves the 1-D wave equation with odd-extended data, so

        ubar0(r, t) = [Ff(r+t) + Ff(r-t) + Ig(r+t) - Ig(|r-t|)] / (2r),

    with Ff(y) = y*fbar(|y|) and Ig the exact running moment of y*gbar(y).
    The r = 0 column uses the derivative of the odd extension instead:
    ubar0(0, t) = fbar(t) + t*fbar'(t) + t*gbar(t).  Compact support of the
    data is honoured to round-off, so the solution vanishes identically
    whenever |r - t| > rho (sharp Huygens principle in both directions).
    """
    rv = grid.r_values()
    tv = grid.t_values()
    rp = rv[None, :] + tv[:, None]
    rm = rv[None, :] - tv[:, None]

    def Ff(y):
        return y * fbar(np.abs(y))

    v = 0.5 * (Ff(rp) + Ff(rm)) + 0.5 * (gbar.moment_integral(rp) - gbar.moment_integral(rm))
    u0 = np.empty_like(v)
    u0[:, 1:] = v[:, 1:] / rv[None, 1:]
    u0[:, 0] = fbar(tv) + tv * fbar.derivative(tv) + tv * gbar(tv)
    return RadialField(grid, u0, status="complete")


# ---------------------------------------------------------------------------
# Marching core
# ---------------------------------------------------------------------------

def _linear_row(fbar: RadialProfile, gbar: RadialProfile, rv: np.ndarray, t: float) -> np.ndarray:
    """One time level of the homogeneous solution (see linear_radial)."""
    rp = rv + t
    rm = rv - t
    v = 0.5 * (rp * fbar(np.abs(rp)) + rm * fbar(np.abs(rm))) \
        + 0.5 * (gbar.moment_integral(rp) - gbar.moment_integral(rm))
    row = np.empty_like(v)
    row[1:] = v[1:] / rv[1:]
    row[0] = float(fbar(t)) + t * float(fbar.derivative(t)) + t * float(gbar(t))
    return row


def _march(fbar: RadialProfile, gbar: RadialProfile, grid: CharGrid, A: float,
           p: Optional[float],
           forcing: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]],
           blowup_threshold: float, divergence_factor: float, ratio_floor: float):
    """Level-by-level march; returns (samples, status, t_b).

    Nonlinear mode (p set): source |u|^p with one predictor/corrector pass on
    the new level.  Forced mode (forcing set): prescribed source sigma(r, t)
    evaluated exactly at the new level, no prediction needed; forcing must
    broadcast elementwise over congruent r and t arrays.

    Only the solution history is kept in full (the r = 0 limit formula reads
    the source along a backward characteristic through all earlier levels);
    the auxiliary w = r*ubar1 and the source need a two-level window.
    """
    h = grid.h
    n_r = grid.n_r
    n_t = grid.n_t
    rv = grid.r_values()
    lam = np.concatenate([rv, [rv[-1] + h]])     # ghost column at r_max + h
    hh6 = h * h / 6.0
    inner = slice(1, n_r + 1)

    u = np.zeros((n_t + 1, n_r + 2))

    def source_of(u_row):
        return np.abs(u_row) ** p

    def forcing_row(level):
        row = np.zeros(n_r + 2)
        row[: n_r + 1] = forcing(rv, np.full_like(rv, level * h))
        return row

    def source_diag(level):
        # source at the nodes ((level-k)h, kh), k = 0..level-1
        ks = np.arange(level)
        cols = level - ks
        if forcing is not None:
            return forcing(cols * h, ks * h)
        return np.abs(u[ks, cols]) ** p

    u[0, : n_r + 1] = _linear_row(fbar, gbar, rv, 0.0)
    sig_prev = np.zeros(n_r + 2)
    sig_curr = forcing_row(0) if forcing is not None else source_of(u[0])
    w_prev = np.zeros(n_r + 2)
    w_curr = np.zeros(n_r + 2)

    status = "complete"
    t_b = None
    defined = n_t + 1
    m_prev = float(np.max(np.abs(u[0, : n_r + 1])))

    for j in range(n_t):
        new = j + 1
        u0_row = np.zeros(n_r + 2)
        u0_row[: n_r + 1] = _linear_row(fbar, gbar, rv, new * h)
        Fj = A * lam * sig_curr
        base = np.zeros(n_r + 2)
        if j == 0:
            base[inner] = (h * h / 12.0) * (Fj[0:n_r] + 2.0 * Fj[inner] + Fj[2 : n_r + 2])
        else:
            Fjm1 = A * lam * sig_prev
            base[inner] = (w_curr[0:n_r] + w_curr[2 : n_r + 2] - w_prev[inner]
                           + hh6 * (2.0 * Fj[inner] + Fj[0:n_r] + Fj[2 : n_r + 2] + Fjm1[inner]))

        with np.errstate(over="ignore", invalid="ignore"):
            if forcing is not None:
                F_new = A * lam * forcing_row(new)
            else:
                u_star = u[j] if j == 0 else 2.0 * u[j] - u[j - 1]
                F_star = A * lam * source_of(u_star)
                u_pre = np.zeros(n_r + 2)
                u_pre[inner] = u0_row[inner] + (base[inner] + hh6 * F_star[inner]) / lam[inner]
                F_new = A * lam * source_of(u_pre)

            w_new = np.zeros(n_r + 2)
            w_new[inner] = base[inner] + hh6 * F_new[inner]
            u[new, inner] = u0_row[inner] + w_new[inner] / lam[inner]

            # r = 0 column by the limit formula for P (plus the closed-form u0)
            p0_vals = (np.arange(new, 0, -1) * h) * source_diag(new)
            p0_weights = np.full(new, h)
            p0_weights[0] = 0.5 * h
            u[new, 0] = u0_row[0] + A * float(np.dot(p0_weights, p0_vals))

            level_vals = u[new, : n_r + 1]
            finite = bool(np.all(np.isfinite(level_vals)))
            m_new = float(np.max(np.abs(level_vals))) if finite else np.inf

            if not finite:
                status = "error"
                defined = new
                break
            if m_new >= blowup_threshold or (
                m_prev > 0.0 and m_new > ratio_floor and m_new > divergence_factor * m_prev
            ):
                status = "blown_up"
                t_b = new * h
                defined = new
                break

            sig_prev = sig_curr
            sig_curr = forcing_row(new) if forcing is not None else source_of(u[new])
            if not np.all(np.isfinite(sig_curr[: n_r + 1])):
                status = "error"
                defined = new
                break
            w_prev = w_curr
            w_curr = w_new
        m_prev = m_new

    return u[:defined, : n_r + 1].copy(), status, t_b


def solve_march(problem: Problem, grid: CharGrid,
                blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD,
                divergence_factor: float = DEFAULT_DIVERGENCE_FACTOR,
                residual_nodes: int = 4096) -> RadialField:
    """March the fixed point ubar = ubar0 + A*P(|ubar|^p) up the lattice.

    The march stops with status "blown_up" at the first level whose max
    amplitude reaches the threshold or jumps by more than the divergence
    factor in a single step; a blow-up is a result, not an error.  The
    integral-equation residual against the independent region quadrature is
    recorded on a deterministic interior subsample (capped at residual_nodes
    nodes; pass 0 to skip).
    """
    if grid.r_max + 1e-12 < problem.rho + grid.t_max:
        raise ValueError("grid violates the domain of dependence: need r_max >= rho + t_max")
    if blowup_threshold <= problem.data_scale:
        raise ValueError("blowup_threshold must exceed the initial amplitude")

    ratio_floor = max(1.0, 10.0 * problem.data_scale)
    samples, status, t_b = _march(problem.f_profile, problem.g_profile, grid,
                                  problem.A, problem.p, None,
                                  blowup_threshold, divergence_factor, ratio_floor)
    field = RadialField(grid, samples, status=status, t_b=t_b, p=problem.p, A=problem.A)
    if residual_nodes:
        field.residual = integral_residual(problem, field, max_nodes=residual_nodes)
    return field


def solve_forced(fbar: RadialProfile, gbar: RadialProfile,
                 forcing: Callable[[np.ndarray, np.ndarray], np.ndarray],
                 grid: CharGrid, A: float = 1.0) -> RadialField:
    """March the linear problem ubar = ubar0 + A*P(forcing) (manufactured runs).

    The forcing must broadcast over congruent r/t arrays and should be
    supported inside the light cone of r_max (the lattice assumes the solution
    vanishes beyond the last column).
    """
    samples, status, t_b = _march(fbar, gbar, grid, A, None, forcing,
                                  np.inf, np.inf, np.inf)
    return RadialField(grid, samples, status=status, t_b=t_b, A=A)


# ---------------------------------------------------------------------------
# Blow-up time extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlowupFit:
    t_b: float
    fitted_t_b: float
    fitted_exponent: float
    fitted_amplitude: float


def detect_blowup_time(field: RadialField) -> Optional[BlowupFit]:
    """t_b plus a least-squares fit of max|u|(t) ~ c*(t_b' - t)^nu near the end.

    Returns None for fields that did not blow up.  The fit scans candidate
    singular times just beyond the last computed level and regresses log-max
    against log(t_b' - t); for the power nonlinearity the expected exponent is
    nu = -2/(p-1).
    """
    if field.status != "blown_up":
        return None
    h = field.grid.h
    amps = field.level_max()
    ts = field.grid.t_values(field.n_levels)
    amp_end = amps[-1]
    window = np.nonzero(amps >= max(amp_end * 1e-3, 1e-300))[0]
    window = window[-60:]
    if window.size < 5:
        window = np.arange(max(0, field.n_levels - 5), field.n_levels)
    aw = amps[window]
    tw = ts[window]
    t_end = ts[-1]
    best = (np.inf, field.t_b, -2.0, amp_end)
    for bump in np.geomspace(0.25, 8.0, 48):
        t_cand = t_end + bump * h
        x = np.log(t_cand - tw)
        y = np.log(aw)
        slope, intercept = np.polyfit(x, y, 1)
        sse = float(np.sum((y - (slope * x + intercept)) ** 2))
        if sse < best[0]:
            best = (sse, t_cand, float(slope), float(np.exp(intercept)))
    return BlowupFit(field.t_b, best[1], best[2], best[3])


# ---------------------------------------------------------------------------
# Residual against the independent quadrature, coefficient normalization
# ---------------------------------------------------------------------------

def integral_residual(problem: Problem, field: RadialField, max_nodes: int = 4096,
                      cell_budget: float = 4.0e7) -> dict:
    """Residual u - u0 - A*P(|u|^p) on a deterministic interior subsample.

    Interior means 1 <= i, 1 <= j, and i + j <= n_r so the influence region
    fits the lattice.  The stride is chosen so at most max_nodes nodes are
    checked and the total quadrature work stays within cell_budget lattice
    cells; pass large limits for full coverage on small grids.
    """
    grid = field.grid
    u0 = linear_radial(problem.f_profile, problem.g_profile, grid)
    sigma = np.abs(field.samples) ** problem.p
    n_lev = field.n_levels
    total = sum(max(0, min(grid.n_r - 1, grid.n_r - j)) for j in range(1, n_lev))
    cost = sum(j * min(grid.n_r, 2 * j) for j in range(1, n_lev))  # row lookups, coarse
    stride = max(1, int(np.ceil(np.sqrt(max(total, 1) / max_nodes))),
                 int(np.ceil(np.sqrt(max(cost, 1.0) / cell_budget))))
    f = grid.h * np.arange(grid.n_r + 1)[None, :] * sigma
    rowcum = np.zeros((n_lev, grid.n_r + 2))
    np.cumsum(f, axis=1, out=rowcum[:, 1:])
    res = []
    for j in range(1, n_lev, stride):
        for i in range(1, grid.n_r, stride):
            if i + j > grid.n_r:
                break
            pval = _apply_p_rows(f, rowcum, grid.h, int(i), int(j))
            res.append(field.samples[j, i] - u0.samples[j, i] - problem.A * pval)
    res = np.asarray(res)
    if res.size == 0:
        return {"residual_linf": 0.0, "residual_l2": 0.0, "nodes": 0}
    return {
        "residual_linf": float(np.max(np.abs(res))),
        "residual_l2": float(np.sqrt(np.mean(res**2))),
        "nodes": int(res.size),
    }


def normalize_coefficient(problem: Problem):
    """Rescale so the coefficient is 1: u -> A^(1/(p-1)) * u fixes box(u)=|u|^p.

    Returns the rescaled problem and the amplitude factor applied to the data.
    """
    c = problem.A ** (1.0 / (problem.p - 1.0))
    scaled = Problem(problem.p, 1.0, problem.f_profile.scaled(c),
                     problem.g_profile.scaled(c), problem.rho)
    return scaled, c
