"""Pushforward densities of phases and weighted fiber functionals.

Three routes to the level density w_theta(t) = H^{n-1}-integral of 1/|grad|
over the level set: catalog closed forms, fiber quadrature on the catalog
parametrization, and seeded quasi-Monte Carlo histograms. Weighted variants
w_{theta,h} carry an integrand h along the fiber; the fiber r-norm and the
normalized fiber average are derived from them.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import geometry
from .errors import (
    ConfigError,
    CriticalValueError,
    NoClosedFormError,
    NoParametrizationError,
)
from .geometry import Domain, Phase, ball_volume, sphere_area
from .sampling import sample_domain

# coarea evaluation refuses levels closer than this to a critical value
CRITICAL_LEVEL_TOL = 1e-9
# a single bin with > half the mass on a grid this fine flags an atom
ATOM_MASS_FRACTION = 0.5
ATOM_RELATIVE_WIDTH = 1e-3

CLOSED_FORM = "closed_form"
COAREA = "coarea"
MONTE_CARLO = "monte_carlo"
METHODS = (CLOSED_FORM, COAREA, MONTE_CARLO)


# ---------------------------------------------------------------------------
# level grids and density estimates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelGrid:
    """Uniform bins on [t_min, t_max]."""

    t_min: float
    t_max: float
    bin_count: int

    def __post_init__(self):
        if not (self.t_max > self.t_min and self.bin_count >= 1):
            raise ConfigError("level grid needs t_max > t_min and >= 1 bin")

    @property
    def width(self) -> float:
        return (self.t_max - self.t_min) / self.bin_count

    @property
    def edges(self) -> np.ndarray:
        return self.t_min + self.width * np.arange(self.bin_count + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.t_min + self.width * (np.arange(self.bin_count) + 0.5)


@dataclass
class DensityEstimate:
    """Level-density values on a grid, with provenance."""

    grid: LevelGrid
    values: np.ndarray
    method: str
    stderr: np.ndarray | None = None
    sample_count: int | None = None
    seed: int | None = None
    atom_suspected: bool = False
    phase_label: str = ""

    def mass(self) -> float:
        return float(np.sum(self.values) * self.grid.width)

    def to_csv(self, path):
        edges = self.grid.edges
        se = self.stderr if self.stderr is not None else np.zeros_like(self.values)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_lo", "t_hi", "value", "stderr", "method"])
            for i, v in enumerate(self.values):
                writer.writerow([repr(float(edges[i])), repr(float(edges[i + 1])),
                                 repr(float(v)), repr(float(se[i])), self.method])

    def to_json_dict(self) -> dict:
        out = {
            "schema": 1,
            "kind": "density",
            "phase": self.phase_label,
            "method": self.method,
            "grid": {"t_min": self.grid.t_min, "t_max": self.grid.t_max,
                     "bin_count": self.grid.bin_count},
            "values": [float(v) for v in self.values],
            "atom_suspected": bool(self.atom_suspected),
        }
        if self.stderr is not None:
            out["stderr"] = [float(v) for v in self.stderr]
        if self.sample_count is not None:
            out["sample_count"] = int(self.sample_count)
        if self.seed is not None:
            out["seed"] = int(self.seed)
        return out


# ---------------------------------------------------------------------------
# structured weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialFunction:
    """Weight depending only on |x|; lets radial fibers factor exactly."""

    profile: Callable = field(compare=False)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.asarray(self.profile(np.linalg.norm(pts, axis=1)), dtype=float)


@dataclass(frozen=True)
class LevelFunction:
    """Weight depending only on one coordinate; constant on linear fibers."""

    profile: Callable = field(compare=False)
    axis: int = 0

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.asarray(self.profile(pts[:, self.axis]), dtype=float)


def _constant_profile(value: float) -> Callable:
    return lambda t: np.full_like(np.asarray(t, dtype=float), float(value))


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def density_closed_form(phase: Phase, t) -> float | np.ndarray:
    """Catalog closed-form density; 0 outside the image, inf at a blow-up."""
    tt = np.asarray(t, dtype=float)
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt)
    vals = _closed_form_values(phase, tt)
    return float(vals[0]) if scalar else vals


def _closed_form_values(phase: Phase, tt: np.ndarray) -> np.ndarray:
    k = phase.kind
    dom = phase.domain
    n = dom.n
    R = dom.radius
    if k == geometry.LINEAR and dom.shape == "ball":
        inside = np.abs(tt) <= R
        out = np.zeros_like(tt)
        out[inside] = ball_volume(n - 1) * (R * R - tt[inside] ** 2) ** ((n - 1) / 2)
        return out
    if k == geometry.RADIAL_QUADRATIC and dom.shape == "ball":
        out = np.zeros_like(tt)
        inside = (tt > 0) & (tt <= R * R)
        out[inside] = sphere_area(n) / 2 * tt[inside] ** ((n - 2) / 2)
        out[tt == 0.0] = _radial_origin_value(n, 2.0)
        return out
    if k == geometry.RADIAL_POWER and dom.shape == "ball":
        g = phase.gamma
        out = np.zeros_like(tt)
        inside = (tt > 0) & (tt <= R ** g)
        out[inside] = sphere_area(n) / g * tt[inside] ** ((n - g) / g)
        out[tt == 0.0] = _radial_origin_value(n, g)
        return out
    if k == geometry.SADDLE and dom.shape == "ball":
        out = np.zeros_like(tt)
        a = np.abs(tt)
        inside = (a > 0) & (a < R * R)
        out[inside] = 2.0 * np.arcsinh(np.sqrt((R * R - a[inside]) / (2 * a[inside])))
        out[tt == 0.0] = math.inf
        return out
    raise NoClosedFormError(f"no closed-form density for {phase.label}")


def _radial_origin_value(n: int, g: float) -> float:
    if n > g:
        return 0.0
    if n == g:
        return sphere_area(n) / g
    return math.inf


# ---------------------------------------------------------------------------
# fiber quadrature (coarea route)
# ---------------------------------------------------------------------------

def critical_exponent(phase: Phase) -> float:
    """Exact power-law blow-up exponent beta with w(t) ~ t^(-beta) near 0.

    Zero for kinds whose density stays bounded (or vanishes) at small levels;
    the saddle's logarithmic divergence also reports zero.
    """
    k = phase.kind
    if k in (geometry.LINEAR, geometry.OSCILLATORY, geometry.SADDLE):
        return 0.0
    if k == geometry.RADIAL_QUADRATIC:
        return max((2.0 - phase.domain.n) / 2.0, 0.0)
    if k == geometry.RADIAL_POWER:
        return max((phase.gamma - phase.domain.n) / phase.gamma, 0.0)
    raise NoClosedFormError(f"no catalog exponent for {phase.label}")


def density_coarea(phase: Phase, t: float, fiber_nodes: int = 2048) -> float:
    """Unweighted fiber quadrature of 1/|grad| at level t."""
    return weighted_density_coarea(phase, None, t, fiber_nodes=fiber_nodes)


def weighted_density_coarea(phase: Phase, h, t: float, fiber_nodes: int = 2048) -> float:
    """Fiber quadrature of h/|grad| over the level set at t.

    Composite midpoint in the catalog parametrization. `h=None` means the
    constant 1. Raises if the level sits on a critical value, or if no
    parametrization supports this phase/weight combination.
    """
    t = float(t)
    _reject_critical(phase, t)
    k = phase.kind
    dom = phase.domain
    n = dom.n
    R = dom.radius
    lo, hi = geometry.image_interval(phase)
    if t < lo or t > hi:
        return 0.0

    if k == geometry.LINEAR:
        return _linear_fiber(phase, h, t, fiber_nodes)

    if k == geometry.SADDLE:
        return _saddle_fiber(phase, h, t, fiber_nodes)

    if k in (geometry.RADIAL_QUADRATIC, geometry.RADIAL_POWER, geometry.BOUNDARY_REPARAM):
        r_t, slope = _radial_level(phase, t)
        if r_t is None:
            return 0.0
        if n == 2:
            # circle parametrized by angle supports arbitrary weights
            angles = (np.arange(fiber_nodes) + 0.5) * (2 * math.pi / fiber_nodes)
            pts = np.stack([r_t * np.cos(angles), r_t * np.sin(angles)], axis=1)
            hv = np.ones(fiber_nodes) if h is None else np.asarray(h(pts), dtype=float)
            return float(np.sum(hv * r_t * (2 * math.pi / fiber_nodes)) / slope)
        if h is None:
            return sphere_area(n) * r_t ** (n - 1) / slope
        if isinstance(h, RadialFunction):
            prof = float(np.asarray(h.profile(np.asarray([r_t])))[0])
            return sphere_area(n) * r_t ** (n - 1) * prof / slope
        raise NoParametrizationError(
            "radial fibers in n >= 3 support only radial weights")

    raise NoParametrizationError(f"no fiber parametrization for {phase.label}")


def _reject_critical(phase: Phase, t: float):
    for v in geometry.critical_values(phase):
        if abs(t - v) < CRITICAL_LEVEL_TOL:
            raise CriticalValueError(
                f"level {t!r} within {CRITICAL_LEVEL_TOL} of critical value {v!r}")


def _radial_level(phase: Phase, t: float):
    """Fiber radius and |grad| on the fiber for radial phases; None if empty."""
    dom = phase.domain
    R = dom.radius
    if phase.kind == geometry.RADIAL_QUADRATIC:
        if t <= 0 or t > R * R:
            return None, None
        r = math.sqrt(t)
        return r, 2.0 * r
    if phase.kind == geometry.RADIAL_POWER:
        g = phase.gamma
        if t <= 0 or t > R ** g:
            return None, None
        r = t ** (1.0 / g)
        return r, g * r ** (g - 1)
    # boundary reparametrization: t = H(R - r)
    prof = phase.profile
    lo, hi = prof.value_range
    if t < lo or t > hi:
        return None, None
    d = float(prof.inverse(t))
    r = R - d
    if r <= 0:
        return None, None
    slope = abs(float(prof.derivative(d)))
    if slope <= geometry.SINGULAR_RADIUS:
        raise CriticalValueError(f"profile slope vanishes at level {t!r}")
    return r, slope


def _linear_fiber(phase: Phase, h, t: float, fiber_nodes: int) -> float:
    dom = phase.domain
    n = dom.n
    axis = phase.axis
    if dom.shape == "box":
        widths = [hi - lo for lo, hi in dom.bounds]
        lo, hi = dom.bounds[axis]
        if t < lo or t > hi:
            return 0.0
        area = float(np.prod([w for j, w in enumerate(widths) if j != axis]))
        if h is None:
            return area
        if isinstance(h, LevelFunction) and h.axis == axis:
            return area * float(np.asarray(h.profile(np.asarray([t])))[0])
        if n == 2:
            other = [j for j in range(2) if j != axis][0]
            o_lo, o_hi = dom.bounds[other]
            ys = o_lo + (np.arange(fiber_nodes) + 0.5) * (o_hi - o_lo) / fiber_nodes
            pts = np.zeros((fiber_nodes, 2))
            pts[:, axis] = t
            pts[:, other] = ys
            hv = np.asarray(h(pts), dtype=float)
            return float(np.sum(hv) * (o_hi - o_lo) / fiber_nodes)
        raise NoParametrizationError("weighted box sections need n = 2 or an axis profile")

    R = dom.radius
    if abs(t) > R:
        return 0.0
    rho = math.sqrt(max(R * R - t * t, 0.0))
    if h is None:
        return ball_volume(n - 1) * rho ** (n - 1)
    if isinstance(h, LevelFunction) and h.axis == axis:
        return ball_volume(n - 1) * rho ** (n - 1) * float(np.asarray(h.profile(np.asarray([t])))[0])
    if n == 2:
        other = 1 - axis
        ys = -rho + (np.arange(fiber_nodes) + 0.5) * (2 * rho / fiber_nodes)
        pts = np.zeros((fiber_nodes, 2))
        pts[:, axis] = t
        pts[:, other] = ys
        hv = np.asarray(h(pts), dtype=float)
        return float(np.sum(hv) * (2 * rho / fiber_nodes))
    if n == 3:
        # polar quadrature over the disk section
        m_r = max(int(math.sqrt(fiber_nodes)), 4)
        m_a = m_r
        rr = (np.arange(m_r) + 0.5) * (rho / m_r)
        aa = (np.arange(m_a) + 0.5) * (2 * math.pi / m_a)
        Rm, Am = np.meshgrid(rr, aa, indexing="ij")
        pts = np.zeros((m_r * m_a, 3))
        cols = [j for j in range(3) if j != axis]
        pts[:, axis] = t
        pts[:, cols[0]] = (Rm * np.cos(Am)).ravel()
        pts[:, cols[1]] = (Rm * np.sin(Am)).ravel()
        hv = np.asarray(h(pts), dtype=float)
        weights = (Rm * (rho / m_r) * (2 * math.pi / m_a)).ravel()
        return float(np.sum(hv * weights))
    raise NoParametrizationError("weighted linear fibers need n <= 3 or an axis profile")


def _saddle_fiber(phase: Phase, h, t: float, fiber_nodes: int) -> float:
    R = phase.domain.radius
    a = abs(t)
    if a >= R * R:
        return 0.0
    ymax = math.sqrt((R * R - a) / 2.0)
    ys = -ymax + (np.arange(fiber_nodes) + 0.5) * (2 * ymax / fiber_nodes)
    major = np.sqrt(a + ys * ys)
    # integrand h / (2 sqrt(|t| + y^2)) dy per branch, branches at +-major
    base = 1.0 / (2.0 * np.sqrt(a + ys * ys))
    total = 0.0
    for sign in (1.0, -1.0):
        pts = np.empty((fiber_nodes, 2))
        if t >= 0:
            pts[:, 0] = sign * major
            pts[:, 1] = ys
        else:
            pts[:, 0] = ys
            pts[:, 1] = sign * major
        hv = 1.0 if h is None else np.asarray(h(pts), dtype=float)
        total += float(np.sum(hv * base) * (2 * ymax / fiber_nodes))
    return total


# ---------------------------------------------------------------------------
# Monte Carlo route
# ---------------------------------------------------------------------------

@dataclass
class _LevelStats:
    grid: LevelGrid
    counts: np.ndarray
    sums: list[np.ndarray]
    sumsq: list[np.ndarray]
    accepted: int


def _level_statistics(phase: Phase, grid: LevelGrid, weight_fns, sample_count: int,
                      seed: int, batch: int = 1 << 16) -> _LevelStats:
    """One pass of seeded samples binned by level, shared by all weights."""
    counts = np.zeros(grid.bin_count, dtype=np.int64)
    sums = [np.zeros(grid.bin_count) for _ in weight_fns]
    sumsq = [np.zeros(grid.bin_count) for _ in weight_fns]
    done = 0
    while done < sample_count:
        take = min(batch, sample_count - done)
        pts = _sample_slice(phase.domain, seed, done, take)
        levels = geometry._eval_values(phase, pts)
        idx = np.floor((levels - grid.t_min) / grid.width).astype(np.int64)
        # right edge belongs to the last bin
        idx[levels == grid.t_max] = grid.bin_count - 1
        ok = (idx >= 0) & (idx < grid.bin_count)
        np.add.at(counts, idx[ok], 1)
        for i, fn in enumerate(weight_fns):
            w = np.asarray(fn(pts), dtype=float)
            np.add.at(sums[i], idx[ok], w[ok])
            np.add.at(sumsq[i], idx[ok], w[ok] ** 2)
        done += take
    return _LevelStats(grid=grid, counts=counts, sums=sums, sumsq=sumsq,
                       accepted=sample_count)


# cache one sampled stream per (domain, seed) so repeated estimates reuse it
_SAMPLE_CACHE: dict[tuple, np.ndarray] = {}


def _sample_slice(domain: Domain, seed: int, start: int, count: int) -> np.ndarray:
    key = (domain, seed)
    cached = _SAMPLE_CACHE.get(key)
    need = start + count
    if cached is None or len(cached) < need:
        grow = max(need, 1 << 16)
        _SAMPLE_CACHE.clear()
        cached = sample_domain(domain, grow, seed)
        _SAMPLE_CACHE[key] = cached
    return cached[start:start + count]


def density_monte_carlo(phase: Phase, grid: LevelGrid, sample_count: int,
                        seed: int) -> DensityEstimate:
    """Histogram estimate of the level density with per-bin binomial stderr."""
    stats = _level_statistics(phase, grid, [], sample_count, seed)
    vol = phase.domain.volume()
    n = stats.accepted
    p = stats.counts / n
    values = vol * p / grid.width
    stderr = vol * np.sqrt(p * (1 - p) / n) / grid.width
    atom = bool(np.any(p > ATOM_MASS_FRACTION)
                and grid.width < ATOM_RELATIVE_WIDTH * (grid.t_max - grid.t_min))
    return DensityEstimate(grid=grid, values=values, method=MONTE_CARLO,
                           stderr=stderr, sample_count=sample_count, seed=seed,
                           atom_suspected=atom, phase_label=phase.label)


def weighted_density_monte_carlo(phase: Phase, h, grid: LevelGrid, sample_count: int,
                                 seed: int) -> DensityEstimate:
    """Histogram estimate of the h-weighted level density (h may be signed)."""
    fn = h if h is not None else (lambda pts: np.ones(len(pts)))
    stats = _level_statistics(phase, grid, [fn], sample_count, seed)
    vol = phase.domain.volume()
    n = stats.accepted
    mean = stats.sums[0] / n
    var = np.maximum(stats.sumsq[0] / n - mean ** 2, 0.0)
    values = vol * mean / grid.width
    stderr = vol * np.sqrt(var / n) / grid.width
    return DensityEstimate(grid=grid, values=values, method=MONTE_CARLO,
                           stderr=stderr, sample_count=sample_count, seed=seed,
                           phase_label=phase.label)


# ---------------------------------------------------------------------------
# dispatchers and grid evaluation
# ---------------------------------------------------------------------------

def weighted_density_closed_form(phase: Phase, h, t) -> float | np.ndarray:
    """Exact factorization for weights constant on fibers."""
    tt = np.asarray(t, dtype=float)
    scalar = tt.ndim == 0
    tt = np.atleast_1d(tt)
    base = _closed_form_values(phase, tt)
    if h is None:
        vals = base
    elif isinstance(h, (int, float)):
        vals = float(h) * base
    elif isinstance(h, LevelFunction) and phase.kind == geometry.LINEAR and h.axis == phase.axis:
        vals = base * np.asarray(h.profile(tt), dtype=float)
    elif isinstance(h, RadialFunction) and phase.kind in _RADIAL_CLOSED:
        rr = _radius_of_level(phase, tt)
        vals = base * np.asarray(h.profile(rr), dtype=float)
    else:
        raise NoClosedFormError(
            "closed-form weighted densities need a fiber-constant weight")
    return float(vals[0]) if scalar else vals


_RADIAL_CLOSED = (geometry.RADIAL_QUADRATIC, geometry.RADIAL_POWER)


def _radius_of_level(phase: Phase, tt: np.ndarray) -> np.ndarray:
    safe = np.maximum(tt, 0.0)
    if phase.kind == geometry.RADIAL_QUADRATIC:
        return np.sqrt(safe)
    return safe ** (1.0 / phase.gamma)


def weighted_density(phase: Phase, h, t, method: str = COAREA, *,
                     fiber_nodes: int = 2048, grid: LevelGrid | None = None,
                     sample_count: int = 100_000, seed: int = 0):
    """Dispatcher over the three density routes."""
    if method == CLOSED_FORM:
        return weighted_density_closed_form(phase, h, t)
    if method == COAREA:
        tt = np.asarray(t, dtype=float)
        if tt.ndim == 0:
            return weighted_density_coarea(phase, h, float(tt), fiber_nodes=fiber_nodes)
        return np.array([weighted_density_coarea(phase, h, float(v), fiber_nodes=fiber_nodes)
                         for v in tt])
    if method == MONTE_CARLO:
        if grid is None:
            raise ConfigError("monte_carlo weighted density needs a level grid")
        return weighted_density_monte_carlo(phase, h, grid, sample_count, seed)
    raise ConfigError(f"unknown density method {method!r}")


def density_on_grid(phase: Phase, grid: LevelGrid, method: str = COAREA, *,
                    fiber_nodes: int = 2048, subdivide: int = 1,
                    sample_count: int = 100_000, seed: int = 0,
                    h=None) -> DensityEstimate:
    """Density estimate on a grid by any route.

    For deterministic routes, `subdivide=K` averages K midpoint evaluations
    per bin, which keeps integrable blow-ups honest in bin units.
    """
    if method == MONTE_CARLO:
        if h is None:
            return density_monte_carlo(phase, grid, sample_count, seed)
        return weighted_density_monte_carlo(phase, h, grid, sample_count, seed)
    values = np.zeros(grid.bin_count)
    offsets = (np.arange(subdivide) + 0.5) / subdivide
    edges = grid.edges
    for i in range(grid.bin_count):
        pts = edges[i] + offsets * grid.width
        if method == CLOSED_FORM:
            vals = np.asarray(weighted_density_closed_form(phase, h, pts), dtype=float)
        else:
            vals = np.array([weighted_density_coarea(phase, h, float(p), fiber_nodes=fiber_nodes)
                             for p in pts])
        values[i] = float(np.mean(vals))
    return DensityEstimate(grid=grid, values=values, method=method,
                           phase_label=phase.label)


# ---------------------------------------------------------------------------
# fiber functionals
# ---------------------------------------------------------------------------

def _abs_power(h, r: float):
    if h is None:
        return None
    if isinstance(h, RadialFunction):
        return RadialFunction(lambda rr, p=h.profile: np.abs(p(rr)) ** r)
    if isinstance(h, LevelFunction):
        return LevelFunction(lambda tt, p=h.profile: np.abs(p(tt)) ** r, axis=h.axis)
    return lambda pts, fn=h: np.abs(np.asarray(fn(pts), dtype=float)) ** r


def fiber_norm(phase: Phase, f, r: float, t: float, method: str = COAREA, *,
               fiber_nodes: int = 2048) -> float:
    """(integral of |f|^r / |grad| over the fiber)^(1/r) at level t."""
    if not r >= 1:
        raise ConfigError("fiber norm exponent must be >= 1")
    weighted = weighted_density(phase, _abs_power(f, r), t, method,
                                fiber_nodes=fiber_nodes)
    return float(weighted) ** (1.0 / r)


def normalized_average(phase: Phase, f, t: float, method: str = COAREA, *,
                       fiber_nodes: int = 2048) -> float:
    """Fiber average w_{theta,f}/w_theta; 0 when the base density is 0 or inf."""
    base = weighted_density(phase, None, t, method, fiber_nodes=fiber_nodes)
    if not np.isfinite(base) or base <= 0.0:
        return 0.0
    num = weighted_density(phase, f, t, method, fiber_nodes=fiber_nodes)
    return float(num) / float(base)
