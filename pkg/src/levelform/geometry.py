"""Phase catalog and level-set geometry.

A phase is an explicit scalar function on a ball or box domain. The catalog
carries analytic gradients, exact critical values, and closed-form image
intervals, so downstream density computations never have to detect geometry
numerically. Also here: gradient lower-bound profiles and their check, a
fixed-step integrator that designs reparametrized boundary-distance phases,
and the transversality of level sets at the domain boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    ConfigError,
    EmptyIntersectionError,
    GradientUndefinedError,
    LevelOutsideImageError,
    OdeBlowUpError,
    PointOutsideDomainError,
    UnsupportedPhaseError,
)

# gradient direction (or magnitude) treated as undefined inside this radius
SINGULAR_RADIUS = 1e-12
# containment tolerance for points meant to lie on the closed domain
_CONTAIN_TOL = 1e-12

LINEAR = "linear"
RADIAL_QUADRATIC = "radial-quadratic"
RADIAL_POWER = "radial-power"
SADDLE = "saddle"
OSCILLATORY = "oscillatory"
BOUNDARY_REPARAM = "boundary-reparam"
CUSTOM = "custom"

CATALOG_KINDS = (LINEAR, RADIAL_QUADRATIC, RADIAL_POWER, SADDLE, OSCILLATORY,
                 BOUNDARY_REPARAM)
_RADIAL_KINDS = (RADIAL_QUADRATIC, RADIAL_POWER, BOUNDARY_REPARAM)


def ball_volume(dim: int) -> float:
    """Volume of the unit ball in R^dim (dim = 0 gives 1)."""
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)


def sphere_area(dim: int) -> float:
    """Surface measure of the unit sphere S^{dim-1} in R^dim."""
    return 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)


# ---------------------------------------------------------------------------
# domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Closed ball or axis-aligned box in R^n."""

    n: int
    shape: str
    radius: float = 1.0
    bounds: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.shape not in ("ball", "box"):
            raise ConfigError(f"unknown domain shape {self.shape!r}")
        if self.n < 1:
            raise ConfigError("domain dimension must be >= 1")
        if self.shape == "ball" and not self.radius > 0:
            raise ConfigError("ball radius must be positive")
        if self.shape == "box":
            if len(self.bounds) != self.n:
                raise ConfigError("box bounds must list one (lo, hi) per axis")
            for lo, hi in self.bounds:
                if not hi > lo:
                    raise ConfigError("box bounds must be increasing")

    def volume(self) -> float:
        if self.shape == "ball":
            return ball_volume(self.n) * self.radius ** self.n
        return float(np.prod([hi - lo for lo, hi in self.bounds]))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.shape == "ball":
            r = self.radius
            return -r * np.ones(self.n), r * np.ones(self.n)
        arr = np.asarray(self.bounds, dtype=float)
        return arr[:, 0].copy(), arr[:, 1].copy()

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.shape == "ball":
            return np.einsum("ij,ij->i", pts, pts) <= self.radius ** 2 + _CONTAIN_TOL
        lo, hi = self.bounding_box()
        return np.all((pts >= lo - _CONTAIN_TOL) & (pts <= hi + _CONTAIN_TOL), axis=1)


def ball(n: int, radius: float = 1.0) -> Domain:
    return Domain(n=n, shape="ball", radius=float(radius))


def box(bounds: Sequence[tuple[float, float]]) -> Domain:
    bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    return Domain(n=len(bounds), shape="box", bounds=bounds)


# ---------------------------------------------------------------------------
# reparametrization profiles (tabulated, strictly increasing)
# ---------------------------------------------------------------------------

class ReparamTable:
    """Tabulated strictly increasing profile H(s) with a C^1 interpolant."""

    def __init__(self, s: np.ndarray, values: np.ndarray):
        s = np.asarray(s, dtype=float)
        values = np.asarray(values, dtype=float)
        if s.ndim != 1 or s.shape != values.shape or len(s) < 2:
            raise ConfigError("profile table needs matching 1d arrays, length >= 2")
        if not np.all(np.diff(s) > 0):
            raise ConfigError("profile arguments must be strictly increasing")
        if not np.all(np.diff(values) > 0):
            raise ConfigError("profile values must be strictly increasing")
        self.s = s
        self.values = values
        self._interp = PchipInterpolator(s, values)
        self._deriv = self._interp.derivative()
        self._inverse = PchipInterpolator(values, s)

    def __call__(self, s):
        return self._interp(s)

    def derivative(self, s):
        return self._deriv(s)

    def inverse(self, value):
        return self._inverse(value)

    @property
    def s_range(self) -> tuple[float, float]:
        return float(self.s[0]), float(self.s[-1])

    @property
    def value_range(self) -> tuple[float, float]:
        return float(self.values[0]), float(self.values[-1])


# ---------------------------------------------------------------------------
# phases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Phase:
    """One member of the phase catalog, bound to its domain."""

    kind: str
    domain: Domain
    axis: int = 0
    gamma: float = 2.0
    amplitude: float = 0.0
    frequency: float = 1.0
    profile: ReparamTable | None = field(default=None, compare=False)
    fn: Callable | None = field(default=None, compare=False)

    @property
    def label(self) -> str:
        if self.kind == RADIAL_POWER:
            return f"{self.kind}(gamma={self.gamma:g}, n={self.domain.n})"
        if self.kind == OSCILLATORY:
            return f"{self.kind}(a={self.amplitude:g}, N={self.frequency:g})"
        return f"{self.kind}(n={self.domain.n})"


def linear_phase(domain: Domain, axis: int = 0) -> Phase:
    if not 0 <= axis < domain.n:
        raise ConfigError("linear phase axis out of range")
    return Phase(kind=LINEAR, domain=domain, axis=axis)


def radial_quadratic_phase(domain: Domain) -> Phase:
    _require_ball(domain, RADIAL_QUADRATIC)
    return Phase(kind=RADIAL_QUADRATIC, domain=domain)


def radial_power_phase(domain: Domain, gamma: float) -> Phase:
    _require_ball(domain, RADIAL_POWER)
    if not gamma >= 1:
        raise ConfigError("radial power exponent must be >= 1")
    return Phase(kind=RADIAL_POWER, domain=domain, gamma=float(gamma))


def saddle_phase(domain: Domain) -> Phase:
    _require_ball(domain, SADDLE)
    if domain.n != 2:
        raise ConfigError("saddle phase requires n = 2")
    return Phase(kind=SADDLE, domain=domain)


def oscillatory_phase(domain: Domain, amplitude: float, frequency: float) -> Phase:
    if domain.n < 2:
        raise ConfigError("oscillatory phase requires n >= 2")
    return Phase(kind=OSCILLATORY, domain=domain, amplitude=float(amplitude),
                 frequency=float(frequency))


def boundary_reparam_phase(domain: Domain, profile: ReparamTable) -> Phase:
    """theta(x) = H(dist(x, boundary)); ball domains only."""
    _require_ball(domain, BOUNDARY_REPARAM)
    lo, hi = profile.s_range
    if lo > 0 or hi < domain.radius:
        raise ConfigError("profile table must cover distances [0, R]")
    return Phase(kind=BOUNDARY_REPARAM, domain=domain, profile=profile)


def custom_phase(domain: Domain, fn: Callable) -> Phase:
    """Black-box phase; only sampling-based operations accept it."""
    return Phase(kind=CUSTOM, domain=domain, fn=fn)


def _require_ball(domain: Domain, kind: str):
    if domain.shape != "ball":
        raise ConfigError(f"{kind} phase requires a ball domain")


# ---------------------------------------------------------------------------
# evaluation and gradients
# ---------------------------------------------------------------------------

def _as_points(x, n: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        if arr.shape[0] != n:
            raise ConfigError(f"expected point of dimension {n}")
        return arr[None, :], True
    if arr.ndim != 2 or arr.shape[1] != n:
        raise ConfigError(f"expected points of dimension {n}")
    return arr, False


def eval_phase(phase: Phase, x):
    """Phase values at one point (scalar out) or a stack of points."""
    pts, single = _as_points(x, phase.domain.n)
    inside = phase.domain.contains(pts)
    if not np.all(inside):
        bad = pts[~inside][0]
        raise PointOutsideDomainError(f"point {bad.tolist()} outside domain")
    vals = _eval_values(phase, pts)
    return float(vals[0]) if single else vals


def _eval_values(phase: Phase, pts: np.ndarray) -> np.ndarray:
    k = phase.kind
    if k == LINEAR:
        return pts[:, phase.axis].copy()
    if k == RADIAL_QUADRATIC:
        return np.einsum("ij,ij->i", pts, pts)
    if k == RADIAL_POWER:
        r = np.linalg.norm(pts, axis=1)
        return r ** phase.gamma
    if k == SADDLE:
        return pts[:, 0] ** 2 - pts[:, 1] ** 2
    if k == OSCILLATORY:
        return pts[:, 0] + phase.amplitude * np.sin(phase.frequency * pts[:, 1])
    if k == BOUNDARY_REPARAM:
        d = phase.domain.radius - np.linalg.norm(pts, axis=1)
        return np.asarray(phase.profile(d), dtype=float)
    if k == CUSTOM:
        return np.asarray(phase.fn(pts), dtype=float)
    raise UnsupportedPhaseError(f"unknown phase kind {k!r}")


def grad_phase(phase: Phase, x, on_undefined: str = "raise"):
    """Analytic gradient at one point or a stack of points.

    `on_undefined="nan"` fills undefined rows with NaN instead of raising;
    sampling checks use it to skip and count singular points.
    """
    pts, single = _as_points(x, phase.domain.n)
    inside = phase.domain.contains(pts)
    if not np.all(inside):
        raise PointOutsideDomainError("point outside domain")
    grads, undefined = _grad_values(phase, pts)
    if np.any(undefined):
        if on_undefined == "raise":
            bad = pts[undefined][0]
            raise GradientUndefinedError(f"gradient undefined at {bad.tolist()}")
        grads[undefined] = np.nan
    return grads[0] if single else grads


def _grad_values(phase: Phase, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = phase.kind
    m, n = pts.shape
    undefined = np.zeros(m, dtype=bool)
    if k == LINEAR:
        g = np.zeros((m, n))
        g[:, phase.axis] = 1.0
        return g, undefined
    if k == RADIAL_QUADRATIC:
        return 2.0 * pts, undefined
    if k == RADIAL_POWER:
        r = np.linalg.norm(pts, axis=1)
        small = r <= SINGULAR_RADIUS
        if phase.gamma < 2:
            undefined = small
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = phase.gamma * r ** (phase.gamma - 2)
        scale = np.where(small, 0.0, scale)
        return scale[:, None] * pts, undefined
    if k == SADDLE:
        g = np.empty((m, 2))
        g[:, 0] = 2.0 * pts[:, 0]
        g[:, 1] = -2.0 * pts[:, 1]
        return g, undefined
    if k == OSCILLATORY:
        g = np.zeros((m, n))
        g[:, 0] = 1.0
        g[:, 1] = phase.amplitude * phase.frequency * np.cos(phase.frequency * pts[:, 1])
        return g, undefined
    if k == BOUNDARY_REPARAM:
        r = np.linalg.norm(pts, axis=1)
        undefined = r <= SINGULAR_RADIUS
        d = phase.domain.radius - r
        slope = np.asarray(phase.profile.derivative(d), dtype=float)
        safe_r = np.where(undefined, 1.0, r)
        return (-slope / safe_r)[:, None] * pts, undefined
    raise UnsupportedPhaseError(f"no analytic gradient for phase kind {k!r}")


def grad_norm(phase: Phase, pts: np.ndarray, on_undefined: str = "nan") -> np.ndarray:
    g = grad_phase(phase, pts, on_undefined=on_undefined)
    return np.linalg.norm(np.atleast_2d(g), axis=1)


def critical_values(phase: Phase) -> tuple[float, ...]:
    """Exact critical values from the catalog (never detected numerically)."""
    k = phase.kind
    if k in (LINEAR, OSCILLATORY):
        return ()
    if k == RADIAL_QUADRATIC or k == SADDLE:
        return (0.0,)
    if k == RADIAL_POWER:
        return (0.0,) if phase.gamma > 1 else ()
    if k == BOUNDARY_REPARAM:
        # table construction enforces a strictly increasing profile
        return ()
    raise UnsupportedPhaseError(f"critical values unknown for kind {k!r}")


def critical_points(phase: Phase) -> tuple[np.ndarray, ...]:
    """Points where the gradient vanishes or is undefined (catalog exact)."""
    k = phase.kind
    n = phase.domain.n
    if k in (LINEAR, OSCILLATORY):
        return ()
    if k in (RADIAL_QUADRATIC, RADIAL_POWER, SADDLE, BOUNDARY_REPARAM):
        return (np.zeros(n),)
    raise UnsupportedPhaseError(f"critical points unknown for kind {k!r}")


def image_interval(phase: Phase) -> tuple[float, float]:
    """Closed interval covering the image of the phase on its domain."""
    k = phase.kind
    dom = phase.domain
    if k == LINEAR:
        if dom.shape == "ball":
            return -dom.radius, dom.radius
        lo, hi = dom.bounds[phase.axis]
        return lo, hi
    if k == RADIAL_QUADRATIC:
        return 0.0, dom.radius ** 2
    if k == RADIAL_POWER:
        return 0.0, dom.radius ** phase.gamma
    if k == SADDLE:
        return -dom.radius ** 2, dom.radius ** 2
    if k == OSCILLATORY:
        if dom.shape == "ball":
            lo, hi = -dom.radius, dom.radius
        else:
            lo, hi = dom.bounds[0]
        a = abs(phase.amplitude)
        return lo - a, hi + a
    if k == BOUNDARY_REPARAM:
        lo, hi = float(phase.profile(0.0)), float(phase.profile(dom.radius))
        return min(lo, hi), max(lo, hi)
    raise UnsupportedPhaseError(f"image interval unknown for kind {k!r}")


# ---------------------------------------------------------------------------
# gradient lower-bound profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaProfile:
    """Candidate lower bound Gamma(t) <= |grad theta| on a validity interval."""

    fn: Callable = field(compare=False)
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ConfigError("profile validity interval is empty")
        probe = np.linspace(max(self.lo, -1e6), min(self.hi, 1e6), 257)
        vals = np.asarray(self.fn(probe), dtype=float)
        if np.any(vals < 0):
            raise ConfigError("profile must be nonnegative on its interval")

    def __call__(self, t):
        return self.fn(np.asarray(t, dtype=float))

    def covers(self, t: np.ndarray) -> np.ndarray:
        return (t >= self.lo) & (t <= self.hi)


@dataclass(frozen=True)
class GammaCheckReport:
    min_slack: float
    worst_point: tuple[float, ...]
    evaluated: int
    skipped: int


def check_gamma_profile(phase: Phase, profile: GammaProfile, sample_count: int = 4096,
                        seed: int = 0) -> GammaCheckReport:
    """Sampled minimum of |grad theta(x)| - Gamma(theta(x)) over the domain.

    Points with undefined gradient, or with level outside the profile's
    validity interval, are skipped and counted.
    """
    from .sampling import sample_domain  # local import, avoids cycle

    pts = sample_domain(phase.domain, sample_count, seed)
    norms = grad_norm(phase, pts, on_undefined="nan")
    levels = _eval_values(phase, pts)
    usable = np.isfinite(norms) & profile.covers(levels)
    if not np.any(usable):
        raise ConfigError("no usable sample points for the profile check")
    slack = norms[usable] - np.asarray(profile(levels[usable]), dtype=float)
    idx = int(np.argmin(slack))
    worst = pts[usable][idx]
    return GammaCheckReport(
        min_slack=float(slack[idx]),
        worst_point=tuple(float(v) for v in worst),
        evaluated=int(usable.sum()),
        skipped=int(len(pts) - usable.sum()),
    )


def design_reparametrization(profile: GammaProfile, m: Callable, h0: float,
                             s_range: tuple[float, float], step: float = 1e-3) -> ReparamTable:
    """Integrate H'(s) m(s) = Gamma(H(s)) with RK4 at fixed step.

    Returns the tabulated, strictly increasing H on `s_range`. If any RK4
    stage value leaves the profile's validity interval the integration stops
    with an error carrying the exit location.
    """
    s0, s1 = float(s_range[0]), float(s_range[1])
    if not (s1 > s0 and step > 0):
        raise ConfigError("need increasing s_range and positive step")

    def rhs(s: float, h: float) -> float:
        if not (profile.lo <= h <= profile.hi):
            raise OdeBlowUpError(s, h)
        ms = float(m(s))
        if not ms > 0:
            raise ConfigError("m(s) must be strictly positive")
        g = float(profile.fn(h))
        if not g > 0:
            raise ConfigError("profile must be strictly positive along the solution")
        return g / ms

    n_steps = int(math.ceil((s1 - s0) / step - 1e-12))
    ss = [s0]
    hs = [float(h0)]
    s, h = s0, float(h0)
    for i in range(n_steps):
        ds = min(step, s1 - s)
        k1 = rhs(s, h)
        k2 = rhs(s + ds / 2, h + ds * k1 / 2)
        k3 = rhs(s + ds / 2, h + ds * k2 / 2)
        k4 = rhs(s + ds, h + ds * k3)
        h = h + ds * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        s = s + ds
        ss.append(s)
        hs.append(h)
    return ReparamTable(np.asarray(ss), np.asarray(hs))


# ---------------------------------------------------------------------------
# boundary transversality
# ---------------------------------------------------------------------------

def boundary_transversality(phase: Phase, t: float, method: str = "auto",
                            samples: int = 4096) -> float:
    """Minimum tangential gradient norm over the level set on the boundary.

    Ball domains only. For the linear phase the value is the closed form
    sqrt(1 - (t/R)^2); `method="sampled"` forces the parametrized-sampling
    path instead (used to cross-check the closed form).
    """
    dom = phase.domain
    if dom.shape != "ball":
        raise UnsupportedPhaseError("boundary transversality implemented for balls")
    R = dom.radius
    k = phase.kind
    lo, hi = image_interval(phase)
    if not (lo - 1e-12 <= t <= hi + 1e-12):
        raise LevelOutsideImageError(f"level {t!r} outside image [{lo}, {hi}]")

    if k == LINEAR:
        if abs(t) > R:
            raise LevelOutsideImageError(f"level {t!r} outside image")
        if method in ("auto", "closed"):
            return math.sqrt(max(1.0 - (t / R) ** 2, 0.0))
        # explicit parametrization of the boundary level set
        if abs(abs(t) - R) < 1e-15:
            return 0.0
        rho = math.sqrt(R * R - t * t)
        if dom.n == 2:
            others = np.array([[rho], [-rho]])
        else:
            rng = np.random.default_rng(0)
            dirs = rng.standard_normal((samples, dom.n - 1))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            others = rho * dirs
        pts = np.zeros((len(others), dom.n))
        pts[:, phase.axis] = t
        cols = [j for j in range(dom.n) if j != phase.axis]
        pts[:, cols] = others
        return _min_tangential(phase, pts, R)

    if k in _RADIAL_KINDS:
        boundary_level = _eval_values(phase, np.array([[R] + [0.0] * (dom.n - 1)]))[0]
        if abs(t - boundary_level) <= 1e-12:
            return 0.0  # gradient is radial: no tangential component
        raise EmptyIntersectionError(
            f"level {t!r} does not meet the boundary (boundary level {boundary_level!r})")

    if k in (SADDLE, OSCILLATORY) and dom.n == 2:
        roots = _circle_roots(phase, t, R, samples)
        if not roots:
            raise EmptyIntersectionError(f"level {t!r} does not meet the boundary circle")
        pts = np.array([[R * math.cos(a), R * math.sin(a)] for a in roots])
        return _min_tangential(phase, pts, R)

    raise UnsupportedPhaseError(f"transversality not implemented for kind {k!r} in n={dom.n}")


def _min_tangential(phase: Phase, pts: np.ndarray, R: float) -> float:
    grads = grad_phase(phase, pts, on_undefined="nan")
    normals = pts / R
    proj = np.einsum("ij,ij->i", grads, normals)
    tang = grads - proj[:, None] * normals
    norms = np.linalg.norm(tang, axis=1)
    norms = norms[np.isfinite(norms)]
    if len(norms) == 0:
        raise EmptyIntersectionError("no usable boundary points for transversality")
    return float(np.min(norms))


def _circle_roots(phase: Phase, t: float, R: float, samples: int) -> list[float]:
    angles = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    pts = np.stack([R * np.cos(angles), R * np.sin(angles)], axis=1)
    vals = _eval_values(phase, pts) - t
    roots = []
    for i in range(samples):
        j = (i + 1) % samples
        a, b = vals[i], vals[j]
        if a == 0.0:
            roots.append(angles[i])
            continue
        if a * b < 0:
            lo_a, hi_a = angles[i], angles[i] + (2 * math.pi / samples)
            f_lo = a
            for _ in range(60):
                mid = 0.5 * (lo_a + hi_a)
                fm = _eval_values(phase, np.array([[R * math.cos(mid), R * math.sin(mid)]]))[0] - t
                if f_lo * fm <= 0:
                    hi_a = mid
                else:
                    lo_a, f_lo = mid, fm
            roots.append(0.5 * (lo_a + hi_a))
    return roots
