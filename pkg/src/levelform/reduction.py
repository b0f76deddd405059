"""Reduction of synchronized bilinear forms to level space, and regime checks.

The central identity: a pairing of a truncated singular integral against two
functions, each composed with a phase, equals a one-dimensional truncated
pairing of their pushforward densities. Both sides are computable here, the
left by quasi Monte Carlo over the product domain and the right by grid
quadrature on level space, so the identity can be verified numerically.

The regime toolkit classifies densities near critical levels (power versus
logarithmic growth), turns fitted exponents into an exponent window, scans
endpoint integrability, and checks the uniform-regime budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from . import geometry
from .errors import (ConfigError, InsufficientDecadesError, PhaseNotUniformError)
from .geometry import Domain, Phase
from .kernels import GridFunction1D, Kernel1D, hard_truncation
from .pushforward import (CLOSED_FORM, COAREA, LevelGrid, _abs_power,
                          density_closed_form, density_on_grid,
                          weighted_density)
from .sampling import derived_rng, sample_domain_pairs

POWER_REGIME = "critical-power"
LOG_REGIME = "critical-log"


@dataclass(frozen=True)
class Estimate:
    """A number with an attached error scale (statistical or refinement)."""

    value: float
    error: float
    label: str = ""
    sample_count: int | None = None


@dataclass(frozen=True)
class SynchronizedForm:
    """Pairing data: inner phase carries f, outer phase carries g.

    The form integrates k(outer level, inner level) over pairs of points
    whose levels differ by more than eps, weighted by f and g.
    """

    phase_in: Phase
    phase_out: Phase
    kernel: Kernel1D
    f: Callable = field(compare=False)
    g: Callable = field(compare=False)
    eps: float = 0.25

    def __post_init__(self):
        if not self.eps > 0:
            raise ConfigError("truncation radius must be positive")


def lhs_direct(form: SynchronizedForm, sample_count: int = 100_000,
               seed: int = 0) -> Estimate:
    """Direct quasi Monte Carlo evaluation over the product of the domains."""
    xs, ys = sample_domain_pairs(form.phase_in.domain, form.phase_out.domain,
                                 sample_count, seed)
    t = geometry.eval_phase(form.phase_in, xs)
    s = geometry.eval_phase(form.phase_out, ys)
    gap = np.abs(s - t)
    mask = gap > form.eps
    vals = np.zeros(sample_count)
    if np.any(mask):
        kv = np.asarray(form.kernel.evaluate(s[mask], t[mask]), dtype=float)
        fv = np.asarray(form.f(xs[mask]), dtype=float)
        gv = np.asarray(form.g(ys[mask]), dtype=float)
        vals[mask] = kv * fv * gv
    scale = form.phase_in.domain.volume() * form.phase_out.domain.volume()
    value = float(np.mean(vals)) * scale
    stderr = float(np.std(vals)) / math.sqrt(sample_count) * scale
    return Estimate(value=value, error=stderr, label="direct",
                    sample_count=sample_count)


def _rhs_at_resolution(form: SynchronizedForm, bins: int, method: str,
                       fiber_nodes: int, subdivide: int, sample_count: int,
                       seed: int) -> float:
    lo_t, hi_t = geometry.image_interval(form.phase_in)
    lo_s, hi_s = geometry.image_interval(form.phase_out)
    grid_t = LevelGrid(lo_t, hi_t, bins)
    grid_s = LevelGrid(lo_s, hi_s, bins)
    kwargs = dict(fiber_nodes=fiber_nodes, subdivide=subdivide,
                  sample_count=sample_count)
    W_f = density_on_grid(form.phase_in, grid_t, method, h=form.f,
                          seed=seed, **kwargs)
    W_g = density_on_grid(form.phase_out, grid_s, method, h=form.g,
                          seed=seed + 1, **kwargs)
    F = GridFunction1D(grid_t.t_min, grid_t.t_max, W_f.values)
    action = hard_truncation(form.kernel, F, form.eps,
                             eval_points=grid_s.centers)
    return float(np.sum(action * W_g.values) * grid_s.width)


def rhs_reduced(form: SynchronizedForm, bins: int = 512,
                method: str = CLOSED_FORM, *, fiber_nodes: int = 2048,
                subdivide: int = 5, sample_count: int = 100_000,
                seed: int = 0) -> Estimate:
    """Level-space evaluation through pushforward densities.

    The reported error is the change under doubling the level resolution.
    """
    coarse = _rhs_at_resolution(form, bins, method, fiber_nodes, subdivide,
                                sample_count, seed)
    fine = _rhs_at_resolution(form, 2 * bins, method, fiber_nodes, subdivide,
                              sample_count, seed)
    return Estimate(value=fine, error=abs(fine - coarse), label="reduced")


@dataclass(frozen=True)
class ReductionReport:
    lhs: Estimate
    rhs: Estimate
    discrepancy: float
    tolerance: float
    relative_discrepancy: float
    passed: bool


def verify_reduction_identity(form: SynchronizedForm, *,
                              sample_count: int = 1_000_000, bins: int = 512,
                              seed: int = 0, method: str = CLOSED_FORM,
                              fiber_nodes: int = 2048, subdivide: int = 5,
                              rel_tol: float = 0.01) -> ReductionReport:
    """Compare the direct and reduced evaluations of the same form."""
    lhs = lhs_direct(form, sample_count=sample_count, seed=seed)
    rhs = rhs_reduced(form, bins=bins, method=method, fiber_nodes=fiber_nodes,
                      subdivide=subdivide, sample_count=sample_count, seed=seed)
    disc = abs(lhs.value - rhs.value)
    scale = max(abs(lhs.value), abs(rhs.value), 1e-12)
    tol = max(3.0 * lhs.error + rhs.error, rel_tol * scale)
    return ReductionReport(lhs=lhs, rhs=rhs, discrepancy=disc, tolerance=tol,
                           relative_discrepancy=disc / scale,
                           passed=disc <= tol)


# ---------------------------------------------------------------------------
# critical exponent extraction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalProfile:
    """Fitted small-level behavior of a density."""

    beta: float
    kind: str
    rel_rms_power: float
    rel_rms_log: float
    slope: float
    intercept: float
    log_coefficients: tuple[float, float]


def estimate_beta(phase: Phase, *, t_lo: float = 1e-3, t_hi: float = 1e-1,
                  bins: int = 400, method: str = CLOSED_FORM,
                  fiber_nodes: int = 2048, subdivide: int = 1,
                  sample_count: int = 100_000, seed: int = 0) -> CriticalProfile:
    """Fit w(t) ~ c t^(-beta) against w(t) ~ a log(1/t) + b on [t_lo, t_hi].

    The returned kind picks whichever model reproduces the measured density
    with smaller relative RMS error; beta is clamped to [0, 1).
    """
    if not 0 < t_lo < t_hi:
        raise ConfigError("need 0 < t_lo < t_hi")
    if t_hi / t_lo < 10.0:
        raise InsufficientDecadesError("need at least one decade of levels")
    grid = LevelGrid(t_lo, t_hi, bins)
    est = density_on_grid(phase, grid, method, fiber_nodes=fiber_nodes,
                          subdivide=subdivide, sample_count=sample_count,
                          seed=seed)
    t = grid.centers
    w = est.values
    keep = np.isfinite(w) & (w > 0)
    if np.count_nonzero(keep) < 8:
        raise ConfigError("too few usable levels for an exponent fit")
    t, w = t[keep], w[keep]

    slope, intercept = np.polyfit(np.log(t), np.log(w), 1)
    pred_power = np.exp(intercept) * t ** slope
    rel_power = float(np.sqrt(np.mean(((pred_power - w) / w) ** 2)))

    design = np.column_stack([np.log(1.0 / t), np.ones_like(t)])
    (a_log, b_log), *_ = np.linalg.lstsq(design, w, rcond=None)
    pred_log = design @ np.array([a_log, b_log])
    rel_log = float(np.sqrt(np.mean(((pred_log - w) / w) ** 2)))

    kind = LOG_REGIME if (a_log > 0 and rel_log < rel_power) else POWER_REGIME
    beta = min(max(-float(slope), 0.0), 1.0 - 1e-9)
    if kind == LOG_REGIME:
        beta = 0.0
    return CriticalProfile(beta=beta, kind=kind, rel_rms_power=rel_power,
                           rel_rms_log=rel_log, slope=float(slope),
                           intercept=float(intercept),
                           log_coefficients=(float(a_log), float(b_log)))


def critical_window(beta_in: float, beta_out: float) -> tuple[float, float]:
    """Open exponent window (1 + beta_out, 1 + 1/beta_in); upper end inf at 0."""
    for beta in (beta_in, beta_out):
        if not 0.0 <= beta < 1.0:
            raise ConfigError("window endpoints need exponents in [0, 1)")
    upper = math.inf if beta_in == 0.0 else 1.0 + 1.0 / beta_in
    return (1.0 + beta_out, upper)


@dataclass(frozen=True)
class IntegrabilityScan:
    """Dyadic-shell increments of the inverse-density integral near level 0."""

    exponent_product: float
    increments: tuple[float, ...]
    ratios: tuple[float, ...]
    converged: bool


def integrability_scan(beta: float, a: float, *, k_min: int = 3,
                       k_max: int = 24) -> IntegrabilityScan:
    """Exact shell increments of the integral of t^(-a beta) dt near 0.

    Shell k is [2^-(k+1), 2^-k]; the increments follow the ratio
    2^(a beta - 1), and the scan declares convergence when the last three
    measured ratios sit below 0.97.
    """
    if a < 0:
        raise ConfigError("integrability scan needs a nonnegative exponent")
    if k_max - k_min < 3:
        raise InsufficientDecadesError("need at least four dyadic shells")
    p = -a * beta
    increments = []
    for k in range(k_min, k_max + 1):
        lo, hi = 2.0 ** (-(k + 1)), 2.0 ** (-k)
        if p == -1.0:
            increments.append(math.log(2.0))
        else:
            increments.append((hi ** (p + 1) - lo ** (p + 1)) / (p + 1))
    ratios = tuple(increments[i + 1] / increments[i]
                   for i in range(len(increments) - 1))
    converged = all(r < 0.97 for r in ratios[-3:])
    return IntegrabilityScan(exponent_product=a * beta,
                             increments=tuple(increments), ratios=ratios,
                             converged=converged)


@dataclass(frozen=True)
class WindowVerdict:
    r: float
    window: tuple[float, float]
    scan_in: IntegrabilityScan
    scan_out: IntegrabilityScan
    verdict: str


def window_verdict(beta_in: float, beta_out: float, r: float, *,
                   k_min: int = 3, k_max: int = 24) -> WindowVerdict:
    """Two-sided endpoint scan at exponent r.

    The inner side scans with a = r - 1 against beta_in, the outer side with
    the dual increment a = 1/(r - 1) against beta_out; the pairing converges
    only when both scans do.
    """
    if not r > 1.0:
        raise ConfigError("exponent scans need r > 1")
    scan_in = integrability_scan(beta_in, r - 1.0, k_min=k_min, k_max=k_max)
    scan_out = integrability_scan(beta_out, 1.0 / (r - 1.0), k_min=k_min,
                                  k_max=k_max)
    verdict = "convergent" if (scan_in.converged and scan_out.converged) \
        else "divergent"
    return WindowVerdict(r=r, window=critical_window(beta_in, beta_out),
                         scan_in=scan_in, scan_out=scan_out, verdict=verdict)


# ---------------------------------------------------------------------------
# pullback norms near critical levels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PullbackReport:
    value: float
    deltas: tuple[float, ...]
    masses: tuple[float, ...]
    growth: tuple[float, ...]
    divergent: bool


def pullback_norm(phase: Phase, f, r: float, delta: float = 0.01, *,
                  method: str = CLOSED_FORM, fiber_nodes: int = 2048,
                  halvings: int = 2) -> PullbackReport:
    """Level-space norm of f at exponent r away from critical levels.

    Integrates the |f|^r-weighted density over the part of the image at
    distance at least delta from every critical level, then shrinks delta by
    halves. Mass growth above 25 percent at every halving flags divergence.
    """
    if not r >= 1:
        raise ConfigError("pullback exponent must be >= 1")
    if not delta > 0 or halvings < 1:
        raise ConfigError("need a positive core margin and one halving")
    habs = _abs_power(f, r)

    def integrand(t: float) -> float:
        return float(weighted_density(phase, habs, t, method,
                                      fiber_nodes=fiber_nodes))

    lo, hi = geometry.image_interval(phase)
    crits = geometry.critical_values(phase)
    deltas = tuple(delta / 2 ** i for i in range(halvings + 1))
    masses = []
    for d in deltas:
        total = 0.0
        for seg_lo, seg_hi in _core_segments(lo, hi, crits, d):
            part, _ = quad(integrand, seg_lo, seg_hi, limit=200)
            total += part
        masses.append(total)
    growth = tuple(math.inf if masses[i] == 0.0 and masses[i + 1] > 0.0
                   else masses[i + 1] / masses[i] - 1.0 if masses[i] > 0.0
                   else 0.0
                   for i in range(len(masses) - 1))
    divergent = len(crits) > 0 and all(g > 0.25 for g in growth)
    return PullbackReport(value=masses[-1] ** (1.0 / r), deltas=deltas,
                          masses=tuple(masses), growth=growth,
                          divergent=divergent)


def _core_segments(lo: float, hi: float, crits: Sequence[float],
                   delta: float) -> list[tuple[float, float]]:
    segments = [(lo, hi)]
    for c in sorted(crits):
        trimmed = []
        for a, b in segments:
            left = (a, min(b, c - delta))
            right = (max(a, c + delta), b)
            for seg in (left, right):
                if seg[1] > seg[0]:
                    trimmed.append(seg)
        segments = trimmed
    return segments


# ---------------------------------------------------------------------------
# uniform regime
# ---------------------------------------------------------------------------

_UNIFORM_KINDS = (geometry.LINEAR, geometry.RADIAL_QUADRATIC,
                  geometry.RADIAL_POWER)


def _require_uniform(phase: Phase) -> None:
    if phase.kind not in _UNIFORM_KINDS:
        raise PhaseNotUniformError(f"{phase.label} density is not bounded")
    if phase.kind == geometry.RADIAL_POWER and phase.gamma > phase.domain.n:
        raise PhaseNotUniformError(
            f"{phase.label} density blows up at the critical level")


def density_supremum(phase: Phase, probes: int = 2048) -> float:
    """Grid supremum of the closed-form density over the image."""
    lo, hi = geometry.image_interval(phase)
    t = np.linspace(lo, hi, probes + 2)[1:-1]
    vals = np.asarray(density_closed_form(phase, t), dtype=float)
    return float(np.max(vals[np.isfinite(vals)]))


def function_norm(domain: Domain, f, r: float, sample_count: int = 1 << 16,
                  seed: int = 0) -> float:
    """Quasi Monte Carlo L^r norm of f over the domain."""
    from .sampling import sample_domain
    pts = sample_domain(domain, sample_count, seed, tag=7)
    vals = np.abs(np.asarray(f(pts), dtype=float)) ** r
    return float(np.mean(vals) * domain.volume()) ** (1.0 / r)


@dataclass(frozen=True)
class UniformReport:
    r: float
    eps_values: tuple[float, ...]
    pairings: tuple[float, ...]
    budget_base: float
    ratios: tuple[float, ...]
    max_ratio: float
    sup_in: float
    sup_out: float
    norm_f: float
    norm_g: float


def uniform_bound_check(phase_in: Phase, phase_out: Phase, kernel: Kernel1D,
                        f, g, r: float, eps_values: Sequence[float], *,
                        bins: int = 256, method: str = COAREA,
                        fiber_nodes: int = 512, subdivide: int = 3,
                        norm_seed: int = 0) -> UniformReport:
    """Truncation-uniform pairing bound in the bounded-density regime.

    The budget base is sup(w_in)^(1/r') sup(w_out)^(1/r) |f|_r |g|_{r'}; the
    reported ratios divide each truncated pairing by it, so a fitted constant
    times the base dominates the pairing uniformly in the truncation radius.
    """
    _require_uniform(phase_in)
    _require_uniform(phase_out)
    if not r > 1:
        raise ConfigError("uniform budget needs r > 1")
    r_dual = r / (r - 1.0)

    lo_t, hi_t = geometry.image_interval(phase_in)
    lo_s, hi_s = geometry.image_interval(phase_out)
    grid_t = LevelGrid(lo_t, hi_t, bins)
    grid_s = LevelGrid(lo_s, hi_s, bins)
    W_f = density_on_grid(phase_in, grid_t, method, h=f,
                          fiber_nodes=fiber_nodes, subdivide=subdivide)
    W_g = density_on_grid(phase_out, grid_s, method, h=g,
                          fiber_nodes=fiber_nodes, subdivide=subdivide)
    F = GridFunction1D(grid_t.t_min, grid_t.t_max, W_f.values)

    pairings = []
    for eps in eps_values:
        action = hard_truncation(kernel, F, eps, eval_points=grid_s.centers)
        pairings.append(float(np.sum(action * W_g.values) * grid_s.width))

    sup_in = density_supremum(phase_in)
    sup_out = density_supremum(phase_out)
    norm_f = function_norm(phase_in.domain, f, r, seed=norm_seed)
    norm_g = function_norm(phase_out.domain, g, r_dual, seed=norm_seed + 1)
    base = (sup_in ** (1.0 / r_dual) * sup_out ** (1.0 / r)
            * norm_f * norm_g)
    ratios = tuple(abs(p) / base for p in pairings)
    return UniformReport(r=r, eps_values=tuple(float(e) for e in eps_values),
                         pairings=tuple(pairings), budget_base=base,
                         ratios=ratios, max_ratio=max(ratios), sup_in=sup_in,
                         sup_out=sup_out, norm_f=norm_f, norm_g=norm_g)


UNIFORM_REGIME = "uniform"
ATOMIC_REGIME = "atomic"


def classify_regime(profile: CriticalProfile, atom_suspected: bool = False,
                    uniform_cut: float = 0.05) -> str:
    """Name the small-level regime of a fitted density profile."""
    if atom_suspected:
        return ATOMIC_REGIME
    if profile.kind == LOG_REGIME:
        return LOG_REGIME
    if profile.beta < uniform_cut:
        return UNIFORM_REGIME
    return POWER_REGIME


def random_smooth_function(domain: Domain, seed: int, *, waves: int = 3,
                           tag: int = 0) -> Callable:
    """Random low-frequency trigonometric polynomial on the domain."""
    rng = derived_rng(seed, 1000 + tag)
    amps = rng.standard_normal(waves)
    freqs = rng.integers(-2, 3, size=(waves, domain.n)).astype(float)
    shifts = rng.uniform(0.0, 2.0 * math.pi, waves)

    def fn(pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        acc = np.zeros(len(pts))
        for a, k, c in zip(amps, freqs, shifts):
            acc += a * np.cos(pts @ k + c)
        return acc

    return fn
