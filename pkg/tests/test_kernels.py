import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import levelform as lf


def noise_function(m=512, a=-1.0, b=1.0, seed=0):
    rng = np.random.default_rng(seed)
    return lf.GridFunction1D(a, b, rng.standard_normal(m))


# ---------------------------------------------------------------------------
# kernel object
# ---------------------------------------------------------------------------

def test_hilbert_kernel_values():
    k = lf.hilbert_kernel()
    s = np.array([0.5, 0.5])
    t = np.array([0.25, 1.0])
    want = 1.0 / (math.pi * (s - t))
    assert np.allclose(k.evaluate(s, t), want, rtol=1e-15)
    assert k.size_constant == pytest.approx(1.0 / math.pi)


def test_hilbert_diagonal_overflows_silently():
    # the quadrature guards the diagonal; evaluate itself must not raise
    k = lf.hilbert_kernel()
    v = k.evaluate(np.array([0.3]), np.array([0.3]))
    assert v.shape == (1,)
    assert np.isinf(v[0])


def test_dini_integral_closed_form():
    # integral of (2/pi) / (1 - u/2) du over (0, 1) = (4/pi) log 2
    k = lf.hilbert_kernel()
    assert k.dini_integral == pytest.approx(4.0 * math.log(2.0) / math.pi,
                                            rel=1e-10)


def test_modulus_dominates_sampled_increments():
    k = lf.hilbert_kernel()
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(2000):
        s, t = rng.uniform(-3, 3, size=2)
        d = abs(s - t)
        if d < 1e-9:
            continue
        u = rng.uniform(0, d / 2)
        num = abs(k.evaluate(np.array([s + u]), np.array([t]))[0]
                  - k.evaluate(np.array([s]), np.array([t]))[0])
        den = k.dini_modulus(np.array([u / d]))[0] / d
        if den > 0:
            worst = max(worst, num / den)
    assert worst <= 1.0 + 1e-12
    # the sup is attained in the limit u -> d/2: ratio 3/4
    assert worst == pytest.approx(0.75, abs=0.02)


def test_verify_hk_package_report():
    rep = lf.verify_hk_package(lf.hilbert_kernel(), lf.smoothstep_cutoff(),
                               sample_budget=4000, grid_size=256, seed=0)
    assert rep.size_ok and rep.dini_ok
    assert rep.max_size_ratio <= 1.0 + 1e-9
    assert rep.max_dini_ratio <= 1.0 + 1e-9
    assert rep.l2_ratio <= 1.05
    assert rep.samples == 4000


# ---------------------------------------------------------------------------
# cutoffs
# ---------------------------------------------------------------------------

def test_smoothstep_cutoff_shape():
    chi = lf.smoothstep_cutoff()
    r = np.array([0.5, 1.0, 1.5, 2.0, 3.0])
    want = np.array([0.0, 0.0, 0.5, 1.0, 1.0])
    assert np.allclose(chi.fn(r), want)
    assert chi.derivative_bound == pytest.approx(1.5)


def test_linear_ramp_cutoff_shape():
    chi = lf.linear_ramp_cutoff()
    r = np.array([0.5, 1.0, 1.25, 2.0, 4.0])
    want = np.array([0.0, 0.0, 0.25, 1.0, 1.0])
    assert np.allclose(chi.fn(r), want)
    assert chi.derivative_bound == pytest.approx(1.0)


def test_eps_ladder():
    lad = lf.eps_ladder(2, 5)
    assert list(lad) == [0.25, 0.125, 0.0625, 0.03125]
    with pytest.raises(lf.ConfigError):
        lf.eps_ladder(5, 2)


# ---------------------------------------------------------------------------
# grid functions
# ---------------------------------------------------------------------------

def test_grid_function_nodes_and_spacing():
    F = lf.GridFunction1D(-1.0, 1.0, np.zeros(8))
    assert F.spacing == pytest.approx(0.25)
    assert F.nodes[0] == pytest.approx(-0.875)
    assert F.nodes[-1] == pytest.approx(0.875)


def test_grid_function_from_function_and_norm():
    F = lf.GridFunction1D.from_function(0.0, 1.0, 1000, lambda t: t)
    # midpoint rule for t on [0,1]: L2 norm ~ 1/sqrt(3)
    assert F.norm(2.0) == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-5)
    assert F.norm(1.0) == pytest.approx(0.5, rel=1e-8)


def test_grid_function_csv_roundtrip(tmp_path):
    F = noise_function(64, seed=3)
    p = tmp_path / "f.csv"
    F.to_csv(p)
    G = lf.GridFunction1D.from_csv(p)
    assert G.a == F.a and G.b == F.b
    assert np.allclose(G.values, F.values, rtol=0, atol=1e-15)


def test_grid_function_csv_complex_roundtrip(tmp_path):
    vals = np.array([1 + 2j, -0.5j, 3.0, 0.0])
    F = lf.GridFunction1D(0.0, 1.0, vals)
    p = tmp_path / "fc.csv"
    F.to_csv(p)
    G = lf.GridFunction1D.from_csv(p)
    assert np.allclose(G.values, vals)
    assert np.iscomplexobj(G.values)


def test_grid_pairing_and_mismatch():
    F = lf.GridFunction1D(0.0, 1.0, np.full(4, 2.0))
    G = lf.GridFunction1D(0.0, 1.0, np.full(4, 3.0))
    assert lf.grid_pairing(F, G) == pytest.approx(6.0)
    H = lf.GridFunction1D(0.0, 2.0, np.full(4, 3.0))
    with pytest.raises(lf.ConfigError):
        lf.grid_pairing(F, H)


def test_bump_mixture_deterministic():
    F = lf.bump_mixture(-2.0, 2.0, 256, seed=11)
    G = lf.bump_mixture(-2.0, 2.0, 256, seed=11)
    H = lf.bump_mixture(-2.0, 2.0, 256, seed=12)
    assert np.array_equal(F.values, G.values)
    assert not np.array_equal(F.values, H.values)
    assert F.a == -2.0 and F.b == 2.0


# ---------------------------------------------------------------------------
# truncation quadrature
# ---------------------------------------------------------------------------

def test_residual_identity_exact():
    F = noise_function(512, seed=1)
    k = lf.hilbert_kernel()
    chi = lf.smoothstep_cutoff()
    eps = 0.125
    hard = lf.hard_truncation(k, F, eps)
    smooth = lf.smooth_truncation(k, chi, F, eps)
    resid = lf.residual_truncation(k, chi, F, eps)
    assert np.allclose(hard.values - smooth.values, resid.values,
                       rtol=0, atol=1e-13)


def test_truncation_resolution_guard():
    F = noise_function(64)  # spacing 1/32
    with pytest.raises(lf.ResolutionError):
        lf.hard_truncation(lf.hilbert_kernel(), F, 0.01)


def test_hard_truncation_odd_symmetry():
    # odd kernel, even function, symmetric grid -> odd output
    F = lf.GridFunction1D.from_function(-1.0, 1.0, 256, lambda t: np.cos(t))
    out = lf.hard_truncation(lf.hilbert_kernel(), F, 0.25)
    assert np.allclose(out.values, -out.values[::-1], atol=1e-12)


def test_hard_truncation_against_direct_sum():
    # brute-force midpoint sum with cells split at s +- eps and s +- 2 eps,
    # matching the splits the shared quadrature applies for every mode
    F = noise_function(128, seed=7)
    k = lf.hilbert_kernel()
    eps = 0.25
    out = lf.hard_truncation(k, F, eps)
    h = F.spacing
    edges = F.a + h * np.arange(129)
    for si in [5, 60, 100]:
        s = F.nodes[si]
        total = 0.0
        for j in range(128):
            lo, hi = edges[j], edges[j + 1]
            marks = [s - 2 * eps, s - eps, s + eps, s + 2 * eps]
            cuts = sorted({lo, hi} | {c for c in marks if lo < c < hi})
            for a, b in zip(cuts[:-1], cuts[1:]):
                mid = 0.5 * (a + b)
                if abs(mid - s) > eps:
                    total += k.evaluate(np.array([s]), np.array([mid]))[0] \
                        * F.values[j] * (b - a)
        assert out.values[si] == pytest.approx(total, rel=1e-10, abs=1e-12)


def test_truncation_batch_matches_single_calls():
    F = lf.bump_mixture(-2.0, 2.0, 512, seed=4)
    k = lf.hilbert_kernel()
    chi = lf.smoothstep_cutoff()
    ramp = lf.linear_ramp_cutoff()
    eps = 0.0625
    jobs = [(lf.HARD, None), (lf.SMOOTH, chi), (lf.RESIDUAL, chi),
            (lf.SMOOTH, ramp)]
    batch = lf.truncation_batch(k, [F], eps, jobs)
    singles = [lf.hard_truncation(k, F, eps),
               lf.smooth_truncation(k, chi, F, eps),
               lf.residual_truncation(k, chi, F, eps),
               lf.smooth_truncation(k, ramp, F, eps)]
    for got, want in zip(batch, singles):
        scale = np.max(np.abs(want.values)) + 1e-30
        assert np.allclose(got[:, 0], want.values, rtol=0, atol=1e-12 * scale)


def test_truncation_batch_multiple_functions():
    k = lf.hilbert_kernel()
    fs = [noise_function(256, seed=s) for s in range(3)]
    batch = lf.truncation_batch(k, fs, 0.125, [(lf.HARD, None)])
    for col, F in enumerate(fs):
        want = lf.hard_truncation(k, F, 0.125)
        scale = np.max(np.abs(want.values)) + 1e-30
        assert np.allclose(batch[0][:, col], want.values, rtol=0,
                           atol=1e-12 * scale)


def test_truncation_batch_rejects_mixed_grids():
    k = lf.hilbert_kernel()
    F = noise_function(256)
    G = lf.GridFunction1D(0.0, 1.0, np.zeros(256))
    with pytest.raises(lf.ConfigError):
        lf.truncation_batch(k, [F, G], 0.125, [(lf.HARD, None)])


def test_truncation_eval_points():
    F = noise_function(256, seed=2)
    k = lf.hilbert_kernel()
    pts = np.array([-0.4, 0.0, 0.3])
    out = lf.hard_truncation(k, F, 0.25, eval_points=pts)
    assert out.shape == (3,)
    full = lf.hard_truncation(k, F, 0.25)
    # node-aligned eval points agree with the grid output
    node_out = lf.hard_truncation(k, F, 0.25, eval_points=F.nodes[10:13])
    assert np.allclose(node_out, full.values[10:13], rtol=1e-12)


# ---------------------------------------------------------------------------
# maximal operators
# ---------------------------------------------------------------------------

def test_hl_maximal_dominates_pointwise():
    F = noise_function(256, seed=6)
    M = lf.hl_maximal(F)
    assert np.all(M.values >= np.abs(F.values) - 1e-12)
    assert np.max(M.values) <= np.max(np.abs(F.values)) + 1e-12


def test_hl_maximal_constant_fixed_point():
    F = lf.GridFunction1D(0.0, 1.0, np.full(32, 2.5))
    M = lf.hl_maximal(F)
    assert np.allclose(M.values, 2.5)


def test_hl_maximal_brute_force_small():
    rng = np.random.default_rng(8)
    vals = rng.standard_normal(16)
    F = lf.GridFunction1D(0.0, 1.0, vals)
    M = lf.hl_maximal(F)
    a = np.abs(vals)
    for i in range(16):
        best = 0.0
        for j in range(16):
            for k2 in range(j, 16):
                if j <= i <= k2:
                    best = max(best, np.mean(a[j:k2 + 1]))
        assert M.values[i] == pytest.approx(best, rel=1e-12)


@given(st.lists(st.floats(-10, 10), min_size=4, max_size=64))
@settings(max_examples=40, deadline=None)
def test_hl_maximal_invariants(vals):
    F = lf.GridFunction1D(0.0, 1.0, np.array(vals))
    M = lf.hl_maximal(F)
    assert np.all(M.values >= np.abs(F.values) - 1e-12)
    assert np.all(M.values <= np.max(np.abs(F.values)) + 1e-12)
    # scaling equivariance
    M2 = lf.hl_maximal(lf.GridFunction1D(0.0, 1.0, 3.0 * np.array(vals)))
    assert np.allclose(M2.values, 3.0 * M.values, rtol=1e-12, atol=1e-12)


def test_maximal_truncated_is_ladder_max():
    F = noise_function(256, seed=9)
    k = lf.hilbert_kernel()
    ladder = lf.eps_ladder(2, 5)
    M = lf.maximal_truncated(k, F, ladder)
    singles = np.stack([np.abs(lf.hard_truncation(k, F, e).values)
                        for e in ladder])
    assert np.allclose(M.values, singles.max(axis=0), rtol=1e-12)


def test_residual_bounded_by_maximal():
    # the discrete form of the pointwise residual bound, unit scale
    k = lf.hilbert_kernel()
    chi = lf.smoothstep_cutoff()
    for seed in range(5):
        F = lf.bump_mixture(-2.0, 2.0, 1024, seed=seed)
        M = lf.hl_maximal(F)
        for eps in lf.eps_ladder(2, 6):
            resid = lf.residual_truncation(k, chi, F, eps)
            bound = 4.0 * k.size_constant * M.values + 1e-12
            assert np.all(np.abs(resid.values) <= bound), (seed, eps)


def test_smoothed_dini_constant_finite():
    c = lf.smoothed_dini_constant(lf.hilbert_kernel(), lf.smoothstep_cutoff(),
                                  lf.eps_ladder(2, 5), seed=0)
    assert np.isfinite(c) and c > 0
