"""Command line harness: density tables, reduction checks, sparse families,
and regime classification, with JSON/CSV outputs suitable for pipelines.

Exit codes: 0 success, 1 a verification failed, 2 usage or configuration
problems.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import math
import os
import sys

from fractions import Fraction

import numpy as np

from . import geometry, reduction, sparse
from .config import parse_kv_text, phase_from_config
from .errors import LevelformError
from .geometry import Phase, ball
from .kernels import GridFunction1D, eps_ladder, hard_truncation, hilbert_kernel
from .pushforward import (CLOSED_FORM, COAREA, MONTE_CARLO, LevelFunction,
                          LevelGrid, RadialFunction, density_on_grid)
from .sampling import derived_rng

_METHODS = (CLOSED_FORM, COAREA, MONTE_CARLO)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _indicator_profile(t):
    return (np.asarray(t, dtype=float) > 0.0).astype(float)


def _one_profile(t):
    return np.ones_like(np.asarray(t, dtype=float))


def preset_phase(name: str) -> Phase:
    dom = ball(2)
    if name == "linear":
        return geometry.linear_phase(dom)
    if name == "radial2":
        return geometry.radial_quadratic_phase(dom)
    if name == "radial-power4":
        return geometry.radial_power_phase(dom, 4.0)
    if name == "radial-power8":
        return geometry.radial_power_phase(dom, 8.0)
    if name == "saddle":
        return geometry.saddle_phase(dom)
    raise LevelformError(f"unknown preset {name!r}")


def preset_pair(name: str):
    phase = preset_phase(name)
    if name == "linear":
        f = LevelFunction(_indicator_profile)
        g = LevelFunction(_one_profile)
    else:
        f = RadialFunction(lambda rr: 1.0 - np.asarray(rr, dtype=float))
        g = RadialFunction(_one_profile)
    return phase, phase, f, g


def _load_phase(args) -> Phase:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = parse_kv_text(fh.read())
        return phase_from_config(cfg)
    return preset_phase(args.preset)


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------

def _resolve(path: str | None) -> str | None:
    if path is None:
        return None
    base = os.environ.get("LEVELFORM_OUT")
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _finite_or_none(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    return _finite_or_none(obj)


def write_report(path: str | None, command: str, payload: dict,
                 config: dict, seed: int | None) -> dict:
    payload = _sanitize(payload)
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()).hexdigest()
    report = {
        "schema": 1,
        "command": command,
        "payload": payload,
        "metadata": {
            "config": _sanitize(config),
            "seed": seed,
            "payload_sha256": digest,
            "timestamp": datetime.datetime.now(datetime.timezone.utc)
                         .isoformat(),
        },
    }
    if path is not None:
        with open(path, "w") as fh:
            json.dump(report, fh, indent=1)
    return report


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_density(args) -> int:
    phase = _load_phase(args)
    lo, hi = geometry.image_interval(phase)
    t_lo = args.t_lo if args.t_lo is not None else lo
    t_hi = args.t_hi if args.t_hi is not None else hi
    grid = LevelGrid(t_lo, t_hi, args.bins)
    est = density_on_grid(phase, grid, args.method, fiber_nodes=args.fiber_nodes,
                          subdivide=args.subdivide, sample_count=args.samples,
                          seed=args.seed)
    csv_path = _resolve(args.csv)
    if csv_path:
        est.to_csv(csv_path)
    payload = est.to_json_dict()
    report = write_report(_resolve(args.json), "density", payload,
                          _config_echo(args), args.seed)
    print(f"density[{phase.label}] bins={args.bins} method={args.method} "
          f"mass={est.mass():.6g}")
    if not args.json and not csv_path:
        json.dump(report, sys.stdout, indent=1)
        print()
    return 0


def _cmd_reduce(args) -> int:
    phase_in, phase_out, f, g = preset_pair(args.preset)
    form = reduction.SynchronizedForm(phase_in=phase_in, phase_out=phase_out,
                                      kernel=hilbert_kernel(), f=f, g=g,
                                      eps=args.eps)
    report = reduction.verify_reduction_identity(
        form, sample_count=args.samples, bins=args.bins, seed=args.seed,
        method=args.method, fiber_nodes=args.fiber_nodes,
        subdivide=args.subdivide)
    payload = {
        "preset": args.preset,
        "eps": args.eps,
        "lhs": {"value": report.lhs.value, "stderr": report.lhs.error,
                "samples": report.lhs.sample_count},
        "rhs": {"value": report.rhs.value, "refinement_error": report.rhs.error},
        "discrepancy": report.discrepancy,
        "tolerance": report.tolerance,
        "relative_discrepancy": report.relative_discrepancy,
        "passed": report.passed,
    }
    write_report(_resolve(args.json), "reduce", payload, _config_echo(args),
                 args.seed)
    status = "ok" if report.passed else "FAIL"
    print(f"reduce[{args.preset}] eps={args.eps} lhs={report.lhs.value:.6g} "
          f"rhs={report.rhs.value:.6g} disc={report.discrepancy:.3g} "
          f"tol={report.tolerance:.3g} {status}")
    return 0 if report.passed else 1


def _cmd_sparse(args) -> int:
    rng = derived_rng(args.seed, 3)
    vals_f = rng.standard_normal(args.cells)
    vals_g = rng.standard_normal(args.cells)
    F = GridFunction1D(-1.0, 1.0, vals_f)
    G = GridFunction1D(-1.0, 1.0, vals_g)
    family = sparse.build_sparse_greedy(F, G, lam=args.lam,
                                        max_depth=args.depth)
    eta = sparse.verify_sparsity(family)
    kernel = hilbert_kernel()
    rows = []
    for eps in eps_ladder(args.eps_min, args.eps_max):
        TF = hard_truncation(kernel, F, eps)
        lhs = float(np.sum(TF.values * G.values) * F.spacing)
        sp = sparse.sparse_form(family, F, G)
        ratio = sparse.domination_ratio(lhs, family, F, G)
        rows.append((eps, lhs, sp, ratio))
    csv_path = _resolve(args.csv)
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epsilon", "lhs", "sparse_value", "ratio", "seed"])
            for eps, lhs, sp, ratio in rows:
                writer.writerow([repr(eps), repr(lhs), repr(sp), repr(ratio),
                                 args.seed])
    payload = dict(sparse.family_to_json_dict(family))
    payload["ratios"] = [
        {"epsilon": eps, "lhs": lhs, "sparse_value": sp, "ratio": ratio}
        for eps, lhs, sp, ratio in rows]
    write_report(_resolve(args.json), "sparse", payload, _config_echo(args),
                 args.seed)
    ok = eta >= Fraction(1, 2)
    print(f"sparse cells={args.cells} depth={args.depth} members="
          f"{len(family.members)} eta={float(eta):.4f} "
          f"max_ratio={max(r for *_, r in rows):.4f} "
          f"{'ok' if ok else 'FAIL'}")
    return 0 if ok else 1


def _cmd_regime(args) -> int:
    phase = _load_phase(args)
    profile = reduction.estimate_beta(
        phase, t_lo=args.t_lo, t_hi=args.t_hi, bins=args.bins,
        method=args.method, fiber_nodes=args.fiber_nodes,
        sample_count=args.samples, seed=args.seed)
    atom = False
    if args.method == MONTE_CARLO:
        lo, hi = geometry.image_interval(phase)
        est = density_on_grid(phase, LevelGrid(lo, hi, args.bins),
                              MONTE_CARLO, sample_count=args.samples,
                              seed=args.seed)
        atom = est.atom_suspected
    regime = reduction.classify_regime(profile, atom_suspected=atom)
    window = reduction.critical_window(profile.beta, profile.beta)
    payload = {
        "phase": phase.label,
        "regime": regime,
        "beta": profile.beta,
        "window": [window[0], window[1]],
        "fit": {
            "slope": profile.slope,
            "intercept": profile.intercept,
            "rel_rms_power": profile.rel_rms_power,
            "rel_rms_log": profile.rel_rms_log,
            "log_coefficients": list(profile.log_coefficients),
        },
    }
    write_report(_resolve(args.json), "regime", payload, _config_echo(args),
                 args.seed)
    upper = "inf" if math.isinf(window[1]) else f"{window[1]:.4g}"
    print(f"regime[{phase.label}] {regime} beta={profile.beta:.4f} "
          f"window=({window[0]:.4g}, {upper})")
    return 0


def _config_echo(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levelform",
        description="level-set reduction laboratory for synchronized forms")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, preset_default="linear"):
        p.add_argument("--preset", default=preset_default,
                       choices=["linear", "radial2", "radial-power4",
                                "radial-power8", "saddle"])
        p.add_argument("--config", help="key = value phase description file")
        p.add_argument("--method", default=CLOSED_FORM, choices=_METHODS)
        p.add_argument("--bins", type=int, default=256)
        p.add_argument("--fiber-nodes", type=int, default=1024)
        p.add_argument("--subdivide", type=int, default=3)
        p.add_argument("--samples", type=int, default=200_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--json", help="write a JSON report here")

    p = sub.add_parser("density", help="tabulate a pushforward density")
    common(p)
    p.add_argument("--t-lo", type=float)
    p.add_argument("--t-hi", type=float)
    p.add_argument("--csv", help="write the density table here")
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("reduce", help="check the reduction identity")
    common(p)
    p.add_argument("--eps", type=float, default=0.25)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("sparse", help="build and test a sparse family")
    p.add_argument("--cells", type=int, default=1024)
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--lam", type=float, default=4.0)
    p.add_argument("--eps-min", type=int, default=2,
                   help="smallest dyadic exponent in the truncation ladder")
    p.add_argument("--eps-max", type=int, default=6,
                   help="largest dyadic exponent in the truncation ladder")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="write a JSON report here")
    p.add_argument("--csv", help="write the domination table here")
    p.set_defaults(func=_cmd_sparse)

    p = sub.add_parser("regime", help="classify small-level density behavior")
    common(p, preset_default="radial-power4")
    p.add_argument("--t-lo", type=float, default=1e-3)
    p.add_argument("--t-hi", type=float, default=1e-1)
    p.set_defaults(func=_cmd_regime)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def entry() -> None:
    try:
        raise SystemExit(main())
    except LevelformError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(2)
