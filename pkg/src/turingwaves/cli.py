"""Command-line interface: ``turingwaves <command> [options]``.

Commands
--------
analyze          COND check, growth rates and Turing point of a system
solve            compute a reference wave or a constant state and save its record
sweep            stability diagram over (c0, X)
spectrum         Hill spectrum, verdict and plot script for a profile record
existence-curve  solved eps along c0 at fixed period
validate         time-integration cross-check of a Hill verdict
check-negative   randomized checks of the 2x2 and symmetrizable obstructions

Every JSON report carries the tool version and the resolved configuration.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, recipes
from .dispersion import (
    BracketError,
    HypothesisError,
    NoTuringInstability,
    NotHopfCrossing,
    assert_no_2x2_turing,
    assert_symmetrizable_obstruction,
    check_cond,
    coincident_blocks,
    find_turing_point,
    max_growth,
    sample_symmetrizable_pairs,
)
from .evolve import validate_verdict
from .hill import DEFAULT_TOLERANCES, analyze_profile
from .models import ConfigError, evaluate_A
from .profile import PeriodicProfile, ProfileError, load_profile, random_phase_vector, save_profile
from .sweep import SweepPlan, existence_curve, linear_existence_probe, resolve_system, run_sweep

PLOT_SCRIPT = '''"""Scatter plot of a Hill spectrum dump (columns: xi, Re lambda, Im lambda)."""
import sys

import matplotlib.pyplot as plt
import numpy as np

data = np.loadtxt({data!r}, comments="#")
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
ax1.scatter(data[:, 1], data[:, 2], s=1, c="k")
ax1.axvline(0.0, ls="--", c="0.5")
ax1.set_xlim({xlim})
ax1.set_xlabel("Re lambda")
ax1.set_ylabel("Im lambda")
ax1.set_title({title!r})
ax2.scatter(data[:, 1], data[:, 2], s=1, c="k")
ax2.axvline(0.0, ls="--", c="0.5")
ax2.set_xlim(-0.02, 0.005)
ax2.set_ylim(-0.05, 0.05)
ax2.set_xlabel("Re lambda")
ax2.set_title("near the origin")
fig.tight_layout()
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else {png!r}, dpi=150)
'''


def _emit(doc: dict, path: str | None = None) -> None:
    text = json.dumps(doc, indent=1, default=_jsonable) + "\n"
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    sys.stdout.write(text)


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


def _header(command: str, config: dict) -> dict:
    return {"tool": "turingwaves", "version": __version__, "command": command, "config": config}


def _tolerances(args) -> dict:
    return {k: getattr(args, k) for k in DEFAULT_TOLERANCES}


def cmd_analyze(args) -> int:
    spec = resolve_system(args.system)
    doc = _header("analyze", {"system": spec.to_dict(), "eps_lo": args.eps_lo, "eps_hi": args.eps_hi})
    status = 0
    A0 = evaluate_A(spec, 0.0)
    try:
        cond = check_cond(A0, spec.D)
        doc["cond"] = cond.to_dict()
        if not cond.strictly_hyperbolic:
            doc["cond_failure"] = "A is not strictly hyperbolic (coincident diagonal entries)"
            doc["coincident_blocks"] = [b.to_dict() for b in coincident_blocks(A0, spec.D)]
            status = 1
        elif not cond.passes:
            doc["cond_failure"] = "viscosity matrix violates the positivity conditions"
            status = 1
    except ValueError as exc:
        doc["cond_failure"] = str(exc)
        status = 1
    growth = {}
    for eps in (args.eps_lo, 0.0, args.eps_hi):
        try:
            g = max_growth(evaluate_A(spec, eps), spec.D)
            growth[repr(float(eps))] = {"xi": g.xi, "growth": g.growth}
        except BracketError as exc:
            growth[repr(float(eps))] = {"error": str(exc)}
    doc["max_growth"] = growth
    try:
        doc["turing_point"] = find_turing_point(spec, args.eps_lo, args.eps_hi).to_dict()
    except NoTuringInstability as exc:
        doc["turing_point"] = None
        doc["message"] = f"no Turing instability possible in this bracket: {exc}"
        status = status or 2
    except (BracketError, NotHopfCrossing) as exc:
        doc["turing_point"] = None
        doc["message"] = f"{type(exc).__name__}: {exc}; try a wider --eps-lo/--eps-hi bracket"
        status = status or 2
    _emit(doc, args.out)
    return status


def cmd_solve(args) -> int:
    if args.constant:
        spec = resolve_system(args.system)
        tp = find_turing_point(spec)
        X = tp.X_star if args.X is None else args.X
        prof = PeriodicProfile(X=X, c=tp.c_star + args.c0, eps=args.eps, grid=np.zeros((args.M, spec.n)), spec=spec,
                               phase_w=random_phase_vector(spec.n, args.seed), residual_norm=0.0,
                               meta={"c_star": tp.c_star, "constant_state": True})
    else:
        prof = recipes.build_wave(args.wave, M=args.M, seed=args.seed)
    save_profile(prof, args.out)
    _emit({**_header("solve", {"wave": None if args.constant else args.wave, "M": args.M, "seed": args.seed}),
           "record": str(args.out), "X": prof.X, "c": prof.c, "c0": prof.c - prof.meta.get("c_star", np.nan),
           "eps": prof.eps, "amplitude": prof.amplitude, "residual_norm": prof.residual_norm})
    return 0


def cmd_sweep(args) -> int:
    plan = SweepPlan(spec_ref=args.system, c0_range=(args.c0[0], args.c0[1], int(args.c0[2])),
                     X_range=(args.X[0], args.X[1], int(args.X[2])), output_dir=args.out,
                     n_floquet=args.n_floquet, n_modes=args.modes, tolerances=_tolerances(args), M=args.M,
                     seed=args.seed, seed_wave=args.seed_wave,
                     seed_point=tuple(args.seed_point) if args.seed_point else (recipes.ONSET_C0, recipes.ONSET_X),
                     workers=args.workers)
    log = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    points = run_sweep(plan, log=log)
    counts = {v: sum(p.verdict == v for p in points) for v in ("stable", "unstable", "no-profile")}
    _emit({**_header("sweep", plan.to_dict()), "diagram": str(Path(args.out) / "diagram.csv"), "counts": counts})
    return 0


def cmd_spectrum(args) -> int:
    try:
        prof = load_profile(args.record)
    except (ProfileError, OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot use profile record: {exc}", file=sys.stderr)
        return 1
    tol = _tolerances(args)
    samples, fit, verdict = analyze_profile(prof, args.n_floquet, args.modes, **tol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "spectrum.txt").open("w") as fh:
        fh.write("# xi re_lambda im_lambda\n")
        for s in samples:
            for lam in s.eigenvalues:
                fh.write(f"{s.xi:.17g} {lam.real:.17g} {lam.imag:.17g}\n")
    re_min = max(-1.0, min(float(np.min(s.eigenvalues.real)) for s in samples))
    (out / "plot_spectrum.py").write_text(PLOT_SCRIPT.format(
        data=str(out / "spectrum.txt"), xlim=f"{re_min:.4g}, 0.05",
        title=f"X={prof.X:.4g}, eps={prof.eps:.4g}", png=str(out / "spectrum.png")))
    doc = {**_header("spectrum", {"record": str(args.record), "n_floquet": args.n_floquet, "n_modes": args.modes,
                                  "tolerances": tol}),
           "X": prof.X, "c": prof.c, "eps": prof.eps, "verdict": verdict.to_dict(),
           "whitham_fit": None if fit is None else fit.to_dict()}
    _emit(doc, out / "verdict.json")
    return 0


def cmd_existence_curve(args) -> int:
    spec = resolve_system(args.system)
    tp = find_turing_point(spec)
    c0s = np.linspace(args.c0[0], args.c0[1], int(args.c0[2])) if int(args.c0[2]) > 1 else np.array([args.c0[0]])
    if args.seed_wave:
        seed = (recipes.build_wave(args.seed_wave, M=args.M, seed=args.seed)
                if args.seed_wave in recipes.REFERENCE_WAVES else load_profile(args.seed_wave))
        rows = existence_curve(seed, tp.c_star, args.X, c0s)
    else:
        rows = linear_existence_probe(spec, tp, args.X, c0s, M=args.M, seed=args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("c0", "eps"))
        for c0, eps in rows:
            w.writerow((repr(c0), "" if eps is None else repr(eps)))
    _emit({**_header("existence-curve", {"system": spec.to_dict(), "X": args.X, "c0": list(args.c0),
                                         "seed_wave": args.seed_wave}),
           "csv": str(args.out), "points": len(rows), "gaps": sum(e is None for _, e in rows)})
    return 0


def cmd_validate(args) -> int:
    try:
        prof = load_profile(args.record)
    except (ProfileError, OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot use profile record: {exc}", file=sys.stderr)
        return 1
    _, _, verdict = analyze_profile(prof, args.n_floquet, args.modes, **_tolerances(args))
    report = validate_verdict(prof, verdict, pert_amp=args.pert_amp, T=args.T, dt=args.dt, seed=args.seed,
                              periods=args.periods)
    if args.series:
        Path(args.series).write_text("# t norm\n" + report.run.to_text())
    _emit({**_header("validate", {"record": str(args.record), "T": args.T, "dt": args.dt, "pert_amp": args.pert_amp,
                                  "seed": args.seed, "periods": args.periods}),
           "verdict": verdict.label, "report": report.to_dict()})
    return 0 if report.agrees is not False else 3


def cmd_check_negative(args) -> int:
    rep = assert_no_2x2_turing(args.samples, args.seed)
    failures = 0
    for A, D in sample_symmetrizable_pairs(args.symmetrizable, seed=args.seed):
        try:
            failures += not assert_symmetrizable_obstruction(A, D)
        except HypothesisError:
            failures += 1
    _emit({**_header("check-negative", {"samples": args.samples, "seed": args.seed,
                                        "symmetrizable": args.symmetrizable}),
           "two_by_two": rep.to_dict(), "symmetrizable_failures": failures})
    return 0 if rep.violations == 0 and failures == 0 else 1


def _add_system(p):
    p.add_argument("--system", default="quadratic", help="fixture name or path to a system JSON file")


def _add_hill(p):
    p.add_argument("--n-floquet", type=int, default=101, help="odd number of Floquet exponents")
    p.add_argument("--modes", type=int, default=41, help="Fourier modes per field, 2N+1 (odd)")
    for k, v in DEFAULT_TOLERANCES.items():
        p.add_argument(f"--{k.replace('_', '-')}", dest=k, type=float, default=v)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="turingwaves", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="COND check, growth rates and Turing point")
    _add_system(p)
    p.add_argument("--eps-lo", type=float, default=-0.2)
    p.add_argument("--eps-hi", type=float, default=0.2)
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("solve", help="compute a reference wave (or a constant state) and save its record")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--wave", choices=sorted(recipes.REFERENCE_WAVES))
    g.add_argument("--constant", action="store_true", help="zero-amplitude state of --system")
    _add_system(p)
    p.add_argument("--eps", type=float, default=0.0, help="eps of the constant state")
    p.add_argument("--c0", type=float, default=0.0, help="frame speed offset of the constant state")
    p.add_argument("--X", type=float, help="period of the constant state (default 2 pi / xi*)")
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="stability diagram over (c0, X)")
    _add_system(p)
    p.add_argument("--c0", type=float, nargs=3, metavar=("LO", "HI", "COUNT"), required=True)
    p.add_argument("--X", type=float, nargs=3, metavar=("LO", "HI", "COUNT"), required=True)
    p.add_argument("--seed-wave", default="onset", help="'onset', a reference wave name, or a record path")
    p.add_argument("--seed-point", type=float, nargs=2, metavar=("C0", "X"))
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--seed", type=int, default=0, help="phase-vector seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    _add_hill(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", help="Hill spectrum of a profile record")
    p.add_argument("record")
    p.add_argument("--out", required=True, help="output directory")
    _add_hill(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("existence-curve", help="eps along c0 at fixed period")
    _add_system(p)
    p.add_argument("--X", type=float, required=True)
    p.add_argument("--c0", type=float, nargs=3, metavar=("LO", "HI", "COUNT"), required=True)
    p.add_argument("--seed-wave", help="reference wave name or record path to continue from")
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=cmd_existence_curve)

    p = sub.add_parser("validate", help="time-integration cross-check of the Hill verdict")
    p.add_argument("record")
    p.add_argument("--T", type=float, help="final time (default: 200, longer for slow instabilities)")
    p.add_argument("--dt", type=float, help="time step (default 1e-3 X)")
    p.add_argument("--pert-amp", type=float, help="perturbation max-norm (default 1e-3 x amplitude)")
    p.add_argument("--periods", type=int, help="domain length in periods (default: chosen from the spectrum)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--series", help="write the (t, norm) series here")
    _add_hill(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check-negative", help="randomized checks of the structural obstructions")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--symmetrizable", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_check_negative)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
