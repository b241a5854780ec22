"""Stability diagrams over the shifted speed ``c0 = c - c*`` and the period ``X``.

A sweep continues one seed profile over the whole grid, then runs Hill's
method at every converged point.  Profiles are persisted as records in the
output directory and diagram rows are appended as they finish, so an
interrupted sweep resumes where it stopped.  The final CSV is rewritten in
``(c0, X)`` order.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, recipes
from .dispersion import TuringPoint, find_turing_point
from .hill import DEFAULT_TOLERANCES, analyze_profile
from .models import SystemSpec, load_fixture, load_system
from .profile import (
    PeriodicProfile,
    ProfileError,
    continue_family,
    load_profile,
    march_profile,
    save_profile,
)

__all__ = ["SweepPlan", "DiagramPoint", "CSV_COLUMNS", "resolve_system", "make_seed", "run_sweep",
           "read_diagram", "existence_curve"]

CSV_COLUMNS = ("c0", "X", "eps", "verdict", "max_re_outside")


@dataclass
class SweepPlan:
    """Grid, solver and Hill settings of one stability diagram.

    ``spec_ref`` is a bundled fixture name or a path to a system file.
    ``seed_wave`` is ``"onset"`` (solve from the onset eigenvector guess at
    ``seed_point``), the name of a reference recipe, or a profile record path.
    """

    spec_ref: str
    c0_range: tuple = (0.0, 0.5, 20)
    X_range: tuple = (4.5, 6.5, 20)
    output_dir: str = "sweep_out"
    n_floquet: int = 101
    n_modes: int = 41
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    M: int = 64
    seed: int = 0
    seed_wave: str = "onset"
    seed_point: tuple = (recipes.ONSET_C0, recipes.ONSET_X)
    workers: int = 1

    def __post_init__(self):
        self.c0_range = tuple(self.c0_range)
        self.X_range = tuple(self.X_range)
        self.seed_point = tuple(self.seed_point)
        for name, rng in (("c0_range", self.c0_range), ("X_range", self.X_range)):
            if len(rng) != 3 or int(rng[2]) < 1:
                raise ValueError(f"{name} must be (lo, hi, count) with count >= 1")
            if int(rng[2]) > 1 and not rng[1] > rng[0]:
                raise ValueError(f"{name} is empty")
        if self.n_floquet % 2 == 0 or self.n_modes % 2 == 0:
            raise ValueError("n_floquet and n_modes must be odd")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerances {sorted(unknown)}")
        self.tolerances = {**DEFAULT_TOLERANCES, **self.tolerances}

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        def ax(lo, hi, n):
            return np.linspace(lo, hi, int(n)) if int(n) > 1 else np.array([float(lo)])
        return ax(*self.c0_range), ax(*self.X_range)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DiagramPoint:
    c0: float
    X: float
    eps_solved: float | None
    verdict: str
    max_re_outside: float | None
    amplitude: float | None = None

    def __post_init__(self):
        if self.verdict not in ("stable", "unstable", "no-profile"):
            raise ValueError(f"bad verdict {self.verdict!r}")
        if self.verdict == "no-profile" and self.eps_solved is not None:
            raise ValueError("no-profile points carry no eps")

    def row(self) -> list[str]:
        def fmt(v):
            return "" if v is None else repr(float(v))
        return [fmt(self.c0), fmt(self.X), fmt(self.eps_solved), self.verdict, fmt(self.max_re_outside)]


def resolve_system(ref: str) -> SystemSpec:
    p = Path(ref)
    return load_system(p) if p.suffix == ".json" or p.exists() else load_fixture(ref)


def make_seed(plan: SweepPlan, spec: SystemSpec, tp: TuringPoint) -> PeriodicProfile:
    if plan.seed_wave == "onset":
        c0, X = plan.seed_point
        return recipes.seed_profile(spec, tp, c0=c0, X=X, M=plan.M, seed=plan.seed)
    if plan.seed_wave in recipes.REFERENCE_WAVES:
        return recipes.build_wave(plan.seed_wave, M=plan.M, seed=plan.seed)
    return load_profile(plan.seed_wave)


def _record_path(out: Path, i: int, j: int) -> Path:
    return out / "profiles" / f"p_{i:03d}_{j:03d}.json"


def _classify_job(args):
    prof, n_floquet, n_modes, tol = args
    _, _, verdict = analyze_profile(prof, n_floquet, n_modes, **tol)
    return verdict.stable, verdict.max_re_outside


def read_diagram(path) -> dict:
    """Rows of a diagram CSV keyed by ``(c0, X)``."""
    rows = {}
    path = Path(path)
    if not path.exists():
        return rows
    with path.open(newline="") as fh:
        for r in csv.DictReader(fh):
            rows[(float(r["c0"]), float(r["X"]))] = r
    return rows


def run_sweep(plan: SweepPlan, log=None) -> list[DiagramPoint]:
    """Run (or resume) a sweep and write ``diagram.csv`` and ``summary.json``."""
    out = Path(plan.output_dir)
    (out / "profiles").mkdir(parents=True, exist_ok=True)
    spec = resolve_system(plan.spec_ref)
    tp = find_turing_point(spec)
    c0s, Xs = plan.axes()

    # continuation runs once; its members are persisted and reused on resume
    marker = out / "profiles" / "complete"
    members = {}
    if marker.exists():
        for i in range(len(c0s)):
            for j in range(len(Xs)):
                p = _record_path(out, i, j)
                if p.exists():
                    members[(i, j)] = load_profile(p)
    else:
        seed = make_seed(plan, spec, tp)
        family = continue_family(seed, (tp.c_star + c0s[0], tp.c_star + c0s[-1]),
                                 (Xs[0], Xs[-1]), steps=(len(c0s), len(Xs)), provenance=tp)
        members = family.members
        for k, prof in members.items():
            save_profile(prof, _record_path(out, *k))
        marker.write_text(f"{len(members)}\n")

    csv_path = out / "diagram.csv"
    done = read_diagram(csv_path)
    todo = []
    for (i, j), prof in sorted(members.items()):
        if (float(c0s[i]), float(Xs[j])) not in done:
            todo.append(((i, j), prof))
    new_file = not csv_path.exists()
    with csv_path.open("a", newline="") as fh:
        writer = csv.writer(fh)
        if new_file:
            writer.writerow(CSV_COLUMNS)
        jobs = [(prof, plan.n_floquet, plan.n_modes, plan.tolerances) for _, prof in todo]
        if plan.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=plan.workers) as ex:
                results = ex.map(_classify_job, jobs)
                for ((i, j), prof), (stable, mro) in zip(todo, results):
                    pt = DiagramPoint(float(c0s[i]), float(Xs[j]), prof.eps, "stable" if stable else "unstable", mro)
                    writer.writerow(pt.row())
                    fh.flush()
        else:
            for ((i, j), prof), job in zip(todo, jobs):
                stable, mro = _classify_job(job)
                pt = DiagramPoint(float(c0s[i]), float(Xs[j]), prof.eps, "stable" if stable else "unstable", mro)
                writer.writerow(pt.row())
                fh.flush()
                if log:
                    log(f"c0={c0s[i]:.5g} X={Xs[j]:.5g} eps={prof.eps:.5g} {pt.verdict}")

    rows = read_diagram(csv_path)
    points = []
    for i, c0 in enumerate(c0s):
        for j, X in enumerate(Xs):
            prof = members.get((i, j))
            r = rows.get((float(c0), float(X)))
            if prof is None or r is None:
                points.append(DiagramPoint(float(c0), float(X), None, "no-profile", None))
            else:
                points.append(DiagramPoint(float(c0), float(X), prof.eps, r["verdict"], float(r["max_re_outside"]),
                                           prof.amplitude))
    points.sort(key=lambda p: (p.c0, p.X))
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for p in points:
            writer.writerow(p.row())
    summary = {
        "tool": "turingwaves",
        "version": __version__,
        "plan": plan.to_dict(),
        "system": spec.to_dict(),
        "turing_point": tp.to_dict(),
        "counts": {v: sum(p.verdict == v for p in points) for v in ("stable", "unstable", "no-profile")},
        "points": [asdict(p) for p in points],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    return points


def existence_curve(seed: PeriodicProfile, c_star: float, X: float, c0_values) -> list[tuple[float, float | None]]:
    """Solved ``eps`` along ``c0`` at fixed period ``X``; ``None`` marks a gap.

    The seed is first moved to ``(c0_values[0], X)``; each later point is
    continued from the last converged one.
    """
    rows = []
    cur = None
    try:
        cur = march_profile(seed, c_star + float(c0_values[0]), X)
    except ProfileError:
        cur = None
    for k, c0 in enumerate(c0_values):
        c = c_star + float(c0)
        if k == 0:
            rows.append((float(c0), None if cur is None else cur.eps))
            continue
        base = cur if cur is not None else seed
        try:
            cur = march_profile(base, c, X)
            rows.append((float(c0), cur.eps))
        except ProfileError:
            rows.append((float(c0), None))
    return rows


def linear_existence_probe(spec: SystemSpec, tp: TuringPoint, X: float, c0_values, M: int = 64,
                           seed: int = 0) -> list[tuple[float, float | None]]:
    """Attempt a fresh onset-guess solve at every ``c0`` (used when no seed wave exists)."""
    rows = []
    for c0 in c0_values:
        try:
            prof = recipes.seed_profile(spec, tp, c0=float(c0), X=X, M=M, seed=seed)
            rows.append((float(c0), prof.eps))
        except ProfileError:
            rows.append((float(c0), None))
    return rows
