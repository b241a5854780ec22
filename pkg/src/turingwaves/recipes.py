"""Reproducible construction paths for the reference waves of the bundled fixtures.

Each recipe starts from the onset eigenvector guess of the quadratic system
and reaches its target by Newton continuation, so the result depends only on
the fixtures, the grid size and the phase-vector seed.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .dispersion import TuringPoint, find_turing_point
from .models import SystemSpec, load_fixture
from .profile import (
    PeriodicProfile,
    criticality_flip,
    homotopy_to_cubic,
    initial_guess,
    march_profile,
    mirror_quadratic,
    solve_profile,
)

__all__ = ["WaveTarget", "REFERENCE_WAVES", "seed_profile", "build_wave", "quadratic_wave",
           "cubic_super_wave", "cubic_sub_wave"]

# offset of the onset seed from the critical speed, shared by all recipes
ONSET_C0 = 4.06e-3
ONSET_X = 5.44


@dataclass(frozen=True)
class WaveTarget:
    name: str
    fixture: str
    c0: float
    X: float
    eps_ref: float

    def to_dict(self) -> dict:
        return {"name": self.name, "fixture": self.fixture, "c0": self.c0, "X": self.X, "eps_ref": self.eps_ref}


REFERENCE_WAVES = {
    "quadratic": WaveTarget("quadratic", "quadratic", ONSET_C0, ONSET_X, 2.82e-3),
    "cubic_super": WaveTarget("cubic_super", "cubic_super", 0.5, 6.0, 8.74e-1),
    "cubic_sub": WaveTarget("cubic_sub", "cubic_sub", -0.3, 4.5, -3.5e-3),
}


def seed_profile(spec: SystemSpec, turing: TuringPoint, c0: float = ONSET_C0, X: float = ONSET_X,
                 M: int = 64, eps_guess: float = 1e-2, scale: float = 0.1, seed: int = 0) -> PeriodicProfile:
    """Solve once from the onset eigenvector guess at ``(c* + c0, X)``."""
    guess = initial_guess(turing, spec, M, X, eps_guess=eps_guess, scale=scale)
    prof = solve_profile(guess, X, turing.c_star + c0, spec, eps0=eps_guess, seed=seed)
    prof.meta["c_star"] = turing.c_star
    return prof


def _march(prof: PeriodicProfile, c: float, X: float, substeps: int) -> PeriodicProfile:
    # small fixed first step keeps the march on the branch it started on
    return march_profile(prof, c, X, first_step=1.0 / substeps, max_jump=0.05)


def quadratic_wave(M: int = 64, seed: int = 0, turing: TuringPoint | None = None) -> PeriodicProfile:
    spec = load_fixture("quadratic")
    tp = find_turing_point(spec) if turing is None else turing
    return seed_profile(spec, tp, M=M, seed=seed)


def _cubic_onset(M: int, seed: int, tp: TuringPoint, h_steps: int) -> PeriodicProfile:
    quad = seed_profile(load_fixture("quadratic"), tp, M=M, seed=seed)
    cubic = homotopy_to_cubic(mirror_quadratic(quad), h_steps=h_steps)
    return replace(cubic, spec=load_fixture("cubic_super"))


def cubic_super_wave(M: int = 64, seed: int = 0, turing: TuringPoint | None = None, h_steps: int = 10,
                     substeps: int = 60) -> PeriodicProfile:
    """Quadratic onset wave, mirrored to ``beta = +10``, deformed to cubic, then marched."""
    tp = find_turing_point(load_fixture("cubic_super")) if turing is None else turing
    onset = _cubic_onset(M, seed, tp, h_steps)
    t = REFERENCE_WAVES["cubic_super"]
    out = _march(onset, tp.c_star + t.c0, t.X, substeps)
    out.meta["c_star"] = tp.c_star
    return out


def cubic_sub_wave(M: int = 64, seed: int = 0, turing: TuringPoint | None = None, h_steps: int = 10,
                   substeps: int = 60) -> PeriodicProfile:
    """Cubic onset wave sent through the criticality sign map, then marched."""
    tp = find_turing_point(load_fixture("cubic_sub")) if turing is None else turing
    onset = _cubic_onset(M, seed, tp, h_steps)
    flipped = criticality_flip(onset, tp.c_star)
    t = REFERENCE_WAVES["cubic_sub"]
    out = _march(flipped, tp.c_star + t.c0, t.X, substeps)
    out.meta["c_star"] = tp.c_star
    return out


_BUILDERS = {"quadratic": quadratic_wave, "cubic_super": cubic_super_wave, "cubic_sub": cubic_sub_wave}


def build_wave(name: str, M: int = 64, seed: int = 0) -> PeriodicProfile:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown reference wave {name!r}; choose from {sorted(_BUILDERS)}") from None
    prof = builder(M=M, seed=seed)
    prof.meta["wave"] = name
    return prof
