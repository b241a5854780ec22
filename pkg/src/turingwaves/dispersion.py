"""Constant-state analysis: the symbol ``-i xi A - xi^2 D`` and Turing onset.

Everything here works with plain matrices, so the functions can be used on
systems that are not described by a :class:`~turingwaves.models.SystemSpec`.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple

import numpy as np

from .models import SystemSpec, evaluate_A

__all__ = [
    "BracketError",
    "NoTuringInstability",
    "NotHopfCrossing",
    "HypothesisError",
    "CondReport",
    "CoincidentBlock",
    "Growth",
    "TuringPoint",
    "NegativeResultReport",
    "sorted_eigvals",
    "symbol_matrix",
    "symbol_spectrum",
    "spectral_abscissa",
    "check_cond",
    "coincident_blocks",
    "max_growth",
    "dissipation_margin",
    "hopf_eigenvalues",
    "find_turing_point",
    "homotopy_D_search",
    "assert_no_2x2_turing",
    "assert_symmetrizable_obstruction",
    "sample_symmetrizable_pairs",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class BracketError(RuntimeError):
    """The growth rate is still increasing at the end of the scanned range."""


class NoTuringInstability(RuntimeError):
    """No change of stability inside the parameter bracket."""


class NotHopfCrossing(RuntimeError):
    """The neutral eigenvalue is real, so the crossing is not of Turing-Hopf type."""


class HypothesisError(ValueError):
    """Input does not satisfy the hypotheses of a structural check."""


def sorted_eigvals(M: np.ndarray) -> np.ndarray:
    """Eigenvalues sorted by real part descending, ties by imaginary part.

    Works on a single matrix or a stack ``(..., n, n)``.
    """
    return sort_spectrum(np.linalg.eigvals(M))


def sort_spectrum(lam: np.ndarray) -> np.ndarray:
    """Deterministic ordering of eigenvalue arrays along the last axis."""
    lam = np.asarray(lam)
    if lam.ndim == 1:
        return lam[np.lexsort((lam.imag, -lam.real))]
    flat = lam.reshape(-1, lam.shape[-1])
    order = np.array([np.lexsort((row.imag, -row.real)) for row in flat])
    return np.take_along_axis(flat, order, axis=1).reshape(lam.shape)


def symbol_matrix(A, D, xi):
    """``-i xi A - xi^2 D``; a stack of matrices when ``xi`` is an array."""
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    if A.shape != D.shape:
        raise ValueError(f"A {A.shape} and D {D.shape} differ in shape")
    xi = np.asarray(xi, dtype=float)
    x = xi[..., None, None]
    return -1j * x * A - x**2 * D


def symbol_spectrum(A, D, xi) -> np.ndarray:
    return sorted_eigvals(symbol_matrix(A, D, xi))


def spectral_abscissa(A, D, xi) -> np.ndarray:
    return np.linalg.eigvals(symbol_matrix(A, D, xi)).real.max(axis=-1)


@dataclass(frozen=True)
class CondReport:
    strictly_hyperbolic: bool
    positive_diagonal: bool
    D_spectrum_unstable: bool

    @property
    def passes(self) -> bool:
        return self.strictly_hyperbolic and self.positive_diagonal and self.D_spectrum_unstable

    def to_dict(self) -> dict:
        return {**asdict(self), "passes": self.passes}


def check_cond(A, D, tol_distinct: float = 1e-8) -> CondReport:
    """Check the structural conditions: A diagonal with distinct entries,
    D with positive diagonal and spectrum in the open right half-plane."""
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    off = A - np.diag(np.diag(A))
    if np.any(np.abs(off) > 0.0):
        raise HypothesisError("A must be diagonal")
    a = np.sort(np.diag(A))
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    distinct = bool(a.size < 2 or np.min(np.diff(a)) > tol_distinct * scale)
    return CondReport(
        strictly_hyperbolic=distinct,
        positive_diagonal=bool(np.all(np.diag(D) > 0.0)),
        D_spectrum_unstable=bool(np.all(np.linalg.eigvals(D).real > 0.0)),
    )


@dataclass(frozen=True)
class CoincidentBlock:
    """Reduced viscosity block for a group of equal characteristic speeds.

    For small ``xi`` the eigenvalues continuing from ``-i a xi`` behave like
    ``-i a xi - d xi^2`` with ``d`` running over the eigenvalues of the block.
    """

    speed: float
    indices: tuple[int, ...]
    D_reduced: np.ndarray
    eigenvalues: np.ndarray
    det: float

    @property
    def unstable(self) -> bool:
        return bool(np.any(self.eigenvalues.real <= 0.0))

    def to_dict(self) -> dict:
        return {
            "speed": self.speed,
            "indices": list(self.indices),
            "D_reduced": self.D_reduced.tolist(),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "det": self.det,
            "unstable": self.unstable,
        }


def coincident_blocks(A, D, tol_distinct: float = 1e-8) -> list[CoincidentBlock]:
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    a = np.diag(A)
    scale = max(1.0, float(np.max(np.abs(a))))
    used = set()
    blocks = []
    for i in range(len(a)):
        if i in used:
            continue
        group = tuple(j for j in range(len(a)) if abs(a[j] - a[i]) <= tol_distinct * scale)
        used.update(group)
        if len(group) < 2:
            continue
        Dr = D[np.ix_(group, group)]
        blocks.append(
            CoincidentBlock(float(a[i]), group, Dr, sorted_eigvals(Dr), float(np.linalg.det(Dr)))
        )
    return blocks


class Growth(NamedTuple):
    xi: float
    growth: float


def _golden_max(f: Callable[[float], float], a: float, b: float, tol: float) -> tuple[float, float]:
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def max_growth(A, D, xi_max: float = 10.0, grid_points: int = 2000, tol: float = 1e-10) -> Growth:
    """Largest real part of the symbol spectrum over ``0 < xi <= xi_max``.

    The abscissa tends to zero from below as ``xi -> 0`` for conservation
    laws, so the result is the largest *interior* local maximum; only when
    the abscissa is monotone decreasing is the first grid point returned.
    """
    if xi_max <= 0:
        raise ValueError("xi_max must be positive")
    xs = np.linspace(xi_max / grid_points, xi_max, grid_points)
    g = spectral_abscissa(A, D, xs)
    interior = np.flatnonzero((g[1:-1] >= g[:-2]) & (g[1:-1] >= g[2:])) + 1
    best_interior = g[interior].max() if interior.size else -np.inf
    if g[-1] > g[-2] and g[-1] >= best_interior:
        raise BracketError(
            f"growth still increasing at xi_max={xi_max}; enlarge xi_max or check the structural conditions"
        )
    if not interior.size:
        return Growth(float(xs[0]), float(g[0]))
    k = interior[np.argmax(g[interior])]
    f = lambda x: float(spectral_abscissa(A, D, x))
    x, val = _golden_max(f, xs[k - 1], xs[k + 1], tol)
    if g[k] > val:
        x, val = xs[k], g[k]
    return Growth(float(x), float(val))


def dissipation_margin(A, D, xi_max: float = 10.0, grid_points: int = 2000) -> float:
    """Empirical infimum of ``-Re lambda / xi^2`` over the scanned grid."""
    xs = np.linspace(xi_max / grid_points, xi_max, grid_points)
    return float(np.min(-spectral_abscissa(A, D, xs) / xs**2))


def hopf_eigenvalues(A, D, c: float) -> np.ndarray:
    """Spectrum of ``D^{-1}(A - cI)``, the linearised traveling-wave ODE at a constant state."""
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    if abs(np.linalg.det(D)) < 1e-14 * max(1.0, np.linalg.norm(D)) ** D.shape[0]:
        raise np.linalg.LinAlgError("D is singular")
    return sorted_eigvals(np.linalg.solve(D, A - c * np.eye(A.shape[0])))


@dataclass(frozen=True)
class TuringPoint:
    eps_star: float
    xi_star: float
    tau: float
    c_star: float
    X_star: float
    growth: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TuringPoint":
        return cls(**{k: float(d[k]) for k in cls.__dataclass_fields__ if k in d})


def _neutral_point(A_of: Callable[[float], np.ndarray], D_of: Callable[[float], np.ndarray],
                   lo: float, hi: float, tol: float, xi_max: float, grid_points: int) -> TuringPoint:
    g = lambda s: max_growth(A_of(s), D_of(s), xi_max, grid_points).growth
    glo, ghi = g(lo), g(hi)
    if not (glo < 0.0 < ghi):
        raise NoTuringInstability(
            f"no stability change in bracket: growth({lo})={glo:.3e}, growth({hi})={ghi:.3e}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    return _turing_point_at(A_of(s), D_of(s), s, xi_max, grid_points)


def _turing_point_at(A, D, s, xi_max, grid_points) -> TuringPoint:
    xi, growth = max_growth(A, D, xi_max, grid_points)
    lam = np.linalg.eigvals(symbol_matrix(A, D, xi))
    crit = lam[np.argmax(lam.real)]
    tau = abs(crit.imag)
    if tau <= 1e-8 * max(1.0, np.abs(lam).max()):
        raise NotHopfCrossing(f"neutral eigenvalue {crit:.3e} at xi={xi:.6g} is real")
    # a mode exp(i xi x + lambda t) is steady in the frame moving with -Im(lambda)/xi
    c = -crit.imag / xi
    return TuringPoint(float(s), float(xi), float(tau), float(c), float(2.0 * np.pi / xi), float(growth))


def find_turing_point(spec: SystemSpec, eps_lo: float = -0.2, eps_hi: float = 0.2, tol: float = 1e-12,
                      xi_max: float = 10.0, grid_points: int = 2000) -> TuringPoint:
    """Bisect the bifurcation parameter for the onset of finite-wavenumber instability."""
    return _neutral_point(lambda e: evaluate_A(spec, e), lambda e: spec.D, eps_lo, eps_hi, tol, xi_max, grid_points)


def homotopy_D_search(A, D_check, steps: int = 50, tol: float = 1e-12, xi_max: float = 10.0,
                      grid_points: int = 2000) -> TuringPoint:
    """March ``D(s) = s D_check + (1 - s) I`` from the identity and locate the first neutral ``s``.

    ``eps_star`` of the result holds the homotopy parameter ``s``.
    """
    A = np.asarray(A, dtype=float)
    Dc = np.asarray(D_check, dtype=float)
    eye = np.eye(A.shape[0])
    D_of = lambda s: s * Dc + (1.0 - s) * eye
    A_of = lambda s: A
    grid = np.linspace(0.0, 1.0, steps + 1)
    prev = 0.0
    for s in grid[1:]:
        gs = max_growth(A, D_of(s), xi_max, grid_points).growth
        if gs > 0.0:
            return _neutral_point(A_of, D_of, prev, s, tol, xi_max, grid_points)
        prev = s
    if gs > -1e-10:
        return _turing_point_at(A, Dc, 1.0, xi_max, grid_points)
    raise NoTuringInstability("no neutral crossing along the viscosity homotopy on [0, 1]")


@dataclass
class NegativeResultReport:
    samples: int
    rejected: int
    violations_hopf: int
    violations_growth: int
    symmetric_samples: int
    symmetric_violations: int
    seed: int

    @property
    def violations(self) -> int:
        return self.violations_hopf + self.violations_growth

    def to_dict(self) -> dict:
        return {**asdict(self), "violations": self.violations}


def _draw_cond_pair(rng: np.random.Generator, symmetric: bool) -> tuple[np.ndarray, np.ndarray, int]:
    rejected = 0
    while True:
        a = rng.uniform(-3.0, 3.0, size=2)
        T = rng.normal(size=(2, 2))
        np.fill_diagonal(T, 0.0)
        if symmetric:
            T = 0.5 * (T + T.T)
        D = np.diag(2.0 - rng.uniform(0.0, 2.0, size=2)) + T
        if abs(a[0] - a[1]) < 0.05 or np.any(np.linalg.eigvals(D).real <= 0.0):
            rejected += 1
            continue
        return np.diag(a), D, rejected


def _has_imaginary_pair_2x2(A: np.ndarray, D: np.ndarray) -> bool:
    # trace(D^{-1}(A - cI)) is affine in c; a pure-imaginary pair needs it to
    # vanish, and then a positive determinant
    Di = np.linalg.inv(D)
    c0 = np.trace(Di @ A) / np.trace(Di)
    return bool(np.linalg.det(Di @ (A - c0 * np.eye(2))) > 0.0)


def _bracketed_growth(A, D, xi_max, grid_points, widenings: int = 4) -> float:
    # nearly singular D can give a slow hump past xi_max before the -xi^2 decay wins
    for _ in range(widenings):
        try:
            return max_growth(A, D, xi_max, grid_points).growth
        except BracketError:
            xi_max *= 10.0
    return max_growth(A, D, xi_max, grid_points).growth


def assert_no_2x2_turing(samples: int = 10_000, rng_seed: int = 42, grid_points: int = 400,
                         xi_max: float = 10.0) -> NegativeResultReport:
    """Random search for 2x2 Turing instabilities; every hit is a counterexample.

    Each admissible pair is tested two ways: the traveling-wave ODE matrix
    ``D^{-1}(A - cI)`` is checked for a pure-imaginary pair over all ``c``
    (exactly, via the trace condition), and the constant-state growth rate is
    checked for an interior non-negative maximum.  A tenth of the budget is
    spent on symmetric ``D``.
    """
    rng = np.random.default_rng(rng_seed)
    report = NegativeResultReport(samples, 0, 0, 0, 0, 0, rng_seed)
    n_sym = samples // 10
    for k in range(samples + n_sym):
        symmetric = k >= samples
        A, D, rej = _draw_cond_pair(rng, symmetric)
        report.rejected += rej
        hopf = _has_imaginary_pair_2x2(A, D)
        growth = _bracketed_growth(A, D, xi_max, grid_points) > 1e-12
        if symmetric:
            report.symmetric_samples += 1
            report.symmetric_violations += int(hopf or growth)
        else:
            report.violations_hopf += int(hopf)
            report.violations_growth += int(growth)
    return report


def assert_symmetrizable_obstruction(A, D, tol: float = 1e-9) -> bool:
    """True when ``D^{-1} A`` has no pure-imaginary eigenvalue.

    Requires ``A`` symmetric and ``D + D^T`` positive definite; under these
    hypotheses the answer must be True.
    """
    A = np.asarray(A, dtype=float)
    D = np.asarray(D, dtype=float)
    if np.linalg.norm(A - A.T) > 1e-12 * max(1.0, np.linalg.norm(A)):
        raise HypothesisError("A is not symmetric")
    if np.linalg.eigvalsh(D + D.T).min() <= 0.0:
        raise HypothesisError("D + D^T is not positive definite")
    lam = np.linalg.eigvals(np.linalg.solve(D, A))
    scale = tol * max(1.0, np.abs(lam).max())
    return not bool(np.any((np.abs(lam.real) < scale) & (np.abs(lam.imag) > scale)))


def sample_symmetrizable_pairs(count: int, seed: int = 0, n: int = 3):
    """Yield ``(A, D)`` with A symmetric and ``D + D^T`` positive definite."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        G = rng.normal(size=(n, n))
        A = 0.5 * (G + G.T)
        Q = rng.normal(size=(n, n))
        K = rng.normal(scale=2.0, size=(n, n))
        yield A, Q @ Q.T + 0.1 * np.eye(n) + 0.5 * (K - K.T)
