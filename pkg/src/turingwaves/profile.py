"""Periodic traveling waves of ``u_t + (A(eps) u + N(u))_x = D u_xx``.

A wave ``u(x - c t)`` of period ``X`` solves the profile equation

    -c u + A(eps) u + N(u) = D u' + q,

discretised here by Fourier collocation.  With ``(c, X)`` fixed the unknowns
are the grid values and ``eps``; translation invariance is removed by the
phase condition ``w . f(u(0)) = 0`` with ``f`` the first-order vector field
``u' = D^{-1}(A(eps) u + N(u) - c u - q)`` and ``w`` a random unit vector.
"""
from __future__ import annotations

import collections
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.linalg

from . import fourier
from .dispersion import TuringPoint, sorted_eigvals
from .models import SystemSpec, evaluate_A, evaluate_flux, evaluate_flux_jacobian, system_from_dict

__all__ = [
    "ProfileError",
    "NewtonDivergence",
    "TrivialSolution",
    "SingularJacobian",
    "PeriodicProfile",
    "ContinuationFamily",
    "random_phase_vector",
    "profile_residual",
    "ode_field",
    "initial_guess",
    "solve_profile",
    "march_profile",
    "continue_family",
    "homotopy_to_cubic",
    "mirror_quadratic",
    "criticality_flip",
    "save_profile",
    "load_profile",
    "profile_to_dict",
    "profile_from_dict",
]

RECORD_FORMAT = "turingwaves.profile/1"


class ProfileError(RuntimeError):
    pass


class NewtonDivergence(ProfileError):
    pass


class TrivialSolution(ProfileError):
    """Newton collapsed onto a constant state."""


class SingularJacobian(ProfileError):
    pass


@dataclass
class PeriodicProfile:
    X: float
    c: float
    eps: float
    grid: np.ndarray
    spec: SystemSpec
    phase_w: np.ndarray
    q: np.ndarray | None = None
    residual_norm: float = math.nan
    iterations: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.phase_w = np.asarray(self.phase_w, dtype=float)
        self.q = np.zeros(self.grid.shape[1]) if self.q is None else np.asarray(self.q, dtype=float)

    @property
    def M(self) -> int:
        return self.grid.shape[0]

    @property
    def n(self) -> int:
        return self.grid.shape[1]

    @property
    def x(self) -> np.ndarray:
        return fourier.grid(self.M, self.X)

    @property
    def amplitude(self) -> float:
        """Max-norm of the oscillatory part ``u - mean(u)``."""
        return float(np.max(np.abs(self.grid - self.grid.mean(axis=0))))

    def residual(self) -> np.ndarray:
        return profile_residual(self.grid, self.X, self.c, self.eps, self.q, self.spec)

    def phase_value(self) -> float:
        return float(self.phase_w @ ode_field(self.grid[0], self.c, self.eps, self.q, self.spec))

    def resampled(self, M: int) -> "PeriodicProfile":
        return replace(self, grid=fourier.resample(self.grid, M), meta=dict(self.meta))


@dataclass
class ContinuationFamily:
    c_values: np.ndarray
    X_values: np.ndarray
    members: dict
    parents: dict
    provenance: TuringPoint | None = None

    def __len__(self):
        return len(self.members)

    def coverage(self) -> float:
        return len(self.members) / (len(self.c_values) * len(self.X_values))

    def get(self, i: int, j: int) -> PeriodicProfile | None:
        return self.members.get((i, j))


def random_phase_vector(n: int, seed: int = 0) -> np.ndarray:
    w = np.random.default_rng(seed).normal(size=n)
    return w / np.linalg.norm(w)


def profile_residual(u_grid, X, c, eps, q, spec: SystemSpec) -> np.ndarray:
    """``D u' + q - (A(eps) u + N(u) - c u)`` at every grid point."""
    u = np.asarray(u_grid, dtype=float)
    q = np.zeros(spec.n) if q is None else np.asarray(q, dtype=float)
    du = fourier.derivative(u, X)
    return du @ spec.D.T + q - (evaluate_flux(spec, u, eps) - c * u)


def ode_field(u, c, eps, q, spec: SystemSpec) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    q = np.zeros(spec.n) if q is None else np.asarray(q, dtype=float)
    rhs = evaluate_flux(spec, u, eps) - c * u - q
    return np.linalg.solve(spec.D, rhs.T).T if rhs.ndim > 1 else np.linalg.solve(spec.D, rhs)


def _system(u, eps, X, c, q, spec, w, Dinv, E):
    M, n = u.shape
    B = evaluate_flux_jacobian(spec, u, eps) - c * np.eye(n)
    R = profile_residual(u, X, c, eps, q, spec)
    F = np.append(R.ravel(), w @ ode_field(u[0], c, eps, q, spec))

    J = np.zeros((M * n + 1, M * n + 1))
    J[:-1, :-1] = np.kron(fourier.diff_matrix(M, X), spec.D)
    for m in range(M):
        J[m * n:(m + 1) * n, m * n:(m + 1) * n] -= B[m]
    J[:-1, -1] = -(u @ E.T).ravel()
    J[-1, :n] = w @ Dinv @ B[0]
    J[-1, -1] = w @ Dinv @ E @ u[0]
    return F, J


def _newton(u, eps, X, c, q, spec, w, tol, max_iter):
    Dinv = np.linalg.inv(spec.D)
    E = spec.eps_direction
    for it in range(max_iter + 1):
        F, J = _system(u, eps, X, c, q, spec, w, Dinv, E)
        res = float(np.max(np.abs(F)))
        if not np.isfinite(res) or res > 1e8:
            raise NewtonDivergence(f"Newton blew up (residual {res:.3e}) at iteration {it}")
        if res <= tol:
            return u, eps, res, it
        if it == max_iter:
            break
        try:
            lu = scipy.linalg.lu_factor(J, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SingularJacobian(str(exc)) from None
        if np.min(np.abs(np.diag(lu[0]))) < 1e-14 * np.max(np.abs(np.diag(lu[0]))):
            raise SingularJacobian("bordered Jacobian is numerically singular")
        step = scipy.linalg.lu_solve(lu, -F, check_finite=False)
        u = u + step[:-1].reshape(u.shape)
        eps = eps + step[-1]
    raise NewtonDivergence(f"no convergence after {max_iter} iterations (residual {res:.3e})")


def solve_profile(guess, X: float, c: float, spec: SystemSpec, q=None, eps0: float = 0.0,
                  w=None, seed: int = 0, tol: float = 1e-10, max_iter: int = 25,
                  trivial_tol: float = 1e-6) -> PeriodicProfile:
    """Newton solve for ``(u, eps)`` at fixed wave speed ``c`` and period ``X``.

    ``w`` defaults to a seeded random unit vector; if the bordered Jacobian
    turns out singular a fresh ``w`` is drawn once and the solve retried.
    """
    u = np.array(guess, dtype=float)
    if u.ndim != 2 or u.shape[1] != spec.n:
        raise ValueError(f"guess must have shape (M, {spec.n})")
    if u.shape[0] < 16 or u.shape[0] % 2:
        raise ValueError("grid size M must be even and at least 16")
    q = np.zeros(spec.n) if q is None else np.asarray(q, dtype=float)
    w = random_phase_vector(spec.n, seed) if w is None else np.asarray(w, dtype=float)
    try:
        u, eps, res, it = _newton(u, eps0, X, c, q, spec, w, tol, max_iter)
    except SingularJacobian:
        w = random_phase_vector(spec.n, seed + 1)
        u, eps, res, it = _newton(np.array(guess, dtype=float), eps0, X, c, q, spec, w, tol, max_iter)
    prof = PeriodicProfile(X=float(X), c=float(c), eps=float(eps), grid=u, spec=spec, phase_w=w, q=q,
                           residual_norm=res, iterations=it)
    if prof.amplitude < trivial_tol:
        raise TrivialSolution(f"converged to a constant state at (c={c:.6g}, X={X:.6g})")
    return prof


def initial_guess(turing: TuringPoint, spec: SystemSpec, M: int, X: float, eps_guess: float = 1e-2,
                  scale: float = 0.1) -> np.ndarray:
    """Small oscillation along the Hopf eigenvector of the traveling-wave ODE at onset.

    ``u(x) = sqrt(eps_guess) * Re(exp(2 pi i x / X) v) * scale`` with ``v`` the
    complex eigenvector of ``D^{-1}(A(eps*) - c* I)`` for the eigenvalue of
    largest imaginary part.
    """
    Jm = np.linalg.solve(spec.D, evaluate_A(spec, turing.eps_star) - turing.c_star * np.eye(spec.n))
    lam, V = np.linalg.eig(Jm)
    k = int(np.argmax(lam.imag))
    if lam[k].imag <= 1e-8 * max(1.0, np.abs(lam).max()):
        raise ProfileError("the traveling-wave ODE has no complex eigenvalue pair at this point")
    v = V[:, k]
    x = fourier.grid(M, X)
    return math.sqrt(max(eps_guess, 0.0)) * scale * np.real(np.exp(2j * np.pi * x / X)[:, None] * v[None, :])


def march_profile(profile: PeriodicProfile, c: float, X: float, spec: SystemSpec | None = None,
                  first_step: float = 1.0, min_step: float = 1.0 / 512, max_jump: float = 0.25,
                  **solve_kw) -> PeriodicProfile:
    """Natural-parameter continuation along the straight line to ``(c, X)``.

    Steps grow after successes and halve after failures (non-convergence,
    collapse to a constant, or an ``eps`` jump above ``max_jump``).
    """
    spec = profile.spec if spec is None else spec
    c0, X0 = profile.c, profile.X
    cur = profile
    t, dt = 0.0, first_step
    while t < 1.0 - 1e-14:
        dt = min(dt, 1.0 - t)
        tn = t + dt
        try:
            ct, Xt = (c, X) if tn >= 1.0 else (c0 + tn * (c - c0), X0 + tn * (X - X0))
            nxt = solve_profile(cur.grid, Xt, ct, spec, q=cur.q,
                                eps0=cur.eps, w=cur.phase_w, **solve_kw)
            ok = abs(nxt.eps - cur.eps) <= max_jump
        except ProfileError:
            ok = False
        if ok:
            nxt.meta = dict(profile.meta)
            cur, t, dt = nxt, tn, dt * 1.5
        else:
            dt *= 0.5
            if dt < min_step:
                raise ProfileError(f"continuation stalled at (c={c0 + t * (c - c0):.6g}, X={X0 + t * (X - X0):.6g})")
    return cur


def continue_family(seed: PeriodicProfile, c_range, X_range, steps=(10, 10), reverse: bool = False,
                    provenance: TuringPoint | None = None, **march_kw) -> ContinuationFamily:
    """Solve on a rectangular ``(c, X)`` grid by a breadth-first wavefront from the seed.

    Each new point is warm-started from an already converged neighbour;
    unreachable points are left out of ``members``.
    """
    nc, nX = (steps, steps) if np.isscalar(steps) else steps
    c_values = np.linspace(c_range[0], c_range[1], int(nc)) if nc > 1 else np.array([float(c_range[0])])
    X_values = np.linspace(X_range[0], X_range[1], int(nX)) if nX > 1 else np.array([float(X_range[0])])
    if not np.isfinite(seed.residual_norm) or seed.residual_norm > 1e-8:
        raise ProfileError("seed profile is not converged")
    # enter the grid at the nearest reachable point; the nearest one may sit on the onset curve
    dc = (c_values - seed.c) / max(np.ptp(c_values), 1e-12)
    dX = (X_values - seed.X) / max(np.ptp(X_values), 1e-12)
    dist = np.hypot(dc[:, None], dX[None, :])
    start = None
    for flat in np.argsort(dist, axis=None, kind="stable")[:8]:
        i0, j0 = (int(v) for v in np.unravel_index(flat, dist.shape))
        if c_values[i0] == seed.c and X_values[j0] == seed.X:
            start = seed
            break
        try:
            start = march_profile(seed, c_values[i0], X_values[j0], **march_kw)
            break
        except ProfileError:
            continue
    if start is None:
        raise ProfileError("no grid point near the seed is reachable")
    members = {(i0, j0): start}
    parents = {(i0, j0): None}
    queue = collections.deque([(i0, j0)])
    moves = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    if reverse:
        moves = moves[::-1]
    failed = set()
    while queue:
        i, j = queue.popleft()
        for di, dj in moves:
            k = (i + di, j + dj)
            if not (0 <= k[0] < len(c_values) and 0 <= k[1] < len(X_values)) or k in members:
                continue
            try:
                members[k] = march_profile(members[(i, j)], c_values[k[0]], X_values[k[1]], **march_kw)
            except ProfileError:
                failed.add(k)
                continue
            parents[k] = (i, j)
            failed.discard(k)
            queue.append(k)
    return ContinuationFamily(c_values, X_values, members, parents, provenance)


def homotopy_to_cubic(seed: PeriodicProfile, h_steps: int = 10, **solve_kw) -> PeriodicProfile:
    """Deform a quadratic-nonlinearity wave into the cubic one, ``beta`` fixed."""
    if seed.spec.nonlinearity.kind != "quadratic":
        raise ValueError("homotopy starts from a quadratic-nonlinearity profile")
    cur = seed
    for h in np.linspace(0.0, 1.0, h_steps + 1)[1:]:
        spec_h = seed.spec.with_homotopy(h)
        try:
            cur = solve_profile(cur.grid, cur.X, cur.c, spec_h, q=cur.q, eps0=cur.eps, w=cur.phase_w, **solve_kw)
        except ProfileError as exc:
            raise ProfileError(f"homotopy lost convergence at h={h:.4g}: {exc}") from None
    cubic = seed.spec.replace(nonlinearity=type(seed.spec.nonlinearity)("cubic"),
                              label=f"{seed.spec.label}->cubic")
    return replace(cur, spec=cubic, meta=dict(seed.meta))


def mirror_quadratic(profile: PeriodicProfile) -> PeriodicProfile:
    """Exact symmetry of the quadratic problem: ``u -> -u`` with ``beta -> -beta``."""
    if profile.spec.nonlinearity.kind != "quadratic" or np.any(profile.q):
        raise ValueError("the mirror symmetry holds for quadratic nonlinearity with q = 0")
    spec = profile.spec.replace(beta=-profile.spec.beta)
    return replace(profile, grid=-profile.grid, spec=spec, meta=dict(profile.meta))


def criticality_flip(profile: PeriodicProfile, c_star: float, **solve_kw) -> PeriodicProfile:
    """Seed the opposite-criticality branch via ``(beta, c - c*, eps) -> (-beta, -(c - c*), -eps)``.

    The map only holds for the linearised problem; Newton then corrects it.
    """
    spec = profile.spec.replace(beta=-profile.spec.beta)
    c_new = c_star - (profile.c - c_star)
    return solve_profile(profile.grid, profile.X, c_new, spec, q=profile.q, eps0=-profile.eps,
                         w=profile.phase_w, **solve_kw)


def profile_to_dict(profile: PeriodicProfile) -> dict:
    return {
        "format": RECORD_FORMAT,
        "system": profile.spec.to_dict(),
        "X": profile.X,
        "c": profile.c,
        "eps": profile.eps,
        "q": profile.q.tolist(),
        "phase_w": profile.phase_w.tolist(),
        "residual_norm": profile.residual_norm,
        "M": profile.M,
        "grid": profile.grid.tolist(),
        "meta": profile.meta,
    }


def profile_from_dict(doc: dict, verify: bool = True, tol: float = 1e-8) -> PeriodicProfile:
    if doc.get("format") != RECORD_FORMAT:
        raise ProfileError(f"not a profile record (format={doc.get('format')!r})")
    try:
        prof = PeriodicProfile(
            X=float(doc["X"]), c=float(doc["c"]), eps=float(doc["eps"]), grid=np.array(doc["grid"], dtype=float),
            spec=system_from_dict(doc["system"]), phase_w=np.array(doc["phase_w"], dtype=float),
            q=np.array(doc["q"], dtype=float), residual_norm=float(doc.get("residual_norm", math.nan)),
            meta=dict(doc.get("meta", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProfileError(f"corrupt profile record: {exc}") from None
    if prof.grid.shape != (int(doc.get("M", prof.M)), prof.spec.n):
        raise ProfileError("grid shape does not match record header")
    if verify:
        res = max(float(np.max(np.abs(prof.residual()))), abs(prof.phase_value()))
        if not res <= tol:
            raise ProfileError(f"stale or corrupt record: residual {res:.3e} exceeds {tol:.1e}")
        prof.residual_norm = res
    return prof


def save_profile(profile: PeriodicProfile, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(profile_to_dict(profile), indent=1) + "\n")
    return path


def load_profile(path, verify: bool = True, tol: float = 1e-8) -> PeriodicProfile:
    return profile_from_dict(json.loads(Path(path).read_text()), verify=verify, tol=tol)


def hopf_frequency_vector(turing: TuringPoint, spec: SystemSpec) -> np.ndarray:
    """Eigenvalues of the onset traveling-wave ODE (diagnostic)."""
    return sorted_eigvals(np.linalg.solve(spec.D, evaluate_A(spec, turing.eps_star) - turing.c_star * np.eye(spec.n)))
