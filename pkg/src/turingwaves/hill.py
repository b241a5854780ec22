"""Floquet-Bloch spectra of periodic traveling waves by Hill's method.

In the co-moving frame the linearisation about a wave ``u`` of period ``X`` is

    L v = D v'' - (B(x) v)',    B(x) = A(eps) - c I + dN(u(x)),

written as ``f2 v'' + f1 v' + f0 v`` with ``f2 = D``, ``f1 = -B`` and
``f0 = -B'``.  Bloch modes ``v = exp(i xi x) sum_l v_l exp(2 pi i l x / X)``
with ``|l| <= N`` and ``xi`` in the zone ``[-pi/X, pi/X]`` turn ``L`` into a
dense matrix of size ``n (2N + 1)`` per Floquet exponent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import fourier
from .dispersion import sort_spectrum
from .models import evaluate_flux_jacobian
from .profile import PeriodicProfile

__all__ = [
    "HillError",
    "BlochOperator",
    "SpectrumSample",
    "WhithamFit",
    "StabilityVerdict",
    "DEFAULT_TOLERANCES",
    "linearize_about",
    "build_hill_matrix",
    "floquet_grid",
    "compute_spectrum",
    "fit_whitham_curves",
    "classify",
    "analyze_profile",
]

DEFAULT_TOLERANCES = {"r0": 1e-2, "tol_stab": 1e-6, "tol_hyp": 1e-4, "tol_curv": 1e-6, "origin_tol": 1e-6}


class HillError(RuntimeError):
    pass


@dataclass
class BlochOperator:
    """Fourier data of the coefficient functions, ``coeff_fourier[q, m]`` for the order-q term."""

    profile: PeriodicProfile
    coeff_fourier: np.ndarray
    N_modes: int

    @property
    def n(self) -> int:
        return self.coeff_fourier.shape[-1]

    @property
    def X(self) -> float:
        return self.profile.X

    @property
    def size(self) -> int:
        return self.n * (2 * self.N_modes + 1)

    def coefficient(self, q: int, m: int) -> np.ndarray:
        """Fourier coefficient of order ``m`` of ``f_q``; zero beyond the resolved band."""
        M = self.coeff_fourier.shape[1]
        if abs(m) >= M // 2:
            return np.zeros((self.n, self.n), dtype=complex)
        return self.coeff_fourier[q, m % M]


@dataclass
class SpectrumSample:
    xi: float
    eigenvalues: np.ndarray


@dataclass
class WhithamFit:
    """Neutral curves ``lambda_j(xi) = -i a_j xi - b_j xi^2 + O(xi^3)`` through the origin."""

    coefficients: list
    origin_count: int
    fifth_eigenvalue: complex | None
    fit_radius: float
    max_fit_residual: float
    branches: list = field(default_factory=list, repr=False)

    @property
    def fifth_offset(self) -> float:
        return math.inf if self.fifth_eigenvalue is None else abs(self.fifth_eigenvalue)

    def to_dict(self) -> dict:
        return {
            "origin_count": self.origin_count,
            "fit_radius": self.fit_radius,
            "max_fit_residual": self.max_fit_residual,
            "fifth_eigenvalue": None if self.fifth_eigenvalue is None
            else [self.fifth_eigenvalue.real, self.fifth_eigenvalue.imag],
            "fifth_offset": None if self.fifth_eigenvalue is None else self.fifth_offset,
            "curves": [{"a": [a.real, a.imag], "b": [b.real, b.imag]} for a, b in self.coefficients],
        }


@dataclass
class StabilityVerdict:
    stable: bool
    max_re_outside: float
    xi_at_max: float
    max_re_inside: float
    whitham: list
    curve_count_near_origin: int
    fifth_offset: float
    diagnostics: list
    tolerances: dict

    @property
    def label(self) -> str:
        return "stable" if self.stable else "unstable"

    def to_dict(self) -> dict:
        return {
            "verdict": self.label,
            "stable": self.stable,
            "max_re_outside": self.max_re_outside,
            "xi_at_max": self.xi_at_max,
            "max_re_inside": self.max_re_inside,
            "curve_count_near_origin": self.curve_count_near_origin,
            "fifth_offset": None if math.isinf(self.fifth_offset) else self.fifth_offset,
            "whitham": [{"a": [a.real, a.imag], "b": [b.real, b.imag]} for a, b in self.whitham],
            "diagnostics": list(self.diagnostics),
            "tolerances": dict(self.tolerances),
        }


def linearize_about(profile: PeriodicProfile, spec=None, N: int = 20, tol: float = 1e-8) -> BlochOperator:
    """Coefficient Fourier data of the linearisation about a converged profile."""
    spec = profile.spec if spec is None else spec
    res = float(np.max(np.abs(profile.residual()), initial=0.0))
    if not res <= tol:
        raise HillError(f"profile is not converged (residual {res:.3e})")
    if N < 1:
        raise ValueError("N must be a positive integer")
    M, n = profile.M, profile.n
    B = evaluate_flux_jacobian(spec, profile.grid, profile.eps) - profile.c * np.eye(n)
    Bh = fourier.coefficients(B)
    m = np.fft.fftfreq(M, d=1.0 / M)
    if M % 2 == 0:
        Bh[M // 2] = 0.0
    coeff = np.zeros((3, M, n, n), dtype=complex)
    coeff[2, 0] = spec.D
    coeff[1] = -Bh
    coeff[0] = -(1j * 2.0 * np.pi * m / profile.X)[:, None, None] * Bh
    return BlochOperator(profile=profile, coeff_fourier=coeff, N_modes=int(N))


def _toeplitz_blocks(op: BlochOperator) -> np.ndarray:
    idx = np.arange(-op.N_modes, op.N_modes + 1)
    diff = idx[:, None] - idx[None, :]
    M = op.coeff_fourier.shape[1]
    blocks = np.zeros((3,) + diff.shape + (op.n, op.n), dtype=complex)
    ok = np.abs(diff) < M // 2
    blocks[:, ok] = op.coeff_fourier[:, diff[ok] % M]
    return blocks


def build_hill_matrix(op: BlochOperator, xi: float, _blocks=None) -> np.ndarray:
    """Dense matrix with ``(j, l)`` block ``sum_q f_q[j - l] (i (xi + 2 pi l / X))^q``."""
    if abs(xi) > np.pi / op.X * (1 + 1e-12):
        raise ValueError(f"xi={xi} lies outside the zone [-pi/X, pi/X]")
    blocks = _toeplitz_blocks(op) if _blocks is None else _blocks
    K = 2 * op.N_modes + 1
    ik = 1j * (xi + 2.0 * np.pi * np.arange(-op.N_modes, op.N_modes + 1) / op.X)
    H = sum(blocks[q] * (ik ** q)[None, :, None, None] for q in range(3))
    return H.transpose(0, 2, 1, 3).reshape(K * op.n, K * op.n)


def floquet_grid(X: float, n_floquet: int) -> np.ndarray:
    if n_floquet < 1 or n_floquet % 2 == 0:
        raise ValueError("n_floquet must be odd so that xi = 0 is sampled")
    xis = np.linspace(-np.pi / X, np.pi / X, n_floquet)
    xis[n_floquet // 2] = 0.0
    return xis


def _eigs(op, xi, blocks):
    return np.linalg.eigvals(build_hill_matrix(op, xi, blocks))


def compute_spectrum(op: BlochOperator, n_floquet: int = 101) -> list[SpectrumSample]:
    blocks = _toeplitz_blocks(op)
    return [SpectrumSample(float(xi), sort_spectrum(_eigs(op, xi, blocks))) for xi in floquet_grid(op.X, n_floquet)]


def _origin_split(samples, origin_tol):
    zero = [s for s in samples if s.xi == 0.0]
    if not zero:
        raise HillError("spectrum does not contain the xi = 0 sample")
    lam0 = zero[0].eigenvalues
    order = np.argsort(np.abs(lam0))
    neutral = lam0[order][np.abs(lam0[order]) <= origin_tol]
    rest = lam0[order][np.abs(lam0[order]) > origin_tol]
    return neutral, (complex(rest[0]) if rest.size else None)


def _track(eig_fn, xis, count):
    """Follow ``count`` branches leaving the origin along increasing ``xi``."""
    branches = np.zeros((len(xis), count), dtype=complex)
    prev = np.zeros(count, dtype=complex)
    prev_xi = 0.0
    for k, xi in enumerate(xis):
        lam = eig_fn(xi)
        cand = lam[np.argsort(np.abs(lam))[: 2 * count + 2]]
        # linear extrapolation from the last two points; the branches start at 0
        if k == 0:
            pred = prev
        else:
            slope = (prev - (branches[k - 2] if k >= 2 else 0.0)) / (prev_xi - (xis[k - 2] if k >= 2 else 0.0))
            pred = prev + slope * (xi - prev_xi)
        rows, cols = linear_sum_assignment(np.abs(pred[:, None] - cand[None, :]))
        branches[k, rows] = cand[cols]
        prev, prev_xi = branches[k], xi
    return branches


def fit_whitham_curves(samples: list[SpectrumSample], fit_radius: float | None = None,
                       op: BlochOperator | None = None, origin_tol: float = 1e-6, n_fit: int = 12,
                       r0: float = 1e-2) -> WhithamFit:
    """Fit the neutral branches through the origin at ``xi = 0``.

    With ``op`` the branches are resampled on a fine ``xi`` grid inside the
    radius where they stay well separated from the nearest other eigenvalue
    at ``xi = 0``; without it the given samples with ``0 < xi <= fit_radius``
    are used directly.
    """
    neutral, fifth = _origin_split(samples, origin_tol)
    count = neutral.size
    n = op.n if op is not None else None
    if count == 0 or (n is not None and count < n + 1):
        raise HillError(f"found {count} eigenvalues at the origin for xi = 0; expected at least n + 1")
    gap = min(abs(fifth) if fifth is not None else math.inf, r0) / 4.0

    if op is not None:
        blocks = _toeplitz_blocks(op)

        def eig_fn(xi):
            return _eigs(op, xi, blocks)

        if fit_radius is None:
            fit_radius = np.pi / op.X / 10.0
            for _ in range(60):
                lam = np.sort(np.abs(eig_fn(fit_radius)))
                if lam[count - 1] < gap and (lam.size == count or lam[count] >= gap):
                    break
                fit_radius *= 0.5
            else:
                raise HillError("could not isolate the neutral branches near the origin")
        xis = fit_radius * np.arange(1, n_fit + 1) / n_fit
        # start tracking well inside the fit window so the first assignment is unambiguous
        lead = fit_radius * np.geomspace(1e-3, 1.0 / n_fit, 6, endpoint=False)
        track_xis = np.concatenate([lead, xis])
        branches = _track(eig_fn, track_xis, count)[len(lead):]
    else:
        if fit_radius is None:
            raise ValueError("fit_radius is required when no operator is supplied")
        pos = sorted((s for s in samples if 0.0 < s.xi <= fit_radius), key=lambda s: s.xi)
        if len(pos) < 3:
            raise HillError("fewer than 3 samples inside the fit radius")
        table = {s.xi: s.eigenvalues for s in pos}
        xis = np.array([s.xi for s in pos])
        branches = _track(lambda xi: table[xi], xis, count)

    V = np.stack([xis, xis**2, xis**3], axis=1).astype(complex)
    coef, *_ = np.linalg.lstsq(V, branches, rcond=None)
    resid = float(np.max(np.abs(V @ coef - branches))) if branches.size else 0.0
    pairs = [(complex(1j * coef[0, j]), complex(-coef[1, j])) for j in range(count)]
    pairs.sort(key=lambda ab: (ab[0].real, ab[0].imag))
    return WhithamFit(pairs, count, fifth, float(fit_radius), resid, branches=list(branches.T))


def classify(samples: list[SpectrumSample], whitham_fit: WhithamFit | None, **tolerances) -> StabilityVerdict:
    """Diffusive spectral stability from sampled spectra and the fitted neutral curves."""
    unknown = set(tolerances) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise TypeError(f"unknown tolerances {sorted(unknown)}")
    tol = {**DEFAULT_TOLERANCES, **tolerances}
    max_out, xi_max, max_in = -math.inf, math.nan, -math.inf
    for s in samples:
        lam = s.eigenvalues
        mod = np.abs(lam)
        out = lam[mod > tol["r0"]]
        if out.size and out.real.max() > max_out:
            max_out, xi_max = float(out.real.max()), s.xi
        inside = lam[(mod <= tol["r0"]) & ((mod > tol["origin_tol"]) | (s.xi != 0.0))]
        if inside.size:
            max_in = max(max_in, float(inside.real.max()))

    notes = []
    stable = True
    if max_out > tol["tol_stab"]:
        stable = False
        notes.append(f"spectrum away from the origin reaches Re = {max_out:.3e} at xi = {xi_max:.4g}")
    if max_in > tol["tol_stab"]:
        stable = False
        notes.append(f"spectrum near the origin reaches Re = {max_in:.3e}")
    pairs, count, fifth = [], 0, math.inf
    if whitham_fit is None:
        stable = False
        notes.append("no neutral-curve fit available")
    else:
        pairs, count, fifth = whitham_fit.coefficients, whitham_fit.origin_count, whitham_fit.fifth_offset
        for j, (a, b) in enumerate(pairs):
            if abs(a.imag) > tol["tol_hyp"]:
                stable = False
                notes.append(f"curve {j}: Im a = {a.imag:.3e} (not hyperbolic)")
            if b.real < -tol["tol_curv"]:
                stable = False
                notes.append(f"curve {j}: Re b = {b.real:.3e} (not parabolic)")
    if stable:
        notes.append("diffusively stable at this resolution")
    return StabilityVerdict(stable, max_out, xi_max, max_in, list(pairs), count, fifth, notes, tol)


def analyze_profile(profile: PeriodicProfile, n_floquet: int = 101, n_modes: int = 41, fit_radius=None,
                    **tolerances):
    """Spectrum, neutral-curve fit and verdict at ``n_floquet`` exponents and ``n_modes = 2N + 1`` modes."""
    if n_modes < 3 or n_modes % 2 == 0:
        raise ValueError("n_modes must be odd (2N + 1) and at least 3")
    op = linearize_about(profile, N=n_modes // 2)
    samples = compute_spectrum(op, n_floquet)
    fit_kw = {k: tolerances[k] for k in ("origin_tol", "r0") if k in tolerances}
    try:
        fit = fit_whitham_curves(samples, fit_radius, op=op, **fit_kw)
    except HillError:
        fit = None
    return samples, fit, classify(samples, fit, **tolerances)
