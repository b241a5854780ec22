"""Direct time integration in the co-moving frame, used to cross-check spectral verdicts.

The PDE ``u_t = D u_xx - ((A(eps) - c I) u + N(u))_x`` is advanced on an
``L``-periodic grid by first-order exponential time differencing: the linear
part is integrated exactly per wavenumber with a matrix exponential, the
nonlinear flux divergence is frozen over the step and dealiased by the 2/3 rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from . import fourier
from .hill import StabilityVerdict, build_hill_matrix, linearize_about
from .models import SystemSpec, evaluate_A
from .profile import PeriodicProfile

__all__ = [
    "BlowupError",
    "Propagator",
    "EvolutionRun",
    "ValidationReport",
    "step_imex",
    "evolve",
    "fit_shift",
    "smooth_perturbation",
    "choose_domain",
    "validate_verdict",
]


class BlowupError(FloatingPointError):
    def __init__(self, t: float, msg: str = ""):
        super().__init__(msg or f"solution blew up at t = {t:.6g}")
        self.t = t


def _phi_pair(Z: np.ndarray):
    """``exp(Z)`` and ``Z^{-1}(exp(Z) - I)`` for a stack of matrices, via one augmented exponential."""
    n = Z.shape[-1]
    big = np.zeros(Z.shape[:-2] + (2 * n, 2 * n), dtype=complex)
    big[..., :n, :n] = Z
    big[..., :n, n:] = np.eye(n)
    Eb = scipy.linalg.expm(big)
    return Eb[..., :n, :n], Eb[..., :n, n:]


class Propagator:
    """Per-wavenumber ETD1 propagators for fixed ``(spec, c, eps, M, length, dt)``."""

    def __init__(self, spec: SystemSpec, c: float, eps: float, M: int, length: float, dt: float):
        if not dt > 0:
            raise ValueError("dt must be positive")
        if M % 2:
            raise ValueError("M must be even")
        self.spec, self.c, self.eps, self.M, self.length, self.dt = spec, c, eps, M, length, dt
        k = fourier.wavenumbers(M, length, order=1)
        n = spec.n
        Ac = evaluate_A(spec, eps) - c * np.eye(n)
        kk = np.fft.fftfreq(M, d=1.0 / M) * (2.0 * np.pi / length)
        self.symbol = -1j * k[:, None, None] * Ac - (kk**2)[:, None, None] * spec.D
        self.E, phi = _phi_pair(dt * self.symbol)
        self.Phi = dt * phi
        self.ik = 1j * k
        self.mask = np.abs(np.fft.fftfreq(M, d=1.0 / M)) < M / 3.0
        self.linear = spec.nonlinearity.kind == "none" or spec.beta == 0.0

    def step(self, u: np.ndarray) -> np.ndarray:
        U = np.fft.fft(u, axis=0)
        V = np.einsum("kij,kj->ki", self.E, U)
        if not self.linear:
            Nh = np.zeros_like(U)
            Nh[:, 0] = np.fft.fft(self.spec.nonlinearity.scalar(u[:, 0], self.spec.beta))
            Nh *= (-self.ik * self.mask)[:, None]
            V += np.einsum("kij,kj->ki", self.Phi, Nh)
        return np.real(np.fft.ifft(V, axis=0))


@lru_cache(maxsize=16)
def _cached_propagator(spec, c, eps, M, length, dt):
    return Propagator(spec, c, eps, M, length, dt)


def _propagator(spec, c, eps, M, length, dt):
    try:
        return _cached_propagator(spec, float(c), float(eps), int(M), float(length), float(dt))
    except TypeError:  # unhashable spec
        return Propagator(spec, c, eps, M, length, dt)


def step_imex(state: np.ndarray, dt: float, spec: SystemSpec, c: float, eps: float, length: float) -> np.ndarray:
    """One exponential-Euler step on an ``length``-periodic grid."""
    u = np.asarray(state, dtype=float)
    if not np.all(np.isfinite(u)):
        raise BlowupError(0.0, "non-finite input state")
    out = _propagator(spec, c, eps, u.shape[0], length, dt).step(u)
    if not np.all(np.isfinite(out)):
        raise BlowupError(dt)
    return out


def fit_shift(u: np.ndarray, ref: np.ndarray, length: float, period: float | None = None) -> float:
    """Shift ``s`` in ``[0, period)`` minimising ``||u(x) - ref(x + s)||``.

    A discrete cross-correlation peak is refined by a bounded scalar search
    on the exact trigonometric interpolant.
    """
    period = length if period is None else period
    M = u.shape[0]
    U = np.fft.fft(u, axis=0)
    R = np.fft.fft(ref, axis=0)
    k = np.fft.fftfreq(M, d=1.0 / M) * (2.0 * np.pi / length)
    cross = np.sum(np.conj(U) * R, axis=1)

    def corr(s):
        return -float(np.real(np.sum(cross * np.exp(1j * k * s))))

    ss = np.linspace(0.0, period, 4 * M, endpoint=False)
    vals = -np.real(np.exp(1j * np.outer(ss, k)) @ cross)
    s0 = ss[int(np.argmin(vals))]
    h = ss[1] - ss[0]
    res = minimize_scalar(corr, bounds=(s0 - h, s0 + h), method="bounded", options={"xatol": 1e-12})
    return float(res.x % period)


@dataclass
class EvolutionRun:
    initial: np.ndarray
    dt: float
    T: float
    times: np.ndarray
    amp_series: np.ndarray
    final: np.ndarray
    shifts: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_text(self) -> str:
        return "".join(f"{t:.10g} {a:.10e}\n" for t, a in zip(self.times, self.amp_series))

    def growth_rate(self, start_fraction: float = 0.5) -> float:
        """Least-squares slope of ``log(norm)`` over the tail of the run."""
        t, a = self.times, self.amp_series
        sel = (t >= t[0] + start_fraction * (t[-1] - t[0])) & (a > 0)
        if sel.sum() < 2:
            return math.nan
        return float(np.polyfit(t[sel], np.log(a[sel]), 1)[0])


def _rms(v):
    return float(np.sqrt(np.mean(v**2)))


def evolve(initial: np.ndarray, dt: float, T: float, spec: SystemSpec, c: float, eps: float, length: float,
           reference: np.ndarray | None = None, period: float | None = None, record_every: float = 1.0,
           stop_below: float | None = None, stop_above: float | None = None) -> EvolutionRun:
    """Integrate to time ``T`` recording the RMS distance to the best translate of ``reference``.

    Without a reference the distance is measured to the zero state. The run
    stops early once the distance leaves ``[stop_below, stop_above]``
    (relative to its initial value).
    """
    u = np.array(initial, dtype=float)
    ref = np.zeros_like(u) if reference is None else np.asarray(reference, dtype=float)
    quotient = reference is not None and np.ptp(ref) > 0
    prop = _propagator(spec, c, eps, u.shape[0], length, dt)
    nsteps = int(round(T / dt))
    every = max(1, int(round(record_every / dt)))

    def distance(v):
        if not quotient:
            return _rms(v - ref), 0.0
        s = fit_shift(v, ref, length, period)
        return _rms(v - fourier.translate(ref, length, s)), s

    d0, s0 = distance(u)
    times, amps, shifts = [0.0], [d0], [s0]
    for it in range(1, nsteps + 1):
        u = prop.step(u)
        if it % every == 0 or it == nsteps:
            if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > 1e8:
                raise BlowupError(it * dt)
            d, s = distance(u)
            times.append(it * dt)
            amps.append(d)
            shifts.append(s)
            if d0 > 0 and ((stop_below is not None and d < stop_below * d0)
                           or (stop_above is not None and d > stop_above * d0)):
                break
    return EvolutionRun(np.array(initial, dtype=float), dt, T, np.array(times), np.array(amps), u, np.array(shifts))


def smooth_perturbation(M: int, n: int, amplitude: float, seed: int = 0, modes: int = 8) -> np.ndarray:
    """Zero-mean random trigonometric field with decaying spectrum and max-norm ``amplitude``."""
    rng = np.random.default_rng(seed)
    U = np.zeros((M, n), dtype=complex)
    m = np.arange(1, min(modes, M // 2 - 1) + 1)
    U[m] = (rng.normal(size=(m.size, n)) + 1j * rng.normal(size=(m.size, n))) * np.exp(-m / 4.0)[:, None]
    U[-m] = np.conj(U[m])
    v = np.real(np.fft.ifft(U, axis=0))
    return v * (amplitude / np.max(np.abs(v)))


def choose_domain(profile: PeriodicProfile, verdict: StabilityVerdict, max_periods: int = 8, N: int = 20):
    """Number of periods ``k`` whose Floquet subgrid best exposes the reported instability.

    Returns ``(k, xi, rate)`` with ``rate`` the largest Hill real part on the
    subgrid ``xi = 2 pi m / (k X)``; stable verdicts use a single period.
    """
    if verdict.stable:
        return 1, 0.0, verdict.max_re_outside
    op = linearize_about(profile, N=N)
    X = profile.X
    best = (1, 0.0, -math.inf)
    for k in range(1, max_periods + 1):
        for m in range(k):
            xi = 2.0 * np.pi * m / (k * X)
            if xi > np.pi / X:
                xi -= 2.0 * np.pi / X
            rate = float(np.max(np.linalg.eigvals(build_hill_matrix(op, xi)).real))
            # only switch to a longer domain for a clearly faster rate
            if rate > best[2] * (1.1 if best[2] > 0 else 1.0) + 1e-12:
                best = (k, xi, rate)
    return best


@dataclass
class ValidationReport:
    outcome: str
    agrees: bool | None
    ratio: float
    periods: int
    xi: float
    predicted_rate: float
    measured_rate: float
    run: EvolutionRun = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "agrees": self.agrees,
            "ratio": self.ratio,
            "periods": self.periods,
            "xi": self.xi,
            "predicted_rate": self.predicted_rate,
            "measured_rate": self.measured_rate,
            "T_reached": float(self.run.times[-1]),
            "dt": self.run.dt,
        }


def validate_verdict(profile: PeriodicProfile, verdict: StabilityVerdict, pert_amp: float | None = None,
                     T: float | None = None, dt: float | None = None, seed: int = 0, periods: int | None = None,
                     points_per_period: int | None = None, stop_early: bool = True) -> ValidationReport:
    """Perturb the wave, integrate, and compare decay or growth with the spectral verdict.

    ``decay`` means the translation-quotiented distance fell below half its
    initial value; ``growth`` means it exceeded ten times; anything else is
    ``inconclusive``.  With ``T=None`` stable verdicts run to ``T = 200`` and
    unstable ones at least three predicted ten-fold growth times.
    """
    amp = profile.amplitude
    if pert_amp is None:
        pert_amp = 1e-3 * amp if amp > 0 else 1e-6
    elif amp > 0 and pert_amp > 1e-3 * amp * (1 + 1e-12):
        raise ValueError("pert_amp must not exceed 1e-3 times the wave amplitude")
    if periods is None:
        k, xi, rate = choose_domain(profile, verdict)
    else:
        k, xi, rate = periods, math.nan, verdict.max_re_outside
    if T is None:
        T = 200.0 if (verdict.stable or not rate > 0) else max(200.0, 3.0 * math.log(10.0) / rate)
    Mp = profile.M if points_per_period is None else points_per_period
    u_ref = fourier.resample(profile.grid, Mp) if Mp != profile.M else np.array(profile.grid)
    ref = np.tile(u_ref, (k, 1))
    length = k * profile.X
    dt = 1e-3 * profile.X if dt is None else dt
    u0 = ref + smooth_perturbation(ref.shape[0], profile.n, pert_amp, seed=seed, modes=4 * k)
    run = evolve(u0, dt, T, profile.spec, profile.c, profile.eps, length, reference=ref, period=profile.X,
                 stop_above=10.0 if (stop_early and not verdict.stable) else None)
    ratio = float(run.amp_series[-1] / run.amp_series[0])
    if ratio < 0.5:
        outcome = "decay"
    elif ratio > 10.0:
        outcome = "growth"
    else:
        outcome = "inconclusive"
    agrees = None if outcome == "inconclusive" else (outcome == "decay") == verdict.stable
    return ValidationReport(outcome, agrees, ratio, k, xi, rate, run.growth_rate(), run)
