"""Fourier collocation on an X-periodic grid ``x_m = m X / M`` (no duplicated endpoint)."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


def grid(M: int, X: float) -> np.ndarray:
    return np.arange(M) * (X / M)


def wavenumbers(M: int, X: float, order: int = 1) -> np.ndarray:
    """Angular wavenumbers in FFT order; the Nyquist mode is dropped for odd orders."""
    k = np.fft.fftfreq(M, d=1.0 / M) * (2.0 * np.pi / X)
    if order % 2 == 1 and M % 2 == 0:
        k[M // 2] = 0.0
    return k


@lru_cache(maxsize=64)
def _unit_diff_matrix(M: int, order: int) -> np.ndarray:
    ik = (1j * wavenumbers(M, 2.0 * np.pi, order)) ** order
    Dm = np.real(np.fft.ifft(ik[:, None] * np.fft.fft(np.eye(M), axis=0), axis=0))
    Dm.setflags(write=False)
    return Dm


def diff_matrix(M: int, X: float, order: int = 1) -> np.ndarray:
    """Dense spectral differentiation matrix acting on grid values."""
    return _unit_diff_matrix(M, order) * (2.0 * np.pi / X) ** order


def derivative(u: np.ndarray, X: float, order: int = 1) -> np.ndarray:
    """Spectral derivative along axis 0."""
    M = u.shape[0]
    ik = (1j * wavenumbers(M, X, order)) ** order
    ik = ik.reshape((M,) + (1,) * (u.ndim - 1))
    return np.real(np.fft.ifft(ik * np.fft.fft(u, axis=0), axis=0))


def coefficients(f: np.ndarray) -> np.ndarray:
    """Complex Fourier coefficients along axis 0 so that ``f(x_m) = sum_j c_j exp(2 pi i j x_m / X)``."""
    return np.fft.fft(f, axis=0) / f.shape[0]


def resample(u: np.ndarray, M_new: int) -> np.ndarray:
    """Trigonometric interpolation of grid values onto ``M_new`` points."""
    M = u.shape[0]
    if M_new == M:
        return np.array(u, copy=True)
    U = np.fft.fft(u, axis=0)
    out = np.zeros((M_new,) + u.shape[1:], dtype=complex)
    half = min(M, M_new) // 2
    out[:half] = U[:half]
    out[-half + 1:] = U[-half + 1:]
    if M_new > M and M % 2 == 0:
        # split the old Nyquist mode evenly between +/- half
        out[half] = 0.5 * U[half]
        out[-half] = 0.5 * U[half]
    return np.real(np.fft.ifft(out, axis=0)) * (M_new / M)


def translate(u: np.ndarray, X: float, shift: float) -> np.ndarray:
    """Return ``u(x + shift)`` by exact Fourier translation."""
    M = u.shape[0]
    k = np.fft.fftfreq(M, d=1.0 / M) * (2.0 * np.pi / X)
    phase = np.exp(1j * k * shift).reshape((M,) + (1,) * (u.ndim - 1))
    U0 = np.fft.fft(u, axis=0)
    U = U0 * phase
    if M % 2 == 0:
        # real cosine interpretation of the Nyquist mode
        U[M // 2] = U0[M // 2] * np.cos(k[M // 2] * shift)
    return np.real(np.fft.ifft(U, axis=0))
