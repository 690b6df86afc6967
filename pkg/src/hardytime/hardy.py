"""Discrete Hardy spaces on the periodic grid.

Fourier convention: ``f(sigma) = N**-0.5 * sum_m c_m exp(i sigma tau_m)`` with
``tau_m = m * pi / L`` for ``m = -N/2 .. N/2-1``.  The upper Hardy space H+ is
the span of the bins with ``tau_m >= 0`` (the zero bin included) and H- the
span of the negative bins (the Nyquist bin included), so ``P+ + P- = 1``
holds exactly.  Multiplication by ``exp(-i sigma t)`` moves spectral content
down by ``t``; for ``t`` an integer multiple of ``pi / L`` this is an exact
cyclic shift of the bins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, GridSpec

__all__ = [
    "FrequencySpectrum",
    "fourier",
    "inverse_fourier",
    "frequency_bins",
    "positive_mask",
    "riesz_project",
    "riesz_project_array",
    "translate_u",
    "toeplitz",
    "hardy_basis",
    "parse_sign",
]


def parse_sign(sign) -> int:
    """Accept ``'+'``, ``'-'``, ``+1`` or ``-1``."""
    if sign in ("+", 1, "plus"):
        return 1
    if sign in ("-", -1, "minus"):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def frequency_bins(spec: GridSpec) -> np.ndarray:
    """Bin indices m in numpy FFT order (0, 1, ..., N/2-1, -N/2, ..., -1)."""
    n = spec.n_points
    return np.rint(np.fft.fftfreq(n) * n).astype(int)


def positive_mask(spec: GridSpec) -> np.ndarray:
    """Boolean mask, FFT order, of the bins spanning discrete H+."""
    return frequency_bins(spec) >= 0


def _phase(spec: GridSpec) -> np.ndarray:
    m = frequency_bins(spec)
    return (-1.0) ** m * np.exp(1j * np.pi * m / spec.n_points)


@dataclass(frozen=True)
class FrequencySpectrum:
    """Fourier coefficients ordered by ``m = -N/2 .. N/2-1``."""

    spec: GridSpec
    coeffs: np.ndarray = field(repr=False)

    @property
    def taus(self) -> np.ndarray:
        n = self.spec.n_points
        return np.arange(-n // 2, n // 2) * self.spec.bin_step

    def norm(self) -> float:
        # same dsigma weight as the sample space, so Parseval is literal
        return float(np.sqrt(self.spec.spacing) * np.linalg.norm(self.coeffs))


def fourier(f: GridFunction) -> FrequencySpectrum:
    coeffs = np.fft.fft(f.samples, norm="ortho") / _phase(f.spec)
    return FrequencySpectrum(f.spec, np.fft.fftshift(coeffs))


def inverse_fourier(s: FrequencySpectrum) -> GridFunction:
    raw = np.fft.ifftshift(s.coeffs) * _phase(s.spec)
    return GridFunction(s.spec, np.fft.ifft(raw, norm="ortho"))


def riesz_project_array(values: np.ndarray, spec: GridSpec, sign=1) -> np.ndarray:
    """Apply P+ or P- along axis 0 of a sample array (vector or matrix)."""
    keep = positive_mask(spec) if parse_sign(sign) > 0 else ~positive_mask(spec)
    spectrum = np.fft.fft(values, axis=0)
    spectrum[~keep] = 0.0
    return np.fft.ifft(spectrum, axis=0)


def riesz_project(f: GridFunction, sign) -> GridFunction:
    """Orthogonal projection onto discrete H+ (``sign='+'``) or H-."""
    return GridFunction(f.spec, riesz_project_array(f.samples, f.spec, sign))


def translate_u(f: GridFunction, t: float) -> GridFunction:
    """The unitary group ``[u(t) f](sigma) = exp(-i sigma t) f(sigma)``."""
    return GridFunction(f.spec, np.exp(-1j * f.spec.nodes * t) * f.samples)


def toeplitz(f: GridFunction, t: float, sign) -> GridFunction:
    """``T+_u(t) f = P+ u(t) f`` (or the P- compression for ``sign='-'``).

    The semigroup laws only hold for ``t >= 0`` on H+ and ``t <= 0`` on H-;
    other times are allowed so the asymmetry can be measured.
    """
    return riesz_project(translate_u(f, t), sign)


def hardy_basis(spec: GridSpec, sign=1) -> np.ndarray:
    """Orthonormal (Euclidean) basis of discrete H+ or H- as N x N/2 columns.

    Columns are the Fourier modes of the kept bins, in FFT order.
    """
    keep = positive_mask(spec) if parse_sign(sign) > 0 else ~positive_mask(spec)
    n = spec.n_points
    k = np.arange(n)[:, None]
    m = frequency_bins(spec)[keep][None, :]
    return np.exp(2j * np.pi * k * m / n) / np.sqrt(n)
