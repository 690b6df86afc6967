"""Time observables T_F, T_B (and their Hardy-space twins) via their inverses.

``T_F^{-1} = Omega_f* Omega_f`` is a bounded positive contraction, so it is
diagonalized directly and eigenvalues are relabelled in the time coordinate
``t = 1/lambda``.  Eigenvalues below ``ZERO_EIGENVALUE`` correspond to the
unbounded end of the spectrum and are only ever counted in intervals that
reach infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .grid import GridSpec, HalfLineFunction, make_grid
from .hardy import riesz_project_array
from .quasiaffine import OperatorMatrix

__all__ = [
    "ZERO_EIGENVALUE",
    "SPECTRAL_ATOL",
    "SpectrumError",
    "TimeObservable",
    "SpectralInterval",
    "build_time_observable",
    "spectral_projector",
    "transport_residual",
    "resolvent_residual",
    "xmu_samples",
    "XmuRow",
    "xmu_program",
    "FlowCurve",
    "spectral_flow_experiment",
    "gaussian_bump",
]

ZERO_EIGENVALUE = 1e-12


class SpectrumError(ValueError):
    """Eigenvalues of an inverse time observable left [0, 1]."""


def _as_array(op) -> np.ndarray:
    return np.asarray(op.entries if isinstance(op, OperatorMatrix) else op, dtype=complex)


@dataclass(frozen=True)
class TimeObservable:
    """Eigen-decomposition of an inverse time observable.

    ``eigvals`` are sorted in descending order, so ``times`` ascend.
    """

    inverse_matrix: np.ndarray = field(repr=False)
    eigvals: np.ndarray = field(repr=False)
    eigvecs: np.ndarray = field(repr=False)
    side: str = "physical"
    direction: str = "forward"
    grid: GridSpec | None = None
    energy_rep: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.eigvals.size

    @property
    def times(self) -> np.ndarray:
        lam = np.minimum(self.eigvals, 1.0)
        with np.errstate(divide="ignore"):
            t = np.where(lam > ZERO_EIGENVALUE, 1.0 / np.maximum(lam, ZERO_EIGENVALUE), np.inf)
        return t

    @property
    def lambda_max(self) -> float:
        return float(self.eigvals[0])


SPECTRAL_ATOL = 1e-8


@dataclass(frozen=True)
class SpectralInterval:
    """``[lo, hi)`` in the time coordinate; ``closed=True`` makes it ``[lo, hi]``.

    Membership is decided in the eigenvalue coordinate ``1/t``: a time whose
    eigenvalue lies within ``SPECTRAL_ATOL`` of ``1/lo`` or ``1/hi`` counts
    as equal to that endpoint.  Eigenvalues are only accurate to a small
    absolute error, and eigenvectors inside a tighter cluster are mixed, so
    a finer cut would not be reproducible between the physical and the
    Hardy side.
    """

    lo: float
    hi: float = math.inf
    closed: bool = False

    def __post_init__(self):
        if not self.lo >= 1:
            raise ValueError(f"time intervals start at 1 or later, got lo={self.lo}")
        if not self.hi > self.lo and not (self.closed and self.hi == self.lo):
            raise ValueError(f"empty interval [{self.lo}, {self.hi})")

    def contains(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            lam = 1.0 / t
        for end in (self.lo, self.hi):
            t = np.where(np.abs(lam - 1.0 / end) <= SPECTRAL_ATOL, end, t)
        upper = t <= self.hi if self.closed else t < self.hi
        inside = (t >= self.lo) & upper
        if math.isinf(self.hi):
            inside = inside | np.isinf(t)
        return inside


def build_time_observable(omega, side: str = "physical", direction: str = "forward",
                          tol: float = 1e-8) -> TimeObservable:
    """Form ``Omega* Omega`` (physical side) or ``Omega Omega*`` (hardy side) and diagonalize.

    Raises :class:`SpectrumError` when an eigenvalue falls outside
    ``[-tol, 1 + tol]``, which means ``omega`` was not a contraction.
    """
    if side not in ("physical", "hardy"):
        raise ValueError(f"side must be 'physical' or 'hardy', got {side!r}")
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    mat = _as_array(omega)
    A = mat.conj().T @ mat if side == "physical" else mat @ mat.conj().T
    A = 0.5 * (A + A.conj().T)
    w, v = np.linalg.eigh(A)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order]
    if w[0] > 1 + tol or w[-1] < -tol:
        raise SpectrumError(
            f"eigenvalues span [{w[-1]:.3e}, {w[0]:.3e}], outside [-{tol:.0e}, 1+{tol:.0e}]"
        )
    grid = omega.grid if isinstance(omega, OperatorMatrix) else None
    energy = omega.energy_rep if isinstance(omega, OperatorMatrix) else None
    for arr in (A, w, v):
        arr.setflags(write=False)
    return TimeObservable(A, w, v, side, direction, grid, energy)


def spectral_projector(obs: TimeObservable, E: SpectralInterval) -> np.ndarray:
    """Spectral measure of the time observable evaluated on ``E``."""
    cols = obs.eigvecs[:, E.contains(obs.times)]
    return cols @ cols.conj().T


def transport_residual(obs_phys: TimeObservable, obs_hardy: TimeObservable, omega,
                       E: SpectralInterval) -> float:
    """``||xi_hat(E) Omega - Omega xi(E)|| / ||Omega||``, the bounded form of spectral transport."""
    mat = _as_array(omega)
    lhs = spectral_projector(obs_hardy, E) @ mat
    rhs = mat @ spectral_projector(obs_phys, E)
    return float(np.linalg.norm(lhs - rhs, 2) / np.linalg.norm(mat, 2))


def resolvent_residual(omega, z: complex, hat: bool = False) -> float:
    """Norm of ``R_C(z) - z^{-1}(Omega* R_Chat(z) Omega + 1)`` with C = Omega*Omega.

    ``hat=True`` checks the mirrored identity for ``Chat = Omega Omega*``.
    ``z`` must keep distance 0.1 from [0, 1].
    """
    z = complex(z)
    nearest = min(max(z.real, 0.0), 1.0)
    if abs(z - nearest) < 0.1:
        raise ValueError(f"z={z} is within 0.1 of the spectrum [0, 1]")
    mat = _as_array(omega)
    if hat:
        mat = mat.conj().T
    C = mat.conj().T @ mat
    Chat = mat @ mat.conj().T
    R = np.linalg.inv(z * np.eye(C.shape[0]) - C)
    Rhat = np.linalg.inv(z * np.eye(Chat.shape[0]) - Chat)
    rhs = (mat.conj().T @ Rhat @ mat + np.eye(C.shape[0])) / z
    return float(np.linalg.norm(R - rhs, 2))


def xmu_samples(spec: GridSpec, mu: complex, periodized: bool = True) -> np.ndarray:
    """Samples of ``x_mu(sigma) = 1/(sigma - mu)`` on the full grid.

    With ``periodized=True`` the 2L-periodic sum of the kernel is used,
    ``(pi/2L) cot(pi (sigma - mu) / 2L)``.  For ``Im mu < 0`` its Fourier
    series only has nonnegative frequencies, so it lies in discrete H+ up to
    aliasing of order ``exp(-N pi |Im mu| / 2L)``.
    """
    sigma = spec.nodes
    if not periodized:
        return 1.0 / (sigma - mu)
    scale = np.pi / (2.0 * spec.halfwidth)
    return scale / np.tan(scale * (sigma - mu))


class XmuRow(NamedTuple):
    mu: complex
    norm_x_sq: float
    norm_psi_sq: float

    @property
    def ratio(self) -> float:
        return self.norm_psi_sq / self.norm_x_sq


def xmu_program(mu_list: Sequence[complex], spec: GridSpec | None = None,
                periodized: bool = True) -> list[XmuRow]:
    """``||x_mu||^2`` and ``||psi_mu||^2`` with ``psi_mu = Omega_f* x_mu``.

    The ratio is the Rayleigh quotient of ``That_F^{-1}`` at ``x_mu`` and tends
    to 1 as Re mu -> +inf, to 0 as Re mu -> -inf.
    """
    spec = spec or make_grid(4096, 200.0)
    rows = []
    for mu in mu_list:
        mu = complex(mu)
        if mu.imag >= 0:
            raise ValueError(f"x_mu lies in H+ only for Im mu < 0, got mu={mu}")
        x = xmu_samples(spec, mu, periodized)
        psi = riesz_project_array(x, spec, 1)[spec.n_half:]
        rows.append(XmuRow(
            mu,
            float(spec.spacing * np.vdot(x, x).real),
            float(spec.spacing * np.vdot(psi, psi).real),
        ))
    return rows


def gaussian_bump(spec: GridSpec, center: float, width: float,
                  frequency: float = 0.0) -> HalfLineFunction:
    """Normalized Gaussian on the half-line grid, optionally modulated."""
    s = spec.half_nodes
    vals = np.exp(-0.5 * ((s - center) / width) ** 2 + 1j * frequency * s)
    return HalfLineFunction(spec, vals).normalized()


class FlowCurve(NamedTuple):
    times: np.ndarray
    mass_low: np.ndarray
    mass_high: np.ndarray
    a: float
    threshold: float | None
    crossing_time: float | None

    @property
    def passed(self) -> bool | None:
        """Did the [1, a) mass fall below the threshold inside the window?"""
        if self.threshold is None:
            return None
        return self.crossing_time is not None

    @property
    def max_rise(self) -> float:
        """Largest excursion of the [1, a) mass above its starting value."""
        return float(np.max(self.mass_low - self.mass_low[0]))


def spectral_flow_experiment(obs: TimeObservable, g, a: float, times: Sequence[float],
                             threshold: float | None = None,
                             allow_wrong_side: bool = False) -> FlowCurve:
    """Track ``||xi([1,a)) U(t) g||`` and ``||xi([a,inf)) U(t) g||``.

    ``g`` is first replaced by its normalized component in ``xi([1,a))``.
    Forward observables are run for ``t >= 0``, backward ones for ``t <= 0``;
    ``allow_wrong_side`` lifts that check so the asymmetry can be recorded.
    """
    if a <= 1:
        raise ValueError(f"a must exceed 1, got {a}")
    if obs.side != "physical" or obs.grid is None:
        raise ValueError("spectral flow needs a physical-side observable built on a grid")
    times = np.asarray(times, dtype=float)
    if not allow_wrong_side:
        if obs.direction == "forward" and np.any(times < 0):
            raise ValueError("forward flow is defined for t >= 0")
        if obs.direction == "backward" and np.any(times > 0):
            raise ValueError("backward flow is defined for t <= 0")

    vec = np.asarray(g.samples if isinstance(g, HalfLineFunction) else g, dtype=complex)
    low = obs.eigvecs[:, SpectralInterval(1.0, a).contains(obs.times)]
    high = obs.eigvecs[:, SpectralInterval(a).contains(obs.times)]
    vec = low @ (low.conj().T @ vec)
    n0 = np.linalg.norm(vec)
    if n0 == 0:
        raise ValueError("g has no component in xi([1, a))")
    vec = vec / n0

    sigma = obs.grid.half_nodes
    U = obs.energy_rep
    if U is not None:
        low, high = U @ low, U @ high
        vec = U @ vec
    mass_low = np.empty(times.size)
    mass_high = np.empty(times.size)
    for i, t in enumerate(times):
        evolved = np.exp(-1j * sigma * t) * vec
        mass_low[i] = np.linalg.norm(low.conj().T @ evolved)
        mass_high[i] = np.linalg.norm(high.conj().T @ evolved)

    crossing = None
    if threshold is not None:
        below = np.nonzero(mass_low < threshold)[0]
        if below.size:
            crossing = float(times[below[0]])
    return FlowCurve(times, mass_low, mass_high, float(a), threshold, crossing)
