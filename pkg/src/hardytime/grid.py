"""Uniform grids for L2(R) and L2(R+), the inclusion map and its inverse.

The line [-L, L) is cut into N cells of width ``dsigma = 2L/N`` and every
function is sampled at the cell midpoints.  With N even the nonnegative
half-line is exactly the upper block of cells (indices N/2 .. N-1), so the
restriction to R+ and the inclusion are exact coordinate maps.  Inner
products use the flat midpoint weight ``dsigma`` on both grids, which keeps
adjoints equal to conjugate transposes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "GridSpec",
    "GridFunction",
    "HalfLineFunction",
    "SupportError",
    "make_grid",
    "inner",
    "embed_I",
    "restrict_Iinv",
    "sample",
    "sample_half",
    "inclusion_matrix",
]


class SupportError(ValueError):
    """Raised when a function expected on R+ carries mass on sigma < 0."""

    def __init__(self, negative_norm: float, total_norm: float, tol: float):
        self.negative_norm = negative_norm
        self.total_norm = total_norm
        self.tol = tol
        super().__init__(
            f"negative-support norm {negative_norm:.3e} exceeds "
            f"{tol:.1e} * {total_norm:.3e}"
        )


def _frozen(values, dtype=complex) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GridSpec:
    """Midpoint grid on [-halfwidth, halfwidth) with ``n_points`` cells."""

    n_points: int
    halfwidth: float

    @property
    def spacing(self) -> float:
        return 2.0 * self.halfwidth / self.n_points

    @property
    def n_half(self) -> int:
        return self.n_points // 2

    @property
    def nodes(self) -> np.ndarray:
        return -self.halfwidth + (np.arange(self.n_points) + 0.5) * self.spacing

    @property
    def half_nodes(self) -> np.ndarray:
        return self.nodes[self.n_half:]

    @property
    def bin_step(self) -> float:
        """Spacing of the conjugate (frequency) variable, pi / L."""
        return np.pi / self.halfwidth


def make_grid(n_points: int, halfwidth: float) -> GridSpec:
    """Validate and build a :class:`GridSpec`.

    Parameters
    ----------
    n_points : int
        Number of cells, even and at least 8.
    halfwidth : float
        The grid covers ``[-halfwidth, halfwidth)``.
    """
    if int(n_points) != n_points or n_points < 8 or n_points % 2:
        raise ValueError(f"n_points must be an even integer >= 8, got {n_points!r}")
    if not np.isfinite(halfwidth) or halfwidth <= 0:
        raise ValueError(f"halfwidth must be positive, got {halfwidth!r}")
    return GridSpec(int(n_points), float(halfwidth))


@dataclass(frozen=True)
class GridFunction:
    """Samples of a function on the full line."""

    spec: GridSpec
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = _frozen(self.samples)
        if samples.shape != (self.spec.n_points,):
            raise ValueError(
                f"expected {self.spec.n_points} samples, got shape {samples.shape}"
            )
        object.__setattr__(self, "samples", samples)

    def norm(self) -> float:
        return float(np.sqrt(self.spec.spacing) * np.linalg.norm(self.samples))

    def __add__(self, other: GridFunction) -> GridFunction:
        _check_same(self.spec, other.spec)
        return GridFunction(self.spec, self.samples + other.samples)

    def __sub__(self, other: GridFunction) -> GridFunction:
        _check_same(self.spec, other.spec)
        return GridFunction(self.spec, self.samples - other.samples)

    def scaled(self, c: complex) -> GridFunction:
        return GridFunction(self.spec, c * self.samples)


@dataclass(frozen=True)
class HalfLineFunction:
    """Samples of a function on R+ (the upper N/2 cells of the parent grid)."""

    spec: GridSpec
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = _frozen(self.samples)
        if samples.shape != (self.spec.n_half,):
            raise ValueError(
                f"expected {self.spec.n_half} samples, got shape {samples.shape}"
            )
        object.__setattr__(self, "samples", samples)

    def norm(self) -> float:
        return float(np.sqrt(self.spec.spacing) * np.linalg.norm(self.samples))

    def normalized(self) -> HalfLineFunction:
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero function")
        return HalfLineFunction(self.spec, self.samples / n)


def _check_same(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


def inner(f, g) -> complex:
    """Quadrature inner product, conjugate-linear in the first slot.

    Works for two :class:`GridFunction` or two :class:`HalfLineFunction`
    on the same grid.
    """
    if type(f) is not type(g):
        raise ValueError("inner product between different function spaces")
    _check_same(f.spec, g.spec)
    return complex(f.spec.spacing * np.vdot(f.samples, g.samples))


def embed_I(h: HalfLineFunction) -> GridFunction:
    """Extend ``h`` by zero to the whole line."""
    out = np.zeros(h.spec.n_points, dtype=complex)
    out[h.spec.n_half:] = h.samples
    return GridFunction(h.spec, out)


def restrict_Iinv(
    f: GridFunction, support_tol: float = 1e-10, strict: bool = False
) -> HalfLineFunction:
    """Restrict ``f`` to R+.

    In lax mode (default) anything on sigma < 0 is discarded, which is the
    composite ``I^{-1} P_{R+}``.  In strict mode the negative-sigma part must
    be below ``support_tol * ||f||``, otherwise :class:`SupportError` is raised.
    """
    n_half = f.spec.n_half
    if strict:
        neg = float(np.sqrt(f.spec.spacing) * np.linalg.norm(f.samples[:n_half]))
        total = f.norm()
        if neg > support_tol * total:
            raise SupportError(neg, total, support_tol)
    return HalfLineFunction(f.spec, f.samples[n_half:])


def _evaluate(rule: Callable, x: np.ndarray) -> np.ndarray:
    try:
        values = np.asarray(rule(x), dtype=complex)
        if values.shape == x.shape:
            return values
        if values.ndim == 0:
            return np.full(x.shape, complex(values))
    except (TypeError, ValueError):
        pass
    return np.array([complex(rule(float(s))) for s in x])


def sample(spec: GridSpec, rule: Callable) -> GridFunction:
    """Evaluate ``rule`` at every node of the full grid."""
    return GridFunction(spec, _evaluate(rule, spec.nodes))


def sample_half(spec: GridSpec, rule: Callable) -> HalfLineFunction:
    """Evaluate ``rule`` at the nonnegative nodes."""
    return HalfLineFunction(spec, _evaluate(rule, spec.half_nodes))


def inclusion_matrix(spec: GridSpec) -> np.ndarray:
    """Dense N x N/2 matrix of the inclusion I."""
    mat = np.zeros((spec.n_points, spec.n_half))
    mat[spec.n_half:, :] = np.eye(spec.n_half)
    return mat
