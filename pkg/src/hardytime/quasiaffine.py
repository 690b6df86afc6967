"""The maps theta, theta*, their H- counterparts, and Omega_f / Omega_b.

Everything is a dense matrix.  The physical space is represented through a
unitary ``U`` onto the half-line grid (the energy representation, where the
Hamiltonian is multiplication by sigma); ``U`` defaults to the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .grid import GridSpec, HalfLineFunction, inclusion_matrix
from .hardy import hardy_basis, riesz_project_array

__all__ = [
    "OperatorMatrix",
    "RankDeficiencyError",
    "QuasiAffinityReport",
    "IntertwiningResidual",
    "build_theta",
    "build_theta_star",
    "build_theta_bar",
    "build_theta_bar_star",
    "build_energy_rep",
    "build_omega_f",
    "build_omega_b",
    "quasi_affinity_report",
    "evolve_U",
    "physical_evolution",
    "intertwining_residual",
]


class RankDeficiencyError(ValueError):
    """Numerical rank of a quasi-affine map fell below its domain dimension."""


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense matrix with domain/codomain tags.

    ``rows`` and ``cols`` name the codomain and domain ('full', 'half',
    'physical' or 'abstract').  ``range_basis`` optionally holds orthonormal
    columns spanning the Hardy subspace that contains the range, and
    ``energy_rep`` the unitary U the map was built from.
    """

    entries: np.ndarray = field(repr=False)
    rows: str
    cols: str
    grid: GridSpec | None = None
    range_basis: np.ndarray | None = field(default=None, repr=False)
    energy_rep: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        entries = _readonly(self.entries)
        if entries.ndim != 2:
            raise ValueError("OperatorMatrix needs a 2-d array")
        object.__setattr__(self, "entries", entries)
        if self.range_basis is not None:
            basis = _readonly(self.range_basis)
            if basis.shape[0] != entries.shape[0]:
                raise ValueError("range_basis rows must match the codomain")
            object.__setattr__(self, "range_basis", basis)

    @property
    def shape(self):
        return self.entries.shape

    @property
    def H(self) -> OperatorMatrix:
        return OperatorMatrix(self.entries.conj().T, self.cols, self.rows, self.grid)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            if self.cols != other.rows and "abstract" not in (self.cols, other.rows):
                raise ValueError(f"cannot compose {self.cols} -> with -> {other.rows}")
            return OperatorMatrix(
                self.entries @ other.entries, self.rows, other.cols,
                self.grid or other.grid, self.range_basis,
            )
        return self.entries @ other

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def hardy_coordinates(self) -> np.ndarray:
        """The matrix expressed in the orthonormal ``range_basis`` coordinates."""
        if self.range_basis is None:
            return np.asarray(self.entries)
        return self.range_basis.conj().T @ self.entries


def _theta_star_entries(spec: GridSpec, sign) -> np.ndarray:
    return riesz_project_array(inclusion_matrix(spec).astype(complex), spec, sign)


def build_theta_star(spec: GridSpec) -> OperatorMatrix:
    """``theta* = P+ I``: half line -> full line, range in discrete H+."""
    return OperatorMatrix(_theta_star_entries(spec, 1), "full", "half", spec,
                          hardy_basis(spec, 1))


def build_theta(spec: GridSpec) -> OperatorMatrix:
    """``theta = I^{-1} P_{R+}`` on H+, stored as ``I* P+`` so it is the exact adjoint."""
    return build_theta_star(spec).H


def build_theta_bar_star(spec: GridSpec) -> OperatorMatrix:
    """``theta_bar* = P- I``."""
    return OperatorMatrix(_theta_star_entries(spec, -1), "full", "half", spec,
                          hardy_basis(spec, -1))


def build_theta_bar(spec: GridSpec) -> OperatorMatrix:
    return build_theta_bar_star(spec).H


def build_energy_rep(n: int, U=None, tol: float = 1e-10) -> OperatorMatrix:
    """Unitary from the physical space onto the half-line grid.

    Defaults to the identity, i.e. the physical space is already given in its
    energy representation.  A supplied matrix must satisfy ``U* U = 1``.
    """
    if U is None:
        return OperatorMatrix(np.eye(n), "half", "physical")
    mat = np.asarray(U.entries if isinstance(U, OperatorMatrix) else U, dtype=complex)
    if mat.shape != (n, n):
        raise ValueError(f"energy representation must be {n}x{n}, got {mat.shape}")
    deviation = float(np.linalg.norm(mat.conj().T @ mat - np.eye(n), 2))
    if deviation > tol:
        raise ValueError(f"energy representation is not unitary: ||U*U - 1|| = {deviation:.3e}")
    return OperatorMatrix(mat, "half", "physical")


def _build_omega(spec: GridSpec, U, sign, require_injective: bool) -> OperatorMatrix:
    energy = U if isinstance(U, OperatorMatrix) else build_energy_rep(spec.n_half, U)
    entries = _theta_star_entries(spec, sign) @ energy.entries
    omega = OperatorMatrix(entries, "full", "physical", spec, hardy_basis(spec, sign),
                           energy.entries)
    if require_injective:
        report = quasi_affinity_report(omega)
        if not report.full_rank:
            raise RankDeficiencyError(
                f"numerical rank {report.rank} < {omega.shape[1]} "
                f"(sigma_min={report.sigma_min:.3e}, rtol={report.rtol:.0e})"
            )
    return omega


def build_omega_f(spec: GridSpec, U=None, require_injective: bool = False) -> OperatorMatrix:
    """``Omega_f = theta* U`` (physical space -> discrete H+)."""
    return _build_omega(spec, U, 1, require_injective)


def build_omega_b(spec: GridSpec, U=None, require_injective: bool = False) -> OperatorMatrix:
    """``Omega_b = theta_bar* U`` (physical space -> discrete H-)."""
    return _build_omega(spec, U, -1, require_injective)


class QuasiAffinityReport(NamedTuple):
    sigma_max: float
    sigma_min: float
    rank: int
    dim: int
    rtol: float

    @property
    def full_rank(self) -> bool:
        return self.rank == self.dim

    @property
    def contractive(self) -> bool:
        return self.sigma_max <= 1 + 1e-10


def quasi_affinity_report(omega, rtol: float = 1e-8) -> QuasiAffinityReport:
    """Singular-value certificate of contractivity and injectivity."""
    mat = omega.entries if isinstance(omega, OperatorMatrix) else np.asarray(omega)
    s = np.linalg.svd(mat, compute_uv=False)
    rank = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return QuasiAffinityReport(float(s[0]), float(s[-1]), rank, mat.shape[1], rtol)


def evolve_U(h: HalfLineFunction, t: float) -> HalfLineFunction:
    """Schroedinger evolution in the energy representation: ``exp(-i sigma t)``."""
    return HalfLineFunction(h.spec, np.exp(-1j * h.spec.half_nodes * t) * h.samples)


def physical_evolution(omega: OperatorMatrix, t: float) -> np.ndarray:
    """Matrix of U(t) on the physical space, ``U* exp(-i sigma t) U``."""
    phase = np.exp(-1j * omega.grid.half_nodes * t)
    U = omega.energy_rep
    if U is None:
        return np.diag(phase)
    return U.conj().T @ (phase[:, None] * U)


class IntertwiningResidual(NamedTuple):
    res_semigroup: float
    res_wrongside: float


def intertwining_residual(h, t: float, direction: str = "forward",
                          omega: OperatorMatrix | None = None) -> IntertwiningResidual:
    """Residual of ``Omega U(t) h = T_u(t) Omega h`` on the claimed and the wrong side.

    ``direction='forward'`` uses Omega_f with P+ and requires ``t >= 0``;
    ``'backward'`` uses Omega_b with P- and requires ``t <= 0``.  Both
    residuals are relative to ``||h||``; the second is evaluated at ``-t``.
    Without ``omega`` the energy representation is the identity and
    everything is done with FFTs.
    """
    if direction == "forward":
        sign = 1
        if t < 0:
            raise ValueError("forward intertwining is claimed for t >= 0")
    elif direction == "backward":
        sign = -1
        if t > 0:
            raise ValueError("backward intertwining is claimed for t <= 0")
    else:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")

    if isinstance(h, HalfLineFunction):
        spec, vec = h.spec, np.asarray(h.samples)
    else:
        spec, vec = omega.grid, np.asarray(h, dtype=complex)
    if omega is not None and (omega.rows, omega.cols) != ("full", "physical"):
        raise ValueError("omega must map the physical space to the full line")
    sigma_full = spec.nodes
    h_norm = np.sqrt(spec.spacing) * np.linalg.norm(vec)
    if h_norm == 0:
        return IntertwiningResidual(0.0, 0.0)

    def apply_omega(x):
        if omega is not None:
            return omega.entries @ x
        full = np.zeros(spec.n_points, dtype=complex)
        full[spec.n_half:] = x
        return riesz_project_array(full, spec, sign)

    def residual(tt):
        if omega is not None:
            lhs = apply_omega(physical_evolution(omega, tt) @ vec)
        else:
            lhs = apply_omega(np.exp(-1j * spec.half_nodes * tt) * vec)
        rhs = riesz_project_array(np.exp(-1j * sigma_full * tt) * apply_omega(vec),
                                  spec, sign)
        return float(np.sqrt(spec.spacing) * np.linalg.norm(lhs - rhs) / h_norm)

    return IntertwiningResidual(residual(t), residual(-t))
