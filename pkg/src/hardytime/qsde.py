"""Euler integration of the Hudson-Parthasarathy QSDE on a truncated Fock space.

    dU = [L dA^dagger_m + (S - 1) dLambda_P - L*S dA_m - (iH + L*L/2) d<<m,m>>] U

with ``A^dagger_m(t) = a^dagger(m_t)``, ``A_m(t) = a(m_t)``,
``Lambda_P(t) = lambda(xi([1, t+1]) P)`` and the bracket clock
``<<m,m>>([0,t]) = ||m_t||^2``.  Operators act on ``H_0 (x) Fock`` with the
system factor first.  The Hardy-side process is obtained by rewriting the
data: the martingale generator goes to ``Omega v`` and ``P`` to ``P_hat``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .fock import (FockSpec, Martingale, annihilation, conservation, creation, exp_vector,
                   hat_martingale, hat_operator, martingale_at)
from .timeobs import SpectralInterval, build_time_observable, spectral_projector

__all__ = [
    "InvariantError",
    "ProcessSpec",
    "PathResult",
    "Increment",
    "integrate",
    "rewrite_hat",
    "DiagnosticRow",
    "IntertwiningReport",
    "intertwining_diagnostics",
    "solvable_closed_form",
]


class InvariantError(ValueError):
    """Process data violate a structural hypothesis of the QSDE."""


def _arr(x) -> np.ndarray:
    a = np.array(x, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ProcessSpec:
    """Coefficients, noise data and time grid of one QSDE.

    ``side`` is 'physical' or 'hardy'; Hardy-side specs come from
    :func:`rewrite_hat`.
    """

    L: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    martingale: Martingale = field(repr=False)
    fock: FockSpec
    time_grid: np.ndarray = field(repr=False)
    side: str = "physical"
    tol: float = 1e-10

    def __post_init__(self):
        for name in ("L", "S", "H", "P"):
            object.__setattr__(self, name, _arr(getattr(self, name)))
        grid = np.array(self.time_grid, dtype=float, copy=True)
        grid.setflags(write=False)
        object.__setattr__(self, "time_grid", grid)
        self.validate()

    @property
    def system_dim(self) -> int:
        return self.L.shape[0]

    def validate(self) -> None:
        n = self.L.shape[0]
        tol = self.tol
        for name in ("L", "S", "H"):
            if getattr(self, name).shape != (n, n):
                raise InvariantError(f"{name} must be {n}x{n}")
        if np.linalg.norm(self.S.conj().T @ self.S - np.eye(n), 2) > tol:
            raise InvariantError("S is not unitary")
        if np.linalg.norm(self.H - self.H.conj().T, 2) > tol:
            raise InvariantError("H is not self-adjoint")
        d = self.fock.base_dim
        if self.P.shape != (d, d):
            raise InvariantError(f"P must be {d}x{d}")
        if (np.linalg.norm(self.P @ self.P - self.P, 2) > tol
                or np.linalg.norm(self.P - self.P.conj().T, 2) > tol):
            raise InvariantError("P is not an orthogonal projector")
        if self.martingale.generator.size != d:
            raise InvariantError("martingale lives on a different base space")
        t = self.time_grid
        if t.ndim != 1 or t.size < 1 or t[0] != 0 or np.any(np.diff(t) <= 0):
            raise InvariantError("time grid must start at 0 and increase strictly")
        for tk in t:
            m = martingale_at(self.martingale, tk)
            if np.linalg.norm(self.P @ m - m) > tol:
                raise InvariantError(f"P m_t != m_t at t={tk}")
        if self.side not in ("physical", "hardy"):
            raise InvariantError(f"side must be 'physical' or 'hardy', got {self.side!r}")

    def allclose(self, other: ProcessSpec, atol: float = 1e-10) -> bool:
        same = (self.fock == other.fock and self.side == other.side
                and self.time_grid.shape == other.time_grid.shape)
        if not same:
            return False
        pairs = [(self.L, other.L), (self.S, other.S), (self.H, other.H), (self.P, other.P),
                 (self.time_grid, other.time_grid),
                 (self.martingale.generator, other.martingale.generator),
                 (self.martingale.observable.inverse_matrix, other.martingale.observable.inverse_matrix)]
        return all(a.shape == b.shape and np.allclose(a, b, atol=atol) for a, b in pairs)


class Increment(NamedTuple):
    t0: float
    t1: float
    d_bracket: float
    dm_norm: float
    dP_rank: float


@dataclass(frozen=True)
class PathResult:
    spec: ProcessSpec = field(repr=False)
    unitaries: np.ndarray = field(repr=False)
    drift: np.ndarray = field(repr=False)
    increments: tuple = field(repr=False)

    @property
    def times(self) -> np.ndarray:
        return self.spec.time_grid

    @property
    def unitarity_drift(self) -> float:
        return float(self.drift.max())


def _projector_at(m: Martingale, t: float) -> np.ndarray:
    return spectral_projector(m.observable, SpectralInterval(1.0, t + 1.0, closed=True))


def integrate(spec: ProcessSpec) -> PathResult:
    """Explicit Euler-Ito step on ``H_0 (x) Fock`` using exact noise increments."""
    n = spec.system_dim
    fock = spec.fock
    dim = n * fock.total_dim
    eye_f = np.eye(fock.total_dim)
    eye = np.eye(dim)
    L, S, H, P = spec.L, spec.S, spec.H, spec.P
    drift_coef = 1j * H + 0.5 * L.conj().T @ L
    LsS = L.conj().T @ S
    m = spec.martingale
    t = spec.time_grid

    U = np.empty((t.size, dim, dim), dtype=complex)
    U[0] = eye
    drift = np.zeros(t.size)
    log = []
    m_prev = martingale_at(m, t[0])
    P_prev = _projector_at(m, t[0]) @ P
    for k in range(t.size - 1):
        m_next = martingale_at(m, t[k + 1])
        P_next = _projector_at(m, t[k + 1]) @ P
        dm = m_next - m_prev
        dP = P_next - P_prev
        d_bracket = float(np.vdot(m_next, m_next).real - np.vdot(m_prev, m_prev).real)
        G = (np.kron(L, creation(fock, dm).matrix)
             + np.kron(S - np.eye(n), conservation(fock, dP).matrix)
             - np.kron(LsS, annihilation(fock, dm).matrix)
             - np.kron(drift_coef, eye_f) * d_bracket)
        U[k + 1] = U[k] + G @ U[k]
        drift[k + 1] = np.linalg.norm(U[k + 1].conj().T @ U[k + 1] - eye, 2)
        log.append(Increment(float(t[k]), float(t[k + 1]), d_bracket,
                             float(np.linalg.norm(dm)), float(np.trace(dP).real)))
        m_prev, P_prev = m_next, P_next
    U.setflags(write=False)
    return PathResult(spec, U, drift, tuple(log))


def solvable_closed_form(spec: ProcessSpec) -> np.ndarray:
    """``exp(-i H <<m,m>>([0,t])) (x) 1`` at every grid time, valid when L = 0 and S = 1."""
    w, v = np.linalg.eigh(spec.H)
    eye_f = np.eye(spec.fock.total_dim)
    out = []
    for tk in spec.time_grid:
        mt = martingale_at(spec.martingale, tk)
        clock = float(np.vdot(mt, mt).real)
        out.append(np.kron((v * np.exp(-1j * w * clock)) @ v.conj().T, eye_f))
    return np.array(out)


def rewrite_hat(spec: ProcessSpec, omega, tol: float = 1e-8) -> ProcessSpec:
    """Hardy-side process data: ``v -> Omega v`` and ``P -> P_hat``; L, S, H unchanged."""
    om = np.asarray(omega.hardy_coordinates() if hasattr(omega, "hardy_coordinates") else omega,
                    dtype=complex)
    if om.shape != (spec.fock.base_dim, spec.fock.base_dim):
        raise InvariantError("rewrite_hat needs a square Omega on the base space")
    obs = spec.martingale.observable
    if not np.allclose(obs.inverse_matrix, om.conj().T @ om, atol=1e-12):
        raise InvariantError("martingale observable is not built from this Omega")
    P_hat = hat_operator(spec.P, om, tol=tol)
    P_hat = 0.5 * (P_hat + P_hat.conj().T)
    hat_obs = build_time_observable(om, side="hardy", direction=obs.direction)
    m_hat = hat_martingale(spec.martingale, om, hat_obs)
    C_hat = hat_obs.inverse_matrix
    comm = np.linalg.norm(P_hat @ C_hat - C_hat @ P_hat, 2)
    if comm > tol:
        raise InvariantError(f"P_hat does not commute with the hat observable ({comm:.3e})")
    return replace(spec, P=P_hat, martingale=m_hat, side="hardy", tol=max(spec.tol, tol))


class DiagnosticRow(NamedTuple):
    t: float
    probe: int
    m_phys: complex
    m_hat: complex
    bracket_phys: float
    bracket_hat: float
    bracket_transport: float
    m_dot_u: complex
    mhat_dot_omega_u: complex
    tinv_m_dot_u: complex


class IntertwiningReport(NamedTuple):
    rows: list
    bracket_residual: float
    initial_residual: float
    substitution_residual: float


def intertwining_diagnostics(phys: PathResult, hardy: PathResult, omega,
                             probes: Sequence[tuple]) -> IntertwiningReport:
    """Tabulate matrix elements of both solutions on exponential-vector probes.

    Each probe is ``(h, u, h', u')``.  Asserted-by-construction quantities are
    the bracket clock ``<<m_hat,m_hat>>([0,t]) = <T_F^{-1} m_t, m_t>``, the
    initial values and the substitution ``<m_hat_t, Omega u'> = <T_F^{-1} m_t, u'>``;
    the remaining columns are data.
    """
    om = np.asarray(omega, dtype=complex)
    if phys.spec.side != "physical" or hardy.spec.side != "hardy":
        raise ValueError("expected a physical and a hardy path")
    if not np.array_equal(phys.times, hardy.times) or phys.spec.fock != hardy.spec.fock:
        raise ValueError("paths use different grids")
    fock = phys.spec.fock
    C = om.conj().T @ om
    rows = []
    bracket_res = 0.0
    init_res = 0.0
    subst_res = 0.0
    for j, (h, u, h2, u2) in enumerate(probes):
        h, h2 = np.asarray(h, dtype=complex), np.asarray(h2, dtype=complex)
        u, u2 = np.asarray(u, dtype=complex), np.asarray(u2, dtype=complex)
        left = np.kron(h, exp_vector(fock, u).coeffs)
        right = np.kron(h2, exp_vector(fock, u2).coeffs)
        left_hat = np.kron(h, exp_vector(fock, om @ u).coeffs)
        right_hat = np.kron(h2, exp_vector(fock, om @ u2).coeffs)
        for k, tk in enumerate(phys.times):
            mp = complex(np.vdot(left, phys.unitaries[k] @ right))
            mh = complex(np.vdot(left_hat, hardy.unitaries[k] @ right_hat))
            m_t = martingale_at(phys.spec.martingale, tk)
            mh_t = martingale_at(hardy.spec.martingale, tk)
            b_phys = float(np.vdot(m_t, m_t).real)
            b_hat = float(np.vdot(mh_t, mh_t).real)
            b_tr = float(np.vdot(C @ m_t, m_t).real)
            row = DiagnosticRow(float(tk), j, mp, mh, b_phys, b_hat, b_tr,
                                complex(np.vdot(m_t, u2)), complex(np.vdot(mh_t, om @ u2)),
                                complex(np.vdot(C @ m_t, u2)))
            rows.append(row)
            bracket_res = max(bracket_res, abs(b_hat - b_tr))
            subst_res = max(subst_res, abs(row.mhat_dot_omega_u - row.tinv_m_dot_u))
            if k == 0:
                gram = np.vdot(h, h2)
                init_res = max(init_res,
                               abs(mp - gram * exp_vector(fock, u).inner(exp_vector(fock, u2))),
                               abs(mh - gram * exp_vector(fock, om @ u).inner(
                                   exp_vector(fock, om @ u2))))
    return IntertwiningReport(rows, bracket_res, init_res, subst_res)
