"""Truncated symmetric Fock space over a small base space.

States are expanded in the occupation-number basis ``|n_1, ..., n_d>`` with
``sum n_i <= n_max``, ordered by level and then lexicographically.  On that
basis

* ``e(u)`` has coefficients ``prod u_i**n_i / sqrt(n_i!)``,
* ``a_i^dagger |n> = sqrt(n_i + 1) |n + 1_i>``, dropped beyond the top level,
* ``lambda(K) = sum K_ij a_i^dagger a_j`` preserves the level.

Truncation only affects the top level, so identities that raise the level
are exact on vectors supported below it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from .timeobs import SpectralInterval, TimeObservable, build_time_observable, spectral_projector

__all__ = [
    "FockSpec",
    "FockVector",
    "FockOperator",
    "CommutationError",
    "make_fock",
    "exp_vector",
    "vacuum",
    "creation",
    "annihilation",
    "conservation",
    "number_operator",
    "second_quantization",
    "Martingale",
    "martingale_at",
    "bracket_measure",
    "hat_martingale",
    "hat_operator",
    "random_contraction",
    "toy_quasi_affinity",
    "creation_intertwining_residual",
    "annihilation_discrepancy",
]


@dataclass(frozen=True)
class FockSpec:
    """Occupation-number basis of the symmetric Fock space over C^base_dim up to ``n_max`` quanta."""

    base_dim: int
    n_max: int
    basis: tuple = field(repr=False, compare=False)
    index: dict = field(repr=False, compare=False)

    @property
    def level_dims(self) -> tuple:
        d = self.base_dim
        return tuple(math.comb(d + n - 1, n) for n in range(self.n_max + 1))

    @property
    def total_dim(self) -> int:
        return len(self.basis)

    def level_slice(self, n: int) -> slice:
        dims = self.level_dims
        start = sum(dims[:n])
        return slice(start, start + dims[n])

    def below_top(self) -> np.ndarray:
        """Mask of basis states with fewer than ``n_max`` quanta."""
        mask = np.zeros(self.total_dim, dtype=bool)
        mask[: self.total_dim - self.level_dims[-1]] = True
        return mask


def make_fock(base_dim: int, n_max: int = 4) -> FockSpec:
    if base_dim < 1 or n_max < 0:
        raise ValueError(f"need base_dim >= 1 and n_max >= 0, got {base_dim}, {n_max}")
    basis = []
    for n in range(n_max + 1):
        level = [occ for occ in itertools.product(range(n + 1), repeat=base_dim) if sum(occ) == n]
        basis.extend(sorted(level, reverse=True))
    basis = tuple(basis)
    return FockSpec(base_dim, n_max, basis, {occ: i for i, occ in enumerate(basis)})


@dataclass(frozen=True)
class FockVector:
    spec: FockSpec
    coeffs: np.ndarray = field(repr=False)

    def level(self, n: int) -> np.ndarray:
        return self.coeffs[self.spec.level_slice(n)]

    def inner(self, other: FockVector) -> complex:
        return complex(np.vdot(self.coeffs, other.coeffs))

    def __sub__(self, other: FockVector) -> FockVector:
        return FockVector(self.spec, self.coeffs - other.coeffs)

    def __add__(self, other: FockVector) -> FockVector:
        return FockVector(self.spec, self.coeffs + other.coeffs)

    def scaled(self, c: complex) -> FockVector:
        return FockVector(self.spec, c * self.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True)
class FockOperator:
    """Dense matrix from the Fock space ``source`` to ``target``."""

    source: FockSpec
    target: FockSpec
    matrix: np.ndarray = field(repr=False)

    @property
    def H(self) -> FockOperator:
        return FockOperator(self.target, self.source, self.matrix.conj().T)

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            if other.spec != self.source:
                raise ValueError("Fock space mismatch")
            return FockVector(self.target, self.matrix @ other.coeffs)
        if isinstance(other, FockOperator):
            if other.target != self.source:
                raise ValueError("Fock space mismatch")
            return FockOperator(other.source, self.target, self.matrix @ other.matrix)
        return NotImplemented

    def __add__(self, other: FockOperator) -> FockOperator:
        return FockOperator(self.source, self.target, self.matrix + other.matrix)

    def __sub__(self, other: FockOperator) -> FockOperator:
        return FockOperator(self.source, self.target, self.matrix - other.matrix)

    def scaled(self, c: complex) -> FockOperator:
        return FockOperator(self.source, self.target, c * self.matrix)

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


def _vec(u, d: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex).reshape(-1)
    if u.size != d:
        raise ValueError(f"base vector must have {d} entries, got {u.size}")
    return u


def exp_vector(spec: FockSpec, u) -> FockVector:
    """Truncated exponential vector ``e(u) = sum_n u^{(x)n} / sqrt(n!)``."""
    u = _vec(u, spec.base_dim)
    coeffs = np.empty(spec.total_dim, dtype=complex)
    for k, occ in enumerate(spec.basis):
        c = 1.0 + 0j
        for ui, ni in zip(u, occ):
            if ni:
                c *= ui ** ni / math.sqrt(math.factorial(ni))
        coeffs[k] = c
    return FockVector(spec, coeffs)


def vacuum(spec: FockSpec) -> FockVector:
    coeffs = np.zeros(spec.total_dim, dtype=complex)
    coeffs[0] = 1.0
    return FockVector(spec, coeffs)


def _mode_creators(spec: FockSpec) -> list:
    ops = []
    for i in range(spec.base_dim):
        mat = np.zeros((spec.total_dim, spec.total_dim))
        for col, occ in enumerate(spec.basis):
            if sum(occ) == spec.n_max:
                continue
            raised = occ[:i] + (occ[i] + 1,) + occ[i + 1:]
            mat[spec.index[raised], col] = math.sqrt(occ[i] + 1)
        ops.append(mat)
    return ops


_CREATOR_CACHE: dict = {}


def _creators(spec: FockSpec) -> list:
    key = (spec.base_dim, spec.n_max)
    if key not in _CREATOR_CACHE:
        _CREATOR_CACHE[key] = _mode_creators(spec)
    return _CREATOR_CACHE[key]


def creation(spec: FockSpec, u) -> FockOperator:
    """``a^dagger(u) = sum_i u_i a_i^dagger`` (linear in u)."""
    u = _vec(u, spec.base_dim)
    mat = sum(ui * ai for ui, ai in zip(u, _creators(spec)))
    return FockOperator(spec, spec, np.asarray(mat, dtype=complex))


def annihilation(spec: FockSpec, u) -> FockOperator:
    """``a(u) = a^dagger(u)^*`` (antilinear in u)."""
    return creation(spec, u).H


def conservation(spec: FockSpec, K) -> FockOperator:
    """``lambda(K) = dGamma(K) = sum_ij K_ij a_i^dagger a_j``."""
    K = np.asarray(K, dtype=complex)
    d = spec.base_dim
    if K.shape != (d, d):
        raise ValueError(f"K must be {d}x{d}, got {K.shape}")
    ops = _creators(spec)
    mat = np.zeros((spec.total_dim, spec.total_dim), dtype=complex)
    for i in range(d):
        for j in range(d):
            if K[i, j] != 0:
                mat += K[i, j] * (ops[i] @ ops[j].T)
    return FockOperator(spec, spec, mat)


def number_operator(spec: FockSpec) -> FockOperator:
    return conservation(spec, np.eye(spec.base_dim))


def second_quantization(spec: FockSpec, C, target: FockSpec | None = None,
                        norm_tol: float = 1e-10) -> FockOperator:
    """``Gamma_s(C)``, the level-wise symmetric tensor power of a contraction.

    ``C`` may be rectangular (base space of ``spec`` -> base space of
    ``target``).  Column ``|occ>`` is ``prod_j a^dagger(C e_j)^{o_j} / sqrt(o_j!)``
    applied to the vacuum.
    """
    C = np.asarray(C, dtype=complex)
    if target is None:
        target = spec if C.shape[0] == spec.base_dim else make_fock(C.shape[0], spec.n_max)
    if C.shape != (target.base_dim, spec.base_dim):
        raise ValueError(f"C must be {target.base_dim}x{spec.base_dim}, got {C.shape}")
    if target.n_max != spec.n_max:
        raise ValueError("source and target truncation levels differ")
    norm = np.linalg.norm(C, 2)
    if norm > 1 + norm_tol:
        raise ValueError(f"not a contraction: ||C|| = {norm:.12f}")
    raisers = [creation(target, C[:, j]).matrix for j in range(spec.base_dim)]
    mat = np.zeros((target.total_dim, spec.total_dim), dtype=complex)
    phi = vacuum(target).coeffs
    for col, occ in enumerate(spec.basis):
        vec = phi
        for j, oj in enumerate(occ):
            for _ in range(oj):
                vec = raisers[j] @ vec
            vec = vec / math.sqrt(math.factorial(oj))
        mat[:, col] = vec
    return FockOperator(spec, target, mat)


def random_contraction(d: int, seed: int = 0, singular_values: Sequence[float] | None = None,
                       m: int | None = None) -> np.ndarray:
    """``W diag(s) V*`` with Haar-random unitaries; ``s`` defaults to uniform in (0.3, 0.95)."""
    rng = np.random.default_rng(seed)
    m = d if m is None else m
    k = min(m, d)
    if singular_values is None:
        s = np.sort(rng.uniform(0.3, 0.95, size=k))[::-1]
    else:
        s = np.asarray(singular_values, dtype=float)
        if s.size != k:
            raise ValueError(f"need {k} singular values, got {s.size}")
    W = unitary_group.rvs(m, random_state=rng) if m > 1 else np.eye(1)
    V = unitary_group.rvs(d, random_state=rng) if d > 1 else np.eye(1)
    S = np.zeros((m, d))
    S[np.arange(k), np.arange(k)] = s
    return W @ S @ V.conj().T


def toy_quasi_affinity(d: int = 3, seed: int = 0,
                       singular_values: Sequence[float] | None = None) -> np.ndarray:
    """Square injective strict contraction standing in for Omega_f on a small base space.

    Distinct singular values give a time observable with simple spectrum,
    with eigen-times ``1/s**2`` spread over roughly [1.1, 11].
    """
    if singular_values is None:
        singular_values = np.linspace(0.95, 0.3, d)
    return random_contraction(d, seed, singular_values)


class CommutationError(ValueError):
    """An operator required to commute with a spectral measure does not."""


@dataclass(frozen=True)
class Martingale:
    """``m_t = xi([1, t+1]) v`` for a generator ``v`` and time observable ``xi``."""

    generator: np.ndarray = field(repr=False)
    observable: TimeObservable = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.generator, dtype=complex).reshape(-1)
        if v.size != self.observable.dim:
            raise ValueError(f"generator has {v.size} entries, observable acts on {self.observable.dim}")
        v.setflags(write=False)
        object.__setattr__(self, "generator", v)


def martingale_at(m: Martingale, t: float) -> np.ndarray:
    """``xi([1, t+1]) v``; ``t = inf`` projects onto the whole spectrum."""
    if t < 0:
        raise ValueError(f"martingales are indexed by t >= 0, got {t}")
    E = SpectralInterval(1.0, t + 1.0, closed=True)
    return spectral_projector(m.observable, E) @ m.generator


def bracket_measure(m: Martingale, m2: Martingale, t: float) -> complex:
    """``<<m, m'>>([0, t]) = <m_t, m'_t>``."""
    if m.observable is not m2.observable:
        o1, o2 = m.observable, m2.observable
        if o1.dim != o2.dim or not np.allclose(o1.inverse_matrix, o2.inverse_matrix, atol=1e-14):
            raise ValueError("bracket of martingales for different time observables")
    return complex(np.vdot(martingale_at(m, t), martingale_at(m2, t)))


def _omega_matrix(omega) -> np.ndarray:
    if hasattr(omega, "hardy_coordinates"):
        return omega.hardy_coordinates()
    return np.asarray(omega, dtype=complex)


def hat_martingale(m: Martingale, omega, hat_observable: TimeObservable | None = None) -> Martingale:
    """``m_hat`` with generator ``Omega v`` for the hat observable ``Omega Omega*``."""
    om = _omega_matrix(omega)
    if hat_observable is None:
        hat_observable = build_time_observable(om, side="hardy", direction=m.observable.direction)
    return Martingale(om @ m.generator, hat_observable)


def hat_operator(K, omega, observable: TimeObservable | None = None,
                 intervals: Sequence[SpectralInterval] = (), tol: float = 1e-8) -> np.ndarray:
    """``K_hat = X* K X`` with ``X = V W*`` the polar factor from ``Omega = W S V*``.

    ``X`` is the unitary extension of ``|Omega|^{-1} Omega*``.  The result is
    expressed in the coordinates of ``Omega``'s codomain (Hardy coordinates
    when ``omega`` carries a Hardy basis).  ``K`` must commute with
    ``Omega* Omega`` and with ``xi(E)`` for every supplied interval.
    """
    om = _omega_matrix(omega)
    K = np.asarray(K, dtype=complex)
    C = om.conj().T @ om
    scale = max(np.linalg.norm(K, 2), 1.0)
    comm = np.linalg.norm(K @ C - C @ K, 2) / scale
    if comm > tol:
        raise CommutationError(f"||[K, Omega*Omega]|| = {comm:.3e} exceeds {tol:.0e}")
    if intervals:
        obs = observable or build_time_observable(om)
        for E in intervals:
            P = spectral_projector(obs, E)
            c = np.linalg.norm(K @ P - P @ K, 2) / scale
            if c > tol:
                raise CommutationError(f"||[K, xi({E.lo}, {E.hi})]|| = {c:.3e} exceeds {tol:.0e}")
    W, _, Vh = np.linalg.svd(om)
    X = Vh.conj().T @ W.conj().T
    return X.conj().T @ K @ X


def creation_intertwining_residual(spec: FockSpec, omega, u, v) -> float:
    """``||Gamma(Omega) a^dagger(u) e(v) - a^dagger(Omega u) Gamma(Omega) e(v)||``."""
    om = np.asarray(omega, dtype=complex)
    G = second_quantization(spec, om)
    lhs = G @ (creation(spec, u) @ exp_vector(spec, v))
    rhs = creation(G.target, om @ _vec(u, spec.base_dim)) @ (G @ exp_vector(spec, v))
    return (lhs - rhs).norm()


def annihilation_discrepancy(spec: FockSpec, omega, u, v) -> tuple:
    """Measured and predicted annihilation-side defect, below the top level.

    Returns ``(measured, predicted)`` where measured is
    ``Gamma(Omega) a(u) e(v) - a(Omega u) Gamma(Omega) e(v)`` and predicted is
    ``(<u, v> - <Omega u, Omega v>) e(Omega v)``, both restricted to levels
    below ``n_max`` (the truncated annihilator loses the top-level input).
    """
    om = np.asarray(omega, dtype=complex)
    u = _vec(u, spec.base_dim)
    v = _vec(v, spec.base_dim)
    G = second_quantization(spec, om)
    measured = G @ (annihilation(spec, u) @ exp_vector(spec, v)) \
        - annihilation(G.target, om @ u) @ (G @ exp_vector(spec, v))
    factor = np.vdot(u, v) - np.vdot(om @ u, om @ v)
    predicted = exp_vector(G.target, om @ v).scaled(factor)
    mask = G.target.below_top()
    return measured.coeffs[mask], predicted.coeffs[mask]
