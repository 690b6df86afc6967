"""Defect operators and characteristic functions of contractions.

For a contraction C the defect operator is ``D_C = (1 - C*C)^{1/2}`` and the
defect subspace is the closure of its range.  On a finite grid the closure
is replaced by the span of eigenvectors of ``D_C`` whose eigenvalue exceeds
``rank_tol``; directions below it are indistinguishable from rounding noise.

The characteristic function

    Theta_C(lam) = [-C + lam D_{C*} (1 - lam C*)^{-1} D_C] restricted to D_C

is evaluated pointwise, compressed onto the two defect bases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import subspace_angles

from .quasiaffine import OperatorMatrix

__all__ = [
    "DEFAULT_RANK_TOL",
    "DefectData",
    "ConditioningError",
    "defect",
    "characteristic_operator",
    "characteristic_function",
    "CharIntertwineResidual",
    "char_intertwine_residual",
    "defect_principal_angles",
    "spectrum_gap",
]

# Relative to the largest eigenvalue of D, so 1e-8 relative on D**2 = 1 - C*C.
# Eigenvalues of C cluster geometrically near 1 and their eigenvectors are
# only resolved to eps / gap; cutting lower lands inside that noise.
DEFAULT_RANK_TOL = 1e-4


class ConditioningError(ValueError):
    """``1 - lam C`` too ill-conditioned for a trustworthy inverse."""


def _mat(C) -> np.ndarray:
    return np.asarray(C.entries if isinstance(C, OperatorMatrix) else C, dtype=complex)


@dataclass(frozen=True)
class DefectData:
    """``D_C`` together with an orthonormal basis of its numerical range.

    ``clamp`` records how far negative eigenvalues of ``1 - C*C`` had to be
    lifted to zero before taking the square root.
    """

    defect_op: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)
    eigvals: np.ndarray = field(repr=False)
    rank_tol: float
    clamp: float = 0.0

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


def defect(C, rank_tol: float | None = None, relative: bool = True,
           norm_tol: float = 1e-10) -> DefectData:
    """Defect operator and numerical defect subspace of a contraction.

    Parameters
    ----------
    C : OperatorMatrix or array
        Square or rectangular matrix with ``||C|| <= 1 + norm_tol``.
    rank_tol : float, optional
        Cut on the eigenvalues of ``D_C``; relative to the largest one when
        ``relative`` is true.  Defaults to ``DEFAULT_RANK_TOL``.  The cut
        never drops below the eigensolver noise floor ``10 sqrt(n eps)``.
    """
    mat = _mat(C)
    norm = np.linalg.norm(mat, 2) if mat.size else 0.0
    if norm > 1 + norm_tol:
        raise ValueError(f"not a contraction: ||C|| = {norm:.12f}")
    n = mat.shape[1]
    gram = np.eye(n) - mat.conj().T @ mat
    gram = 0.5 * (gram + gram.conj().T)
    w, v = np.linalg.eigh(gram)
    clamp = float(max(0.0, -w.min())) if w.size else 0.0
    d = np.sqrt(np.clip(w, 0.0, None))
    D = (v * d) @ v.conj().T
    tol = DEFAULT_RANK_TOL if rank_tol is None else float(rank_tol)
    # eigh noise on 1 - C*C is ~ n eps, so D carries ~ sqrt(n eps) of noise
    floor = 10.0 * np.sqrt(max(n, 1) * np.finfo(float).eps)
    cut = tol * d.max() if relative and d.size and d.max() > 0 else tol
    cut = max(cut, floor)
    keep = d > cut
    order = np.argsort(d[keep])[::-1]
    basis = v[:, keep][:, order]
    eig = d[keep][order]
    for arr in (D, basis, eig):
        arr.setflags(write=False)
    return DefectData(D, basis, eig, float(cut), clamp)


def characteristic_operator(C, lam: complex, defects=None,
                            max_cond: float = 1e8) -> np.ndarray:
    """``-C + lam D_{C*} (1 - lam C*)^{-1} D_C`` as a full matrix."""
    lam = complex(lam)
    if abs(lam) > 0.95:
        raise ValueError(f"|lam| must be <= 0.95, got {abs(lam):.3f}")
    mat = _mat(C)
    if mat.shape[0] != mat.shape[1]:
        raise ValueError("characteristic functions are defined for square C")
    d_c, d_cs = defects if defects is not None else (defect(mat), defect(mat.conj().T))
    resolvent_arg = np.eye(mat.shape[0]) - lam * mat.conj().T
    cond = np.linalg.cond(resolvent_arg)
    if cond > max_cond:
        raise ConditioningError(f"cond(1 - lam C*) = {cond:.3e} exceeds {max_cond:.0e}")
    return -mat + lam * d_cs.defect_op @ np.linalg.solve(resolvent_arg, d_c.defect_op)


def characteristic_function(C, lam: complex, defects=None) -> np.ndarray:
    """``Theta_C(lam)`` compressed: ``B_{C*}^* (...) B_C``."""
    mat = _mat(C)
    d_c, d_cs = defects if defects is not None else (defect(mat), defect(mat.conj().T))
    full = characteristic_operator(mat, lam, (d_c, d_cs))
    return d_cs.basis.conj().T @ full @ d_c.basis


class CharIntertwineResidual(NamedTuple):
    """Relative residuals of the two intertwining relations and the defect inclusion."""

    res_star: float
    res_plain: float
    inclusion: float
    rank_phys: int
    rank_hardy: int


def _hat_matrix(omega) -> np.ndarray:
    if isinstance(omega, OperatorMatrix):
        return omega.hardy_coordinates()
    return np.asarray(omega, dtype=complex)


def _rel(x: np.ndarray, scale: float) -> float:
    if x.size == 0:
        return 0.0
    return float(np.linalg.norm(x, 2) / scale) if scale > 0 else float(np.linalg.norm(x, 2))


def char_intertwine_residual(omega, lam: complex,
                             rank_tol: float | None = None) -> CharIntertwineResidual:
    """Check ``Omega Theta_C(lam) = Theta_Chat(lam) Omega`` on the defect bases.

    ``C = Omega* Omega`` and ``Chat = Omega Omega*``.  When ``omega`` carries a
    Hardy basis the hat side is computed in those coordinates.  ``res_plain``
    acts on the basis of D_C, ``res_star`` (the adjoint relation
    ``Omega* Theta_Chat = Theta_C Omega*``) on the basis of D_Chat, and
    ``inclusion`` measures how much of ``Omega D_C`` leaves D_Chat.
    """
    om = _hat_matrix(omega)
    C = om.conj().T @ om
    Chat = om @ om.conj().T
    C = 0.5 * (C + C.conj().T)
    Chat = 0.5 * (Chat + Chat.conj().T)
    dc = defect(C, rank_tol)
    dh = defect(Chat, rank_tol)
    theta = characteristic_operator(C, lam, (dc, dc))
    theta_hat = characteristic_operator(Chat, lam, (dh, dh))
    scale = np.linalg.norm(om, 2)
    theta_scale = max(np.linalg.norm(theta, 2), np.linalg.norm(theta_hat, 2))
    plain = (om @ theta - theta_hat @ om) @ dc.basis
    star = (om.conj().T @ theta_hat - theta @ om.conj().T) @ dh.basis
    image = om @ dc.basis
    leak = image - dh.projector @ image
    return CharIntertwineResidual(
        _rel(star, scale * theta_scale),
        _rel(plain, scale * theta_scale),
        _rel(leak, np.linalg.norm(image, 2) if image.size else 1.0),
        dc.rank,
        dh.rank,
    )


def defect_principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Principal angles of the smaller subspace against the larger.

    A zero maximum angle certifies that the smaller span sits inside the
    larger one, which is all a finite cut of nested ranges can promise.
    """
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros(0)
    return subspace_angles(a, b)


def spectrum_gap(omega, tol: float = 1e-8) -> float:
    """Largest mismatch between the eigenvalues of ``Omega*Omega`` and ``Omega Omega*`` above ``tol``."""
    om = _hat_matrix(omega)
    s = np.linalg.svd(om, compute_uv=False) ** 2
    ev_phys = np.sort(np.linalg.eigvalsh(om.conj().T @ om))[::-1]
    ev_hat = np.sort(np.linalg.eigvalsh(om @ om.conj().T))[::-1]
    k = int(np.sum(s > tol))
    if k == 0:
        return 0.0
    return float(max(np.max(np.abs(ev_phys[:k] - ev_hat[:k])),
                     np.max(np.abs(ev_phys[:k] - s[:k]))))
