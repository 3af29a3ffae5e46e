"""Exponential solutions of the symbol recurrence and quasimodes of ``P_N - z``.

For a root ``zeta`` of multiplicity ``m`` of the characteristic polynomial the
sequences ``nu -> nu^k zeta^nu`` (``k < m``) solve ``(p(tau) - z) f = 0`` on
the whole line.  Combinations of the decaying ones that vanish on the
boundary rows ``nu = -N_+, ..., -1`` are half-line solutions; truncated to
``0..N-1`` they leave a residual only at the far edge, of size
``max|zeta|^N``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient, WrongIndexSign
from .operators import OperatorSpec, build_toeplitz
from .symbol import LaurentSymbol, roots_split

SIDES = ("decaying_right", "decaying_left")


@dataclass(frozen=True)
class ExpSolutionBasis:
    z: complex
    modes: tuple[tuple[complex, int], ...]
    side: str

    def __len__(self):
        return len(self.modes)


def exp_solution_basis(sym: LaurentSymbol, z: complex, side: str = "decaying_right") -> ExpSolutionBasis:
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    split = roots_split(sym, z)
    roots = split.inside if side == "decaying_right" else split.outside
    modes = tuple((r, k) for r, m in roots for k in range(m))
    return ExpSolutionBasis(complex(z), modes, side)


def mode_matrix(basis: ExpSolutionBasis, nus, anchor: int = 0) -> np.ndarray:
    """Columns ``nu^k zeta^(nu - anchor)`` for each mode, rows ``nus``."""
    nus = np.asarray(nus, dtype=float)
    out = np.empty((nus.size, len(basis)), dtype=complex)
    for col, (zeta, k) in enumerate(basis.modes):
        out[:, col] = nus**k * zeta ** (nus - anchor)
    return out


def recurrence_residual(sym: LaurentSymbol, z: complex, zeta: complex, k: int, window) -> float:
    """Relative size of ``(p(tau) - z) f`` on ``window`` for ``f = nu^k zeta^nu``."""
    nus = np.asarray(window, dtype=float)

    def f(n):
        return n**k * zeta**n

    res = -complex(z) * f(nus)
    for j, c in sym.coeffs.items():
        res = res + c * f(nus - j)
    scale = np.max(np.abs(f(nus))) * max(1.0, sum(abs(c) for c in sym.coeffs.values()) + abs(z))
    return float(np.max(np.abs(res)) / scale)


def boundary_matrix(sym: LaurentSymbol, z: complex, basis: ExpSolutionBasis | None = None,
                    rtol: float = 1e-10) -> np.ndarray:
    """Right-decaying modes on rows ``nu = -N_+, ..., -1`` (columns scaled by ``zeta^{N_+}``)."""
    if basis is None:
        basis = exp_solution_basis(sym, z, "decaying_right")
    n_plus = sym.n_plus
    A = mode_matrix(basis, np.arange(-n_plus, 0), anchor=-n_plus)
    if A.size:
        s = np.linalg.svd(A, compute_uv=False)
        rank = int(np.sum(s > rtol * s[0]))
        if rank != min(A.shape):
            raise RankDeficient(f"boundary matrix has rank {rank}, expected {min(A.shape)}")
    return A


def null_space(A: np.ndarray, n_cols: int, rtol: float = 1e-10) -> np.ndarray:
    if A.shape[0] == 0:
        return np.eye(n_cols, dtype=complex)
    _, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > rtol * s[0])) if s.size else 0
    return vh[rank:].conj().T


@dataclass(frozen=True)
class Quasimode:
    vector: np.ndarray
    residual: float
    side: str
    kernel_dim: int


def _right_quasimode(sym: LaurentSymbol, N: int, z: complex, P: np.ndarray):
    basis = exp_solution_basis(sym, z, "decaying_right")
    A = boundary_matrix(sym, z, basis)
    V = null_space(A, len(basis))
    anchor = -sym.n_plus
    B = mode_matrix(basis, np.arange(N), anchor=anchor) @ V
    Qm, _ = np.linalg.qr(B)
    R = (P - z * np.eye(N)) @ Qm
    _, _, vh = np.linalg.svd(R)
    e = Qm @ vh[-1].conj()
    e = e / np.linalg.norm(e)
    residual = float(np.linalg.norm((P - z * np.eye(N)) @ e))
    return e, residual, V.shape[1]


def build_quasimode(spec: OperatorSpec, z: complex, side: str = "auto") -> Quasimode:
    """Unit vector with exponentially small residual at ``z``.

    ``side="plus"`` needs ``m_+ > N_+`` and returns ``e`` with small
    ``||(P_N - z) e||``.  ``side="minus"`` needs ``m_- > N_-`` and works on the
    adjoint symbol at ``conj(z)``, returning ``e`` with small
    ``||(P_N - z)^* e||``.  ``"auto"`` picks whichever applies.
    """
    sym = spec.symbol
    z = complex(z)
    split = roots_split(sym, z)
    index = split.m_plus - sym.n_plus
    if side == "auto":
        if index == 0:
            raise WrongIndexSign(f"index is 0 at z = {z:g}: no exponentially accurate quasimode")
        side = "plus" if index > 0 else "minus"
    if side == "plus":
        if index <= 0:
            raise WrongIndexSign(f"need m_+ > N_+ (index {index}) for a right quasimode")
        e, res, dim = _right_quasimode(sym, spec.N, z, build_toeplitz(spec))
    elif side == "minus":
        if index >= 0:
            raise WrongIndexSign(f"need m_- > N_- (index {index}) for an adjoint quasimode")
        adj = sym.adjoint()
        P_adj = build_toeplitz(spec).conj().T
        e, res, dim = _right_quasimode(adj, spec.N, z.conjugate(), P_adj)
    else:
        raise ValueError("side must be 'auto', 'plus' or 'minus'")
    return Quasimode(e, res, side, dim)
