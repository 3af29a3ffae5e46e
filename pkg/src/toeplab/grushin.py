"""Grushin reduction of the Toeplitz matrix through the circulant.

Ordering the circulant indices as ``I_N`` followed by ``J`` turns
``C - z`` into the bordered matrix::

    [[P_N - z,  R_minus     ],
     [R_plus,   R_plus_minus]]

whose inverse, built from the kernel ``K_N``, is::

    [[E,        E_plus      ],
     [E_minus,  E_minus_plus]]

Then ``det(P_N - z) = det(C - z) * det(E_minus_plus)``.  A perturbation
``delta Q`` of the top-left block changes the effective matrix to
``E_minus_plus - E_minus dQ (1 + E dQ)^{-1} E_plus``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import NeumannDivergence, NumericalError, OnSpectrum, RankDeficient
from .linalg import banded_log_abs_det_mp, log_abs_det_mp, lu_log_abs_det, operator_norm_estimate, solve
from .operators import OperatorSpec, build_circulant, build_toeplitz, circulant_spectrum, kernel_table


@dataclass(frozen=True)
class GrushinProblem:
    """The circulant minus ``z`` partitioned by ``I_N`` and ``J``."""

    z: complex
    P: np.ndarray
    R_minus: np.ndarray
    R_plus: np.ndarray
    R_plus_minus: np.ndarray
    permutation: np.ndarray

    def assembled(self) -> np.ndarray:
        return np.block([[self.P, self.R_minus], [self.R_plus, self.R_plus_minus]])


def _rank(A: np.ndarray, rtol: float = 1e-10) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s > rtol * max(1.0, s[0] if s.size else 0.0)))


def assemble_grushin_problem(spec: OperatorSpec, z: complex, check_rank: bool = True) -> GrushinProblem:
    z = complex(z)
    perm = np.concatenate([spec.I, spec.J])
    C = build_circulant(spec) - z * np.eye(spec.n_tilde)
    B = C[np.ix_(perm, perm)]
    N = spec.N
    prob = GrushinProblem(z, B[:N, :N], B[:N, N:], B[N:, :N], B[N:, N:], perm)
    if check_rank:
        m = spec.symbol.band
        if _rank(prob.R_plus) != m or _rank(prob.R_minus) != m:
            raise RankDeficient("border blocks are not of full rank |J|")
    return prob


@dataclass(frozen=True)
class GrushinBlocks:
    z: complex
    spec: OperatorSpec
    E: np.ndarray
    E_plus: np.ndarray
    E_minus: np.ndarray
    E_minus_plus: np.ndarray

    def assembled(self) -> np.ndarray:
        return np.block([[self.E, self.E_plus], [self.E_minus, self.E_minus_plus]])


def grushin_blocks(spec: OperatorSpec, z: complex, table: np.ndarray | None = None) -> GrushinBlocks:
    """Inverse blocks, each entry a value ``K_N(z; s - t)`` of the circulant kernel."""
    z = complex(z)
    if table is None:
        table = kernel_table(spec, z)
    n = spec.n_tilde
    I, J = spec.I, spec.J

    def block(rows, cols):
        return table[np.mod(rows[:, None] - cols[None, :], n)]

    return GrushinBlocks(z, spec, block(I, I), block(I, J), block(J, I), block(J, J))


def circulant_log_abs_det(spec: OperatorSpec, z: complex) -> float:
    d = np.abs(circulant_spectrum(spec) - complex(z))
    if np.min(d) == 0:
        raise OnSpectrum(f"z = {z:g} is an eigenvalue of the circulant")
    return float(np.sum(np.log(d)))


@dataclass(frozen=True)
class PerturbedEffective:
    E_minus_plus_delta: np.ndarray
    delta: float
    first_order: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def perturbed_effective(spec: OperatorSpec, z: complex, Q: np.ndarray, delta: float,
                        blocks: GrushinBlocks | None = None,
                        norm_E: float | None = None) -> PerturbedEffective:
    """Effective matrix of ``P_N + delta Q - z`` by one ``N x N`` solve.

    Requires ``||delta Q|| ||E|| < 1/2``; ``norm_E`` may be passed in when
    the same blocks serve many draws of ``Q``.  The returned diagnostics hold the
    norms and the check ``||E_mp^delta - E_mp|| <= 2 ||E_+|| ||E_-|| ||delta Q||``.
    """
    if blocks is None:
        blocks = grushin_blocks(spec, z)
    Q = np.asarray(Q, dtype=complex)
    if delta == 0:
        E_mp = blocks.E_minus_plus.copy()
        return PerturbedEffective(E_mp, 0.0, E_mp.copy(), {"bound_holds": True, "deviation": 0.0})
    if norm_E is None:
        norm_E = operator_norm_estimate(blocks.E)
    # the Hilbert-Schmidt norm bounds the operator norm from above and is
    # cheap; the power-iteration estimate is needed only when it is too crude
    norm_dQ = abs(delta) * float(np.linalg.norm(Q))
    if norm_dQ * norm_E >= 0.5:
        norm_dQ = abs(delta) * operator_norm_estimate(Q)
    if norm_dQ * norm_E >= 0.5:
        raise NeumannDivergence(
            f"||delta Q|| * ||E|| = {norm_dQ * norm_E:.3g} >= 1/2"
        )
    dQ = delta * Q
    N = spec.N
    X = solve(np.eye(N) + blocks.E @ dQ, blocks.E_plus)
    exact = blocks.E_minus_plus - blocks.E_minus @ (dQ @ X)
    first = blocks.E_minus_plus - blocks.E_minus @ (dQ @ blocks.E_plus)
    norm_Ep = float(np.linalg.norm(blocks.E_plus, 2))
    norm_Em = float(np.linalg.norm(blocks.E_minus, 2))
    deviation = float(np.linalg.norm(exact - blocks.E_minus_plus, 2))
    bound = 2.0 * norm_Ep * norm_Em * norm_dQ * (1 + 1e-5)
    diag = {
        "norm_E": norm_E,
        "norm_delta_Q": norm_dQ,
        "norm_E_plus": norm_Ep,
        "norm_E_minus": norm_Em,
        "deviation": deviation,
        "bound": bound,
        "bound_holds": deviation <= bound,
        "first_order_error": float(np.linalg.norm(exact - first, 2)),
    }
    if __debug__:
        assert diag["bound_holds"], f"perturbation bound violated: {deviation} > {bound}"
    return PerturbedEffective(exact, float(delta), first, diag)


@dataclass(frozen=True)
class DetFactorization:
    lhs: float
    rhs: float
    circulant_term: float
    neumann_term: float
    effective_term: float
    dps: int | None = None  # decimal digits when computed in extended precision

    @property
    def error(self) -> float:
        return abs(self.lhs - self.rhs)


def _effective_block_mp(spec: OperatorSpec, z: complex, dps: int):
    """``E_minus_plus`` from the Fourier-sum kernel in ``dps``-digit arithmetic."""
    sym = spec.symbol
    n = spec.n_tilde
    Jv = list(range(-sym.n_minus, sym.n_plus))
    with mpmath.workdps(dps):
        zz = mpmath.mpc(z)
        coeffs = [(j, mpmath.mpc(c)) for j, c in sym.coeffs.items()]
        roots = [mpmath.expjpi(mpmath.mpf(2 * k) / n) for k in range(n)]
        inv = []
        for k in range(n):
            lam = mpmath.fsum(c * mpmath.expjpi(mpmath.mpf(-2 * ((k * j) % n)) / n) for j, c in coeffs)
            inv.append(1 / (lam - zz))
        cache = {}

        def K(r):
            if r not in cache:
                cache[r] = mpmath.fsum(roots[(k * r) % n] * inv[k] for k in range(n)) / n
            return cache[r]

        return [[K(nu - mu) for mu in Jv] for nu in Jv]


def _extended_factorization(spec: OperatorSpec, z: complex, dps: int) -> tuple[float, float]:
    """``log|det(P_N - z)|`` and ``log|det E_minus_plus|`` at ``dps`` digits."""
    sym = spec.symbol
    A = build_toeplitz(spec) - z * np.eye(spec.N)
    lhs = banded_log_abs_det_mp(A, sym.n_plus, sym.n_minus, dps)
    eff = log_abs_det_mp(_effective_block_mp(spec, z, dps), dps)
    return float(lhs), float(eff)


def effective_det_factorization(spec: OperatorSpec, z: complex, Q: np.ndarray | None = None,
                                delta: float = 0.0, precision: str = "auto",
                                cond_limit: float = 1e8) -> DetFactorization:
    """Both sides of the log-determinant identity.

    ``lhs = log|det(P_N + delta Q - z)|`` by LU.  ``rhs`` is the sum of the
    circulant term ``sum_k log|lambda_k - z|``, the Neumann term
    ``log|det(1 + E delta Q)|`` (zero when ``delta = 0``) and
    ``log|det E_minus_plus^delta|``.

    Where the winding number is nonzero the unperturbed ``P_N - z`` has an
    exponentially small singular value and double-precision LU only sees
    rounding noise.  With ``precision="auto"`` and ``delta = 0`` both sides are
    then recomputed with ``mpmath`` (banded LU and a high-precision kernel),
    raising the digit count until two precisions agree.  ``"double"`` and
    ``"extended"`` force one path.
    """
    if precision not in ("auto", "double", "extended"):
        raise ValueError("precision must be 'auto', 'double' or 'extended'")
    z = complex(z)
    A = build_toeplitz(spec) - z * np.eye(spec.N)
    perturbed = Q is not None and delta != 0
    if perturbed:
        A = A + delta * np.asarray(Q, dtype=complex)
    circ = circulant_log_abs_det(spec, z)
    blocks = grushin_blocks(spec, z)
    if perturbed:
        eff = perturbed_effective(spec, z, Q, delta, blocks)
        neumann = lu_log_abs_det(np.eye(spec.N) + delta * blocks.E @ np.asarray(Q, dtype=complex))
    else:
        eff = perturbed_effective(spec, z, np.zeros((spec.N, spec.N)), 0.0, blocks)
        neumann = 0.0
    use_mp = False
    if not perturbed and precision != "double":
        if precision == "extended":
            use_mp = True
        else:
            s = np.linalg.svd(eff.E_minus_plus_delta, compute_uv=False)
            use_mp = s[-1] < s[0] / cond_limit
    if use_mp:
        dps, prev = 40, None
        while dps <= 640:
            cur = _extended_factorization(spec, z, dps)
            change = max(abs(cur[0] - prev[0]), abs(cur[1] - prev[1])) if prev else math.inf
            if change <= 1e-12 * max(1.0, abs(cur[0])):
                return DetFactorization(cur[0], circ + cur[1], circ, 0.0, cur[1], dps)
            prev = cur
            dps *= 2
        raise NumericalError("extended-precision determinant did not stabilize")
    lhs = lu_log_abs_det(A)
    eff_term = lu_log_abs_det(eff.E_minus_plus_delta)
    return DetFactorization(lhs, circ + neumann + eff_term, circ, neumann, eff_term)


def singular_values_E_pm(blocks: GrushinBlocks) -> tuple[np.ndarray, np.ndarray]:
    """Singular values of ``E_plus`` and of ``E_minus^*``, descending."""
    s_plus = np.linalg.svd(blocks.E_plus, compute_uv=False)
    s_minus = np.linalg.svd(blocks.E_minus.conj().T, compute_uv=False)
    return s_plus, s_minus


def phi(spec: OperatorSpec, z: complex) -> float:
    """``(1/N) sum_k log|lambda_k - z|`` over all ``Ntilde`` circulant eigenvalues."""
    return circulant_log_abs_det(spec, z) / spec.N


def psi(spec: OperatorSpec, z: complex, C_psi: float = 1.0) -> float:
    return phi(spec, z) + C_psi * math.log(spec.N) / spec.N


def alpha(spec: OperatorSpec, z: complex) -> float:
    """Distance from ``z`` to the circulant spectrum."""
    return float(np.min(np.abs(circulant_spectrum(spec) - complex(z))))


def delta_scale_warning(spec: OperatorSpec, z: complex, delta: float) -> bool:
    """Warn when ``delta`` is not small against ``alpha / N^3``; returns True if it is."""
    a = alpha(spec, z)
    ok = delta < a / spec.N**3
    if not ok:
        warnings.warn(
            f"delta = {delta:g} is not small compared with alpha/N^3 = {a / spec.N**3:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    return ok
