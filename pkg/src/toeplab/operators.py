"""Toeplitz and circulant matrices of a symbol, their spectra and resolvent kernels.

Index conventions
-----------------
The Toeplitz matrix acts on ``u(0), ..., u(N-1)`` with ``M[nu, mu] = a_{nu-mu}``.
The circulant acts on ``Z / Ntilde Z`` with ``Ntilde = N + N_+ + N_-``.  Its
indices split as ``I_N = {N_+, ..., N_+ + N - 1}`` (Toeplitz index ``nu`` sits
at ``N_+ + nu``) and ``J = {-N_-, ..., N_+ - 1}`` taken mod ``Ntilde``.  With
this identification the Toeplitz matrix is the ``I_N`` principal block of
the circulant.

The circulant resolvent is convolution by
``K_N(nu) = (1/Ntilde) sum_k omega_k^nu / (lambda_k - z)`` with
``omega_k = exp(2 pi i k / Ntilde)`` and ``lambda_k = sum_j a_j omega_k^{-j}``.
It is the periodization of the bi-infinite kernel ``K_inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCriticalPoint,
    InvariantViolation,
    OnSpectrum,
    Overlap,
    PreconditionViolated,
    QuadratureStall,
)
from .symbol import (
    LaurentSymbol,
    aberth_roots,
    curve_derivative,
    eval_symbol,
    preimage_measure,
    roots_split,
    symbol_derivative,
    _raw_characteristic,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class OperatorSpec:
    """A symbol together with the Toeplitz dimension ``N``."""

    symbol: LaurentSymbol
    N: int

    def __post_init__(self):
        if self.N < self.symbol.band + 1:
            raise InvariantViolation(
                f"N = {self.N} too small: need N >= N_+ + N_- + 1 = {self.symbol.band + 1}"
            )

    @property
    def n_tilde(self) -> int:
        return self.N + self.symbol.band

    @property
    def I(self) -> np.ndarray:
        """Circulant indices of the Toeplitz block."""
        return np.arange(self.symbol.n_plus, self.symbol.n_plus + self.N)

    @property
    def J(self) -> np.ndarray:
        """Circulant indices of the border, ordered ``-N_-, ..., N_+ - 1`` (mod Ntilde)."""
        s = self.symbol
        return np.mod(np.arange(-s.n_minus, s.n_plus), self.n_tilde)


def build_toeplitz(spec: OperatorSpec) -> np.ndarray:
    N = spec.N
    M = np.zeros((N, N), dtype=complex)
    for j, c in spec.symbol.coeffs.items():
        if abs(j) < N:
            idx = np.arange(max(0, j), min(N, N + j))
            M[idx, idx - j] = c
    return M


def build_circulant_raw(sym: LaurentSymbol, n_tilde: int) -> np.ndarray:
    if n_tilde <= sym.band:
        raise Overlap(f"circulant size {n_tilde} <= N_+ + N_- = {sym.band}: band wraps onto itself")
    M = np.zeros((n_tilde, n_tilde), dtype=complex)
    rows = np.arange(n_tilde)
    for j, c in sym.coeffs.items():
        M[rows, (rows - j) % n_tilde] = c
    return M


def build_circulant(spec: OperatorSpec) -> np.ndarray:
    return build_circulant_raw(spec.symbol, spec.n_tilde)


def circulant_spectrum_raw(sym: LaurentSymbol, n_tilde: int) -> np.ndarray:
    """``lambda_k = sum_j a_j omega_k^{-j}`` for ``k = 0..n_tilde-1``."""
    k = np.arange(n_tilde)
    lam = np.zeros(n_tilde, dtype=complex)
    for j, c in sym.coeffs.items():
        lam += c * np.exp(-2j * math.pi * np.mod(k * j, n_tilde) / n_tilde)
    return lam


def circulant_spectrum(spec: OperatorSpec) -> np.ndarray:
    return circulant_spectrum_raw(spec.symbol, spec.n_tilde)


# ----------------------------------------------------------------------------
# bi-infinite kernel


def contour_radius(split, sign: int = 0) -> float:
    """Radius of a circle inside the root-free annulus for offsets of the given sign.

    ``sign = 0`` takes the geometric mean of the innermost outside root and the
    outermost inside root (1 stands in for a missing side).  Positive offsets
    move the circle toward the inside roots and negative ones toward the outside
    roots, which keeps ``|zeta|^k`` on the circle near the size of the result and
    avoids cancellation for large ``|k|``.
    """
    rin = max((abs(r) for r, _ in split.inside), default=1.0)
    rout = min((abs(r) for r, _ in split.outside), default=1.0)
    w = 0.5 if sign == 0 else (0.8 if sign > 0 else 0.2)
    return float(rin**w * rout ** (1.0 - w))


def kernel_by_quadrature(sym: LaurentSymbol, z: complex, k, radius: float,
                         tol: float = 1e-11, n0: int = 64, n_max: int = 2**20):
    """Trapezoidal rule for ``mean_theta zeta^k / (p(1/zeta) - z)`` on ``|zeta| = radius``."""
    ks = np.atleast_1d(np.asarray(k, dtype=int))
    n = n0
    prev = None
    while n <= n_max:
        theta = TWO_PI * np.arange(n) / n
        zeta = radius * np.exp(1j * theta)
        g = 1.0 / (eval_symbol(sym, zeta) - z)
        vals = np.mean(zeta[None, :] ** ks[:, None] * g[None, :], axis=1)
        if prev is not None and np.all(np.abs(vals - prev) <= tol * np.maximum(1.0, np.abs(vals))):
            return vals
        prev = vals
        n *= 2
    raise QuadratureStall(f"trapezoidal rule did not settle with {n_max} nodes")


def _well_separated(roots, rel: float = 1e-4) -> bool:
    """Whether no two roots are close enough to spoil the simple-residue formula."""
    r = np.asarray(roots, dtype=complex)
    if r.size < 2:
        return True
    d = np.abs(r[:, None] - r[None, :])
    np.fill_diagonal(d, np.inf)
    return bool(np.min(d) >= rel * max(1.0, float(np.max(np.abs(r)))))


def kernel_K_infinity_many(sym: LaurentSymbol, z: complex, ks, split=None) -> np.ndarray:
    """``K_inf(z; k)`` for an array of integers ``k``."""
    z = complex(z)
    ks = np.atleast_1d(np.asarray(ks, dtype=int))
    if split is None:
        split = roots_split(sym, z)
    out = np.empty(ks.size, dtype=complex)
    use_quad = np.ones(ks.size, dtype=bool)
    if split.simple and _well_separated(split.roots()):
        inside = np.array([r for r, _ in split.inside], dtype=complex)
        outside = np.array([r for r, _ in split.outside], dtype=complex)
        pos = ks >= 1
        neg = ks <= -1
        if pos.any():
            w = 1.0 / symbol_derivative(sym, inside) if inside.size else np.empty(0)
            out[pos] = w @ np.power.outer(inside, ks[pos] - 1) if inside.size else 0
        if neg.any():
            w = 1.0 / symbol_derivative(sym, outside) if outside.size else np.empty(0)
            out[neg] = -(w @ np.power.outer(outside, ks[neg] - 1)) if outside.size else 0
        use_quad = ~(pos | neg)
    for sign in (-1, 0, 1):
        sel = use_quad & (np.sign(ks) == sign)
        if sel.any():
            out[sel] = kernel_by_quadrature(sym, z, ks[sel], contour_radius(split, sign))
    return out


def kernel_K_infinity(sym: LaurentSymbol, z: complex, k: int) -> complex:
    """Kernel of ``(p(tau) - z)^{-1}`` on ``l^2(Z)`` at offset ``k``.

    Residues at simple, well separated roots for ``|k| >= 1``; contour
    quadrature otherwise (``k = 0``, clustered or multiple roots).
    """
    return complex(kernel_K_infinity_many(sym, z, [k])[0])


# ----------------------------------------------------------------------------
# periodic kernel


def _check_off_spectrum(lam: np.ndarray, z: complex) -> np.ndarray:
    diff = lam - z
    if np.min(np.abs(diff)) == 0.0:
        raise OnSpectrum(f"z = {z:g} is an eigenvalue of the circulant")
    return diff


def kernel_table(spec: OperatorSpec, z: complex, check: bool = False) -> np.ndarray:
    """``K_N(z; nu)`` for ``nu = 0..Ntilde-1`` by the discrete Fourier sum."""
    z = complex(z)
    n = spec.n_tilde
    lam = circulant_spectrum(spec)
    inv = 1.0 / _check_off_spectrum(lam, z)
    table = np.empty(n, dtype=complex)
    k = np.arange(n)
    chunk = max(1, 2**20 // n)
    for start in range(0, n, chunk):
        nu = np.arange(start, min(n, start + chunk))
        phase = np.exp(2j * math.pi * np.mod(np.outer(nu, k), n) / n)
        table[start:start + nu.size] = phase @ inv / n
    if check and __debug__:
        ref = periodized_kernel(spec.symbol, z, n, np.arange(n))
        if ref is not None:
            err = np.max(np.abs(ref - table))
            assert err <= 1e-8 * max(1.0, np.max(np.abs(table))), f"kernel forms disagree by {err:.3g}"
    return table


def periodized_kernel(sym: LaurentSymbol, z: complex, n_tilde: int, nus, tol: float = 1e-14,
                      max_terms: int = 4000):
    """``sum_m K_inf(nu + m n_tilde)``; ``None`` if it does not settle in ``max_terms``."""
    nus = np.asarray(nus, dtype=int)
    total = kernel_K_infinity_many(sym, z, nus)
    split = roots_split(sym, z)
    for m in range(1, max_terms):
        up = kernel_K_infinity_many(sym, z, nus + m * n_tilde, split)
        down = kernel_K_infinity_many(sym, z, nus - m * n_tilde, split)
        total = total + up + down
        if max(np.max(np.abs(up)), np.max(np.abs(down))) < tol:
            return total
    return None


def kernel_K_N(spec: OperatorSpec, z: complex, nu: int, check: bool = True) -> complex:
    """Circulant resolvent kernel at offset ``nu`` (``Ntilde``-periodic).

    With ``check`` the periodized bi-infinite kernel is compared against the
    Fourier sum (debug builds only).
    """
    z = complex(z)
    n = spec.n_tilde
    r = int(nu) % n
    lam = circulant_spectrum(spec)
    inv = 1.0 / _check_off_spectrum(lam, z)
    k = np.arange(n)
    value = complex(np.sum(np.exp(2j * math.pi * np.mod(k * r, n) / n) * inv) / n)
    if check and __debug__ and np.min(np.abs(lam - z)) >= 1e-3:
        try:
            ref = periodized_kernel(spec.symbol, z, n, [r])
        except Exception:
            ref = None
        if ref is not None:
            assert abs(ref[0] - value) <= 1e-8 * max(1.0, abs(value)), (
                f"periodized kernel {ref[0]} != Fourier kernel {value}"
            )
    return value


def resolvent_from_kernel(table: np.ndarray) -> np.ndarray:
    """Dense circulant ``[K(nu - mu)]`` from a kernel table."""
    n = table.size
    idx = np.arange(n)
    return table[np.mod(idx[:, None] - idx[None, :], n)]


# ----------------------------------------------------------------------------
# counting and spacing


def circulant_weyl_count(spec: OperatorSpec, region) -> tuple[int, float]:
    """Number of circulant eigenvalues in ``region`` and ``(N / 2 pi) * arc measure``."""
    lam = circulant_spectrum(spec)
    count = int(np.sum(region.contains(lam)))
    predicted = spec.N / TWO_PI * preimage_measure(spec.symbol, region)
    return count, predicted


@dataclass(frozen=True)
class SegmentGap:
    theta_star: float
    count: int
    min_gap: float
    gap_times_n: float


def curve_preimages(sym: LaurentSymbol, z0: complex, tol: float = 1e-6) -> np.ndarray:
    """All ``theta`` in ``[0, 2 pi)`` with ``f(theta) = z0``."""
    c = _raw_characteristic(sym, complex(z0))
    nz = np.nonzero(np.abs(c) > 0)[0]
    c = c[nz[0]:nz[-1] + 1]
    roots = aberth_roots(c) if c.size > 1 else np.empty(0)
    on = roots[np.abs(np.abs(roots) - 1.0) < tol]
    # f(theta) = p(1/zeta) with zeta = exp(-i theta)
    thetas = np.sort(np.mod(-np.angle(on), TWO_PI))
    if thetas.size > 1:
        keep = np.concatenate([[True], np.diff(thetas) > 1e-6])
        thetas = thetas[keep]
    return thetas


def eigenvalue_spacing_check(spec: OperatorSpec, z0: complex, neighborhood_radius: float,
                             deriv_tol: float = 1e-6) -> list[SegmentGap]:
    """Minimal gap of circulant eigenvalues on each curve segment near ``z0``."""
    sym = spec.symbol
    z0 = complex(z0)
    thetas = curve_preimages(sym, z0)
    if thetas.size == 0:
        raise PreconditionViolated(f"z0 = {z0:g} is not on the curve")
    scale = max(abs(c) for c in sym.coeffs.values())
    for t in thetas:
        if abs(curve_derivative(sym, t)) <= deriv_tol * scale:
            raise DegenerateCriticalPoint(f"curve derivative vanishes at theta = {t:.6g}")
    n = spec.n_tilde
    lam = circulant_spectrum(spec)
    theta_k = np.mod(-TWO_PI * np.arange(n) / n, TWO_PI)
    order = np.argsort(theta_k)
    theta_sorted = theta_k[order]
    lam_sorted = lam[order]
    out = []
    for t in thetas:
        start = int(np.searchsorted(theta_sorted, t)) % n
        picked = set()
        for direction in (1, -1):
            step = 0 if direction == 1 else 1
            while step < n:
                i = (start + direction * step) % n
                if abs(lam_sorted[i] - z0) > neighborhood_radius:
                    break
                picked.add(i)
                step += 1
        seg = lam_sorted[sorted(picked)]
        if seg.size < 2:
            out.append(SegmentGap(float(t), int(seg.size), float("nan"), float("nan")))
            continue
        d = np.abs(seg[:, None] - seg[None, :])
        np.fill_diagonal(d, np.inf)
        gap = float(np.min(d))
        out.append(SegmentGap(float(t), int(seg.size), gap, gap * n))
    return out
