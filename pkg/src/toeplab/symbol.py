"""Laurent symbols and their curves.

A symbol is the finite family ``a_j``, ``-N_- <= j <= N_+``.  It defines the
operator ``p(tau) = sum_j a_j tau^j`` with ``(tau u)(k) = u(k-1)`` and the
closed curve ``theta -> sum_j a_j exp(i j theta)``.  The helpers below cover
evaluation, the characteristic polynomial at a spectral parameter, root
classification, the winding number, the Fredholm index and arc measures of
curve preimages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import (
    DegenerateParameter,
    InvariantViolation,
    NonConvergence,
    OnCurve,
    RefinementExhausted,
    RootsOnCircle,
    SuspectBoundary,
)

TWO_PI = 2.0 * math.pi
CIRCLE_TOL = 1e-9
CLUSTER_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class LaurentSymbol:
    """Coefficients ``a_j`` of ``p(tau) = sum_j a_j tau^j``.

    Use :meth:`from_coeffs` to build one; ``n_plus`` and ``n_minus`` are
    inferred from the support.
    """

    coeffs: Mapping[int, complex]
    n_plus: int
    n_minus: int
    name: str = field(default="", compare=False)

    def __post_init__(self):
        clean = {}
        for j, c in self.coeffs.items():
            j = int(j)
            c = complex(c)
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise InvariantViolation(f"coefficient a_{j} is not finite")
            if c != 0:
                clean[j] = c
        if self.n_plus < 0 or self.n_minus < 0:
            raise InvariantViolation("N_+ and N_- must be non-negative")
        if self.n_plus + self.n_minus < 1:
            raise InvariantViolation("need N_+ + N_- >= 1 (a non-constant symbol)")
        if clean and (max(clean) > self.n_plus or min(clean) < -self.n_minus):
            raise InvariantViolation("coefficient outside the band [-N_-, N_+]")
        if self.n_plus > 0 and self.n_plus not in clean:
            raise InvariantViolation(f"leading coefficient a_{self.n_plus} is zero")
        if self.n_minus > 0 and -self.n_minus not in clean:
            raise InvariantViolation(f"leading coefficient a_{-self.n_minus} is zero")
        object.__setattr__(self, "coeffs", MappingProxyType(dict(sorted(clean.items()))))

    @classmethod
    def from_coeffs(cls, coeffs: Mapping[int, complex], name: str = "") -> "LaurentSymbol":
        support = [int(j) for j, c in coeffs.items() if complex(c) != 0]
        if not support:
            raise InvariantViolation("symbol has no nonzero coefficient")
        n_plus = max(0, max(support))
        n_minus = max(0, -min(support))
        return cls(dict(coeffs), n_plus, n_minus, name)

    @property
    def band(self) -> int:
        """``M = N_+ + N_-``."""
        return self.n_plus + self.n_minus

    def a(self, j: int) -> complex:
        return self.coeffs.get(j, 0j)

    def powers(self) -> np.ndarray:
        return np.fromiter(self.coeffs.keys(), dtype=float, count=len(self.coeffs))

    def values(self) -> np.ndarray:
        return np.fromiter(self.coeffs.values(), dtype=complex, count=len(self.coeffs))

    def adjoint(self) -> "LaurentSymbol":
        """Symbol of ``p(tau)^*``: coefficients ``conj(a_{-j})``."""
        return LaurentSymbol.from_coeffs(
            {-j: c.conjugate() for j, c in self.coeffs.items()},
            name=f"{self.name}*" if self.name else "",
        )

    def sup_norm(self, n: int = 4096) -> float:
        return float(np.max(np.abs(eval_curve(self, np.linspace(0, TWO_PI, n, endpoint=False)))))

    def __eq__(self, other):
        if not isinstance(other, LaurentSymbol):
            return NotImplemented
        return dict(self.coeffs) == dict(other.coeffs)

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    def __repr__(self):
        terms = ", ".join(f"a_{j}={c:g}" for j, c in self.coeffs.items())
        return f"LaurentSymbol({terms})"


@dataclass(frozen=True)
class RootSplit:
    """Roots of the characteristic polynomial at ``z`` split by the unit circle."""

    z: complex
    inside: tuple[tuple[complex, int], ...]
    outside: tuple[tuple[complex, int], ...]
    m_plus: int
    m_minus: int

    def roots(self, side: str = "all") -> list[complex]:
        groups = {"inside": self.inside, "outside": self.outside}.get(side, self.inside + self.outside)
        return [r for r, m in groups for _ in range(m)]

    @property
    def simple(self) -> bool:
        return all(m == 1 for _, m in self.inside + self.outside)


def eval_curve(sym: LaurentSymbol, theta):
    """``f(theta) = sum_j a_j exp(i j theta)``; scalar or array input."""
    th = np.asarray(theta, dtype=float)
    out = np.zeros(th.shape, dtype=complex)
    for j, c in sym.coeffs.items():
        out += c * np.exp(1j * j * th)
    return complex(out) if out.ndim == 0 else out


def curve_derivative(sym: LaurentSymbol, theta):
    th = np.asarray(theta, dtype=float)
    out = np.zeros(th.shape, dtype=complex)
    for j, c in sym.coeffs.items():
        out += 1j * j * c * np.exp(1j * j * th)
    return complex(out) if out.ndim == 0 else out


def eval_symbol(sym: LaurentSymbol, zeta):
    """``p(1/zeta) = sum_j a_j zeta^{-j}``."""
    w = np.asarray(zeta, dtype=complex)
    out = np.zeros(w.shape, dtype=complex)
    for j, c in sym.coeffs.items():
        out += c * w ** (-j)
    return complex(out) if out.ndim == 0 else out


def symbol_derivative(sym: LaurentSymbol, zeta):
    """``d/dzeta p(1/zeta) = sum_j -j a_j zeta^{-j-1}``."""
    w = np.asarray(zeta, dtype=complex)
    out = np.zeros(w.shape, dtype=complex)
    for j, c in sym.coeffs.items():
        if j:
            out += -j * c * w ** (-j - 1)
    return complex(out) if out.ndim == 0 else out


def _raw_characteristic(sym: LaurentSymbol, z: complex) -> np.ndarray:
    n_plus, band = sym.n_plus, sym.band
    c = np.array([sym.a(n_plus - j) for j in range(band + 1)], dtype=complex)
    c[n_plus] -= z
    return c


def characteristic_coeffs(sym: LaurentSymbol, z: complex) -> np.ndarray:
    """Ascending coefficients of ``sum_j a_{N_+-j} zeta^j - z zeta^{N_+}``.

    Raises :class:`DegenerateParameter` when the polynomial loses its leading
    or constant term, i.e. ``z = a_0`` while ``N_-`` or ``N_+`` vanishes.
    """
    z = complex(z)
    c = _raw_characteristic(sym, z)
    scale = max(1.0, float(np.max(np.abs(c))))
    if abs(c[-1]) <= 1e-14 * scale or abs(c[0]) <= 1e-14 * scale:
        raise DegenerateParameter(
            f"z = {z:g} is a special point (z = a_0 with N_+ or N_- equal to 0)"
        )
    return c


def aberth_roots(coeffs, tol: float = 1e-13, max_iter: int = 500) -> np.ndarray:
    """All roots of the polynomial with ascending ``coeffs``.

    Simultaneous Aberth-Ehrlich iteration started on a circle whose radius is
    the geometric mean of the root moduli.  A root is frozen once its update
    drops below ``tol`` relative to its modulus or its residual reaches the
    rounding level of the polynomial evaluation.
    """
    c = np.asarray(coeffs, dtype=complex)
    deg = c.size - 1
    if deg < 1:
        return np.empty(0, dtype=complex)
    if c[-1] == 0 or c[0] == 0:
        raise ValueError("leading and constant coefficients must be nonzero")
    if deg == 1:
        return np.array([-c[0] / c[1]])
    desc = c[::-1]
    ddesc = np.polyder(desc)
    absc = np.abs(desc)
    radius = (abs(c[0]) / abs(c[-1])) ** (1.0 / deg)
    k = np.arange(deg)
    x = radius * np.exp(1j * (TWO_PI * k / deg + 0.4)) * (1 + 0.01 * np.cos(k))
    active = np.ones(deg, dtype=bool)
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        pv = np.polyval(desc, x)
        bound = 8 * eps * deg * np.polyval(absc, np.abs(x))
        active &= np.abs(pv) > bound
        if not active.any():
            return x
        dpv = np.polyval(ddesc, x)
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        s = (1.0 / diff).sum(axis=1) - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pv / dpv
            step = ratio / (1 - ratio * s)
        bad = ~np.isfinite(step)
        step[bad] = 1e-3 * (1 + np.abs(x[bad]))
        step[~active] = 0
        x = x - step
        small = np.abs(step) <= tol * np.maximum(np.abs(x), tol)
        active &= ~small
        if not active.any():
            return x
    raise NonConvergence(f"Aberth iteration did not converge in {max_iter} steps (degree {deg})")


def cluster_roots(roots, cluster_tol: float = CLUSTER_TOL) -> list[tuple[complex, int]]:
    """Merge roots closer than ``cluster_tol`` (relative) into (mean, count)."""
    roots = list(np.asarray(roots, dtype=complex))
    parent = list(range(len(roots)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) <= cluster_tol * max(1.0, abs(roots[i])):
                parent[find(i)] = find(j)
    groups: dict[int, list[complex]] = {}
    for i, r in enumerate(roots):
        groups.setdefault(find(i), []).append(r)
    out = [(complex(np.mean(g)), len(g)) for g in groups.values()]
    out.sort(key=lambda rm: (abs(rm[0]), math.atan2(rm[0].imag, rm[0].real)))
    return out


def roots_split(
    sym: LaurentSymbol,
    z: complex,
    circle_tol: float = CIRCLE_TOL,
    cluster_tol: float = CLUSTER_TOL,
) -> RootSplit:
    z = complex(z)
    roots = aberth_roots(characteristic_coeffs(sym, z))
    clusters = cluster_roots(roots, cluster_tol)
    inside, outside = [], []
    for r, m in clusters:
        gap = abs(abs(r) - 1.0)
        if gap <= circle_tol:
            raise RootsOnCircle(f"root {r:g} has ||root| - 1| = {gap:.3g} <= {circle_tol:g}")
        (inside if abs(r) < 1 else outside).append((r, m))
    m_plus = sum(m for _, m in inside)
    m_minus = sum(m for _, m in outside)
    assert m_plus + m_minus == sym.band
    return RootSplit(z, tuple(inside), tuple(outside), m_plus, m_minus)


def _count_inside(sym: LaurentSymbol, z: complex) -> int:
    """Zeros of ``p(1/zeta) - z`` in the unit disk, tolerating degenerate ``z``.

    A vanishing leading term sends roots to infinity (outside); a vanishing
    constant term puts a root at the origin (inside).
    """
    c = _raw_characteristic(sym, complex(z))
    scale = max(1.0, float(np.max(np.abs(c))))
    nz = np.abs(c) > 1e-14 * scale
    if not nz.any():
        raise DegenerateParameter("characteristic polynomial vanishes identically")
    lo = int(np.argmax(nz))
    hi = int(len(c) - np.argmax(nz[::-1]))
    trimmed = c[lo:hi]
    roots = aberth_roots(trimmed) if trimmed.size > 1 else np.empty(0)
    return lo + int(np.sum(np.abs(roots) < 1))


def fredholm_index(sym: LaurentSymbol, z: complex) -> int:
    """``m_+ - N_+``, the index of the half-line operator minus ``z``."""
    try:
        split = roots_split(sym, z)
        m_plus = split.m_plus
    except DegenerateParameter:
        m_plus = _count_inside(sym, z)
    return m_plus - sym.n_plus


def winding_number(sym: LaurentSymbol, z: complex, tol: float = 1e-10, check: bool = True) -> int:
    """Winding number of the curve around ``z`` by argument tracking.

    The initial grid is refined locally wherever two consecutive samples of
    ``f(theta) - z`` turn by ``pi/2`` or more.  The orientation is that of
    increasing ``theta``, which makes the result equal ``N_+ - m_+``; with
    ``check`` (and assertions enabled) that identity is verified.
    """
    z = complex(z)
    n0 = max(512, 64 * sym.band)
    theta = np.linspace(0.0, TWO_PI, n0 + 1)
    w = eval_curve(sym, theta) - z
    min_width = TWO_PI * 2.0**-44
    for _ in range(64):
        if np.min(np.abs(w)) <= tol:
            raise OnCurve(f"z = {z:g} lies within {tol:g} of the curve")
        turn = np.angle(w[1:] / w[:-1])
        bad = np.abs(turn) >= math.pi / 2
        if not bad.any():
            break
        idx = np.nonzero(bad)[0]
        if np.min(theta[idx + 1] - theta[idx]) < min_width:
            raise RefinementExhausted("argument increments stay >= pi/2 at maximum refinement")
        mids = 0.5 * (theta[idx] + theta[idx + 1])
        theta = np.insert(theta, idx + 1, mids)
        w = np.insert(w, idx + 1, eval_curve(sym, mids) - z)
    else:
        raise RefinementExhausted("argument tracking did not settle")
    if np.min(np.abs(w)) < 1e-6:
        d, _ = dist_to_curve(sym, z)
        if d <= tol:
            raise OnCurve(f"z = {z:g} lies within {tol:g} of the curve")
    wind = int(round(float(np.sum(turn)) / TWO_PI))
    if __debug__ and check:
        expected = sym.n_plus - _count_inside(sym, z)
        assert wind == expected, f"winding {wind} != N_+ - m_+ = {expected} at z={z}"
    return wind


def _golden_refine(fun, a, b, tol):
    invphi = (math.sqrt(5) - 1) / 2
    while np.max(b - a) > tol:
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        left = fun(c) < fun(d)
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    mid = 0.5 * (a + b)
    return mid, fun(mid)


def dist_to_curve_many(sym: LaurentSymbol, zs, n_grid: int = 8192, tol: float = 1e-10,
                       candidates: int = 3, chunk: int = 256):
    """Vectorized :func:`dist_to_curve`: returns arrays ``(dist, theta_star)``."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    grid = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
    values = eval_curve(sym, grid)
    h = TWO_PI / n_grid
    dist = np.empty(zs.size)
    theta = np.empty(zs.size)
    for start in range(0, zs.size, chunk):
        zc = zs[start:start + chunk]
        d = np.abs(values[None, :] - zc[:, None])
        k = min(candidates, n_grid)
        best = np.argpartition(d, k - 1, axis=1)[:, :k]
        zrep = np.repeat(zc, k)
        centre = grid[best.ravel()]

        def fun(t, zrep=zrep):
            return np.abs(eval_curve(sym, t) - zrep)

        t_opt, d_opt = _golden_refine(fun, centre - h, centre + h, tol)
        d_opt = d_opt.reshape(-1, k)
        t_opt = t_opt.reshape(-1, k)
        pick = np.argmin(d_opt, axis=1)
        rows = np.arange(zc.size)
        dist[start:start + chunk] = d_opt[rows, pick]
        theta[start:start + chunk] = np.mod(t_opt[rows, pick], TWO_PI)
    return dist, theta


def dist_to_curve(sym: LaurentSymbol, z: complex, n_grid: int = 8192, tol: float = 1e-10):
    """Distance from ``z`` to the curve and an arg-min ``theta`` in ``[0, 2pi)``."""
    d, t = dist_to_curve_many(sym, [complex(z)], n_grid=n_grid, tol=tol)
    return float(d[0]), float(t[0])


def _transitions(sym, region, n):
    theta = np.linspace(0.0, TWO_PI, n, endpoint=False)
    inside = np.asarray(region.contains(eval_curve(sym, theta)), dtype=bool)
    nxt = np.roll(inside, -1)
    idx = np.nonzero(inside != nxt)[0]
    return theta, inside, idx


def preimage_measure(sym: LaurentSymbol, region, n_grid: int = 16384, tol: float = 1e-10) -> float:
    """Arc measure of ``{theta : f(theta) in region}``.

    ``region`` needs a vectorized ``contains``.  Crossings are located on a
    grid, checked against a grid of twice the density, then bisected.
    """
    _, _, coarse = _transitions(sym, region, n_grid)
    theta, inside, idx = _transitions(sym, region, 2 * n_grid)
    if coarse.size != idx.size:
        raise SuspectBoundary(
            f"crossing count changed from {coarse.size} to {idx.size} under grid refinement"
        )
    if idx.size == 0:
        return TWO_PI if inside[0] else 0.0
    h = TWO_PI / (2 * n_grid)
    a = theta[idx]
    b = a + h
    entering = ~inside[idx]
    while h > tol:
        h *= 0.5
        mid = a + h
        state = np.asarray(region.contains(eval_curve(sym, mid)), dtype=bool)
        # state equal to the left end's state -> crossing is right of mid
        left_state = ~entering
        move = state == left_state
        a = np.where(move, mid, a)
        b = np.where(move, b, mid)
    cross = 0.5 * (a + b)
    total = 0.0
    n = cross.size
    for i in range(n):
        if entering[i]:
            j = (i + 1) % n
            span = (cross[j] - cross[i]) % TWO_PI
            if n == 1:
                span = TWO_PI
            total += span
    return float(min(max(total, 0.0), TWO_PI))
