"""Regions of the complex plane used for eigenvalue counting.

Every region has a vectorized ``contains`` (boundary points count as inside)
and a shell-friendly literal ``kind:args``::

    disk:cx,cy,r
    annulus:cx,cy,r_in,r_out
    halfplane:angle,offset      # {z : Re(z e^{-i angle}) >= offset}
    polygon:x0,y0,x1,y1,...
    tube:tau                    # needs a symbol: dist(z, curve) < tau
    plane
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import ConfigError, InvariantViolation
from .symbol import LaurentSymbol, dist_to_curve_many


class Region:
    kind: ClassVar[str] = ""

    def contains(self, z):
        raise NotImplementedError

    def to_literal(self) -> str:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


def _out(mask, z):
    return bool(mask) if np.ndim(z) == 0 else mask


@dataclass(frozen=True)
class Disk(Region):
    center: complex
    radius: float
    kind: ClassVar[str] = "disk"

    def __post_init__(self):
        if not self.radius > 0:
            raise InvariantViolation("disk radius must be positive")

    def contains(self, z):
        return _out(np.abs(np.asarray(z) - self.center) <= self.radius, z)

    def to_literal(self):
        c = complex(self.center)
        return f"disk:{c.real!r},{c.imag!r},{self.radius!r}"

    def to_dict(self):
        c = complex(self.center)
        return {"kind": "disk", "center": [c.real, c.imag], "radius": self.radius}


@dataclass(frozen=True)
class Annulus(Region):
    center: complex
    r_in: float
    r_out: float
    kind: ClassVar[str] = "annulus"

    def __post_init__(self):
        if not (0 < self.r_in < self.r_out):
            raise InvariantViolation("annulus needs 0 < r_in < r_out")

    def contains(self, z):
        d = np.abs(np.asarray(z) - self.center)
        return _out((d >= self.r_in) & (d <= self.r_out), z)

    def to_literal(self):
        c = complex(self.center)
        return f"annulus:{c.real!r},{c.imag!r},{self.r_in!r},{self.r_out!r}"

    def to_dict(self):
        c = complex(self.center)
        return {"kind": "annulus", "center": [c.real, c.imag], "r_in": self.r_in, "r_out": self.r_out}


@dataclass(frozen=True)
class HalfPlane(Region):
    """``{z : Re(z exp(-i angle)) >= offset}``; ``angle`` is the inward normal direction."""

    angle: float
    offset: float
    kind: ClassVar[str] = "halfplane"

    def contains(self, z):
        w = np.asarray(z) * np.exp(-1j * self.angle)
        return _out(np.real(w) >= self.offset, z)

    def to_literal(self):
        return f"halfplane:{self.angle!r},{self.offset!r}"

    def to_dict(self):
        return {"kind": "halfplane", "angle": self.angle, "offset": self.offset}


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b - a).conjugate() * (c - a)
        return np.sign(v.imag)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 * o2 < 0 and o3 * o4 < 0


@dataclass(frozen=True)
class Polygon(Region):
    vertices: tuple[complex, ...]
    kind: ClassVar[str] = "polygon"

    def __post_init__(self):
        verts = tuple(complex(v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        n = len(verts)
        if n < 3:
            raise InvariantViolation("polygon needs at least 3 vertices")
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_intersect(verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]):
                    raise InvariantViolation("polygon edges intersect")

    def contains(self, z):
        pts = np.atleast_1d(np.asarray(z, dtype=complex))
        x, y = pts.real, pts.imag
        v = np.array(self.vertices)
        inside = np.zeros(pts.shape, dtype=bool)
        on_edge = np.zeros(pts.shape, dtype=bool)
        for a, b in zip(v, np.roll(v, -1)):
            # points exactly on an edge count as inside
            cross = (b - a).real * (y - a.imag) - (b - a).imag * (x - a.real)
            within = ((x - a.real) * (x - b.real) <= 0) & ((y - a.imag) * (y - b.imag) <= 0)
            on_edge |= (np.abs(cross) <= 1e-14 * max(1.0, abs(b - a))) & within
            # half-open rule on y avoids double counting vertices
            straddle = (a.imag > y) != (b.imag > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = a.real + (y - a.imag) * (b.real - a.real) / (b.imag - a.imag)
            inside ^= straddle & (x < xint)
        res = inside | on_edge
        return bool(res[0]) if np.ndim(z) == 0 else res.reshape(np.shape(z))

    def to_literal(self):
        return "polygon:" + ",".join(f"{v.real!r},{v.imag!r}" for v in self.vertices)

    def to_dict(self):
        return {"kind": "polygon", "vertices": [[v.real, v.imag] for v in self.vertices]}


@dataclass(frozen=True)
class CurveTube(Region):
    symbol: LaurentSymbol
    tau: float
    kind: ClassVar[str] = "tube"

    def __post_init__(self):
        if not self.tau > 0:
            raise InvariantViolation("tube radius tau must be positive")

    def contains(self, z):
        d, _ = dist_to_curve_many(self.symbol, np.ravel(np.asarray(z, dtype=complex)))
        mask = (d < self.tau).reshape(np.shape(z))
        return _out(mask, z)

    def to_literal(self):
        return f"tube:{self.tau!r}"

    def to_dict(self):
        return {"kind": "tube", "tau": self.tau}


@dataclass(frozen=True)
class Plane(Region):
    kind: ClassVar[str] = "plane"

    def contains(self, z):
        return _out(np.ones(np.shape(z), dtype=bool), z)

    def to_literal(self):
        return "plane"

    def to_dict(self):
        return {"kind": "plane"}


def _floats(text: str, kind: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")] if text.strip() else []
    except ValueError as exc:
        raise ConfigError(f"bad number in region literal {kind}:{text}") from exc


def parse_region(literal: str, symbol: LaurentSymbol | None = None) -> Region:
    """Region from a literal such as ``disk:0,0,1.5``; ``tube`` needs ``symbol``."""
    kind, _, args = literal.strip().partition(":")
    kind = kind.lower()
    vals = _floats(args, kind)

    def need(n):
        if len(vals) != n:
            raise ConfigError(f"region {kind} takes {n} numbers, got {len(vals)}")

    if kind == "disk":
        need(3)
        return Disk(complex(vals[0], vals[1]), vals[2])
    if kind == "annulus":
        need(4)
        return Annulus(complex(vals[0], vals[1]), vals[2], vals[3])
    if kind in ("halfplane", "half_plane"):
        need(2)
        return HalfPlane(vals[0], vals[1])
    if kind == "polygon":
        if len(vals) < 6 or len(vals) % 2:
            raise ConfigError("polygon takes an even number (>= 6) of coordinates")
        return Polygon(tuple(complex(x, y) for x, y in zip(vals[::2], vals[1::2])))
    if kind == "tube":
        need(1)
        if symbol is None:
            raise ConfigError("tube region needs a symbol")
        return CurveTube(symbol, vals[0])
    if kind == "plane":
        need(0)
        return Plane()
    raise ConfigError(f"unknown region kind {kind!r}; expected disk, annulus, halfplane, polygon, tube or plane")


def region_from_dict(d: dict, symbol: LaurentSymbol | None = None) -> Region:
    kind = d.get("kind")
    if kind == "disk":
        return Disk(complex(*d["center"]), float(d["radius"]))
    if kind == "annulus":
        return Annulus(complex(*d["center"]), float(d["r_in"]), float(d["r_out"]))
    if kind == "halfplane":
        return HalfPlane(float(d["angle"]), float(d["offset"]))
    if kind == "polygon":
        return Polygon(tuple(complex(x, y) for x, y in d["vertices"]))
    if kind == "tube":
        if symbol is None:
            raise ConfigError("tube region needs a symbol")
        return CurveTube(symbol, float(d["tau"]))
    if kind == "plane":
        return Plane()
    raise ConfigError(f"unknown region kind {kind!r}")


def count_in_region(points, region: Region) -> int:
    pts = np.asarray(points, dtype=complex).ravel()
    if pts.size == 0:
        return 0
    return int(np.sum(region.contains(pts)))


def annulus_bounds_jordan(N: int, delta: float, sigma: float) -> tuple[float, float]:
    """``((delta N)^{1/N} e^{-sigma}, (delta N)^{1/N})``."""
    if not (delta > 0 and sigma >= 0):
        raise InvariantViolation("need delta > 0 and sigma >= 0")
    r_hi = math.exp(math.log(delta * N) / N)
    return r_hi * math.exp(-sigma), r_hi
