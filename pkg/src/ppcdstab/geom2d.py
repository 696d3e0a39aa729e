"""Exact planar geometry of convex cones with apex at the origin.

A sector is spanned by two rays ``lo`` and ``hi``; its facets are exactly
those two rays. Flows are constant rational vectors. Because cones are
invariant under positive scaling, the ratio of sup-norms between the entry
point and the landing point of a straight-line flow depends only on the two
facets and the flow, not on where on the entry facet the motion starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .exactnum import Vec2Q, inf_norm, rat

FlowVec = Vec2Q


class GeometryError(ValueError):
    pass


class DegenerateSystem(GeometryError):
    pass


class EntryNotAFacet(GeometryError):
    pass


class ReflexSector(GeometryError):
    pass


@dataclass(frozen=True)
class Ray:
    """Half-line {t * (dx, dy) : t >= 0}, stored with a primitive direction."""

    dx: int
    dy: int

    def __post_init__(self):
        dx, dy = int(self.dx), int(self.dy)
        if dx == 0 and dy == 0:
            raise GeometryError("ray direction must be nonzero")
        g = math.gcd(dx, dy)
        object.__setattr__(self, "dx", dx // g)
        object.__setattr__(self, "dy", dy // g)

    @property
    def dir(self) -> Vec2Q:
        return Vec2Q(Fraction(self.dx), Fraction(self.dy))

    def contains(self, p: Vec2Q) -> bool:
        """True iff p lies on the ray (origin included)."""
        return p.cross(self.dir) == 0 and p.dot(self.dir) >= 0

    def to_json(self):
        return [self.dx, self.dy]

    def __repr__(self):
        return f"Ray({self.dx}, {self.dy})"


@dataclass(frozen=True)
class Sector:
    lo: Ray
    hi: Ray

    def __post_init__(self):
        if self.det == 0:
            kind = "anti-parallel (half-plane)" if self.lo.dir.dot(self.hi.dir) < 0 else "parallel"
            raise ReflexSector(f"sector rays {self.lo} and {self.hi} are {kind}")

    @property
    def det(self) -> Fraction:
        return self.lo.dir.cross(self.hi.dir)

    def coords(self, p: Vec2Q) -> tuple[Fraction, Fraction]:
        """(alpha, beta) with p = alpha * lo + beta * hi."""
        d = self.det
        return p.cross(self.hi.dir) / d, self.lo.dir.cross(p) / d

    def facet(self, tag: str) -> Ray:
        if tag == "lo":
            return self.lo
        if tag == "hi":
            return self.hi
        raise EntryNotAFacet(f"facet tag must be 'lo' or 'hi', got {tag!r}")

    def tag_of(self, ray: Ray) -> str | None:
        if ray == self.lo:
            return "lo"
        if ray == self.hi:
            return "hi"
        return None


def sector_contains(sec: Sector, p: Vec2Q) -> bool:
    a, b = sec.coords(p)
    return a >= 0 and b >= 0


def _solve_hit(start: Vec2Q, flow: Vec2Q, target: Ray) -> tuple[Fraction, Fraction]:
    """(T, s) with start + flow * T = s * target.dir (Cramer's rule)."""
    t = target.dir
    det = t.x * flow.y - flow.x * t.y
    if det == 0:
        raise DegenerateSystem(f"flow ({flow.x}, {flow.y}) is parallel to {target}")
    T = (start.x * t.y - t.x * start.y) / det
    s = (flow.y * start.x - flow.x * start.y) / det
    return T, s


def ray_hit(entry: Ray, flow: FlowVec, target: Ray, probe: Fraction | int = 1):
    """Where the flow line from ``probe * entry.dir`` meets ``target``.

    Returns ``(T, scale)`` with T > 0 the travel time and scale the exact
    ratio of sup-norms landing/start, or None when the line meets the
    target's supporting line only at T <= 0 or on the opposite half-line.
    """
    probe = rat(probe)
    if probe <= 0:
        raise GeometryError("probe multiplier must be positive")
    start = entry.dir.scaled(probe)
    T, s = _solve_hit(start, flow, target)
    if T <= 0 or s <= 0:
        return None
    return T, inf_norm(target.dir.scaled(s)) / inf_norm(start)


@dataclass(frozen=True)
class Hit:
    exit: Ray
    scale: Fraction
    dwell_positive: bool = True
    time: Fraction = Fraction(0)


@dataclass(frozen=True)
class Diverge:
    pass


@dataclass(frozen=True)
class Stuck:
    reason: str


StepOutcome = Union[Hit, Diverge, Stuck]


def continuous_step(sec: Sector, entry: Ray, flow: FlowVec, probe: Fraction | int = 1) -> StepOutcome:
    """Follow ``flow`` from a point of the entry facet until it leaves the sector.

    Works in sector coordinates: with entry = lo the start is (1, 0) and the
    trajectory is (1 + t*fa, t*fb) where (fa, fb) are the flow's
    coordinates. The flow must enter the interior (fb > 0); it then either
    stays in the cone forever (fa >= 0) or crosses the other facet.
    """
    tag = sec.tag_of(entry)
    if tag is None:
        raise EntryNotAFacet(f"{entry} is not a facet of {sec}")
    if flow.is_zero():
        return Stuck("zero flow")
    other = sec.hi if tag == "lo" else sec.lo
    if flow.cross(entry.dir) == 0:
        if flow.dot(entry.dir) > 0:
            return Diverge()
        return Stuck("flow runs along the entry facet into the apex")
    fa, fb = sec.coords(flow)
    along, across = (fa, fb) if tag == "lo" else (fb, fa)
    if across < 0:
        return Stuck("flow leaves the sector immediately")
    if along >= 0:
        return Diverge()
    hit = ray_hit(entry, flow, other, probe)
    if hit is None:
        raise AssertionError("inward flow with negative drift must reach the other facet")
    T, scale = hit
    return Hit(other, scale, True, T)


def flow_exit(sec: Sector, point: Vec2Q, flow: FlowVec):
    """First facet crossing of ``point + flow * t`` for t > 0, from an actual point.

    Independent of :func:`continuous_step`: intersects the trajectory with
    both facet rays directly and keeps the earliest positive-time hit whose
    open segment stays inside the sector. Returns ``(T, landing, ray)``,
    :class:`Diverge` if the trajectory never leaves, or :class:`Stuck`.
    """
    if not sector_contains(sec, point):
        raise GeometryError("point is outside the sector")
    if flow.is_zero():
        return Stuck("zero flow")
    best = None
    for ray in (sec.lo, sec.hi):
        try:
            T, s = _solve_hit(point, flow, ray)
        except DegenerateSystem:
            continue
        if T > 0 and s > 0 and (best is None or T < best[0]):
            best = (T, point + flow.scaled(T), ray)
    if best is not None:
        mid = point + flow.scaled(best[0] / 2)
        if sector_contains(sec, mid) and not sec.lo.contains(mid) and not sec.hi.contains(mid):
            return best
    probe = point + flow
    if sector_contains(sec, probe) and sector_contains(sec, point + flow.scaled(1000)):
        fa, fb = sec.coords(flow)
        if fa >= 0 and fb >= 0:
            return Diverge()
    return Stuck("trajectory does not move through the sector interior")
