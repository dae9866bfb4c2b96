"""Waypoint ordering and obstacle-avoiding routing.

``optimize_order`` is exact (full permutation search) up to 8 waypoints
and falls back to nearest-neighbor + 2-opt above that. ``route_around``
detours around inflated cylindrical no-fly zones with tangent points.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .geodesy import EnuPoint, euclid3_m

EXACT_MAX_WAYPOINTS = 8
MAX_WAYPOINTS = 64
DEFAULT_MARGIN_M = 5.0
DETOUR_SLACK = 1.05
MAX_DETOUR_DEPTH = 8


class TooMany(ValueError):
    pass


class Empty(ValueError):
    pass


class NonPositive(ValueError):
    pass


class Unroutable(ValueError):
    """Start or goal inside an inflated obstacle, or detour recursion bottomed out."""


@dataclass(frozen=True)
class Obstacle:
    """Vertical cylinder from the ground: center in ENU, radius, height."""

    center_east: float
    center_north: float
    radius: float
    height: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValueError(f"radius must be positive and finite, got {self.radius}")
        if not (self.height > 0 and math.isfinite(self.height)):
            raise ValueError(f"height must be positive and finite, got {self.height}")


@dataclass(frozen=True)
class Route:
    points: tuple
    total_length: float


def path_length(points) -> float:
    return sum(euclid3_m(a, b) for a, b in zip(points, points[1:]))


def optimize_order(start: EnuPoint, waypoints) -> Route:
    """Order waypoints into a minimum-length open path from `start`.

    Exact for up to 8 waypoints (ties broken by lexicographic permutation
    order over input indices); nearest-neighbor seed plus 2-opt beyond.
    """
    waypoints = list(waypoints)
    n = len(waypoints)
    if n == 0:
        raise Empty("no waypoints to order")
    if n > MAX_WAYPOINTS:
        raise TooMany(f"{n} waypoints exceeds the {MAX_WAYPOINTS} limit")

    if n <= EXACT_MAX_WAYPOINTS:
        best_perm = None
        best_len = math.inf
        for perm in itertools.permutations(range(n)):
            length = _perm_length(start, waypoints, perm)
            if length < best_len:  # first-in-lexicographic-order wins ties
                best_len = length
                best_perm = perm
        order = best_perm
    else:
        order = _two_opt(start, waypoints, _nearest_neighbor(start, waypoints))

    points = tuple(waypoints[i] for i in order)
    return Route(points=points, total_length=path_length((start,) + points))


def _perm_length(start, waypoints, perm) -> float:
    length = euclid3_m(start, waypoints[perm[0]])
    for a, b in zip(perm, perm[1:]):
        length += euclid3_m(waypoints[a], waypoints[b])
    return length


def _nearest_neighbor(start, waypoints):
    remaining = list(range(len(waypoints)))
    order = []
    pos = start
    while remaining:
        best = min(remaining, key=lambda i: (euclid3_m(pos, waypoints[i]), i))
        remaining.remove(best)
        order.append(best)
        pos = waypoints[best]
    return order


def _two_opt(start, waypoints, order):
    order = list(order)
    improved = True
    while improved:
        improved = False
        for i in range(len(order) - 1):
            for j in range(i + 1, len(order)):
                candidate = order[:i] + order[i:j + 1][::-1] + order[j + 1:]
                if _perm_length(start, waypoints, candidate) < _perm_length(start, waypoints, order) - 1e-12:
                    order = candidate
                    improved = True
    return order


# ---------------------------------------------------------------------------
# Obstacle avoidance
# ---------------------------------------------------------------------------

def _closest_param(a: EnuPoint, b: EnuPoint, cx: float, cy: float) -> float:
    """Parameter t of the point on the horizontal segment a->b closest to (cx, cy)."""
    dx, dy = b.east - a.east, b.north - a.north
    den = dx * dx + dy * dy
    if den == 0.0:
        return 0.0
    t = ((cx - a.east) * dx + (cy - a.north) * dy) / den
    return min(1.0, max(0.0, t))


def _horizontal_clearance(a, b, obs: Obstacle) -> float:
    t = _closest_param(a, b, obs.center_east, obs.center_north)
    px = a.east + t * (b.east - a.east)
    py = a.north + t * (b.north - a.north)
    return math.hypot(px - obs.center_east, py - obs.center_north)


def _in_height_band(a, b, obs: Obstacle) -> bool:
    return min(a.up, b.up) <= obs.height


def _point_inside(p: EnuPoint, obs: Obstacle, margin: float) -> bool:
    if p.up > obs.height:
        return False
    return math.hypot(p.east - obs.center_east, p.north - obs.center_north) < obs.radius + margin


def _segment_violates(a, b, obs: Obstacle, margin: float) -> bool:
    if not _in_height_band(a, b, obs):
        return False
    return _horizontal_clearance(a, b, obs) < obs.radius + margin


def route_around(a: EnuPoint, b: EnuPoint, obstacles, margin: float = DEFAULT_MARGIN_M):
    """Route from a to b avoiding inflated cylinders, inserting tangent detours.

    Returns the point list including both endpoints; raises
    :class:`Unroutable` when an endpoint sits inside an inflated obstacle
    or the detour recursion exceeds its depth cap.
    """
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    for obs in obstacles:
        for p, which in ((a, "start"), (b, "goal")):
            if _point_inside(p, obs, margin):
                raise Unroutable(
                    f"{which} point ({p.east:.1f}, {p.north:.1f}, {p.up:.1f}) is inside "
                    f"the inflated obstacle at ({obs.center_east:.1f}, {obs.center_north:.1f})")
    return _route(a, b, list(obstacles), margin, depth=0)


def _route(a, b, obstacles, margin, depth):
    violated = next((o for o in obstacles if _segment_violates(a, b, o, margin)), None)
    if violated is None:
        return [a, b]
    if depth >= MAX_DETOUR_DEPTH:
        raise Unroutable(f"detour recursion exceeded depth {MAX_DETOUR_DEPTH}")
    detour = _detour_point(a, b, violated, margin)
    left = _route(a, detour, obstacles, margin, depth + 1)
    right = _route(detour, b, obstacles, margin, depth + 1)
    return left + right[1:]


def _detour_point(a, b, obs: Obstacle, margin: float) -> EnuPoint:
    t = _closest_param(a, b, obs.center_east, obs.center_north)
    px = a.east + t * (b.east - a.east)
    py = a.north + t * (b.north - a.north)
    ox, oy = px - obs.center_east, py - obs.center_north
    norm = math.hypot(ox, oy)
    if norm < 1e-9:
        # Segment passes through the center: either perpendicular side works.
        dx, dy = b.east - a.east, b.north - a.north
        seg = math.hypot(dx, dy)
        ox, oy = -dy / seg, dx / seg
    else:
        ox, oy = ox / norm, oy / norm
    reach = (obs.radius + margin) * DETOUR_SLACK
    up = a.up + t * (b.up - a.up)
    return EnuPoint(east=obs.center_east + ox * reach,
                    north=obs.center_north + oy * reach,
                    up=up)


def diagonal_leg(distance: float) -> EnuPoint:
    """Equal east/north displacement whose horizontal norm is `distance`."""
    if not (distance > 0):
        raise NonPositive(f"distance must be positive, got {distance}")
    c = distance / math.sqrt(2.0)
    return EnuPoint(east=c, north=c, up=0.0)
