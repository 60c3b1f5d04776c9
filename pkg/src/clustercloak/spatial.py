"""Geometric primitives and the message records exchanged with the anonymizer.

All distances are Euclidean and coordinates are plain floats in abstract
map units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True, slots=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinate: ({self.x}, {self.y})")

    def distance(self, other: Point) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True, slots=True)
class UserProfile:
    user_id: int
    position: Point
    k: int

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"user {self.user_id}: anonymity level must be >= 2, got {self.k}")


@dataclass(frozen=True, slots=True)
class MBR:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"inverted rectangle: {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def midpoint(self) -> Point:
        return Point((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def contains(self, p: Point) -> bool:
        return self.x_min <= p.x <= self.x_max and self.y_min <= p.y <= self.y_max

    def distance_to(self, p: Point) -> float:
        """Distance from ``p`` to the rectangle; zero inside or on the boundary."""
        dx = max(self.x_min - p.x, 0.0, p.x - self.x_max)
        dy = max(self.y_min - p.y, 0.0, p.y - self.y_max)
        return math.hypot(dx, dy)


@dataclass(frozen=True, slots=True)
class SourceMessage:
    """Request as sent by a mobile user to the anonymizer (exact position included)."""

    user_id: int
    message_id: int
    position: Point
    k: int
    content: str


@dataclass(frozen=True, slots=True)
class CloakedMessage:
    """Request as forwarded to the location service.

    Carries only coordinate ranges; there is deliberately no field for the
    exact position.
    """

    user_id: int
    message_id: int
    x_range: tuple[float, float]
    y_range: tuple[float, float]
    content: str

    def as_mbr(self) -> MBR:
        return MBR(self.x_range[0], self.x_range[1], self.y_range[0], self.y_range[1])


def _require_points(points: Sequence[Point]) -> None:
    if len(points) == 0:
        raise ValueError("point list must be non-empty")


def centroid(points: Sequence[Point]) -> Point:
    _require_points(points)
    n = len(points)
    return Point(math.fsum(p.x for p in points) / n, math.fsum(p.y for p in points) / n)


def cds(points: Sequence[Point], center: Point) -> float:
    """Sum of Euclidean distances from every point to ``center``."""
    _require_points(points)
    return math.fsum(math.hypot(p.x - center.x, p.y - center.y) for p in points)


def mbr_of(points: Iterable[Point]) -> MBR:
    points = list(points)
    _require_points(points)
    xs = [p.x for p in points]
    ys = [p.y for p in points]
    return MBR(min(xs), max(xs), min(ys), max(ys))


def area_radius(points: Sequence[Point], center: Point) -> float:
    """Radius of the circle around ``center`` that reaches the farthest point."""
    _require_points(points)
    return max(math.hypot(p.x - center.x, p.y - center.y) for p in points)


def circles_touch(center_a: Point, radius_a: float, center_b: Point, radius_b: float) -> bool:
    # tangency counts
    return center_a.distance(center_b) <= radius_a + radius_b


def phi(t: float, s: float) -> tuple[float, float]:
    """Widen the value ``t`` to the closed interval ``[t - s, t + s]``."""
    if s < 0:
        raise ValueError(f"phi: spread must be non-negative, got {s}")
    return (t - s, t + s)
