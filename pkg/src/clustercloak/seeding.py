"""Initial center selection for one bisection pass.

Four strategies are available:

``MN``  closest adjacent pair along either axis (deterministic)
``NR``  random point plus its nearest neighbour
``RP``  two random points
``RS``  split by x into two halves, one random point from each

Randomness always comes from an explicitly passed :class:`random.Random`
(Mersenne Twister, MT19937). Only ``randrange`` and ``sample`` are used,
both of which are reproducible across platforms for a given integer seed.
"""
from __future__ import annotations

import enum
import math
import random
from typing import Sequence

from .spatial import Point

Seeds = tuple[Point, Point]
Labeled = Sequence[tuple[int, Point]]


class SeedingMethod(str, enum.Enum):
    MN = "mn"
    NR = "nr"
    RP = "rp"
    RS = "rs"

    @classmethod
    def parse(cls, value) -> SeedingMethod:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown seeding method {value!r}; expected one of mn, nr, rp, rs") from None


def make_rng(seed: int) -> random.Random:
    return random.Random(int(seed))


def _check(points: Labeled) -> None:
    if len(points) < 2:
        raise ValueError(f"seeding needs at least two points, got {len(points)}")


def seed_mn(points: Labeled) -> Seeds:
    _check(points)
    best = None
    # axis 0 (x) is scanned first so that on equal gaps the x pair wins
    for axis in (0, 1):
        coord = (lambda p: p.x) if axis == 0 else (lambda p: p.y)
        ordered = sorted(points, key=lambda up: (coord(up[1]), up[0]))
        for (ua, pa), (ub, pb) in zip(ordered, ordered[1:]):
            key = (coord(pb) - coord(pa), axis, min(ua, ub), max(ua, ub))
            if best is None or key < best[0]:
                best = (key, pa, pb)
    return best[1], best[2]


def seed_nr(points: Labeled, rng: random.Random) -> Seeds:
    _check(points)
    i = rng.randrange(len(points))
    first = points[i][1]
    best = None
    for j, (uid, p) in enumerate(points):
        if j == i:
            continue
        key = (math.hypot(p.x - first.x, p.y - first.y), uid)
        if best is None or key < best[0]:
            best = (key, p)
    return first, best[1]


def seed_rp(points: Labeled, rng: random.Random) -> Seeds:
    _check(points)
    i, j = rng.sample(range(len(points)), 2)
    return points[i][1], points[j][1]


def rs_halves(points: Labeled) -> tuple[list, list]:
    ordered = sorted(points, key=lambda up: (up[1].x, up[0]))
    cut = (len(ordered) + 1) // 2
    return ordered[:cut], ordered[cut:]


def seed_rs(points: Labeled, rng: random.Random) -> Seeds:
    _check(points)
    lower, upper = rs_halves(points)
    a = lower[rng.randrange(len(lower))][1]
    b = upper[rng.randrange(len(upper))][1]
    return a, b


def choose_seeds(method: SeedingMethod, points: Labeled, rng: random.Random) -> Seeds:
    method = SeedingMethod.parse(method)
    if method is SeedingMethod.MN:
        return seed_mn(points)
    if method is SeedingMethod.NR:
        return seed_nr(points, rng)
    if method is SeedingMethod.RP:
        return seed_rp(points, rng)
    return seed_rs(points, rng)
