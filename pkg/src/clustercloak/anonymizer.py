"""Request pipeline of the trusted anonymizer.

A user's request is cloaked into its cluster's bounding rectangle, a mock
location service answers over that rectangle, and the anonymizer picks the
best candidate using the exact position it alone knows.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .clusters import ClusterSet
from .errors import NoResult
from .spatial import CloakedMessage, Point, SourceMessage


@dataclass(frozen=True, slots=True)
class Poi:
    poi_id: int
    position: Point
    category: str


class PoiStore:
    POI_HEADER = ("poi_id", "x", "y", "category")

    def __init__(self, pois: Iterable[Poi] = ()):
        self._pois: dict[int, Poi] = {}
        for p in pois:
            self.add(p)

    def add(self, poi: Poi) -> None:
        if poi.poi_id in self._pois:
            raise ValueError(f"duplicate poi_id {poi.poi_id}")
        self._pois[poi.poi_id] = poi

    def __len__(self):
        return len(self._pois)

    def __iter__(self):
        return iter(self._pois[i] for i in sorted(self._pois))

    def of_category(self, category: str) -> list[Poi]:
        return [p for p in self if p.category == category]

    @classmethod
    def from_csv(cls, path) -> PoiStore:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != cls.POI_HEADER:
                raise ValueError(f"{path}: expected header {','.join(cls.POI_HEADER)}")
            store = cls()
            for line, row in enumerate(reader, start=2):
                try:
                    store.add(Poi(int(row["poi_id"]), Point(float(row["x"]), float(row["y"])), row["category"]))
                except (TypeError, ValueError) as exc:
                    raise ValueError(f"{path}:{line}: {exc}") from None
        return store

    def to_csv(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.POI_HEADER)
            for p in self:
                w.writerow([p.poi_id, repr(p.position.x), repr(p.position.y), p.category])


@dataclass(frozen=True, slots=True)
class QueryResult:
    poi: Poi
    candidate_count: int
    cloak_area: float


def cloak(cset: ClusterSet, msg: SourceMessage) -> CloakedMessage:
    """Replace the exact position with the ranges of the home cluster's MBR.

    The ranges are ``phi(mid_x, width / 2)`` and ``phi(mid_y, height / 2)``
    around the MBR midpoint. Those are emitted as the MBR bounds themselves:
    the midpoint arithmetic can land one ulp inside the box and drop a
    boundary member out of its own cloak.
    """
    box = cset.home_of(msg.user_id).mbr
    return CloakedMessage(
        user_id=msg.user_id,
        message_id=msg.message_id,
        x_range=(box.x_min, box.x_max),
        y_range=(box.y_min, box.y_max),
        content=msg.content,
    )


def lbs_range_query(store: PoiStore, cloaked: CloakedMessage, category: str, slack: float = 0.0) -> list[Poi]:
    """Mock provider: points of interest within ``slack`` of the cloaked rectangle.

    When nothing qualifies the slack is doubled (starting from the larger
    rectangle side, or 1.0 for a degenerate rectangle) until something does.
    """
    if slack < 0:
        raise ValueError("slack must be non-negative")
    pool = store.of_category(category)
    if not pool:
        raise NoResult(f"no point of interest with category {category!r}")
    box = cloaked.as_mbr()
    dist = [box.distance_to(p.position) for p in pool]
    s = slack
    if not any(d <= s for d in dist):
        s = slack if slack > 0 else (max(box.width, box.height) or 1.0)
        while not any(d <= s for d in dist):
            s *= 2.0
    return [p for p, d in zip(pool, dist) if d <= s]


def select_optimal(candidates: Sequence[Poi], exact: Point) -> Poi:
    if not candidates:
        raise ValueError("no candidates to choose from")
    return min(candidates, key=lambda p: (math.hypot(p.position.x - exact.x, p.position.y - exact.y), p.poi_id))


def answer_query(
    cset: ClusterSet, store: PoiStore, msg: SourceMessage, category: str | None = None, slack: float = 0.0
) -> QueryResult:
    category = msg.content if category is None else category
    cloaked = cloak(cset, msg)
    candidates = lbs_range_query(store, cloaked, category, slack)
    best = select_optimal(candidates, msg.position)
    return QueryResult(best, len(candidates), cset.home_of(msg.user_id).mbr.area)
