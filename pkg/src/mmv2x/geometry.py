"""Planar geometry and the sector-grouping antenna model.

Coordinates are metres: x along the road, y across it (lane offsets grow with
y).  Bearings are degrees in [0, 360), measured from a vehicle's heading and
increasing clockwise, i.e. from +x towards +y.  A bearing of 90 deg relative to
heading 0 therefore points to the next lane up.

The antenna divides the horizontal plane into ``360 / base`` virtual sectors.
Grouping ``k`` neighbouring sectors yields a beam of ``k * base`` degrees.  The
gain model is an ideal flat top: constant inside the beam, no radiation
outside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_BEAMWIDTHS = (6, 12, 18, 24, 30, 36, 60, 72, 90, 120, 180, 360)
BASE_BEAMWIDTH = 6

CAR_LENGTH_M = 4.8
CAR_WIDTH_M = 1.8


class InvalidBeamwidth(ValueError):
    pass


class DegenerateGeometry(ValueError):
    pass


def normalize_bearing(raw_degrees: float) -> float:
    if not math.isfinite(raw_degrees):
        raise ValueError(f"bearing must be finite, got {raw_degrees!r}")
    b = math.fmod(raw_degrees, 360.0)
    if b < 0.0:
        b += 360.0
    # fmod of a tiny negative number can round back up to exactly 360
    if b >= 360.0:
        b = 0.0
    return b


def normalize_bearings(raw: np.ndarray) -> np.ndarray:
    b = np.mod(raw, 360.0)
    return np.where(b >= 360.0, 0.0, b)


def bearing_between(
    src: Sequence[float], dst: Sequence[float], heading: float = 0.0
) -> float:
    """Clockwise angle of the vector src->dst relative to ``heading``."""
    dx = dst[0] - src[0]
    dy = dst[1] - src[1]
    if dx == 0.0 and dy == 0.0:
        raise DegenerateGeometry(f"coincident positions {tuple(src)}")
    return normalize_bearing(math.degrees(math.atan2(dy, dx)) - heading)


def angular_distance(a: float, b: float) -> float:
    """Smallest absolute difference between two bearings, in [0, 180]."""
    d = abs(a - b) % 360.0
    return 360.0 - d if d > 180.0 else d


@dataclass(frozen=True)
class BeamwidthLadder:
    """Ordered set of selectable transmit beamwidths (degrees)."""

    entries: tuple[int, ...] = DEFAULT_BEAMWIDTHS
    base: int = BASE_BEAMWIDTH

    def __post_init__(self) -> None:
        entries = tuple(int(e) for e in self.entries)
        if not entries:
            raise InvalidBeamwidth("beamwidth ladder is empty")
        if any(e <= 0 for e in entries):
            raise InvalidBeamwidth(f"non-positive beamwidth in {entries}")
        if any(a >= b for a, b in zip(entries, entries[1:])):
            raise InvalidBeamwidth(f"ladder must be strictly ascending: {entries}")
        for e in entries:
            if 360 % e or e % self.base:
                raise InvalidBeamwidth(
                    f"{e} deg must divide 360 and be a multiple of {self.base} deg"
                )
        object.__setattr__(self, "entries", entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, beamwidth: object) -> bool:
        return beamwidth in self.entries

    def check(self, beamwidth: float) -> int:
        if beamwidth not in self.entries:
            raise InvalidBeamwidth(f"{beamwidth} deg is not in ladder {self.entries}")
        return int(beamwidth)


DEFAULT_LADDER = BeamwidthLadder()


@dataclass(frozen=True)
class AntennaModel:
    ladder: BeamwidthLadder = DEFAULT_LADDER
    gain_offset_db: float = 14.0
    # lower edge of sector 0, relative to the vehicle heading
    boresight_reference: float = 0.0

    @property
    def base_sector_count(self) -> int:
        return 360 // self.ladder.base

    def sector_count(self, beamwidth: float) -> int:
        return 360 // self.ladder.check(beamwidth)

    def sector_index(self, bearing: float, beamwidth: float) -> int:
        bw = self.ladder.check(beamwidth)
        b = normalize_bearing(bearing - self.boresight_reference)
        return min(int(b // bw), 360 // bw - 1)

    def sector_indices(self, bearings: np.ndarray, beamwidth: float) -> np.ndarray:
        bw = self.ladder.check(beamwidth)
        b = normalize_bearings(np.asarray(bearings, dtype=float) - self.boresight_reference)
        return np.minimum((b // bw).astype(np.int64), 360 // bw - 1)

    def gain_dbi(self, beamwidth: float) -> float:
        """In-beam gain; outside the beam the flat-top pattern radiates nothing."""
        bw = self.ladder.check(beamwidth)
        return 10.0 * math.log10(360.0 / bw) + self.gain_offset_db

    def beam_covers(self, beam_sector: int, beamwidth: float, target_bearing: float) -> bool:
        n = self.sector_count(beamwidth)
        if not 0 <= beam_sector < n:
            raise ValueError(f"sector {beam_sector} out of range for {n} sectors")
        return self.sector_index(target_bearing, beamwidth) == beam_sector

    def base_sectors(self, beam_sector: int, beamwidth: float) -> range:
        """The consecutive base sectors grouped into one wider beam."""
        k = self.ladder.check(beamwidth) // self.ladder.base
        return range(beam_sector * k, (beam_sector + 1) * k)


DEFAULT_ANTENNA = AntennaModel()


def wrap_offset(dx, road_length: float | None):
    """Shortest signed longitudinal offset on a ring road of ``road_length``."""
    if road_length is None:
        return dx
    half = road_length / 2.0
    return np.mod(np.asarray(dx) + half, road_length) - half


def segments_hit_rects(ax, ay, bx, by, x0, x1, y0, y1) -> np.ndarray:
    """Whether the open segments a->b cross the closed rectangles [x0,x1]x[y0,y1].

    All arguments broadcast.  Liang-Barsky clipping; a segment that merely
    grazes a rectangle (zero-length overlap) does not count as a hit.
    """
    ax, ay, bx, by = (np.asarray(v, dtype=float) for v in (ax, ay, bx, by))
    dx = bx - ax
    dy = by - ay
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        tx0 = (x0 - ax) / dx
        tx1 = (x1 - ax) / dx
        ty0 = (y0 - ay) / dy
        ty1 = (y1 - ay) / dy
    zero_x = dx == 0.0
    zero_y = dy == 0.0
    inside_x = (ax >= x0) & (ax <= x1)
    inside_y = (ay >= y0) & (ay <= y1)
    lo_x = np.where(zero_x, np.where(inside_x, -np.inf, np.inf), np.minimum(tx0, tx1))
    hi_x = np.where(zero_x, np.where(inside_x, np.inf, -np.inf), np.maximum(tx0, tx1))
    lo_y = np.where(zero_y, np.where(inside_y, -np.inf, np.inf), np.minimum(ty0, ty1))
    hi_y = np.where(zero_y, np.where(inside_y, np.inf, -np.inf), np.maximum(ty0, ty1))
    enter = np.maximum(np.maximum(lo_x, lo_y), 0.0)
    leave = np.minimum(np.minimum(hi_x, hi_y), 1.0)
    return enter < leave


def los(
    a,
    b,
    all_vehicles: Iterable,
    road_length: float | None = None,
    body: tuple[float, float] = (CAR_LENGTH_M, CAR_WIDTH_M),
) -> bool:
    """Line of sight between the centres of vehicles ``a`` and ``b``.

    Vehicles need ``id``, ``longitudinal_m`` and ``lateral_m``.  Bodies are
    axis-aligned rectangles centred on the vehicle position.  With
    ``road_length`` set the road is a ring and offsets wrap.
    """
    if a.id == b.id:
        raise ValueError("los() needs two distinct vehicles")
    # a fixed origin keeps los(a, b) == los(b, a) bit for bit
    if b.id < a.id:
        a, b = b, a
    others = [v for v in all_vehicles if v.id != a.id and v.id != b.id]
    if not others:
        return True
    bx = float(wrap_offset(b.longitudinal_m - a.longitudinal_m, road_length))
    ox = wrap_offset(
        np.array([v.longitudinal_m for v in others]) - a.longitudinal_m, road_length
    )
    oy = np.array([v.lateral_m for v in others])
    half_l, half_w = body[0] / 2.0, body[1] / 2.0
    hit = segments_hit_rects(
        0.0, a.lateral_m, bx, b.lateral_m, ox - half_l, ox + half_l, oy - half_w, oy + half_w
    )
    return not bool(hit.any())
