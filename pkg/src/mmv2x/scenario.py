"""Highway topology drops and LOS neighbour tables.

The road is a ring of ``road_length`` metres so that every vehicle sees the
same statistical neighbourhood.  Each lane carries an independent Poisson
process of ``density / lanes`` vehicles per km, with positions redrawn until no two
centres in a lane are closer than ``min_gap``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    CAR_LENGTH_M,
    CAR_WIDTH_M,
    normalize_bearings,
    wrap_offset,
)

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ScenarioConfig:
    density: float = 75.0  # vehicles per km, all lanes together
    lanes: int = 4
    lane_width: float = 3.0
    road_length: float = 2000.0
    tx_ratio: float = 0.10
    neighbor_range: float = 50.0
    seed: int = 1
    min_gap: float = 5.0
    cam_period_ms: float = 100.0
    # constant-speed mobility instead of i.i.d. drops; one entry per lane
    lane_speeds_mps: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not self.density > 0:
            raise ValueError(f"density must be positive, got {self.density}")
        if self.lanes < 1:
            raise ValueError(f"need at least one lane, got {self.lanes}")
        if not self.road_length > 0:
            raise ValueError(f"road_length must be positive, got {self.road_length}")
        if not 0.0 <= self.tx_ratio <= 1.0:
            raise ValueError(f"tx_ratio must lie in [0, 1], got {self.tx_ratio}")
        if self.neighbor_range <= 0 or self.lane_width <= 0:
            raise ValueError("neighbor_range and lane_width must be positive")
        if self.lane_speeds_mps is not None and len(self.lane_speeds_mps) != self.lanes:
            raise ValueError("lane_speeds_mps needs one entry per lane")


@dataclass(frozen=True)
class Vehicle:
    id: int
    lane: int
    longitudinal_m: float
    lateral_m: float
    heading: float
    is_mm_tx: bool
    cam_offset_ms: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.longitudinal_m, self.lateral_m)


@dataclass(frozen=True)
class Neighbor:
    id: int
    bearing: float
    distance: float


@dataclass(frozen=True)
class NeighborTable:
    owner: int
    neighbors: tuple[Neighbor, ...] = ()

    @property
    def count(self) -> int:
        return len(self.neighbors)

    @property
    def ids(self) -> list[int]:
        return [n.id for n in self.neighbors]

    @property
    def bearings(self) -> list[float]:
        return [n.bearing for n in self.neighbors]


def drop_rng(seed: int, drop_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & _SEED_MASK, drop_index]))


def lane_heading(lane: int, lanes: int) -> float:
    # lower half of the carriageway drives +x, upper half drives -x
    return 0.0 if lane < lanes // 2 or lanes == 1 else 180.0


def _place_lane(rng: np.random.Generator, count: int, length: float, gap: float) -> list[float]:
    if count * gap > length:
        raise ValueError(f"{count} vehicles with {gap} m spacing do not fit on {length} m")
    placed: list[float] = []
    arr = np.empty(0)
    for _ in range(count):
        while True:
            x = float(rng.uniform(0.0, length))
            if not placed:
                break
            d = np.abs(arr - x)
            if np.min(np.minimum(d, length - d)) >= gap:
                break
        placed.append(x)
        arr = np.array(placed)
    return sorted(placed)


def generate_drop(config: ScenarioConfig, drop_index: int) -> list[Vehicle]:
    """One topology, fully determined by ``(config.seed, drop_index)``."""
    rng = drop_rng(config.seed, drop_index)
    per_lane = config.density / config.lanes * config.road_length / 1000.0
    lanes = []
    for lane in range(config.lanes):
        n = int(rng.poisson(per_lane))
        lanes.append(_place_lane(rng, n, config.road_length, config.min_gap))
    total = sum(len(xs) for xs in lanes)
    is_tx = rng.random(total) < config.tx_ratio
    offsets = rng.uniform(0.0, config.cam_period_ms, total)
    vehicles = []
    vid = 0
    for lane, xs in enumerate(lanes):
        y = lane * config.lane_width + config.lane_width / 2.0
        heading = lane_heading(lane, config.lanes)
        for x in xs:
            vehicles.append(
                Vehicle(vid, lane, x, y, heading, bool(is_tx[vid]), float(offsets[vid]))
            )
            vid += 1
    return vehicles


def advance(vehicles: Sequence[Vehicle], config: ScenarioConfig, elapsed_s: float) -> list[Vehicle]:
    """Move every vehicle at its lane speed along its heading (ring road)."""
    speeds = config.lane_speeds_mps or (0.0,) * config.lanes
    out = []
    for v in vehicles:
        sign = 1.0 if v.heading == 0.0 else -1.0
        x = (v.longitudinal_m + sign * speeds[v.lane] * elapsed_s) % config.road_length
        out.append(
            Vehicle(v.id, v.lane, x, v.lateral_m, v.heading, v.is_mm_tx, v.cam_offset_ms)
        )
    return out


def wraparound_distance(
    a: Sequence[float], b: Sequence[float], road_length: float
) -> float:
    dx = float(wrap_offset(b[0] - a[0], road_length))
    return math.hypot(dx, b[1] - a[1])


class Scene:
    """Array view of one drop for fast geometric queries.

    Vehicles are addressed by list index; ``ids`` maps back to vehicle ids.

    Bodies are identical axis-aligned rectangles, so vehicles sharing a
    lateral offset form a row and a segment crosses a row's bodies exactly
    where its x-extent inside the row's band overlaps them.  That turns LOS
    into one sorted lookup per row.
    """

    def __init__(
        self,
        vehicles: Sequence[Vehicle],
        road_length: float | None,
        body: tuple[float, float] = (CAR_LENGTH_M, CAR_WIDTH_M),
    ) -> None:
        self.vehicles = list(vehicles)
        self.road_length = road_length
        self.ids = np.array([v.id for v in self.vehicles], dtype=np.int64)
        self.x = np.array([v.longitudinal_m for v in self.vehicles], dtype=float)
        self.y = np.array([v.lateral_m for v in self.vehicles], dtype=float)
        self.heading = np.array([v.heading for v in self.vehicles], dtype=float)
        self.index = {int(vid): i for i, vid in enumerate(self.ids)}
        self.half_l = body[0] / 2.0
        self.half_w = body[1] / 2.0
        self._rows = []
        for row_y in np.unique(self.y):
            xs = np.sort(self.x[self.y == row_y])
            if road_length is not None:
                xs = np.concatenate([xs - road_length, xs, xs + road_length])
            self._rows.append((float(row_y), xs))
        self._neighbors: dict[float, list[np.ndarray]] = {}

    def __len__(self) -> int:
        return len(self.vehicles)

    def offsets(self, i: int, idx=None) -> tuple[np.ndarray, np.ndarray]:
        """(dx, dy) from vehicle ``i`` to vehicles ``idx`` (all by default)."""
        xs = self.x if idx is None else self.x[idx]
        ys = self.y if idx is None else self.y[idx]
        return wrap_offset(xs - self.x[i], self.road_length), ys - self.y[i]

    def distances(self, i: int, idx=None) -> np.ndarray:
        dx, dy = self.offsets(i, idx)
        return np.hypot(dx, dy)

    def world_angles(self, i: int, idx=None) -> np.ndarray:
        dx, dy = self.offsets(i, idx)
        return normalize_bearings(np.degrees(np.arctan2(dy, dx)))

    def bearings(self, i: int, idx=None) -> np.ndarray:
        """Bearings from ``i`` to ``idx`` relative to ``i``'s heading."""
        return normalize_bearings(self.world_angles(i, idx) - self.heading[i])

    def los_pairs(self, a, b) -> np.ndarray:
        """LOS for each pair ``(a[k], b[k])`` of vehicle indices."""
        a = np.atleast_1d(np.asarray(a, dtype=np.int64))
        b = np.atleast_1d(np.asarray(b, dtype=np.int64))
        if np.any(a == b):
            raise ValueError("LOS needs two distinct vehicles")
        # the lower index is always the origin, so los(a, b) == los(b, a) exactly
        a, b = np.minimum(a, b), np.maximum(a, b)
        ax, ay = self.x[a], self.y[a]
        dx = wrap_offset(self.x[b] - ax, self.road_length)
        dy = self.y[b] - ay
        bx, by = ax + dx, self.y[b]
        blockers = np.zeros(len(a), dtype=np.int64)
        flat = dy == 0.0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for row_y, xs in self._rows:
                lo_y, hi_y = row_y - self.half_w, row_y + self.half_w
                t0 = (lo_y - ay) / dy
                t1 = (hi_y - ay) / dy
                inside = (ay >= lo_y) & (ay <= hi_y)
                enter = np.where(flat, np.where(inside, 0.0, np.inf), np.maximum(np.minimum(t0, t1), 0.0))
                leave = np.where(flat, np.where(inside, 1.0, -np.inf), np.minimum(np.maximum(t0, t1), 1.0))
                crosses = enter < leave
                if not crosses.any():
                    continue
                xe = ax + dx * np.where(crosses, enter, 0.0)
                xl = ax + dx * np.where(crosses, leave, 0.0)
                lo = np.minimum(xe, xl) - self.half_l
                hi = np.maximum(xe, xl) + self.half_l
                n = np.searchsorted(xs, hi, "left") - np.searchsorted(xs, lo, "right")
                # the endpoints' own bodies are not obstacles
                n -= ((ay == row_y) & (ax > lo) & (ax < hi)).astype(np.int64)
                n -= ((by == row_y) & (bx > lo) & (bx < hi)).astype(np.int64)
                blockers += np.where(crosses, n, 0)
        return blockers == 0

    def los_many(self, i: int, targets: Iterable[int]) -> np.ndarray:
        t = np.asarray(list(targets), dtype=np.int64)
        if len(t) == 0:
            return np.zeros(0, dtype=bool)
        return self.los_pairs(np.full(len(t), i), t)

    def los(self, i: int, j: int) -> bool:
        return bool(self.los_pairs([i], [j])[0])

    def _all_neighbors(self, neighbor_range: float) -> list[np.ndarray]:
        cached = self._neighbors.get(neighbor_range)
        if cached is not None:
            return cached
        n = len(self)
        dx = wrap_offset(self.x[None, :] - self.x[:, None], self.road_length)
        dy = self.y[None, :] - self.y[:, None]
        close = np.triu(np.hypot(dx, dy) < neighbor_range, k=1)
        a, b = np.nonzero(close)
        out: list[list[int]] = [[] for _ in range(n)]
        if len(a):
            ok = self.los_pairs(a, b)
            for u, v in zip(a[ok].tolist(), b[ok].tolist()):
                out[u].append(v)
                out[v].append(u)
        result = [np.array(sorted(o), dtype=np.int64) for o in out]
        self._neighbors[neighbor_range] = result
        return result

    def neighbor_indices(self, i: int, neighbor_range: float) -> np.ndarray:
        """LOS neighbours of ``i`` within range, sorted clockwise then by id."""
        cand = self._all_neighbors(neighbor_range)[i]
        if len(cand) == 0:
            return cand
        b = self.bearings(i, cand)
        return cand[np.lexsort((self.ids[cand], b))]

    def neighbor_table(self, i: int, neighbor_range: float) -> NeighborTable:
        idx = self.neighbor_indices(i, neighbor_range)
        b = self.bearings(i, idx)
        d = self.distances(i, idx)
        return NeighborTable(
            owner=int(self.ids[i]),
            neighbors=tuple(
                Neighbor(int(self.ids[j]), float(bj), float(dj)) for j, bj, dj in zip(idx, b, d)
            ),
        )


def neighbors_of(v: Vehicle, all_vehicles: Sequence[Vehicle], config: ScenarioConfig) -> NeighborTable:
    scene = Scene(all_vehicles, config.road_length)
    return scene.neighbor_table(scene.index[v.id], config.neighbor_range)


def write_topology_csv(vehicles: Iterable[Vehicle], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["id", "lane", "longitudinal_m", "lateral_m", "heading_deg", "is_mm_tx", "cam_offset_ms"]
        )
        for v in vehicles:
            w.writerow(
                [v.id, v.lane, repr(v.longitudinal_m), repr(v.lateral_m), v.heading,
                 int(v.is_mm_tx), repr(v.cam_offset_ms)]
            )
