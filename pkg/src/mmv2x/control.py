"""Sub-6GHz control plane: CAM timing, broadcast delivery and reservations.

The control channel is ideal.  Every vehicle within ``control_range_m`` of the
sender hears each CAM instantly and without loss.  A CAM may piggyback an
announcement of the sender's mmWave schedule for the upcoming period, which
each addressed vehicle records in its :class:`ReservationTable`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .geometry import wrap_offset
from .scenario import Scene

DEFAULT_CONTROL_RANGE_M = 300.0


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class AnnouncementEntry:
    interval: int
    receivers: tuple[int, ...]
    sector: int
    beamwidth: int


@dataclass(frozen=True)
class Announcement:
    tx_id: int
    period_index: int
    entries: tuple[AnnouncementEntry, ...]
    start_time_ms: float
    duration_ms: float

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for e in self.entries:
            if seen.intersection(e.receivers):
                raise ProtocolError(f"tx {self.tx_id}: receiver listed in two entries")
            seen.update(e.receivers)
        intervals = [e.interval for e in self.entries]
        if len(set(intervals)) != len(intervals):
            raise ProtocolError(f"tx {self.tx_id}: interval announced twice")

    @property
    def receivers(self) -> set[int]:
        return {r for e in self.entries for r in e.receivers}


@dataclass(frozen=True)
class Cam:
    sender: int
    timestamp_ms: float
    position: tuple[float, float]
    announcement: Announcement | None = None


@dataclass(frozen=True)
class TxRole:
    receivers: tuple[int, ...]
    sector: int
    beamwidth: int


@dataclass(frozen=True)
class RxRole:
    peer: int


@dataclass(frozen=True)
class ControlEvent:
    time_ms: float
    event: str  # cam | reservation | conflict | forfeit
    sender: int
    receiver: int | None = None
    interval: int | None = None


@dataclass
class ReservationTable:
    """Per-interval commitments of one vehicle for one scheduling period."""

    owner: int
    interval_count: int
    roles: list = field(default_factory=list)
    sources: list = field(default_factory=list)
    events: list[ControlEvent] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.roles:
            self.roles = [None] * self.interval_count
            self.sources = [None] * self.interval_count

    def role(self, interval: int) -> TxRole | RxRole | None:
        return self.roles[interval]

    def is_free(self, interval: int) -> bool:
        return self.roles[interval] is None

    def rx_peer(self, interval: int) -> int | None:
        r = self.roles[interval]
        return r.peer if isinstance(r, RxRole) else None

    @property
    def conflicts(self) -> int:
        return sum(e.event == "conflict" for e in self.events)

    @property
    def forfeits(self) -> int:
        return sum(e.event == "forfeit" for e in self.events)


def cam_schedule(vehicles: Sequence, periods: int = 1, period_ms: float = 100.0) -> list[tuple[float, int]]:
    """CAM emission instants, one per vehicle per period, in time order."""
    out = [
        (p * period_ms + v.cam_offset_ms, v.id) for p in range(periods) for v in vehicles
    ]
    out.sort()
    return out


def deliver_broadcast(
    cam: Cam,
    all_vehicles: Sequence | Scene,
    control_range_m: float = DEFAULT_CONTROL_RANGE_M,
    road_length: float | None = None,
) -> set[int]:
    """Ids of every vehicle other than the sender within control range."""
    scene = all_vehicles if isinstance(all_vehicles, Scene) else Scene(all_vehicles, road_length)
    if len(scene) == 0:
        return set()
    dx = wrap_offset(scene.x - cam.position[0], scene.road_length)
    inside = np.hypot(dx, scene.y - cam.position[1]) <= control_range_m
    return {int(i) for i in scene.ids[inside] if i != cam.sender}


def apply_announcement(
    table: ReservationTable, ann: Announcement, rx_time_ms: float
) -> ReservationTable:
    """Record ``ann`` in ``table`` (in place) and return it.

    Free intervals become ``RxRole``.  An interval already reserved for
    reception keeps its first-heard transmitter (conflict); one the owner
    already transmits in stays ``TxRole`` (forfeited reception).
    """
    for e in ann.entries:
        if not 0 <= e.interval < table.interval_count:
            raise ProtocolError(
                f"tx {ann.tx_id} announced interval {e.interval} outside [0, {table.interval_count})"
            )
    own = ann.tx_id == table.owner
    for e in ann.entries:
        if own:
            current = table.roles[e.interval]
            if current is not None and not (
                isinstance(current, TxRole) and table.sources[e.interval] is ann
            ):
                raise ProtocolError(
                    f"vehicle {table.owner} announced interval {e.interval} it had already committed"
                )
            table.roles[e.interval] = TxRole(e.receivers, e.sector, e.beamwidth)
            table.sources[e.interval] = ann
            continue
        if table.owner not in e.receivers:
            continue
        current = table.roles[e.interval]
        if current is None:
            table.roles[e.interval] = RxRole(ann.tx_id)
            table.sources[e.interval] = ann
            kind = "reservation"
        elif isinstance(current, RxRole):
            kind = "conflict"
        else:
            kind = "forfeit"
        table.events.append(ControlEvent(rx_time_ms, kind, ann.tx_id, table.owner, e.interval))
    return table


def write_event_log(events: Iterable[ControlEvent], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_ms", "event", "sender", "receiver", "interval"])
        for e in events:
            w.writerow([repr(e.time_ms), e.event, e.sender,
                        "" if e.receiver is None else e.receiver,
                        "" if e.interval is None else e.interval])
