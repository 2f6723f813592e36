"""Beamwidth-aware transmit scheduling and the fixed-6-degree baseline.

A transmitter that must reach ``N`` neighbours within the ``F`` intervals it
is not committed to receive in scans its beamwidth ladder from narrowest to
widest and keeps the first beamwidth whose sector grouping needs no more than
``F`` beams.  Neighbours sharing a sector share a beam and an interval.  Beams
are handed out clockwise from the heading onto the free intervals in order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .control import ReservationTable, RxRole
from .geometry import DEFAULT_ANTENNA, AntennaModel
from .scenario import NeighborTable

BASELINE_BEAMWIDTH = 6


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class SchedulingPeriod:
    period_ms: float = 100.0
    interval_count: int = 5
    interval_ms: float = 20.0

    def __post_init__(self) -> None:
        if self.interval_count < 1:
            raise ValueError("interval_count must be at least 1")
        if not math.isclose(self.interval_count * self.interval_ms, self.period_ms):
            raise ValueError(
                f"interval_count x interval_ms = {self.interval_count} x {self.interval_ms}"
                f" does not equal period_ms = {self.period_ms}"
            )

    def interval_start_ms(self, period_index: int, interval: int) -> float:
        return period_index * self.period_ms + interval * self.interval_ms


@dataclass(frozen=True)
class IntervalAvailability:
    available: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.available)


@dataclass(frozen=True)
class BeamGroup:
    sector: int
    interval: int
    receivers: tuple[int, ...]


@dataclass(frozen=True)
class BeamPlan:
    beamwidth: int | None
    groups: tuple[BeamGroup, ...] = ()

    @property
    def receivers(self) -> list[int]:
        return [r for g in self.groups for r in g.receivers]

    @property
    def used_intervals(self) -> int:
        return len(self.groups)


def check_sched_tx(table: ReservationTable, period: SchedulingPeriod) -> IntervalAvailability:
    """Intervals not reserved for receiving."""
    return IntervalAvailability(
        tuple(i for i in range(period.interval_count) if not isinstance(table.role(i), RxRole))
    )


def _sectors(neighbors: NeighborTable, beamwidth: int, antenna: AntennaModel) -> list[int]:
    # inlined AntennaModel.sector_index; this is the scheduler's inner loop
    bw = antenna.ladder.check(beamwidth)
    last = 360 // bw - 1
    ref = antenna.boresight_reference
    return [min(int(((n.bearing - ref) % 360.0) // bw), last) for n in neighbors.neighbors]


def beams_needed(
    neighbors: NeighborTable, beamwidth: int, antenna: AntennaModel = DEFAULT_ANTENNA
) -> int:
    return len(set(_sectors(neighbors, beamwidth, antenna)))


def min_beamwidth(
    neighbors: NeighborTable,
    avail: IntervalAvailability,
    antenna: AntennaModel = DEFAULT_ANTENNA,
) -> int | None:
    """Narrowest ladder beamwidth whose beam count fits the free intervals.

    The number of occupied sectors is not monotone along the ladder, so every
    entry is tried in order.
    """
    for bw in antenna.ladder:
        if beams_needed(neighbors, bw, antenna) <= avail.count:
            return bw
    return None


def schedule_tx(
    neighbors: NeighborTable,
    beamwidth: int,
    avail: IntervalAvailability,
    antenna: AntennaModel = DEFAULT_ANTENNA,
) -> BeamPlan:
    groups: dict[int, list[int]] = {}
    for n, sector in zip(neighbors.neighbors, _sectors(neighbors, beamwidth, antenna)):
        groups.setdefault(sector, []).append(n.id)
    if len(groups) > avail.count:
        raise CapacityError(
            f"{len(groups)} beams at {beamwidth} deg do not fit {avail.count} intervals"
        )
    return BeamPlan(
        beamwidth,
        tuple(
            BeamGroup(sector, interval, tuple(groups[sector]))
            for sector, interval in zip(sorted(groups), avail.available)
        ),
    )


def adaptive_schedule(
    neighbors: NeighborTable,
    avail: IntervalAvailability,
    antenna: AntennaModel = DEFAULT_ANTENNA,
) -> BeamPlan:
    bw = min_beamwidth(neighbors, avail, antenna)
    if bw is None or neighbors.count == 0:
        return BeamPlan(bw)
    return schedule_tx(neighbors, bw, avail, antenna)


def baseline_schedule(
    neighbors: NeighborTable,
    avail: IntervalAvailability,
    antenna: AntennaModel = DEFAULT_ANTENNA,
) -> BeamPlan:
    """One receiver per interval at 6 deg, clockwise from the heading."""
    chosen = neighbors.neighbors[: avail.count]
    return BeamPlan(
        BASELINE_BEAMWIDTH,
        tuple(
            BeamGroup(antenna.sector_index(n.bearing, BASELINE_BEAMWIDTH), interval, (n.id,))
            for n, interval in zip(chosen, avail.available)
        ),
    )


POLICIES = {"adaptive": adaptive_schedule, "baseline": baseline_schedule}


def contacted_ratio(plan: BeamPlan, neighbors: NeighborTable) -> float:
    if neighbors.count == 0:
        return 1.0
    return len(plan.receivers) / neighbors.count
