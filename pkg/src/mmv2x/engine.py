"""Deterministic event loop tying the control plane to the mmWave data plane.

For every scheduling period a fresh topology is drawn.  Vehicles then emit
their CAMs in offset order; a transmitter decides its schedule at its own CAM
instant from the reservations it has heard so far, and its announcement is
applied to the tables of the vehicles it addresses.  Finally the intervals of
the period are played out through the PHY.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .control import (
    DEFAULT_CONTROL_RANGE_M,
    Announcement,
    AnnouncementEntry,
    Cam,
    ControlEvent,
    ReservationTable,
    apply_announcement,
    cam_schedule,
    deliver_broadcast,
)
from .geometry import DEFAULT_LADDER, AntennaModel, BeamwidthLadder
from .phy import ActiveTransmission, LinkSample, PhyConfig, interval_outcomes
from .scenario import ScenarioConfig, Scene, Vehicle, advance, generate_drop
from .scheduler import POLICIES, SchedulingPeriod, check_sched_tx

_SEED_MASK = (1 << 64) - 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    period: SchedulingPeriod = field(default_factory=SchedulingPeriod)
    phy: PhyConfig = field(default_factory=PhyConfig)
    ladder: BeamwidthLadder = DEFAULT_LADDER
    gain_offset_db: float = 14.0
    policy: str = "adaptive"
    periods: int = 100
    control_range_m: float = DEFAULT_CONTROL_RANGE_M
    master_seed: int = 1

    def __post_init__(self) -> None:
        if self.periods < 1:
            raise ConfigError(f"periods must be >= 1, got {self.periods}")
        if self.policy not in POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}; expected one of {sorted(POLICIES)}")
        try:
            self.phy.check(self.period.interval_ms)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.phy.rx_beamwidth_deg not in self.ladder:
            raise ConfigError(f"receive beamwidth {self.phy.rx_beamwidth_deg} is not in the ladder")
        if not math.isclose(self.scenario.cam_period_ms, self.period.period_ms):
            raise ConfigError("CAM period and scheduling period must coincide")

    @property
    def antenna(self) -> AntennaModel:
        return AntennaModel(self.ladder, self.gain_offset_db)

    def with_seed(self, seed: int) -> "SimConfig":
        return dataclasses.replace(self, master_seed=seed)


@dataclass(frozen=True)
class TxRecord:
    tx_id: int
    n_neighbors: int
    available: int
    beamwidth: int | None
    contacted: int
    used_intervals: int
    samples: tuple[LinkSample, ...] = ()


@dataclass(frozen=True)
class PeriodRecord:
    period: int
    transmitters: tuple[TxRecord, ...]
    replication: int = 0


def topology(config: SimConfig, period: int) -> list[Vehicle]:
    scn = dataclasses.replace(config.scenario, seed=config.master_seed)
    if scn.lane_speeds_mps is None:
        return generate_drop(scn, period)
    base = generate_drop(scn, 0)
    return advance(base, scn, period * config.period.period_ms / 1000.0)


def simulate_period(
    config: SimConfig,
    period: int,
    vehicles: list[Vehicle],
    events: list[ControlEvent] | None = None,
    links: list[tuple[int, LinkSample]] | None = None,
) -> PeriodRecord:
    sp = config.period
    antenna = config.antenna
    policy = POLICIES[config.policy]
    scene = Scene(vehicles, config.scenario.road_length)
    tables: dict[int, ReservationTable] = {}

    def table(vid: int) -> ReservationTable:
        t = tables.get(vid)
        if t is None:
            t = tables[vid] = ReservationTable(vid, sp.interval_count)
        return t

    by_id = {v.id: v for v in vehicles}
    window_start = (period - 1) * sp.period_ms
    partial: dict[int, list] = {}
    announcements: list[Announcement] = []
    for offset, vid in cam_schedule(vehicles, 1, sp.period_ms):
        now = window_start + offset
        v = by_id[vid]
        if events is not None:
            events.append(ControlEvent(now, "cam", vid))
        if not v.is_mm_tx:
            continue
        nt = scene.neighbor_table(scene.index[vid], config.scenario.neighbor_range)
        if nt.count == 0:
            continue
        avail = check_sched_tx(table(vid), sp)
        plan = policy(nt, avail, antenna)
        partial[vid] = [nt.count, avail.count, plan.beamwidth, len(plan.receivers), plan.used_intervals]
        if not plan.groups:
            continue
        ann = Announcement(
            tx_id=vid,
            period_index=period,
            entries=tuple(
                AnnouncementEntry(g.interval, g.receivers, g.sector, plan.beamwidth) for g in plan.groups
            ),
            start_time_ms=sp.interval_start_ms(period, plan.groups[0].interval),
            duration_ms=sp.interval_ms,
        )
        cam = Cam(vid, now, v.position, ann)
        heard = deliver_broadcast(cam, scene, config.control_range_m)
        apply_announcement(table(vid), ann, now)
        for r in sorted(ann.receivers & heard):
            t = table(r)
            before = len(t.events)
            apply_announcement(t, ann, now)
            if events is not None:
                events.extend(t.events[before:])
        announcements.append(ann)

    samples: dict[int, list[LinkSample]] = {vid: [] for vid in partial}
    for i in range(sp.interval_count):
        active = [
            ActiveTransmission(a.tx_id, e.interval, e.sector, e.beamwidth, e.receivers)
            for a in announcements
            for e in a.entries
            if e.interval == i
        ]
        if not active:
            continue
        rx_peer = {}
        for t in active:
            for r in t.receivers:
                peer = table(r).rx_peer(i)
                if peer is not None:
                    rx_peer[r] = peer
        for s in interval_outcomes(active, scene, config.phy, antenna, rx_peer):
            samples[s.tx].append(s)
            if links is not None:
                links.append((period, s))

    return PeriodRecord(
        period,
        tuple(TxRecord(vid, *partial[vid], tuple(samples[vid])) for vid in sorted(partial)),
    )


def run(
    config: SimConfig,
    events: list[ControlEvent] | None = None,
    links: list[tuple[int, LinkSample]] | None = None,
    replication: int = 0,
) -> list[PeriodRecord]:
    out = []
    for p in range(config.periods):
        rec = simulate_period(config, p, topology(config, p), events, links)
        out.append(dataclasses.replace(rec, replication=replication) if replication else rec)
    return out


def replication_seed(master_seed: int, replication: int) -> int:
    """Seed of replication ``r``; replication 0 reuses the master seed."""
    if replication == 0:
        return master_seed
    ss = np.random.SeedSequence([master_seed & _SEED_MASK, replication])
    return int(ss.generate_state(1, np.uint64)[0])


def _run_one(args: tuple[SimConfig, int]) -> list[PeriodRecord]:
    config, r = args
    return run(config, replication=r)


def run_replications(
    config: SimConfig,
    replication_count: int,
    workers: int = 1,
    seed_fn: Callable[[int, int], int] = replication_seed,
) -> list[PeriodRecord]:
    if replication_count < 1:
        raise ConfigError("replication_count must be >= 1")
    jobs = [(config.with_seed(seed_fn(config.master_seed, r)), r) for r in range(replication_count)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_one, jobs))
    else:
        chunks = [_run_one(j) for j in jobs]
    return [rec for chunk in chunks for rec in chunk]


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def record_rows(records: Iterable[PeriodRecord]) -> Iterable[dict]:
    """One flat dict per (period, transmitter), JSON-ready."""
    for rec in records:
        for tx in rec.transmitters:
            row = {"replication": rec.replication, "period": rec.period}
            row.update(_clean(dataclasses.asdict(tx)))
            yield row


def dump_records(records: Iterable[PeriodRecord], path) -> None:
    with open(path, "w") as fh:
        for row in record_rows(records):
            fh.write(json.dumps(row, sort_keys=True) + "\n")
