"""Directional 60 GHz link budget and threshold-SINR packet delivery.

Propagation is free space gated by line of sight.  A transmitter couples into
a receiver only if its flat-top beam covers the receiver *and* the receiver's
narrow beam, centred on the transmitter it is listening to, covers the
transmitter.  All bursts in an interval start together and fully overlap, and
a burst is delivered whole when its SINR clears the threshold.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geometry import (
    DEFAULT_ANTENNA,
    AntennaModel,
    angular_distance,
    bearing_between,
    los,
    normalize_bearings,
    wrap_offset,
)
from .scenario import Scene

OK = "ok"
SINR_FAIL = "sinr_fail"
CONFLICT_LOSS = "conflict_loss"
FORFEIT_LOSS = "forfeit_loss"

# 20*log10(4*pi/c)
_FSPL_CONST_DB = 20.0 * math.log10(4.0 * math.pi / 299_792_458.0)


class LinkBlocked(ValueError):
    pass


@dataclass(frozen=True)
class PhyConfig:
    carrier_hz: float = 60.48e9
    tx_power_dbm: float = 10.0
    data_rate_mbps: float = 693.0
    packet_bytes: int = 1600
    packets_per_interval: int = 250
    noise_bandwidth_hz: float = 2.16e9
    noise_figure_db: float = 10.0
    sinr_threshold_db: float = 7.0
    rx_beamwidth_deg: float = 6.0

    @property
    def burst_airtime_ms(self) -> float:
        return self.packets_per_interval * self.packet_bytes * 8 / (self.data_rate_mbps * 1e3)

    def check(self, interval_ms: float) -> None:
        if self.burst_airtime_ms > interval_ms:
            raise ValueError(
                f"burst of {self.burst_airtime_ms:.3f} ms does not fit a {interval_ms} ms interval"
            )


@dataclass(frozen=True)
class ActiveTransmission:
    tx: int
    interval: int
    sector: int
    beamwidth: int
    receivers: tuple[int, ...]


@dataclass(frozen=True)
class LinkSample:
    interval: int
    tx: int
    rx: int
    sinr_db: float | None
    delivered: int
    outcome: str
    distance_m: float = 0.0
    tx_beamwidth: int = 0


def path_loss_db(distance_m: float, carrier_hz: float = 60.48e9) -> float:
    if not distance_m > 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return 20.0 * math.log10(distance_m) + 20.0 * math.log10(carrier_hz) + _FSPL_CONST_DB


def noise_floor_dbm(config: PhyConfig = PhyConfig()) -> float:
    return -174.0 + 10.0 * math.log10(config.noise_bandwidth_hz) + config.noise_figure_db


def rx_power_dbm(
    tx,
    rx,
    tx_beam: tuple[int, int],
    rx_pointing: float,
    config: PhyConfig = PhyConfig(),
    antenna: AntennaModel = DEFAULT_ANTENNA,
    all_vehicles: Sequence = (),
    road_length: float | None = None,
) -> float | None:
    """Received power of ``tx``'s beam at ``rx``, or None if nothing couples.

    ``tx_beam`` is ``(sector, beamwidth)`` in ``tx``'s frame; ``rx_pointing``
    is the centre of the receive beam relative to ``rx``'s heading.
    """
    dx = float(wrap_offset(rx.longitudinal_m - tx.longitudinal_m, road_length))
    dy = rx.lateral_m - tx.lateral_m
    sector, bw = tx_beam
    if not antenna.beam_covers(sector, bw, bearing_between((0.0, 0.0), (dx, dy), tx.heading)):
        return None
    back = bearing_between((0.0, 0.0), (-dx, -dy), rx.heading)
    if angular_distance(back, rx_pointing) > config.rx_beamwidth_deg / 2.0 + 1e-9:
        return None
    if all_vehicles and not los(tx, rx, all_vehicles, road_length):
        return None
    return (
        config.tx_power_dbm
        + antenna.gain_dbi(bw)
        + antenna.gain_dbi(config.rx_beamwidth_deg)
        - path_loss_db(math.hypot(dx, dy), config.carrier_hz)
    )


def link_snr_db(
    distance_m: float,
    tx_beamwidth: float,
    config: PhyConfig = PhyConfig(),
    antenna: AntennaModel = DEFAULT_ANTENNA,
) -> float:
    """Interference-free SNR of an aligned, unobstructed link."""
    signal = (
        config.tx_power_dbm
        + antenna.gain_dbi(tx_beamwidth)
        + antenna.gain_dbi(config.rx_beamwidth_deg)
        - path_loss_db(distance_m, config.carrier_hz)
    )
    return signal - noise_floor_dbm(config)


def calibrate_gain_offset(
    config: PhyConfig = PhyConfig(),
    antenna: AntennaModel = DEFAULT_ANTENNA,
    distance_m: float = 50.0,
    margin_db: float = 3.0,
) -> int:
    """Smallest integer gain offset closing an omnidirectional link with margin.

    The link is ``distance_m`` long, transmitted at the widest ladder beamwidth
    and received with the configured narrow beam.
    """
    widest = antenna.ladder.entries[-1]
    probe = AntennaModel(antenna.ladder, 0.0, antenna.boresight_reference)
    # both antenna gains carry the offset once
    shortfall = config.sinr_threshold_db + margin_db - link_snr_db(distance_m, widest, config, probe)
    return math.ceil(shortfall / 2.0 - 1e-12)


def combine_sinr_db(signal_dbm: float, interferers_dbm: Iterable[float], noise_dbm: float) -> float:
    denom = 10.0 ** (noise_dbm / 10.0) + sum(10.0 ** (p / 10.0) for p in interferers_dbm)
    return signal_dbm - 10.0 * math.log10(denom)


def sinr_db(
    rx,
    intended: ActiveTransmission,
    concurrent: Iterable[ActiveTransmission],
    vehicles: Sequence,
    config: PhyConfig = PhyConfig(),
    antenna: AntennaModel = DEFAULT_ANTENNA,
    road_length: float | None = None,
) -> float:
    """SINR at ``rx`` with its beam on ``intended.tx``; scalar reference path."""
    by_id = {v.id: v for v in vehicles}
    tx = by_id[intended.tx]
    dx = float(wrap_offset(tx.longitudinal_m - rx.longitudinal_m, road_length))
    pointing = bearing_between((0.0, 0.0), (dx, tx.lateral_m - rx.lateral_m), rx.heading)
    signal = rx_power_dbm(
        tx, rx, (intended.sector, intended.beamwidth), pointing, config, antenna, vehicles, road_length
    )
    if signal is None:
        raise LinkBlocked(f"no coupling from {intended.tx} to {rx.id}")
    interference = []
    for t in concurrent:
        if t.tx in (intended.tx, rx.id):
            continue
        p = rx_power_dbm(
            by_id[t.tx], rx, (t.sector, t.beamwidth), pointing, config, antenna, vehicles, road_length
        )
        if p is not None:
            interference.append(p)
    return combine_sinr_db(signal, interference, noise_floor_dbm(config))


def interval_outcomes(
    transmissions: Sequence[ActiveTransmission],
    scene: Scene | Sequence,
    config: PhyConfig = PhyConfig(),
    antenna: AntennaModel = DEFAULT_ANTENNA,
    rx_peer: Mapping[int, int] | None = None,
    road_length: float | None = None,
) -> list[LinkSample]:
    """One :class:`LinkSample` per intended (tx, rx) pair of one interval.

    ``transmissions`` must be in announcement order.  ``rx_peer`` maps each
    receiver to the transmitter its beam points at; by default that is the
    first transmission naming it, which is what first-heard-wins produces.
    """
    if not isinstance(scene, Scene):
        scene = Scene(scene, road_length)
    if not transmissions:
        return []
    active = {t.tx for t in transmissions}
    if rx_peer is None:
        rx_peer = {}
        for t in transmissions:
            for r in t.receivers:
                rx_peer.setdefault(r, t.tx)  # type: ignore[union-attr]

    tx_idx = np.array([scene.index[t.tx] for t in transmissions])
    bws = np.array([t.beamwidth for t in transmissions], dtype=float)
    sectors = np.array([t.sector for t in transmissions])
    gains = np.array([antenna.gain_dbi(t.beamwidth) for t in transmissions])

    def lost(t: ActiveTransmission, r: int, outcome: str) -> LinkSample:
        d = float(scene.distances(scene.index[t.tx], [scene.index[r]])[0])
        return LinkSample(t.interval, t.tx, r, None, 0, outcome, d, t.beamwidth)

    samples: list[LinkSample | None] = []
    pending: list[tuple[int, int, int]] = []  # (sample slot, rx index, column)
    for k, t in enumerate(transmissions):
        for r in t.receivers:
            if r in active:
                samples.append(lost(t, r, FORFEIT_LOSS))
            elif rx_peer.get(r, t.tx) != t.tx:
                samples.append(lost(t, r, CONFLICT_LOSS))
            else:
                pending.append((len(samples), scene.index[r], k))
                samples.append(None)
    if not pending:
        return samples  # type: ignore[return-value]

    rx_idx = np.array([p[1] for p in pending])
    own = np.array([p[2] for p in pending])
    rows = np.arange(len(pending))
    # rx -> tx geometry, receivers along rows, transmissions along columns
    dx = wrap_offset(scene.x[tx_idx][None, :] - scene.x[rx_idx][:, None], scene.road_length)
    dy = scene.y[tx_idx][None, :] - scene.y[rx_idx][:, None]
    dist = np.hypot(dx, dy)
    ang = normalize_bearings(np.degrees(np.arctan2(dy, dx)))
    pointing = ang[rows, own]
    diff = np.abs(ang - pointing[:, None]) % 360.0
    diff = np.minimum(diff, 360.0 - diff)
    rx_covers = diff <= config.rx_beamwidth_deg / 2.0 + 1e-9
    tx_bearing = normalize_bearings(
        ang + 180.0 - scene.heading[tx_idx][None, :] - antenna.boresight_reference
    )
    tx_sector = np.minimum(tx_bearing // bws[None, :], 360.0 // bws[None, :] - 1)
    tx_covers = tx_sector == sectors[None, :]
    coupled = rx_covers & tx_covers & (tx_idx[None, :] != rx_idx[:, None]) & (dist > 0)
    rr, cc = np.nonzero(coupled)
    if len(rr):
        coupled[rr, cc] = scene.los_pairs(rx_idx[rr], tx_idx[cc])
    with np.errstate(divide="ignore"):
        pl = 20.0 * np.log10(dist) + 20.0 * math.log10(config.carrier_hz) + _FSPL_CONST_DB
    power = config.tx_power_dbm + gains[None, :] + antenna.gain_dbi(config.rx_beamwidth_deg) - pl
    lin = np.where(coupled, 10.0 ** (power / 10.0), 0.0)
    signal = lin[rows, own]
    interference = lin.sum(axis=1) - signal
    noise = 10.0 ** (noise_floor_dbm(config) / 10.0)
    with np.errstate(divide="ignore"):
        sinr = 10.0 * np.log10(signal / (noise + interference))

    for (slot, r_i, k), s_db, d, ok in zip(pending, sinr, dist[rows, own], coupled[rows, own]):
        t = transmissions[k]
        value = float(s_db) if ok else -math.inf
        delivered = config.packets_per_interval if value >= config.sinr_threshold_db else 0
        samples[slot] = LinkSample(
            t.interval,
            t.tx,
            int(scene.ids[r_i]),
            value,
            delivered,
            OK if delivered else SINR_FAIL,
            float(d),
            t.beamwidth,
        )
    return samples  # type: ignore[return-value]


def write_link_log(rows: Iterable[tuple[int, LinkSample]], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["period", "interval", "tx", "rx", "distance_m", "tx_beamwidth", "sinr_db", "delivered", "outcome"])
        for period, s in rows:
            w.writerow([period, s.interval, s.tx, s.rx, f"{s.distance_m:.3f}", s.tx_beamwidth,
                        "" if s.sinr_db is None else f"{s.sinr_db:.4f}", s.delivered, s.outcome])
