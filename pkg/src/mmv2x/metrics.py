"""Aggregation of period records into box statistics, CDFs and throughput."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .engine import PeriodRecord, TxRecord
from .geometry import DEFAULT_LADDER, BeamwidthLadder


class EmptyData(ValueError):
    pass


def percentile(samples: Sequence[float], p: float) -> float:
    """Nearest-rank percentile of ascending ``samples`` (``p`` in [0, 1])."""
    n = len(samples)
    if n == 0:
        raise EmptyData("percentile of an empty sample")
    # the epsilon keeps e.g. 0.95 * 20 from rounding up past 19
    rank = math.ceil(p * n - 1e-9)
    return samples[min(max(rank, 1), n) - 1]


@dataclass(frozen=True)
class BoxStats:
    p5: float
    p25: float
    median: float
    p75: float
    p95: float
    mean: float
    count: int = 0

    @classmethod
    def from_samples(cls, samples: Iterable[float]) -> "BoxStats":
        data = sorted(samples)
        if not data:
            raise EmptyData("no samples to summarise")
        return cls(
            percentile(data, 0.05),
            percentile(data, 0.25),
            percentile(data, 0.50),
            percentile(data, 0.75),
            percentile(data, 0.95),
            math.fsum(data) / len(data),
            len(data),
        )


def _transmitters(records: Iterable[PeriodRecord]) -> Iterable[TxRecord]:
    for rec in records:
        yield from rec.transmitters


def contacted_ratios(records: Iterable[PeriodRecord]) -> list[float]:
    return [t.contacted / t.n_neighbors for t in _transmitters(records) if t.n_neighbors > 0]


def contacted_stats(records: Iterable[PeriodRecord], policy: str | None = None) -> BoxStats:
    ratios = contacted_ratios(records)
    if not ratios:
        raise EmptyData(f"no transmitter with neighbours ({policy or 'any policy'})")
    return BoxStats.from_samples(ratios)


def beamwidth_cdf(
    records: Iterable[PeriodRecord], ladder: BeamwidthLadder = DEFAULT_LADDER
) -> list[tuple[int, float]]:
    """Empirical CDF over the ladder; one sample per used interval."""
    counts = dict.fromkeys(ladder, 0)
    for t in _transmitters(records):
        if t.beamwidth is not None and t.used_intervals:
            counts[t.beamwidth] += t.used_intervals
    total = sum(counts.values())
    if total == 0:
        return []
    out = []
    running = 0
    for bw in ladder:
        running += counts[bw]
        out.append((bw, running / total))
    return out


def mass_at(cdf: Sequence[tuple[int, float]], beamwidth: int) -> float:
    prev = 0.0
    for bw, c in cdf:
        if bw == beamwidth:
            return c - prev
        prev = c
    return 0.0


def mass_above(cdf: Sequence[tuple[int, float]], beamwidth: int) -> float:
    below = max((c for bw, c in cdf if bw <= beamwidth), default=0.0)
    return 1.0 - below if cdf else 0.0


def pdr_samples(records: Iterable[PeriodRecord], packets_per_interval: int = 250) -> list[float]:
    return [
        100.0 * s.delivered / packets_per_interval
        for t in _transmitters(records)
        for s in t.samples
    ]


def pdr_stats(records: Iterable[PeriodRecord], packets_per_interval: int = 250) -> BoxStats:
    return BoxStats.from_samples(pdr_samples(records, packets_per_interval))


def delivered_packets(records: Iterable[PeriodRecord]) -> int:
    return sum(s.delivered for t in _transmitters(records) for s in t.samples)


def aggregated_throughput_mbps(
    records: Iterable[PeriodRecord], sim_duration_s: float, packet_bytes: int = 1600
) -> float:
    if sim_duration_s <= 0:
        raise ValueError("simulation duration must be positive")
    return delivered_packets(records) * packet_bytes * 8 / sim_duration_s / 1e6


def throughput_gain(
    adaptive_records: Iterable[PeriodRecord],
    baseline_records: Iterable[PeriodRecord],
    sim_duration_s: float,
    packet_bytes: int = 1600,
) -> float:
    """Percentage increase of aggregated throughput over the baseline."""
    a = aggregated_throughput_mbps(adaptive_records, sim_duration_s, packet_bytes)
    b = aggregated_throughput_mbps(baseline_records, sim_duration_s, packet_bytes)
    if b == 0:
        raise ZeroDivisionError("baseline throughput is zero; gain undefined")
    return (a - b) / b * 100.0


def mean_receivers_per_interval(records: Iterable[PeriodRecord]) -> float:
    contacted = used = 0
    for t in _transmitters(records):
        contacted += t.contacted
        used += t.used_intervals
    if used == 0:
        raise EmptyData("no interval was used")
    return contacted / used


def mean_neighbors(records: Iterable[PeriodRecord]) -> float:
    ns = [t.n_neighbors for t in _transmitters(records)]
    if not ns:
        raise EmptyData("no transmitter records")
    return sum(ns) / len(ns)


@dataclass(frozen=True)
class MetricsReport:
    density: float
    tx_ratio: float
    policy: str
    contacted: BoxStats
    beamwidth_cdf: list[tuple[int, float]]
    pdr: BoxStats
    aggregated_throughput_mbps: float
    mean_receivers_per_interval: float
    mean_neighbors: float


def build_report(
    records: Sequence[PeriodRecord],
    density: float,
    tx_ratio: float,
    policy: str,
    sim_duration_s: float,
    packets_per_interval: int = 250,
    packet_bytes: int = 1600,
    ladder: BeamwidthLadder = DEFAULT_LADDER,
) -> MetricsReport:
    return MetricsReport(
        density,
        tx_ratio,
        policy,
        contacted_stats(records, policy),
        beamwidth_cdf(records, ladder),
        pdr_stats(records, packets_per_interval),
        aggregated_throughput_mbps(records, sim_duration_s, packet_bytes),
        mean_receivers_per_interval(records),
        mean_neighbors(records),
    )


_BOX_COLUMNS = ("p5", "p25", "median", "p75", "p95", "mean", "count")


def _box_line(b: BoxStats) -> str:
    return " ".join(f"{getattr(b, c):.6g}" for c in _BOX_COLUMNS)


def write_dat_files(report: MetricsReport, directory: Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "contacted_box.dat").write_text(
        "# " + " ".join(_BOX_COLUMNS) + "\n" + _box_line(report.contacted) + "\n"
    )
    (directory / "pdr_box.dat").write_text(
        "# " + " ".join(_BOX_COLUMNS) + "\n" + _box_line(report.pdr) + "\n"
    )
    (directory / "beamwidth_cdf.dat").write_text(
        "# beamwidth_deg cumulative_fraction\n"
        + "".join(f"{bw} {c:.6f}\n" for bw, c in report.beamwidth_cdf)
    )
    (directory / "throughput.dat").write_text(
        "# aggregated_throughput_mbps mean_receivers_per_interval\n"
        f"{report.aggregated_throughput_mbps:.6f} {report.mean_receivers_per_interval:.6f}\n"
    )


def report_dict(report: MetricsReport) -> dict:
    d = asdict(report)
    d["beamwidth_cdf"] = [list(p) for p in report.beamwidth_cdf]
    return d


def write_summary(report: MetricsReport, path: Path) -> None:
    Path(path).write_text(json.dumps(report_dict(report), indent=2, sort_keys=True) + "\n")
