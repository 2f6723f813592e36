"""Run manifests: INI-style files describing a matrix of simulation runs.

Sections and keys::

    [run]       periods, replications, seed, out, workers
    [scenario]  density, tx_ratio, policy, lanes, lane_width, road_length,
                neighbor_range, min_gap, lane_speeds_mps
    [period]    period_ms, interval_count, interval_ms
    [phy]       any PhyConfig field
    [antenna]   beamwidths, gain_offset_db
    [control]   range_m

``density``, ``tx_ratio`` and ``lane_speeds_mps`` take comma-separated lists;
the matrix is the product of the density and ratio lists.  ``policy`` is
``adaptive``, ``baseline`` or ``both``.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .engine import ConfigError, SimConfig
from .geometry import DEFAULT_LADDER, BeamwidthLadder
from .phy import PhyConfig
from .scenario import ScenarioConfig
from .scheduler import SchedulingPeriod


class ConfigFileMissing(ConfigError):
    pass


class ConfigParseError(ConfigError):
    pass


class UnknownConfigKey(ConfigError):
    pass


class ConfigConstraintError(ConfigError):
    pass


POLICY_CHOICES = ("adaptive", "baseline", "both")

_RUN_KEYS = {"periods": int, "replications": int, "seed": int, "out": str, "workers": int}
_SCENARIO_KEYS = {
    "lanes": int,
    "lane_width": float,
    "road_length": float,
    "neighbor_range": float,
    "min_gap": float,
}
_PERIOD_KEYS = {"period_ms": float, "interval_count": int, "interval_ms": float}
_PHY_KEYS = {f.name: f.type for f in dataclasses.fields(PhyConfig)}
_PHY_TYPES = {"float": float, "int": int}

SECTIONS = {
    "run": set(_RUN_KEYS),
    "scenario": {"density", "tx_ratio", "policy", "lane_speeds_mps", *_SCENARIO_KEYS},
    "period": set(_PERIOD_KEYS),
    "phy": set(_PHY_KEYS),
    "antenna": {"beamwidths", "gain_offset_db"},
    "control": {"range_m"},
}


@dataclass(frozen=True)
class Cell:
    density: float
    tx_ratio: float
    policy: str = "both"

    @property
    def policies(self) -> tuple[str, ...]:
        return ("adaptive", "baseline") if self.policy == "both" else (self.policy,)

    @property
    def label(self) -> str:
        return f"{self.density:g}_{self.tx_ratio * 100:g}"


@dataclass(frozen=True)
class RunManifest:
    matrix: tuple[Cell, ...] = (Cell(75.0, 0.10),)
    periods: int = 100
    replications: int = 1
    out: str = "results"
    master_seed: int = 1
    workers: int = 1
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    period: SchedulingPeriod = field(default_factory=SchedulingPeriod)
    phy: PhyConfig = field(default_factory=PhyConfig)
    ladder: BeamwidthLadder = DEFAULT_LADDER
    gain_offset_db: float = 14.0
    control_range_m: float = 300.0

    def __post_init__(self) -> None:
        if not self.matrix:
            raise ConfigConstraintError("scenario matrix is empty")
        for cell in self.matrix:
            if cell.policy not in POLICY_CHOICES:
                raise ConfigConstraintError(
                    f"policy {cell.policy!r} is not one of {', '.join(POLICY_CHOICES)}"
                )
        if self.replications < 1:
            raise ConfigConstraintError(f"replications must be >= 1, got {self.replications}")
        if self.workers < 1:
            raise ConfigConstraintError(f"workers must be >= 1, got {self.workers}")
        # per-cell and per-run values live in the matrix and the run section
        base = ScenarioConfig()
        object.__setattr__(self, "scenario", dataclasses.replace(
            self.scenario,
            density=base.density,
            tx_ratio=base.tx_ratio,
            seed=base.seed,
            cam_period_ms=self.period.period_ms,
        ))
        # validate every run up front so bad cells fail before any simulation
        for cell in self.matrix:
            for policy in cell.policies:
                self.sim_config(cell, policy)

    def sim_config(self, cell: Cell, policy: str) -> SimConfig:
        try:
            scenario = dataclasses.replace(
                self.scenario,
                density=cell.density,
                tx_ratio=cell.tx_ratio,
                cam_period_ms=self.period.period_ms,
            )
        except ValueError as exc:
            raise ConfigConstraintError(f"scenario {cell.label}: {exc}") from None
        try:
            return SimConfig(
                scenario=scenario,
                period=self.period,
                phy=self.phy,
                ladder=self.ladder,
                gain_offset_db=self.gain_offset_db,
                policy=policy,
                periods=self.periods,
                control_range_m=self.control_range_m,
                master_seed=self.master_seed,
            )
        except ConfigError as exc:
            raise ConfigConstraintError(f"scenario {cell.label}/{policy}: {exc}") from None

    def runs(self) -> list[tuple[Cell, str, SimConfig]]:
        """One entry per (cell, policy); paired policies share the seed."""
        return [(c, p, self.sim_config(c, p)) for c in self.matrix for p in c.policies]

    def with_overrides(self, **changes) -> "RunManifest":
        changes = {k: v for k, v in changes.items() if v is not None}
        try:
            return dataclasses.replace(self, **changes)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigConstraintError(str(exc)) from None


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv(values) -> str:
    return ", ".join(_fmt(v) for v in values)


def _list(raw: str, cast) -> list:
    return [cast(x) for x in raw.replace(",", " ").split()]


def manifest_to_text(m: RunManifest) -> str:
    """Serialise ``m`` so that :func:`parse_text` gives it back unchanged."""
    densities = sorted({c.density for c in m.matrix})
    ratios = sorted({c.tx_ratio for c in m.matrix})
    policies = {c.policy for c in m.matrix}
    product = {(d, r) for d in densities for r in ratios}
    if len(policies) != 1 or product != {(c.density, c.tx_ratio) for c in m.matrix} or len(
        m.matrix
    ) != len(product):
        raise ConfigConstraintError("only full density x ratio products with one policy serialise")
    cp = configparser.ConfigParser()
    cp["run"] = {
        "periods": _fmt(m.periods),
        "replications": _fmt(m.replications),
        "seed": _fmt(m.master_seed),
        "out": m.out,
        "workers": _fmt(m.workers),
    }
    scn = {
        "density": _csv(densities),
        "tx_ratio": _csv(ratios),
        "policy": policies.pop(),
    }
    scn.update({k: _fmt(getattr(m.scenario, k)) for k in _SCENARIO_KEYS})
    if m.scenario.lane_speeds_mps is not None:
        scn["lane_speeds_mps"] = _csv(m.scenario.lane_speeds_mps)
    cp["scenario"] = scn
    cp["period"] = {k: _fmt(getattr(m.period, k)) for k in _PERIOD_KEYS}
    cp["phy"] = {k: _fmt(getattr(m.phy, k)) for k in _PHY_KEYS}
    cp["antenna"] = {
        "beamwidths": _csv(m.ladder.entries),
        "gain_offset_db": _fmt(m.gain_offset_db),
    }
    cp["control"] = {"range_m": _fmt(m.control_range_m)}
    lines = []
    for name in cp.sections():
        lines.append(f"[{name}]")
        lines.extend(f"{k} = {v}" for k, v in cp[name].items())
        lines.append("")
    return "\n".join(lines)


def parse_text(text: str, source: str = "<string>") -> RunManifest:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigParseError(f"{source}: cannot parse: {exc}") from None

    for name in cp.sections():
        if name not in SECTIONS:
            raise UnknownConfigKey(f"{source}: unknown section [{name}]")
        extra = sorted(set(cp[name]) - SECTIONS[name])
        if extra:
            raise UnknownConfigKey(f"{source}: unknown key {name}.{extra[0]}")

    def get(section: str, key: str, cast):
        raw = cp.get(section, key, fallback=None)
        if raw is None:
            return None
        try:
            if cast is str:
                return raw.strip()
            return cast(raw)
        except ValueError:
            raise ConfigParseError(f"{source}: {section}.{key} = {raw!r} is not a valid {cast.__name__}") from None

    def pick(section: str, keys: dict) -> dict:
        out = {}
        for key, cast in keys.items():
            cast = _PHY_TYPES.get(cast, cast) if isinstance(cast, str) else cast
            value = get(section, key, cast)
            if value is not None:
                out[key] = value
        return out

    m = {}
    run = pick("run", _RUN_KEYS)
    if "seed" in run:
        m["master_seed"] = run.pop("seed")
    m.update(run)
    if "periods" in m and m["periods"] < 1:
        raise ConfigConstraintError(f"{source}: run.periods must be >= 1, got {m['periods']}")

    try:
        densities = _list(cp.get("scenario", "density", fallback="75"), float)
        ratios = _list(cp.get("scenario", "tx_ratio", fallback="0.10"), float)
        speeds_raw = cp.get("scenario", "lane_speeds_mps", fallback=None)
        speeds = tuple(_list(speeds_raw, float)) if speeds_raw and speeds_raw.strip() else None
    except ValueError as exc:
        raise ConfigParseError(f"{source}: bad number in [scenario]: {exc}") from None
    policy = get("scenario", "policy", str) or "both"
    m["matrix"] = tuple(Cell(d, r, policy) for d in densities for r in ratios)

    try:
        m["scenario"] = ScenarioConfig(lane_speeds_mps=speeds, **pick("scenario", _SCENARIO_KEYS))
        m["period"] = SchedulingPeriod(**pick("period", _PERIOD_KEYS))
        m["phy"] = PhyConfig(**pick("phy", _PHY_KEYS))
        bw_raw = cp.get("antenna", "beamwidths", fallback=None)
        if bw_raw is not None:
            m["ladder"] = BeamwidthLadder(tuple(_list(bw_raw, int)))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigConstraintError(f"{source}: {exc}") from None
    gain = get("antenna", "gain_offset_db", float)
    if gain is not None:
        m["gain_offset_db"] = gain
    rng = get("control", "range_m", float)
    if rng is not None:
        m["control_range_m"] = rng
    try:
        return RunManifest(**m)
    except ConfigConstraintError as exc:
        raise ConfigConstraintError(f"{source}: {exc}") from None


def parse_config(path) -> RunManifest:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigFileMissing(f"config file not found: {path}") from None
    except (IsADirectoryError, PermissionError, UnicodeDecodeError) as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from None
    return parse_text(text, str(path))
