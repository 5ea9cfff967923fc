"""Synthetic scan logs from a log-distance path-loss model.

Test infrastructure only: it gives every stage of the pipeline data with a
known answer, it is not a calibrated channel model.
"""
import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from rssloc.errors import InputError, SchemaError
from rssloc.ingest import RawLog
from rssloc.model import GridPoint, RssRecord

logger = logging.getLogger(__name__)

MIN_DISTANCE_CM = 1.0


@dataclass(frozen=True)
class Jitter:
    """Hand-held RSS perturbation, larger close to a beacon.

    Each beacon gets an offset held for ``hold_s`` seconds with standard
    deviation ``far_db + (near_db - far_db) * exp(-d / scale_cm)``.
    """

    near_db: float = 0.0
    far_db: float = 0.0
    scale_cm: float = 100.0
    hold_s: float = 1.0

    def __post_init__(self):
        if self.near_db < 0 or self.far_db < 0:
            raise InputError("jitter magnitudes must be non-negative")
        if not (self.scale_cm > 0 and self.hold_s > 0):
            raise InputError("jitter scale and hold time must be positive")

    @classmethod
    def hand_held(cls):
        # ~15 dB at 20 cm from a beacon, about 1 dB four metres away
        return cls(near_db=21.0, far_db=1.0, scale_cm=60.0, hold_s=1.0)

    def std_at(self, d):
        return self.far_db + (self.near_db - self.far_db) * math.exp(-d / self.scale_cm)


@dataclass(frozen=True)
class Scenario:
    beacons: Tuple[Tuple[float, float], ...]
    grid_points: Tuple[GridPoint, ...]
    exponent: float = 2.0
    p0: float = -59.0
    d0: float = 100.0
    shadowing_db: float = 0.0
    t_a: float = 0.1
    t_d: float = 30.0
    drop_rate: float = 0.0
    beacon_height_cm: float = 0.0
    range_cm: Optional[float] = None
    jitter: Jitter = field(default_factory=Jitter)

    def __post_init__(self):
        if not self.exponent > 0:
            raise InputError("path-loss exponent must be positive")
        if not self.d0 > 0:
            raise InputError("reference distance must be positive")
        if not 0 <= self.drop_rate < 1:
            raise InputError("drop rate must lie in [0, 1)")
        if self.shadowing_db < 0:
            raise InputError("shadowing std must be non-negative")
        if not (self.t_a > 0 and self.t_d > 0):
            raise InputError("advertising interval and scanning duration must be positive")

    def distance(self, point, beacon):
        bx, by = self.beacons[beacon]
        return math.sqrt((point.x - bx) ** 2 + (point.y - by) ** 2 + self.beacon_height_cm**2)

    def mean_rss(self, d):
        return self.p0 - 10 * self.exponent * math.log10(max(d, MIN_DISTANCE_CM) / self.d0)

    def expected_fingerprint(self, point):
        return {
            beacon: self.mean_rss(self.distance(point, beacon))
            for beacon in range(len(self.beacons))
            if self.range_cm is None or self.distance(point, beacon) <= self.range_cm
        }

    def with_duration(self, t_d):
        return dataclasses.replace(self, t_d=t_d)


def _beacon_samples(scenario, d, rng):
    times = rng.uniform(0, scenario.t_a) + scenario.t_a * np.arange(math.ceil(scenario.t_d / scenario.t_a))
    times = times[times < scenario.t_d]
    if times.size == 0:
        return times, times
    kept = rng.random(times.size) >= scenario.drop_rate
    rss = np.full(times.size, scenario.mean_rss(d))
    if scenario.shadowing_db > 0:
        rss += rng.normal(0.0, scenario.shadowing_db, times.size)
    std = scenario.jitter.std_at(d)
    if std > 0:
        holds = np.floor(times / scenario.jitter.hold_s).astype(int)
        rss += rng.normal(0.0, std, holds.max() + 1)[holds]
    return times[kept], rss[kept]


def synth_log(scenario: Scenario, seed=0, session="") -> RawLog:
    """Visit every grid point for ``t_d`` seconds, one after another."""
    rng = np.random.default_rng(seed)
    records = []
    for visit, point in enumerate(scenario.grid_points):
        start = visit * scenario.t_d
        rows = []
        for beacon in range(len(scenario.beacons)):
            d = scenario.distance(point, beacon)
            if scenario.range_cm is not None and d > scenario.range_cm:
                continue
            times, rss = _beacon_samples(scenario, d, rng)
            rows.extend((start + t, beacon, value) for t, value in zip(times.tolist(), rss.tolist()))
        rows.sort()
        records.extend(RssRecord(point.label, beacon, value, t, session) for t, beacon, value in rows)
    logger.info("synthesised %d records at %d grid points (seed %d)", len(records), len(scenario.grid_points), seed)
    return RawLog(records=tuple(records), grid_points={p.label: p for p in scenario.grid_points}, device="synthetic")


def grid(xs, ys):
    return tuple(GridPoint(f"{x:g}_{y:g}", float(x), float(y)) for y in ys for x in xs)


def default_scenario():
    """3x3 grid, 2 m spacing, one beacon slightly off each grid point."""
    points = grid((0, 200, 400), (0, 200, 400))
    beacons = tuple((p.x + 40.3, p.y + 30.7) for p in points)
    return Scenario(beacons=beacons, grid_points=points)


def scenario_to_dict(scenario: Scenario):
    data = dataclasses.asdict(scenario)
    data["beacons"] = [list(b) for b in scenario.beacons]
    data["grid_points"] = [{"label": p.label, "x": p.x, "y": p.y} for p in scenario.grid_points]
    return data


def scenario_from_dict(data) -> Scenario:
    try:
        fields = dict(data)
        fields["beacons"] = tuple((float(x), float(y)) for x, y in fields["beacons"])
        fields["grid_points"] = tuple(GridPoint(str(p["label"]), float(p["x"]), float(p["y"])) for p in fields["grid_points"])
        fields["jitter"] = Jitter(**fields.get("jitter", {}))
        return Scenario(**fields)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed scenario: {exc}") from exc


def save_scenario(scenario: Scenario, path):
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_scenario(path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read scenario {path}: {exc}") from exc
    return scenario_from_dict(data)
