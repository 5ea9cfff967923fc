"""Domain types shared by the whole pipeline.

Coordinates are centimetres, RSS values dBm, times seconds. Every type is
frozen after construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Iterator, Mapping, Optional, Tuple

import numpy as np

from rssloc.errors import InputError

if TYPE_CHECKING:
    from rssloc.selection import SelectionConfig

BeaconId = int


@dataclass(frozen=True)
class Timing:
    t_a: float  # advertising interval
    t_d: float  # scanning duration

    def __post_init__(self):
        if not self.t_a > 0:
            raise InputError(f"advertising interval must be positive, got {self.t_a}")
        if not self.t_d > 0:
            raise InputError(f"scanning duration must be positive, got {self.t_d}")

    @property
    def expected_count(self) -> float:
        return self.t_d / self.t_a


@dataclass(frozen=True)
class GridPoint:
    label: str
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InputError(f"grid point {self.label!r} has a non-finite coordinate")

    @property
    def coord(self) -> Tuple[float, float]:
        return (self.x, self.y)

    def distance_to(self, coord) -> float:
        return math.hypot(self.x - coord[0], self.y - coord[1])


@dataclass(frozen=True)
class RssRecord:
    grid_label: str
    beacon: BeaconId
    rss: float
    arrival_time: float
    session: str = ""


@dataclass(frozen=True)
class RssSeries:
    beacon: BeaconId
    times: Tuple[float, ...] = ()
    rss: Tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.times) != len(self.rss):
            raise InputError("series times and rss values differ in length")
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise InputError(f"series for beacon {self.beacon} is not time-ordered")

    @classmethod
    def from_samples(cls, beacon, samples):
        ordered = sorted(samples, key=lambda sample: sample[0])
        return cls(
            beacon=beacon,
            times=tuple(float(t) for t, _ in ordered),
            rss=tuple(float(v) for _, v in ordered),
        )

    @property
    def count(self) -> int:
        return len(self.rss)

    def values(self) -> np.ndarray:
        return np.asarray(self.rss, dtype=float)


@dataclass(frozen=True)
class Fingerprint:
    grid: GridPoint
    values: Mapping[BeaconId, float]
    variances: Mapping[BeaconId, float]
    counts: Mapping[BeaconId, int]

    def __post_init__(self):
        if set(self.values) != set(self.variances):
            raise InputError(f"fingerprint {self.label!r}: values and variances differ in beacons")
        if not set(self.values) <= set(self.counts):
            raise InputError(f"fingerprint {self.label!r}: beacons without a sample count")
        if any(v < 0 for v in self.variances.values()):
            raise InputError(f"fingerprint {self.label!r}: negative variance")

    @property
    def label(self) -> str:
        return self.grid.label

    @property
    def beacons(self) -> Tuple[BeaconId, ...]:
        return tuple(sorted(self.values))


@dataclass(frozen=True)
class Observation:
    values: Mapping[BeaconId, float]
    window: Optional[Tuple[float, float]] = None
    grid_label: Optional[str] = None

    @property
    def beacons(self) -> Tuple[BeaconId, ...]:
        return tuple(sorted(self.values))

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class SelectionSet:
    grid_label: str
    beacons: Tuple[BeaconId, ...]

    @property
    def s(self) -> int:
        return len(self.beacons)


@dataclass(frozen=True)
class Neighbor:
    label: str
    score: float
    weight: float


@dataclass(frozen=True)
class Estimate:
    coord: Tuple[float, float]
    neighbors: Tuple[Neighbor, ...] = ()

    @property
    def k(self) -> int:
        return len(self.neighbors)


@dataclass(frozen=True)
class FingerprintDatabase:
    fingerprints: Tuple[Fingerprint, ...]
    n_beacons: int
    timing: Timing
    window: int = 10
    selection: Optional[Mapping[str, SelectionSet]] = None
    selection_config: Optional["SelectionConfig"] = None
    sigma: Optional[float] = None

    def __post_init__(self):
        seen = set()
        for fp in self.fingerprints:
            if fp.label in seen:
                raise InputError(f"duplicate grid label {fp.label!r} in database")
            seen.add(fp.label)

    def __len__(self):
        return len(self.fingerprints)

    def __iter__(self) -> Iterator[Fingerprint]:
        return iter(self.fingerprints)

    @cached_property
    def _index(self):
        return {fp.label: fp for fp in self.fingerprints}

    def fingerprint(self, label) -> Fingerprint:
        try:
            return self._index[label]
        except KeyError:
            raise InputError(f"grid label {label!r} not in database") from None

    def grid_point(self, label) -> GridPoint:
        return self.fingerprint(label).grid

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(fp.label for fp in self.fingerprints)

    @cached_property
    def beacons(self) -> Tuple[BeaconId, ...]:
        universe = set()
        for fp in self.fingerprints:
            universe.update(fp.values)
        return tuple(sorted(universe))

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array([fp.grid.coord for fp in self.fingerprints], dtype=float).reshape(-1, 2)
