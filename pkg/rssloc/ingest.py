"""Raw scan-log ingestion and consolidation into observations.

A log is a CSV of logged advertisements (grid label or coordinates, beacon,
RSS, arrival time). Consolidation works per grid-point visit, a maximal run
of consecutive records sharing session and grid label.
"""
import itertools
import json
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from rssloc.errors import GridConflictError, ParseError, SchemaError, UnknownBeaconError
from rssloc.model import GridPoint, Observation, RssRecord

logger = logging.getLogger(__name__)

TIME_ORIGINS = ("relative", "epoch")


@dataclass(frozen=True)
class CsvSchema:
    rss: str
    arrival_time: str
    beacon: str
    grid_label: Optional[str] = None
    x: Optional[str] = None
    y: Optional[str] = None
    session: Optional[str] = None
    label_separator: str = "_"
    time_origin: str = "relative"
    time_scale: float = 1.0
    beacon_map: Optional[Mapping[str, int]] = None
    beacons: Optional[Tuple[int, ...]] = None
    device: str = ""
    data_type: Optional[int] = None

    def __post_init__(self):
        if self.time_origin not in TIME_ORIGINS:
            raise SchemaError(f"time_origin must be one of {TIME_ORIGINS}, got {self.time_origin!r}")
        if (self.x is None) != (self.y is None):
            raise SchemaError("schema must name both x and y columns or neither")
        if self.grid_label is None and self.x is None:
            raise SchemaError("schema must name a grid_label column or x/y columns")
        if not self.time_scale > 0:
            raise SchemaError("time_scale must be positive")

    @property
    def columns(self):
        named = [self.grid_label, self.x, self.y, self.rss, self.arrival_time, self.beacon, self.session]
        return [column for column in named if column is not None]

    def to_dict(self):
        data = asdict(self)
        if self.beacons is not None:
            data["beacons"] = list(self.beacons)
        return data


def load_schema(path) -> CsvSchema:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read schema file {path}: {exc}") from exc
    columns = data.pop("columns", {})
    fields = {**columns, **data}
    missing = [name for name in ("rss", "arrival_time", "beacon") if name not in fields]
    if missing:
        raise SchemaError(f"schema {path} does not name: {', '.join(missing)}")
    if fields.get("beacons") is not None:
        fields["beacons"] = tuple(int(b) for b in fields["beacons"])
    if fields.get("beacon_map") is not None:
        fields["beacon_map"] = {str(k): int(v) for k, v in fields["beacon_map"].items()}
    try:
        return CsvSchema(**fields)
    except TypeError as exc:
        raise SchemaError(f"schema {path}: {exc}") from exc


def save_schema(schema: CsvSchema, path):
    Path(path).write_text(json.dumps(schema.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class RawLog:
    records: Tuple[RssRecord, ...]
    grid_points: Mapping[str, GridPoint]
    device: str = ""
    data_type: Optional[int] = None

    def __len__(self):
        return len(self.records)

    @property
    def beacons(self):
        return tuple(sorted({rec.beacon for rec in self.records}))

    def visits(self):
        """Split records into grid-point visits, each sorted by arrival time."""
        runs = itertools.groupby(self.records, key=lambda rec: (rec.session, rec.grid_label))
        return [sorted(run, key=lambda rec: rec.arrival_time) for _, run in runs]

    def by_grid(self):
        grouped = {}
        for rec in self.records:
            grouped.setdefault(rec.grid_label, []).append(rec)
        return grouped


def _first_bad_row(mask, column, message):
    bad = np.flatnonzero(np.asarray(mask))
    if bad.size:
        # header is line 1
        raise ParseError(int(bad[0]) + 2, f"{message} in column {column!r}")


def _numeric(frame, column, message="non-numeric value"):
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=float)
    _first_bad_row(~np.isfinite(values), column, message)
    return values


def _beacon_ids(frame, schema):
    raw = frame[schema.beacon].str.strip()
    if schema.beacon_map is not None:
        unknown = set(raw[~raw.isin(list(schema.beacon_map))])
        if unknown:
            raise UnknownBeaconError(unknown)
        ids = raw.map(schema.beacon_map).to_numpy(dtype=int)
    else:
        numbers = _numeric(frame, schema.beacon, "non-numeric beacon id")
        _first_bad_row((numbers != np.round(numbers)) | (numbers < 0), schema.beacon, "invalid beacon id")
        ids = numbers.astype(int)
    if schema.beacons is not None:
        unknown = set(ids.tolist()) - set(schema.beacons)
        if unknown:
            raise UnknownBeaconError(unknown)
    return ids


def _grid_points(labels, xs, ys):
    points = {}
    for label, x, y in zip(labels, xs, ys):
        known = points.get(label)
        if known is None:
            points[label] = GridPoint(label, float(x), float(y))
        elif known.coord != (x, y):
            raise GridConflictError(label, known.coord, (x, y))
    return points


def _coords_from_labels(labels, separator):
    xs, ys = [], []
    for row, label in enumerate(labels):
        parts = label.split(separator)
        try:
            x, y = (float(part) for part in parts)
        except ValueError:
            raise ParseError(row + 2, f"cannot read coordinates from grid label {label!r}") from None
        xs.append(x)
        ys.append(y)
    return np.array(xs), np.array(ys)


def _read_frame(path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path}: empty log, no header row") from None
    except pd.errors.ParserError as exc:
        line = re.search(r"line (\d+)", str(exc))
        raise ParseError(int(line.group(1)) if line else 0, str(exc).strip()) from exc
    except UnicodeDecodeError as exc:
        raise SchemaError(f"{path}: not UTF-8 text (byte {exc.start}: {exc.reason})") from None


def parse_csv(path, schema: CsvSchema) -> RawLog:
    frame = _read_frame(path)
    missing = [column for column in schema.columns if column not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")

    rss = _numeric(frame, schema.rss, "non-numeric RSS")
    times = _numeric(frame, schema.arrival_time, "non-numeric arrival time") * schema.time_scale
    if schema.time_origin == "epoch" and times.size:
        times = times - times.min()
    _first_bad_row(times < 0, schema.arrival_time, "negative arrival time")
    beacons = _beacon_ids(frame, schema)

    if schema.x is not None:
        xs = _numeric(frame, schema.x, "non-numeric x coordinate")
        ys = _numeric(frame, schema.y, "non-numeric y coordinate")
    if schema.grid_label is not None:
        labels = frame[schema.grid_label].str.strip().tolist()
        if schema.x is None:
            xs, ys = _coords_from_labels(labels, schema.label_separator)
    else:
        labels = [f"{x:g}{schema.label_separator}{y:g}" for x, y in zip(xs, ys)]
    sessions = frame[schema.session].tolist() if schema.session else itertools.repeat("")

    grid_points = _grid_points(labels, xs.tolist(), ys.tolist())
    records = tuple(
        RssRecord(grid_label=label, beacon=beacon, rss=value, arrival_time=t, session=session)
        for label, beacon, value, t, session in zip(labels, beacons.tolist(), rss.tolist(), times.tolist(), sessions)
    )
    logger.info("parsed %d records over %d grid points from %s", len(records), len(grid_points), path)
    return RawLog(records=records, grid_points=grid_points, device=schema.device, data_type=schema.data_type)


def write_log_csv(log: RawLog, path):
    frame = pd.DataFrame(
        {
            "label": [rec.grid_label for rec in log.records],
            "x": [log.grid_points[rec.grid_label].x for rec in log.records],
            "y": [log.grid_points[rec.grid_label].y for rec in log.records],
            "beacon": [rec.beacon for rec in log.records],
            "rss": [rec.rss for rec in log.records],
            "time": [rec.arrival_time for rec in log.records],
            "session": [rec.session for rec in log.records],
        }
    )
    frame.to_csv(path, index=False)


def log_schema(device="", data_type=None) -> CsvSchema:
    """Schema of the CSV files written by :func:`write_log_csv`."""
    return CsvSchema(
        rss="rss", arrival_time="time", beacon="beacon", grid_label="label",
        x="x", y="y", session="session", device=device, data_type=data_type,
    )


def _map_visits(fn, visits, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, visits))
    else:
        results = [fn(visit) for visit in visits]
    return [obs for chunk in results for obs in chunk]


def _protocol1_visit(visit, universe):
    observations = []
    latest = {}
    start = None
    for rec in visit:
        if rec.beacon not in universe:
            continue
        if start is None:
            start = rec.arrival_time
        latest[rec.beacon] = rec.rss
        if len(latest) == len(universe):
            observations.append(
                Observation(values=dict(sorted(latest.items())), window=(start, rec.arrival_time), grid_label=rec.grid_label)
            )
            latest = {}
            start = None
    return observations


def consolidate_protocol1(log: RawLog, universe, workers=1):
    """Emit one observation each time every beacon of ``universe`` has been seen."""
    universe = frozenset(universe)
    if not universe:
        raise SchemaError("protocol 1 needs a non-empty beacon universe")
    observations = _map_visits(lambda visit: _protocol1_visit(visit, universe), log.visits(), workers)
    logger.info("protocol 1: %d observations over %d beacons", len(observations), len(universe))
    return observations


def _window_observation(window):
    samples = {}
    for rec in window:
        samples.setdefault(rec.beacon, []).append(rec.rss)
    values = {beacon: math.fsum(rss) / len(rss) for beacon, rss in sorted(samples.items())}
    return Observation(values=values, window=(window[0].arrival_time, window[-1].arrival_time), grid_label=window[0].grid_label)


def _protocol2_visit(visit, window_s):
    windows = []
    current = []
    for rec in visit:
        # elapsed time since the window opened, i.e. the summed inter-arrival gaps
        if current and rec.arrival_time - current[0].arrival_time >= window_s:
            windows.append(current)
            current = []
        current.append(rec)
    if current:
        windows.append(current)
    return [_window_observation(window) for window in windows]


def consolidate_protocol2(log: RawLog, window_s=1.0, workers=1):
    """Segment every visit into consecutive windows of ``window_s`` seconds."""
    if not window_s > 0:
        raise SchemaError("window length must be positive")
    observations = _map_visits(lambda visit: _protocol2_visit(visit, window_s), log.visits(), workers)
    logger.info("protocol 2: %d observations from %.3g s windows", len(observations), window_s)
    return observations


def consolidate(log: RawLog, protocol, universe=None, window_s=1.0, workers=1):
    if protocol == 1:
        return consolidate_protocol1(log, universe if universe is not None else log.beacons, workers=workers)
    if protocol == 2:
        return consolidate_protocol2(log, window_s=window_s, workers=workers)
    raise SchemaError(f"unknown consolidation protocol {protocol!r}")


def write_observations_jsonl(observations, path):
    with open(path, "w", encoding="utf-8") as handle:
        for obs in observations:
            row = {
                "grid_label": obs.grid_label,
                "window": list(obs.window) if obs.window is not None else None,
                "values": {str(beacon): value for beacon, value in obs.values.items()},
            }
            handle.write(json.dumps(row, sort_keys=True) + "\n")


def read_observations_jsonl(path):
    observations = []
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                values = {int(beacon): float(value) for beacon, value in row["values"].items()}
            except (json.JSONDecodeError, KeyError, ValueError, AttributeError) as exc:
                raise ParseError(number, f"bad observation line: {exc}") from exc
            window = tuple(row["window"]) if row.get("window") is not None else None
            observations.append(Observation(values=values, window=window, grid_label=row.get("grid_label")))
    return observations
