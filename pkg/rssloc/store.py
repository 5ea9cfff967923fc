"""Versioned JSON persistence for fingerprint databases."""
import json
import logging
from pathlib import Path

from rssloc.errors import SchemaError
from rssloc.model import Fingerprint, FingerprintDatabase, GridPoint, SelectionSet, Timing
from rssloc.selection import SelectionConfig

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def _keyed(mapping):
    return {str(beacon): value for beacon, value in mapping.items()}


def _unkeyed(mapping, cast=float):
    return {int(beacon): cast(value) for beacon, value in sorted(mapping.items(), key=lambda item: int(item[0]))}


def database_to_dict(db: FingerprintDatabase):
    data = {
        "format_version": FORMAT_VERSION,
        "n_beacons": db.n_beacons,
        "beacons": list(db.beacons),
        "timing": {"t_a": db.timing.t_a, "t_d": db.timing.t_d},
        "window": db.window,
        "fingerprints": [
            {
                "label": fp.label,
                "x": fp.grid.x,
                "y": fp.grid.y,
                "values": _keyed(fp.values),
                "variances": _keyed(fp.variances),
                "counts": _keyed(fp.counts),
            }
            for fp in db.fingerprints
        ],
    }
    if db.selection is not None:
        data["selection"] = {
            "config": db.selection_config.to_dict() if db.selection_config is not None else None,
            "sets": {label: list(sel.beacons) for label, sel in db.selection.items()},
        }
    if db.sigma is not None:
        data["sigma"] = db.sigma
    return data


def database_from_dict(data) -> FingerprintDatabase:
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise SchemaError(f"unsupported database format_version {version!r}")
    try:
        fingerprints = tuple(
            Fingerprint(
                grid=GridPoint(str(row["label"]), float(row["x"]), float(row["y"])),
                values=_unkeyed(row["values"]),
                variances=_unkeyed(row["variances"]),
                counts=_unkeyed(row["counts"], int),
            )
            for row in data["fingerprints"]
        )
        selection = selection_config = None
        if data.get("selection") is not None:
            selection = {
                label: SelectionSet(grid_label=label, beacons=tuple(int(b) for b in beacons))
                for label, beacons in data["selection"]["sets"].items()
            }
            if data["selection"].get("config") is not None:
                selection_config = SelectionConfig.from_dict(data["selection"]["config"])
        return FingerprintDatabase(
            fingerprints=fingerprints,
            n_beacons=int(data["n_beacons"]),
            timing=Timing(t_a=float(data["timing"]["t_a"]), t_d=float(data["timing"]["t_d"])),
            window=int(data.get("window", 10)),
            selection=selection,
            selection_config=selection_config,
            sigma=data.get("sigma"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed database: {exc}") from exc


def save_database(db: FingerprintDatabase, path):
    Path(path).write_text(json.dumps(database_to_dict(db), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("wrote %d fingerprints to %s", len(db), path)


def load_database(path) -> FingerprintDatabase:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read database {path}: {exc}") from exc
    return database_from_dict(data)
