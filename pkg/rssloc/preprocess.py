"""Outlier smoothing and fingerprint-database construction."""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from rssloc.errors import InputError, InvariantViolation
from rssloc.model import Fingerprint, FingerprintDatabase, RssSeries, Timing

logger = logging.getLogger(__name__)

UNIQUENESS_TOLERANCE = 1e-12


def moving_average(series: RssSeries, window: int) -> RssSeries:
    """Trailing mean over the last ``min(window, position)`` samples."""
    if window < 1:
        raise InputError(f"moving-average window must be >= 1, got {window}")
    if series.count == 0 or window == 1:
        return series
    smoothed = pd.Series(series.rss, dtype=float).rolling(window, min_periods=1).mean()
    return RssSeries(beacon=series.beacon, times=series.times, rss=tuple(smoothed.tolist()))


def series_by_beacon(records, universe=()):
    samples = {beacon: [] for beacon in universe}
    for rec in records:
        samples.setdefault(rec.beacon, []).append((rec.arrival_time, rec.rss))
    return {beacon: RssSeries.from_samples(beacon, pairs) for beacon, pairs in sorted(samples.items())}


def build_fingerprint(series_set, grid, window=10) -> Fingerprint:
    values, variances, counts = {}, {}, {}
    for beacon, series in sorted(series_set.items()):
        counts[beacon] = series.count
        if series.count == 0:
            continue
        filtered = moving_average(series, window).values()
        values[beacon] = float(filtered.mean())
        # population variance (ddof=0)
        variances[beacon] = float(filtered.var())
    return Fingerprint(grid=grid, values=values, variances=variances, counts=counts)


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    denominator = np.sqrt((a @ a) * (b @ b))
    if denominator == 0:
        return None
    return float(a @ b / denominator)


def verify_unique(fingerprints):
    """Check that no two fingerprints correlate perfectly.

    Pairs sharing fewer than three beacons are skipped since Pearson
    correlation of two points is always +-1.
    """
    keys = [fp.beacons for fp in fingerprints]
    if keys and all(k == keys[0] for k in keys) and len(keys[0]) >= 3:
        matrix = np.array([[fp.values[b] for b in keys[0]] for fp in fingerprints], dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.corrcoef(matrix)
        upper = np.triu_indices(len(fingerprints), k=1)
        hits = np.flatnonzero(corr[upper] >= 1 - UNIQUENESS_TOLERANCE)
        pairs = [(upper[0][i], upper[1][i]) for i in hits]
    else:
        pairs = []
        for i, first in enumerate(fingerprints):
            for j in range(i + 1, len(fingerprints)):
                second = fingerprints[j]
                common = sorted(set(first.values) & set(second.values))
                if len(common) < 3:
                    continue
                r = _pearson(
                    np.array([first.values[b] for b in common]),
                    np.array([second.values[b] for b in common]),
                )
                if r is not None and r >= 1 - UNIQUENESS_TOLERANCE:
                    pairs.append((i, j))
    if pairs:
        i, j = pairs[0]
        raise InvariantViolation(
            f"fingerprints {fingerprints[i].label!r} and {fingerprints[j].label!r} are not unique "
            f"({len(pairs)} pair(s) with correlation 1)"
        )


def build_database(log, window=10, timing=Timing(t_a=0.1, t_d=30.0), universe=None, workers=1, check_unique=True):
    """One fingerprint per distinct grid label of a survey log."""
    grouped = log.by_grid()
    if not grouped:
        raise InputError("survey log holds no records")
    missing = [label for label in grouped if label not in log.grid_points]
    if missing:
        raise InputError(f"grid label(s) without coordinates: {', '.join(missing)}")
    universe = tuple(sorted(universe if universe is not None else log.beacons))

    def construct(label):
        return build_fingerprint(series_by_beacon(grouped[label], universe), log.grid_points[label], window)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fingerprints = tuple(pool.map(construct, grouped))
    else:
        fingerprints = tuple(construct(label) for label in grouped)
    if check_unique:
        verify_unique(fingerprints)

    db = FingerprintDatabase(fingerprints=fingerprints, n_beacons=len(universe), timing=timing, window=window)
    logger.info("built %d fingerprints over %d beacons (window %d)", len(db), db.n_beacons, window)
    return db
