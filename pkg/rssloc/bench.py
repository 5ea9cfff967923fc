"""Evaluation harness: metric comparison, k sweeps, error CDFs and path replay."""
import json
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from rssloc.errors import InputError, NoCommonBeaconsError, TooFewCandidatesError, UndefinedSimilarityError
from rssloc.estimator import Localizer, check_k, estimate_from_ranking, localization_errors, truth_of

logger = logging.getLogger(__name__)

MAX_STEP_CM = 60.0
TRACK_COLUMNS = ["step", "label", "truth_x", "truth_y", "est_x", "est_y", "error_cm"]


def error_of(estimate, truth) -> float:
    return truth.distance_to(estimate.coord)


def _stats(errors):
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        return {"n": 0, "mean_error_cm": float("nan"), "median_error_cm": float("nan")}
    return {"n": int(errors.size), "mean_error_cm": float(errors.mean()), "median_error_cm": float(np.median(errors))}


def run_metric_comparison(db, observations, metrics, protocol_tag, k=1, scheme="uniform", selection=None, impute_floor=None):
    """One row per metric: mean and median error of a fixed (k, scheme)."""
    rows = []
    for kind in metrics:
        localizer = Localizer(db, kind, selection, impute_floor)
        errors = localization_errors(localizer, observations, k, scheme)
        rows.append({"protocol": protocol_tag, "metric": kind.name, "k": k, **_stats(errors)})
        logger.info("%s (protocol %s): mean error %.2f cm", kind.name, protocol_tag, rows[-1]["mean_error_cm"])
    return pd.DataFrame(rows, columns=["protocol", "metric", "k", "n", "mean_error_cm", "median_error_cm"])


def _rankings(localizer, observations):
    ranked = []
    skipped = 0
    for index, o in enumerate(observations):
        try:
            ranked.append((index, o, localizer.rank(o)))
        except (NoCommonBeaconsError, UndefinedSimilarityError):
            skipped += 1
    if skipped:
        logger.warning("%d of %d observations could not be scored", skipped, len(observations))
    return ranked


def run_k_sweep(db, observations, metric, k_range, scheme="uniform", selection_on=False, impute_floor=None):
    """Mean error per k, ranking every observation once.

    Returns ``(table, samples)``: the per-k summary and the per-sample errors.
    """
    selection = None
    if selection_on:
        if db.selection is None:
            raise InputError("database carries no selection sets; run select first")
        selection = db.selection
    ks = list(k_range)
    for k in ks:
        check_k(k, len(db))
    ranked = _rankings(Localizer(db, metric, selection, impute_floor), observations)
    tag = "on" if selection_on else "off"
    samples = []
    short = 0
    for index, o, ranking in ranked:
        truth = truth_of(db, o)
        for k in ks:
            try:
                est = estimate_from_ranking(db, ranking, k, scheme)
            except TooFewCandidatesError:
                short += 1
                continue
            samples.append(
                {"index": index, "grid_label": o.grid_label, "metric": metric.name, "selection": tag, "k": k, "error_cm": error_of(est, truth)}
            )
    if short:
        logger.warning("%d (observation, k) pairs had fewer than k scorable candidates and were skipped", short)
    samples = pd.DataFrame(samples, columns=["index", "grid_label", "metric", "selection", "k", "error_cm"])
    table = pd.DataFrame(
        [{"metric": metric.name, "selection": tag, "k": k, **_stats(samples.loc[samples["k"] == k, "error_cm"])} for k in ks],
        columns=["metric", "selection", "k", "n", "mean_error_cm", "median_error_cm"],
    )
    return table, samples


def error_cdf(errors) -> pd.DataFrame:
    ordered = np.sort(np.asarray(errors, dtype=float))
    fraction = np.arange(1, ordered.size + 1) / ordered.size if ordered.size else np.array([])
    return pd.DataFrame({"error_cm": ordered, "cumulative_fraction": fraction})


def _by_label(observations):
    grouped = {}
    for o in observations:
        if o.grid_label is not None:
            grouped.setdefault(o.grid_label, []).append(o)
    return grouped


def fixed_path(observations, order):
    """First observation of each grid label along ``order``."""
    grouped = _by_label(observations)
    missing = [label for label in order if label not in grouped]
    if missing:
        raise InputError(f"no observation at path grid point(s): {', '.join(missing[:5])}")
    return [grouped[label][0] for label in order]


def random_walk(db, observations, start, steps, seed=0, max_step_cm=MAX_STEP_CM):
    """Corridor walk: each step stays put or moves along x by at most ``max_step_cm``."""
    if steps < 1:
        raise InputError(f"a walk needs at least one step, got {steps}")
    grouped = _by_label(observations)
    if start not in grouped:
        raise InputError(f"no observation at start grid point {start!r}")
    rng = np.random.default_rng(seed)
    current = db.grid_point(start)
    path = []
    for _ in range(steps):
        pool = grouped[current.label]
        path.append(pool[int(rng.integers(len(pool)))])
        reachable = sorted(
            (
                db.grid_point(label)
                for label in grouped
                if db.grid_point(label).y == current.y and abs(db.grid_point(label).x - current.x) <= max_step_cm
            ),
            key=lambda point: point.label,
        )
        current = reachable[int(rng.integers(len(reachable)))]
    return path


@dataclass(frozen=True)
class ReplayConfig:
    k: int = 1
    scheme: str = "uniform"
    selection_on: bool = False
    impute_floor: Optional[float] = None


def replay_path(db, path_observations, metric, config: ReplayConfig = ReplayConfig()):
    selection = db.selection if config.selection_on else None
    if config.selection_on and selection is None:
        raise InputError("database carries no selection sets; run select first")
    localizer = Localizer(db, metric, selection, config.impute_floor)
    return [localizer.estimate(o, config.k, config.scheme) for o in path_observations]


def track_frame(db, path_observations, estimates) -> pd.DataFrame:
    rows = []
    for step, (o, est) in enumerate(zip(path_observations, estimates)):
        truth = truth_of(db, o)
        rows.append([step, o.grid_label, truth.x, truth.y, est.coord[0], est.coord[1], error_of(est, truth)])
    return pd.DataFrame(rows, columns=TRACK_COLUMNS)


def write_table(frame: pd.DataFrame, path):
    frame.to_csv(path, index=False, float_format="%.6f")


def write_errors_jsonl(samples: pd.DataFrame, path):
    with open(path, "w", encoding="utf-8") as handle:
        for row in samples.to_dict(orient="records"):
            handle.write(json.dumps(row, sort_keys=True) + "\n")


def write_summary(summary, path):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
