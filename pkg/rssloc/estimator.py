"""Top-k retrieval and weighted location estimation."""
import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from rssloc.errors import (
    InfeasibleSelectionError,
    InputError,
    NoCommonBeaconsError,
    TooFewCandidatesError,
    UndefinedSimilarityError,
)
from rssloc.ingest import consolidate_protocol2
from rssloc.model import Estimate, Neighbor, Observation
from rssloc.selection import SelectionConfig, refine, select_all
from rssloc.similarity import score_candidates

logger = logging.getLogger(__name__)

SCHEMES = ("uniform", "similarity")
SIGMA_GRID = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
TRAIN_MODES = ("fingerprints", "raw")


class Localizer:
    """Scores observations against a database under one metric configuration.

    With a selection mapping, each fingerprint is refined by its own
    selection set and the observation is refined to the same set per
    comparison.
    """

    def __init__(self, db, metric, selection=None, impute_floor=None):
        self.db = db
        self.metric = metric
        self.selection = selection
        self.impute_floor = impute_floor
        if selection is not None:
            missing = [label for label in db.labels if label not in selection]
            if missing:
                raise InputError(f"no selection set for grid point(s): {', '.join(missing[:5])}")
            self._candidates = [(refine(fp, selection[fp.label]), selection[fp.label]) for fp in db]
        else:
            self._candidates = [(fp, None) for fp in db]

    def rank(self, o):
        pairs = [(fp, o if sel is None else refine(o, sel)) for fp, sel in self._candidates]
        scores = score_candidates(self.metric, pairs, self.impute_floor)
        ranked = sorted(
            ((label, score) for label, score in zip(self.db.labels, scores) if score is not None),
            key=lambda item: (-item[1], item[0]),
        )
        if not ranked:
            raise NoCommonBeaconsError("observation shares no beacons with any fingerprint")
        return ranked

    def top_k(self, o, k):
        check_k(k, len(self.db))
        return self.rank(o)[:k]

    def estimate(self, o, k=1, scheme="uniform"):
        return estimate_from_ranking(self.db, self.rank(o), k, scheme)


def check_k(k, size):
    if not 1 <= k <= size:
        raise InputError(f"k must lie in [1, {size}], got {k}")


def top_k(db, o, metric, k, selection=None, impute_floor=None):
    return Localizer(db, metric, selection, impute_floor).top_k(o, k)


def weights(scores, scheme="uniform"):
    if len(scores) == 0:
        raise InputError("cannot weight an empty neighbour list")
    if scheme not in SCHEMES:
        raise InputError(f"unknown weighting scheme {scheme!r}")
    k = len(scores)
    if scheme == "similarity":
        total = math.fsum(scores)
        if total > 0:
            return [score / total for score in scores]
        logger.warning("all %d neighbour scores are zero; falling back to uniform weights", k)
    return [1.0 / k] * k


def estimate_from_ranking(db, ranked, k=1, scheme="uniform"):
    check_k(k, len(db))
    if len(ranked) < k:
        raise TooFewCandidatesError(len(ranked), k)
    neighbors = ranked[:k]
    w = weights([score for _, score in neighbors], scheme)
    coords = np.array([db.grid_point(label).coord for label, _ in neighbors], dtype=float)
    x, y = np.asarray(w) @ coords
    return Estimate(
        coord=(float(x), float(y)),
        neighbors=tuple(Neighbor(label, score, weight) for (label, score), weight in zip(neighbors, w)),
    )


def estimate(db, o, metric, k=1, scheme="uniform", selection=None, impute_floor=None):
    return Localizer(db, metric, selection, impute_floor).estimate(o, k, scheme)


def truth_of(db, o):
    if o.grid_label is None:
        raise InputError("observation carries no ground-truth grid label")
    return db.grid_point(o.grid_label)


def localization_errors(localizer, samples, k=1, scheme="uniform", leave_one_out=False):
    """Euclidean error (cm) per sample; samples that cannot be scored are skipped.

    With ``leave_one_out`` each sample's own grid point is dropped from its
    ranking, so a fingerprint never answers for itself.
    """
    errors = []
    skipped = 0
    for o in samples:
        truth = truth_of(localizer.db, o)
        try:
            ranked = localizer.rank(o)
            if leave_one_out:
                ranked = [entry for entry in ranked if entry[0] != o.grid_label]
            est = estimate_from_ranking(localizer.db, ranked, k, scheme)
        except (NoCommonBeaconsError, UndefinedSimilarityError, TooFewCandidatesError):
            skipped += 1
            continue
        errors.append(truth.distance_to(est.coord))
    if skipped:
        logger.warning("%d of %d samples had too few scorable candidates and were skipped", skipped, len(samples))
    return errors


def training_samples(mode, db=None, log=None, window_s=1.0):
    """Labelled samples for the s and sigma searches.

    Fingerprint-mode samples are copies of stored fingerprints and must be
    scored with ``leave_one_out=True``.
    """
    if mode == "fingerprints":
        if db is None:
            raise InputError("fingerprint training mode needs a database")
        return [Observation(values=dict(fp.values), grid_label=fp.label) for fp in db]
    if mode == "raw":
        if log is None:
            raise InputError("raw training mode needs the survey log")
        return consolidate_protocol2(log, window_s=window_s)
    raise InputError(f"unknown training mode {mode!r} (known: {', '.join(TRAIN_MODES)})")


def _validate_one(s, samples, db, metric, k, eta, scheme, impute_floor, leave_one_out):
    config = SelectionConfig(s=s, eta=eta, timing=db.timing)
    try:
        selection = select_all(db, config)
    except InfeasibleSelectionError as exc:
        logger.info("s=%d infeasible at %d grid point(s)", s, len(exc.labels))
        return {"s": s, "feasible": False, "cost": None, "mean_error_cm": None, "n": 0}
    localizer = Localizer(db, metric, selection, impute_floor)
    errors = np.array(localization_errors(localizer, samples, k, scheme, leave_one_out))
    if errors.size == 0:
        return {"s": s, "feasible": True, "cost": None, "mean_error_cm": None, "n": 0}
    return {
        "s": s,
        "feasible": True,
        # mean squared Euclidean distance, cm^2
        "cost": float(np.mean(errors**2)),
        "mean_error_cm": float(np.mean(errors)),
        "n": int(errors.size),
    }


def validate_s(samples, db, metric, k=1, s_range=range(1, 17), eta=0.2, scheme="uniform", impute_floor=None, workers=1,
               leave_one_out=False):
    """Training cost for each number of selected beacons."""
    def run(s):
        return _validate_one(s, samples, db, metric, k, eta, scheme, impute_floor, leave_one_out)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, s_range))
    return [run(s) for s in s_range]


def tune_sigma(db, samples, metric, grid=SIGMA_GRID, k=1, scheme="uniform", selection=None, impute_floor=None,
               leave_one_out=False):
    """Grid-search the Gaussian width on training samples; ties keep the smaller sigma."""
    rows = []
    best = None
    for sigma in sorted(grid):
        kind = dataclasses.replace(metric, sigma=float(sigma))
        localizer = Localizer(db, kind, selection, impute_floor)
        errors = localization_errors(localizer, samples, k, scheme, leave_one_out)
        mean = float(np.mean(errors)) if errors else math.inf
        rows.append({"sigma": float(sigma), "mean_error_cm": mean})
        if best is None or mean < best[1]:
            best = (float(sigma), mean)
    logger.info("sigma search picked %.3g (mean error %.2f cm)", best[0], best[1])
    return best[0], rows
