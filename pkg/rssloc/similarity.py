"""Similarity functions between a fingerprint and an observation.

Every similarity returns a score in [0, 1] with 1 for identical vectors.
Vectors are aligned on the beacons they share (or on the union, filling
gaps with a floor RSS, when ``impute_floor`` is given).
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import partial

import numpy as np
from scipy.spatial import distance
from scipy.stats import rankdata

from rssloc.errors import InputError, InvariantViolation, NoCommonBeaconsError, UndefinedSimilarityError

logger = logging.getLogger(__name__)


class Metric(str, Enum):
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"
    CITYBLOCK = "cityblock"
    CHEBYSHEV = "chebyshev"
    CORRELATION = "correlation"
    MINKOWSKI = "minkowski"
    SPEARMAN = "spearman"
    GAUSSIAN = "kernel"
    EXP_KERNEL = "exp_kernel"
    INVERSE_KERNEL = "inverse_kernel"


BASELINES = (Metric.CHEBYSHEV, Metric.CORRELATION, Metric.MINKOWSKI, Metric.SPEARMAN)
DISTANCE_BASES = (Metric.EUCLIDEAN, Metric.CITYBLOCK, Metric.CHEBYSHEV, Metric.MINKOWSKI)
ALIASES = {"gaussian": Metric.GAUSSIAN, "cosine_similarity": Metric.COSINE}


@dataclass(frozen=True)
class MetricKind:
    metric: Metric
    p: float = 3.0
    sigma: float = 8.0
    gamma_k: float = 0.1
    base: Metric = Metric.EUCLIDEAN

    def __post_init__(self):
        if not self.sigma > 0:
            raise InputError(f"kernel width sigma must be positive, got {self.sigma}")
        if self.p < 1:
            raise InputError(f"Minkowski p must be >= 1, got {self.p}")
        if not self.gamma_k > 0:
            raise InputError(f"exp-kernel rate must be positive, got {self.gamma_k}")
        if self.base not in DISTANCE_BASES:
            raise InputError(f"{self.base.value} cannot serve as a kernel base distance")

    @property
    def name(self):
        return self.metric.value

    @property
    def candidate_dependent(self):
        return self.metric is Metric.INVERSE_KERNEL


def parse_metric(name, **params) -> MetricKind:
    key = name.strip().lower()
    try:
        metric = ALIASES.get(key) or Metric(key)
    except ValueError:
        known = ", ".join(m.value for m in Metric)
        raise InputError(f"unknown metric {name!r} (known: {known})") from None
    params = {k: v for k, v in params.items() if v is not None}
    if "base" in params and not isinstance(params["base"], Metric):
        params["base"] = Metric(params["base"])
    return MetricKind(metric=metric, **params)


def align(f, o, impute_floor=None):
    fv, ov = f.values, o.values
    if impute_floor is None:
        keys = sorted(set(fv) & set(ov))
        if not keys:
            raise NoCommonBeaconsError()
        return (np.array([fv[b] for b in keys], dtype=float), np.array([ov[b] for b in keys], dtype=float))
    keys = sorted(set(fv) | set(ov))
    if not keys:
        raise NoCommonBeaconsError()
    return (
        np.array([fv.get(b, impute_floor) for b in keys], dtype=float),
        np.array([ov.get(b, impute_floor) for b in keys], dtype=float),
    )


def _clamp(value):
    return min(1.0, max(0.0, float(value)))


def _unit(vector):
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise UndefinedSimilarityError("zero-norm vector")
    return vector / norm


def raw_distance(metric, fv, ov, p=3.0):
    if metric is Metric.EUCLIDEAN:
        return float(distance.euclidean(fv, ov))
    if metric is Metric.CITYBLOCK:
        return float(distance.cityblock(fv, ov))
    if metric is Metric.CHEBYSHEV:
        return float(distance.chebyshev(fv, ov))
    if metric is Metric.MINKOWSKI:
        return float(distance.minkowski(fv, ov, p))
    raise InputError(f"{metric.value} is not a distance")


def beta_cosine(f, o, impute_floor=None):
    fv, ov = align(f, o, impute_floor)
    return _clamp(_unit(fv) @ _unit(ov))


def beta_inv_euclidean(f, o, impute_floor=None):
    fv, ov = align(f, o, impute_floor)
    return _clamp(1 - distance.euclidean(_unit(fv), _unit(ov)))


def beta_inv_cityblock(f, o, impute_floor=None):
    fv, ov = align(f, o, impute_floor)
    return _clamp(1 - distance.cityblock(_unit(fv), _unit(ov)))


def _rank_correlation(fv, ov, ranks):
    if fv.size < 2:
        raise UndefinedSimilarityError("correlation needs at least two common beacons")
    if np.ptp(fv) == 0 or np.ptp(ov) == 0:
        raise UndefinedSimilarityError("correlation is undefined for a constant vector")
    if ranks:
        fv, ov = rankdata(fv), rankdata(ov)
    return 1 - distance.correlation(fv, ov)


def beta_baseline(kind, f, o, impute_floor=None):
    if isinstance(kind, Metric):
        kind = MetricKind(kind)
    fv, ov = align(f, o, impute_floor)
    if kind.metric is Metric.CHEBYSHEV:
        return _clamp(1 - distance.chebyshev(_unit(fv), _unit(ov)))
    if kind.metric is Metric.MINKOWSKI:
        return _clamp(1 - distance.minkowski(_unit(fv), _unit(ov), kind.p))
    if kind.metric is Metric.CORRELATION:
        return _clamp(_rank_correlation(fv, ov, ranks=False))
    if kind.metric is Metric.SPEARMAN:
        return _clamp(_rank_correlation(fv, ov, ranks=True))
    raise InputError(f"{kind.name} is not a baseline metric")


def _gaussian(fv, ov, sigma):
    diff = fv - ov
    return math.exp(-float(diff @ diff) / (2 * sigma**2))


def beta_gaussian(f, o, sigma, impute_floor=None):
    if not sigma > 0:
        raise InputError(f"kernel width sigma must be positive, got {sigma}")
    fv, ov = align(f, o, impute_floor)
    return _gaussian(fv, ov, sigma)


def kernel_from_distance(mode, d, gamma_k=1.0, d_max=None):
    """Turn a distance into a kernel value.

    ``exp``: exp(-d * gamma_k). ``inverse``: d_max / d for d > 0. A zero
    distance has no finite inverse value; score_candidates gives it the
    candidate-set maximum instead.
    """
    if d < 0:
        raise InputError(f"distance must be non-negative, got {d}")
    if mode == "exp":
        if not gamma_k > 0:
            raise InputError(f"exp-kernel rate must be positive, got {gamma_k}")
        return math.exp(-d * gamma_k)
    if mode == "inverse":
        if d_max is None:
            raise InputError("inverse kernel needs the candidate-set maximum distance")
        if d == 0:
            raise InputError("inverse kernel is undefined at zero distance; score the candidate set instead")
        return d_max / d
    raise InputError(f"unknown kernel conversion {mode!r}")


def linear_kernel(a, b):
    return float(np.dot(a, b))


def gaussian_kernel(sigma):
    return partial(_gaussian, sigma=sigma)


def _exp_distance(a, b, gamma_k, base, p):
    return kernel_from_distance("exp", raw_distance(base, a, b, p), gamma_k)


def exp_kernel(gamma_k, base=Metric.EUCLIDEAN, p=3.0):
    return partial(_exp_distance, gamma_k=gamma_k, base=base, p=p)


def normalized_kernel_similarity(f, o, kernel, impute_floor=None):
    """kappa(f, o) / sqrt(kappa(f, f) * kappa(o, o)), the cosine in feature space."""
    fv, ov = align(f, o, impute_floor)
    self_f, self_o = kernel(fv, fv), kernel(ov, ov)
    if self_f <= 0 or self_o <= 0:
        raise InvariantViolation("kernel is not positive definite on these inputs")
    return max(-1.0, min(1.0, kernel(fv, ov) / math.sqrt(self_f * self_o)))


def gram_matrix(vectors, kernel):
    size = len(vectors)
    gram = np.empty((size, size))
    for i in range(size):
        for j in range(i, size):
            gram[i, j] = gram[j, i] = kernel(vectors[i], vectors[j])
    return gram


def similarity(kind: MetricKind, f, o, impute_floor=None):
    metric = kind.metric
    if metric is Metric.COSINE:
        return beta_cosine(f, o, impute_floor)
    if metric is Metric.EUCLIDEAN:
        return beta_inv_euclidean(f, o, impute_floor)
    if metric is Metric.CITYBLOCK:
        return beta_inv_cityblock(f, o, impute_floor)
    if metric in BASELINES:
        return beta_baseline(kind, f, o, impute_floor)
    if metric is Metric.GAUSSIAN:
        return beta_gaussian(f, o, kind.sigma, impute_floor)
    if metric is Metric.EXP_KERNEL:
        fv, ov = align(f, o, impute_floor)
        return exp_kernel(kind.gamma_k, kind.base, kind.p)(fv, ov)
    raise InputError(f"{kind.name} scores a whole candidate set; use score_candidates")


def score_candidates(kind: MetricKind, pairs, impute_floor=None):
    """Score (fingerprint, observation) pairs; None marks a pair that cannot be scored."""
    if not kind.candidate_dependent:
        return [_score_or_none(kind, f, o, impute_floor) for f, o in pairs]

    distances = []
    for f, o in pairs:
        try:
            fv, ov = align(f, o, impute_floor)
        except NoCommonBeaconsError:
            distances.append(None)
            continue
        distances.append(raw_distance(kind.base, fv, ov, kind.p))
    known = [d for d in distances if d is not None]
    if not known:
        return distances
    if min(known) == 0:
        # exact matches hold the set maximum
        return [None if d is None else (1.0 if d == 0 else 0.0) for d in distances]
    d_max = max(known)
    kernels = [None if d is None else kernel_from_distance("inverse", d, d_max=d_max) for d in distances]
    top = max(k for k in kernels if k is not None)
    return [None if k is None else k / top for k in kernels]


def _score_or_none(kind, f, o, impute_floor):
    try:
        return similarity(kind, f, o, impute_floor)
    except (NoCommonBeaconsError, UndefinedSimilarityError) as exc:
        logger.debug("skipping candidate %s: %s", getattr(f, "label", "?"), exc)
        return None
