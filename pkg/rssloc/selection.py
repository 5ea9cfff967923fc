"""Per-grid-point beacon selection.

Each fingerprint keeps the ``s`` beacons with the smallest RSS variance
among those whose received-sample count reaches ``gamma``.
"""
import dataclasses
import logging
from dataclasses import dataclass

from rssloc.errors import InfeasibleSelectionError, InputError
from rssloc.model import Observation, SelectionSet, Timing

logger = logging.getLogger(__name__)

ETA_WARNING = 0.5
# absorbs float error in (T_d / T_a) * (1 - eta)
COUNT_SLACK = 1e-9


@dataclass(frozen=True)
class SelectionConfig:
    s: int
    eta: float = 0.2
    timing: Timing = Timing(t_a=0.1, t_d=30.0)

    def __post_init__(self):
        if self.s < 1:
            raise InputError(f"s must be a positive integer, got {self.s}")
        if not 0 <= self.eta < 1:
            raise InputError(f"eta must lie in [0, 1), got {self.eta}")
        if self.eta > ETA_WARNING:
            logger.warning("eta=%.2f tolerates losing more than half of the expected signals", self.eta)

    def to_dict(self):
        return {"s": self.s, "eta": self.eta, "t_a": self.timing.t_a, "t_d": self.timing.t_d, "gamma": gamma(self)}

    @classmethod
    def from_dict(cls, data):
        return cls(s=int(data["s"]), eta=float(data["eta"]), timing=Timing(t_a=float(data["t_a"]), t_d=float(data["t_d"])))


def gamma(config: SelectionConfig) -> float:
    return config.timing.t_d / config.timing.t_a * (1 - config.eta)


def eligible_beacons(fp, config: SelectionConfig):
    threshold = gamma(config) - COUNT_SLACK
    return [beacon for beacon in fp.values if fp.counts.get(beacon, 0) >= threshold]


def select(fp, config: SelectionConfig) -> SelectionSet:
    eligible = eligible_beacons(fp, config)
    if len(eligible) < config.s:
        raise InfeasibleSelectionError([fp.label], len(eligible), config.s)
    ranked = sorted(eligible, key=lambda beacon: (fp.variances[beacon], beacon))
    return SelectionSet(grid_label=fp.label, beacons=tuple(sorted(ranked[: config.s])))


def select_all(db, config: SelectionConfig):
    sets = {}
    infeasible = {}
    for fp in db:
        try:
            sets[fp.label] = select(fp, config)
        except InfeasibleSelectionError as exc:
            infeasible[fp.label] = exc.eligible
    if infeasible:
        raise InfeasibleSelectionError(list(infeasible), infeasible, config.s)
    logger.info("selected s=%d beacons at %d grid points (gamma=%.1f)", config.s, len(sets), gamma(config))
    return sets


def select_database(db, config: SelectionConfig):
    return dataclasses.replace(db, selection=select_all(db, config), selection_config=config)


def refine(vec, sel: SelectionSet) -> Observation:
    keep = set(sel.beacons)
    values = {beacon: value for beacon, value in vec.values.items() if beacon in keep}
    if isinstance(vec, Observation):
        return Observation(values=values, window=vec.window, grid_label=vec.grid_label)
    return Observation(values=values, grid_label=vec.label)
