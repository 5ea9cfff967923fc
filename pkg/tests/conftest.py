import pytest

from rssloc.model import Fingerprint, FingerprintDatabase, GridPoint, Timing
from rssloc.preprocess import build_database
from rssloc.synth import default_scenario, synth_log

TIMING = Timing(t_a=0.1, t_d=5.0)


def make_fp(label, x, y, values, variances=None, counts=None):
    variances = variances if variances is not None else {b: 0.0 for b in values}
    counts = counts if counts is not None else {b: 50 for b in values}
    return Fingerprint(grid=GridPoint(label, x, y), values=values, variances=variances, counts=counts)


def make_db(fingerprints, timing=TIMING, **kwargs):
    n_beacons = len({b for fp in fingerprints for b in fp.counts})
    return FingerprintDatabase(fingerprints=tuple(fingerprints), n_beacons=n_beacons, timing=timing, **kwargs)


@pytest.fixture
def clean_scenario():
    return default_scenario().with_duration(5.0)


@pytest.fixture
def clean_log(clean_scenario):
    return synth_log(clean_scenario, seed=1)


@pytest.fixture
def clean_db(clean_log):
    return build_database(clean_log, window=10, timing=TIMING)
