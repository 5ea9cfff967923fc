import dataclasses

import numpy as np
import pytest

from rssloc.bench import ReplayConfig, fixed_path, replay_path, run_k_sweep, track_frame
from rssloc.estimator import Localizer, localization_errors, training_samples, tune_sigma, validate_s
from rssloc.ingest import consolidate
from rssloc.model import Timing
from rssloc.preprocess import build_database
from rssloc.selection import SelectionConfig, select_database
from rssloc.similarity import Metric, MetricKind, parse_metric
from rssloc.store import load_database, save_database
from rssloc.synth import Jitter, default_scenario, synth_log

SURVEY_TIMING = Timing(t_a=0.1, t_d=30.0)


@pytest.fixture(scope="module")
def test_logs():
    scenario = default_scenario().with_duration(4.0)
    return synth_log(scenario, seed=99)


@pytest.mark.integration
class TestNoiseFree:
    @pytest.mark.parametrize("protocol", [1, 2])
    @pytest.mark.parametrize("metric", list(Metric))
    def test_every_metric_finds_the_grid_point(self, clean_db, test_logs, protocol, metric):
        observations = consolidate(test_logs, protocol)
        assert observations
        errors = localization_errors(Localizer(clean_db, MetricKind(metric)), observations)
        assert len(errors) == len(observations)
        assert max(errors) == pytest.approx(0, abs=1e-6)

    def test_selection_keeps_exact_matches(self, clean_db, test_logs):
        db = select_database(clean_db, SelectionConfig(s=3, timing=clean_db.timing))
        observations = consolidate(test_logs, 2)
        table, _ = run_k_sweep(db, observations, parse_metric("kernel"), [1], selection_on=True)
        assert table.loc[0, "mean_error_cm"] == pytest.approx(0, abs=1e-6)

    def test_database_survives_storage(self, tmp_path, clean_db, test_logs):
        path = tmp_path / "db.json"
        save_database(clean_db, path)
        observations = consolidate(test_logs, 2)
        kind = parse_metric("cosine")
        assert localization_errors(Localizer(load_database(path), kind), observations) == localization_errors(
            Localizer(clean_db, kind), observations
        )

    def test_replay_follows_the_path(self, clean_db, test_logs):
        order = ["0_0", "200_0", "400_0", "400_200", "400_400"]
        path = fixed_path(consolidate(test_logs, 2), order)
        track = track_frame(clean_db, path, replay_path(clean_db, path, parse_metric("kernel"), ReplayConfig(k=1)))
        assert track["label"].tolist() == order
        np.testing.assert_allclose(track[["est_x", "est_y"]].to_numpy(), track[["truth_x", "truth_y"]].to_numpy())

    def test_validate_s_on_raw_windows(self, clean_db, clean_log):
        samples = training_samples("raw", log=clean_log)
        rows = validate_s(samples, clean_db, parse_metric("kernel"), s_range=range(1, 4))
        assert [row["cost"] for row in rows] == pytest.approx([0, 0, 0], abs=1e-6)


def jitter_study(seed, s=5):
    scenario = dataclasses.replace(default_scenario(), jitter=Jitter.hand_held(), shadowing_db=0.5)
    survey = synth_log(scenario.with_duration(SURVEY_TIMING.t_d), seed=seed)
    test = synth_log(scenario.with_duration(10.0), seed=seed + 1000)
    db = select_database(build_database(survey, timing=SURVEY_TIMING), SelectionConfig(s=s, timing=SURVEY_TIMING))
    observations = consolidate(test, 2)
    kind = parse_metric("kernel", sigma=8.0)
    on = localization_errors(Localizer(db, kind, db.selection), observations)
    off = localization_errors(Localizer(db, kind), observations)
    return float(np.mean(on)), float(np.mean(off))


@pytest.mark.integration
@pytest.mark.slow
def test_selection_helps_under_hand_jitter():
    results = [jitter_study(seed) for seed in range(10)]
    on = np.mean([r[0] for r in results])
    off = np.mean([r[1] for r in results])
    assert on < off


@pytest.mark.integration
def test_sigma_search_beats_narrow_kernel_on_offset_device(clean_db):
    scenario = dataclasses.replace(default_scenario(), shadowing_db=1.0).with_duration(4.0)
    windows = consolidate(synth_log(scenario, seed=7), 2)
    # a receiver reading 15 dB low everywhere
    samples = [dataclasses.replace(o, values={b: v - 15.0 for b, v in o.values.items()}) for o in windows]
    best, rows = tune_sigma(clean_db, samples, parse_metric("kernel"))
    by_sigma = {row["sigma"]: row["mean_error_cm"] for row in rows}
    assert best > 1.0
    assert by_sigma[best] < by_sigma[1.0]
