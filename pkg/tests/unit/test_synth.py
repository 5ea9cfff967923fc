import dataclasses
import math
from collections import Counter

import pytest

from rssloc.errors import InputError, SchemaError
from rssloc.model import GridPoint
from rssloc.synth import Jitter, Scenario, default_scenario, grid, load_scenario, save_scenario, synth_log


def single_point(**kw):
    return Scenario(beacons=((0.0, 0.0),), grid_points=(GridPoint("p", 100.0, 0.0),), **kw)


@pytest.mark.unit
class TestPathLoss:
    def test_reference_distance(self):
        scenario = single_point()
        assert scenario.mean_rss(scenario.d0) == scenario.p0

    def test_doubling_distance(self):
        scenario = single_point(exponent=2.0)
        assert scenario.mean_rss(200.0) - scenario.mean_rss(400.0) == pytest.approx(20 * math.log10(2))

    def test_beacon_height(self):
        scenario = single_point(beacon_height_cm=100.0)
        assert scenario.distance(scenario.grid_points[0], 0) == pytest.approx(100 * math.sqrt(2))

    def test_range_limit(self):
        scenario = Scenario(beacons=((0.0, 0.0), (1000.0, 0.0)), grid_points=(GridPoint("p", 0.0, 0.0),), range_cm=500.0)
        assert set(scenario.expected_fingerprint(scenario.grid_points[0])) == {0}
        assert {r.beacon for r in synth_log(scenario.with_duration(1.0)).records} == {0}


@pytest.mark.unit
class TestSynthLog:
    @pytest.mark.parametrize("seed", range(5))
    def test_duration_shorter_than_interval(self, seed):
        scenario = default_scenario().with_duration(0.05)
        scenario = dataclasses.replace(scenario, jitter=Jitter.hand_held())
        log = synth_log(scenario, seed=seed)
        counts = Counter((r.grid_label, r.beacon) for r in log.records)
        assert all(count == 1 for count in counts.values())
        assert all(r.arrival_time < 9 * 0.05 for r in log.records)

    def test_noise_free_values_and_counts(self):
        scenario = single_point(t_d=5.0)
        log = synth_log(scenario)
        assert len(log.records) == 50
        assert all(r.rss == pytest.approx(scenario.mean_rss(100.0)) for r in log.records)
        assert all(0 <= r.arrival_time < 5.0 for r in log.records)

    def test_same_seed_same_log(self):
        scenario = single_point(t_d=5.0, shadowing_db=2.0, drop_rate=0.1)
        assert synth_log(scenario, seed=3) == synth_log(scenario, seed=3)
        assert synth_log(scenario, seed=3) != synth_log(scenario, seed=4)

    def test_drops_reduce_counts(self):
        full = synth_log(single_point(t_d=30.0), seed=1)
        lossy = synth_log(single_point(t_d=30.0, drop_rate=0.5), seed=1)
        assert 0 < len(lossy.records) < len(full.records)

    def test_visits_are_sequential(self, clean_scenario):
        log = synth_log(clean_scenario)
        first_seen = {}
        for r in log.records:
            first_seen.setdefault(r.grid_label, r.arrival_time)
        starts = [first_seen[p.label] for p in clean_scenario.grid_points]
        assert starts == sorted(starts)
        assert Counter(r.grid_label for r in log.records) == {p.label: 9 * 50 for p in clean_scenario.grid_points}

    def test_session_tag(self):
        log = synth_log(single_point(t_d=1.0), session="walk-1")
        assert {r.session for r in log.records} == {"walk-1"}
        assert log.device == "synthetic"


@pytest.mark.unit
class TestJitter:
    def test_decays_with_distance(self):
        jitter = Jitter.hand_held()
        assert jitter.std_at(0.0) == pytest.approx(21.0)
        assert jitter.std_at(60.0) == pytest.approx(1 + 20 / math.e)
        assert 14 < jitter.std_at(20.0) < 17
        assert jitter.std_at(400.0) < 2

    def test_offset_held_within_interval(self):
        scenario = single_point(t_d=3.0, jitter=Jitter(near_db=10.0, far_db=10.0, hold_s=1.0))
        log = synth_log(scenario, seed=5)
        by_second = {}
        for r in log.records:
            by_second.setdefault(math.floor(r.arrival_time), set()).add(round(r.rss, 9))
        assert all(len(values) == 1 for values in by_second.values())
        assert len({next(iter(v)) for v in by_second.values()}) == 3

    @pytest.mark.parametrize("kw", [{"near_db": -1.0}, {"scale_cm": 0.0}, {"hold_s": 0.0}])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(InputError):
            Jitter(**kw)


@pytest.mark.unit
class TestScenarioConfig:
    @pytest.mark.parametrize("kw", [{"exponent": 0.0}, {"drop_rate": 1.0}, {"shadowing_db": -1.0}, {"t_d": 0.0}])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(InputError):
            single_point(**kw)

    def test_grid_labels(self):
        assert [p.label for p in grid((0, 50.5), (0,))] == ["0_0", "50.5_0"]

    def test_json_round_trip(self, tmp_path):
        scenario = dataclasses.replace(default_scenario(), jitter=Jitter.hand_held(), range_cm=800.0)
        path = tmp_path / "scenario.json"
        save_scenario(scenario, path)
        assert load_scenario(path) == scenario

    def test_malformed(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text('{"beacons": [[0, 0]]}')
        with pytest.raises(SchemaError):
            load_scenario(path)
