import logging
import math

import numpy as np
import pytest

from rssloc.errors import InputError, NoCommonBeaconsError, TooFewCandidatesError, UndefinedSimilarityError
from rssloc.model import Observation
from rssloc.selection import SelectionConfig, select_all
from rssloc.similarity import Metric, MetricKind, align, parse_metric, raw_distance, similarity
from rssloc.estimator import (
    Localizer,
    estimate,
    localization_errors,
    top_k,
    training_samples,
    tune_sigma,
    validate_s,
    weights,
)
from tests.conftest import make_db, make_fp

GAUSSIAN = MetricKind(Metric.GAUSSIAN, sigma=1.0)


def random_db(rng, size=50, n_beacons=8):
    fps = []
    for i in range(size):
        keys = sorted(rng.choice(n_beacons, size=rng.integers(3, n_beacons + 1), replace=False).tolist())
        fps.append(make_fp(f"g{i:02d}", float(rng.uniform(0, 1000)), float(rng.uniform(0, 1000)),
                           {b: float(rng.uniform(-100, -30)) for b in keys}))
    return make_db(fps)


def random_observation(rng, n_beacons=8, min_beacons=1):
    keys = sorted(rng.choice(n_beacons, size=rng.integers(min_beacons, n_beacons + 1), replace=False).tolist())
    return Observation(values={b: float(rng.uniform(-100, -30)) for b in keys})


def exhaustive_ranking(db, o, kind):
    if kind.metric is Metric.INVERSE_KERNEL:
        keyed = []
        for fp in db:
            try:
                fv, ov = align(fp, o)
            except NoCommonBeaconsError:
                continue
            keyed.append((raw_distance(kind.base, fv, ov, kind.p), fp.label))
        return [label for _, label in sorted(keyed)]
    keyed = []
    for fp in db:
        try:
            keyed.append((-similarity(kind, fp, o), fp.label))
        except (NoCommonBeaconsError, UndefinedSimilarityError):
            continue
    return [label for _, label in sorted(keyed)]


@pytest.mark.unit
class TestTopK:
    def test_self_match(self):
        db = make_db([make_fp("a", 0, 0, {0: -60.0, 1: -70.0}), make_fp("b", 200, 0, {0: -70.0, 1: -60.0})])
        (label, score), = top_k(db, Observation(values={0: -60.0, 1: -70.0}), GAUSSIAN, 1)
        assert label == "a"
        assert score == 1

    def test_ordering_by_score(self):
        targets = {"A": 0.9, "B": 0.5, "C": 0.8}
        db = make_db([make_fp(label, 0, 0, {0: math.sqrt(-2 * math.log(s))}) for label, s in targets.items()])
        ranked = top_k(db, Observation(values={0: 0.0}), GAUSSIAN, 2)
        assert [label for label, _ in ranked] == ["A", "C"]
        assert [score for _, score in ranked] == pytest.approx([0.9, 0.8])

    def test_ties_resolved_by_label(self):
        db = make_db([make_fp("b", 0, 0, {0: -60.0}), make_fp("a", 60, 0, {0: -60.0})])
        assert [label for label, _ in top_k(db, Observation(values={0: -60.0}), GAUSSIAN, 2)] == ["a", "b"]

    @pytest.mark.parametrize("k", [0, 3])
    def test_k_out_of_range(self, k):
        db = make_db([make_fp("a", 0, 0, {0: -60.0}), make_fp("b", 60, 0, {0: -61.0})])
        with pytest.raises(InputError):
            top_k(db, Observation(values={0: -60.0}), GAUSSIAN, k)

    def test_no_common_beacons(self):
        db = make_db([make_fp("a", 0, 0, {0: -60.0})])
        with pytest.raises(NoCommonBeaconsError):
            top_k(db, Observation(values={5: -60.0}), GAUSSIAN, 1)

    @pytest.mark.slow
    @pytest.mark.parametrize("metric", list(Metric))
    def test_matches_exhaustive_scan(self, metric):
        rng = np.random.default_rng(2024)
        db = random_db(rng)
        kind = MetricKind(metric, sigma=10.0)
        localizer = Localizer(db, kind)
        for _ in range(200):
            o = random_observation(rng)
            expected = exhaustive_ranking(db, o, kind)
            if not expected:
                with pytest.raises(NoCommonBeaconsError):
                    localizer.rank(o)
                continue
            assert [label for label, _ in localizer.rank(o)] == expected

    def test_increasing_transform_keeps_ranking(self):
        rng = np.random.default_rng(8)
        db = random_db(rng, size=20)
        for _ in range(20):
            o = random_observation(rng)
            narrow = Localizer(db, MetricKind(Metric.GAUSSIAN, sigma=20.0)).rank(o)
            wide = Localizer(db, MetricKind(Metric.GAUSSIAN, sigma=40.0)).rank(o)
            assert [label for label, _ in narrow] == [label for label, _ in wide]


@pytest.mark.unit
class TestWeights:
    def test_uniform(self):
        assert weights([0.9, 0.5, 0.1, 0.0]) == [0.25] * 4

    def test_similarity_already_normalized(self):
        assert weights([0.9, 0.1], "similarity") == pytest.approx([0.9, 0.1])

    def test_equal_scores_match_uniform(self):
        assert weights([0.4] * 3, "similarity") == pytest.approx(weights([0.4] * 3))

    def test_all_zero_falls_back_to_uniform(self, caplog):
        with caplog.at_level(logging.WARNING, logger="rssloc.estimator"):
            assert weights([0.0, 0.0], "similarity") == [0.5, 0.5]
        assert "uniform" in caplog.text

    def test_unknown_scheme(self):
        with pytest.raises(InputError):
            weights([0.5], "softmax")


@pytest.mark.unit
class TestEstimate:
    def test_midpoint_of_two_neighbors(self):
        db = make_db([make_fp("a", 0, 0, {0: -60.0, 1: -70.0}), make_fp("b", 200, 0, {0: -61.0, 1: -69.0}),
                      make_fp("c", 900, 900, {0: -90.0, 1: -40.0})])
        est = estimate(db, Observation(values={0: -60.5, 1: -69.5}), GAUSSIAN, k=2)
        assert est.coord == pytest.approx((100, 0))
        assert est.k == 2

    def test_k1_lands_on_a_grid_point(self):
        rng = np.random.default_rng(4)
        db = random_db(rng, size=10)
        for _ in range(10):
            est = estimate(db, random_observation(rng, min_beacons=3), MetricKind(Metric.COSINE))
            assert est.coord in [fp.grid.coord for fp in db]

    def test_weighted_sum_oracle(self):
        rng = np.random.default_rng(9)
        db = random_db(rng, size=15)
        for _ in range(30):
            est = estimate(db, random_observation(rng, min_beacons=3), MetricKind(Metric.GAUSSIAN, sigma=20.0), k=4, scheme="similarity")
            w = np.array([n.weight for n in est.neighbors])
            coords = np.array([db.grid_point(n.label).coord for n in est.neighbors])
            assert np.all(w >= 0)
            assert w.sum() == pytest.approx(1)
            assert est.coord == pytest.approx(tuple(w @ coords), abs=1e-9)
            assert coords[:, 0].min() - 1e-9 <= est.coord[0] <= coords[:, 0].max() + 1e-9

    def test_selection_ignores_unselected_beacons(self):
        rng = np.random.default_rng(12)
        variances = {b: (0.5 if b < 3 else 9.0) for b in range(6)}
        db = make_db([
            make_fp(f"g{i}", 60.0 * i, 0, {b: float(rng.uniform(-90, -40)) for b in range(6)}, variances=variances)
            for i in range(6)
        ])
        selection = select_all(db, SelectionConfig(s=3, timing=db.timing))
        assert {sel.beacons for sel in selection.values()} == {(0, 1, 2)}
        localizer = Localizer(db, parse_metric("kernel"), selection)
        o = Observation(values={b: -60.0 - 3 * b for b in range(6)})
        shifted = Observation(values={b: v - 30 if b >= 3 else v for b, v in o.values.items()})
        assert localizer.rank(shifted) == localizer.rank(o)

    def test_fewer_scorable_candidates_than_k(self):
        db = make_db([make_fp("a", 0, 0, {0: -60.0, 1: -70.0}), make_fp("b", 200, 0, {2: -65.0})])
        o = Observation(values={0: -60.0, 1: -70.0})
        with pytest.raises(TooFewCandidatesError) as excinfo:
            estimate(db, o, GAUSSIAN, k=2)
        assert isinstance(excinfo.value, InputError)
        assert excinfo.value.scored == 1
        assert estimate(db, o, GAUSSIAN, k=1).k == 1

    def test_short_rankings_are_skipped_in_errors(self, caplog):
        db = make_db([make_fp("a", 0, 0, {0: -60.0, 1: -70.0}), make_fp("b", 200, 0, {2: -65.0})])
        samples = [Observation(values={0: -60.0, 1: -70.0}, grid_label="a")]
        with caplog.at_level(logging.WARNING):
            assert localization_errors(Localizer(db, GAUSSIAN), samples, k=2) == []
        assert "skipped" in caplog.text

    def test_missing_selection_set(self, clean_db):
        with pytest.raises(InputError):
            Localizer(clean_db, GAUSSIAN, selection={})


@pytest.mark.unit
class TestTraining:
    def test_fingerprint_samples(self, clean_db):
        samples = training_samples("fingerprints", db=clean_db)
        assert [s.grid_label for s in samples] == list(clean_db.labels)

    def test_raw_samples(self, clean_log):
        samples = training_samples("raw", log=clean_log)
        assert len(samples) == 9 * 5

    @pytest.mark.parametrize("mode, kwargs", [("raw", {}), ("fingerprints", {}), ("median", {"db": object()})])
    def test_bad_mode_or_inputs(self, mode, kwargs):
        with pytest.raises(InputError):
            training_samples(mode, **kwargs)

    def test_leave_one_out_cost_is_never_zero(self, clean_db):
        samples = training_samples("fingerprints", db=clean_db)
        rows = validate_s(samples, clean_db, parse_metric("kernel"), s_range=range(1, 11), leave_one_out=True)
        assert [row["s"] for row in rows] == list(range(1, 11))
        for row in rows[:9]:
            assert row["n"] == 9
            assert row["cost"] >= 200**2
        assert rows[9]["feasible"] is False

    def test_self_matches_without_leave_one_out(self, clean_db):
        samples = training_samples("fingerprints", db=clean_db)
        rows = validate_s(samples, clean_db, parse_metric("kernel"), s_range=range(1, 3))
        assert [row["cost"] for row in rows] == pytest.approx([0, 0])

    def test_workers_give_the_same_table(self, clean_db):
        samples = training_samples("fingerprints", db=clean_db)
        kind = parse_metric("kernel")
        assert validate_s(samples, clean_db, kind, s_range=range(1, 6), workers=3, leave_one_out=True) == validate_s(
            samples, clean_db, kind, s_range=range(1, 6), leave_one_out=True
        )

    def test_sigma_ties_keep_the_smallest(self):
        db = make_db([make_fp("a", 0, 0, {0: -60.0, 1: -70.0}), make_fp("b", 200, 0, {0: -70.0, 1: -60.0})])
        samples = [Observation(values={0: -60.0, 1: -70.0}, grid_label="a")]
        best, rows = tune_sigma(db, samples, parse_metric("kernel"))
        assert best == 1.0
        assert [row["sigma"] for row in rows] == [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
        assert all(row["mean_error_cm"] == 0 for row in rows)

    def test_sigma_search_avoids_underflow(self):
        # at sigma=1 both scores underflow to zero and the label order picks "a"
        db = make_db([make_fp("a", 0, 0, {0: -30.0, 1: -30.0}), make_fp("b", 600, 0, {0: -70.0, 1: -70.0})])
        samples = [Observation(values={0: -100.0, 1: -100.0}, grid_label="b")]
        best, rows = tune_sigma(db, samples, parse_metric("kernel"))
        assert rows[0]["mean_error_cm"] == pytest.approx(600)
        assert best == 2.0
        assert rows[1]["mean_error_cm"] == pytest.approx(0)

    def test_sigma_search_leaves_each_fingerprint_out(self, clean_db):
        samples = training_samples("fingerprints", db=clean_db)
        _, rows = tune_sigma(clean_db, samples, parse_metric("kernel"), leave_one_out=True)
        assert min(row["mean_error_cm"] for row in rows) >= 200

    def test_errors_skip_unscorable_samples(self, clean_db, caplog):
        samples = [Observation(values={99: -60.0}, grid_label="0_0"), Observation(values=dict(clean_db.fingerprint("0_0").values), grid_label="0_0")]
        with caplog.at_level(logging.WARNING):
            errors = localization_errors(Localizer(clean_db, GAUSSIAN), samples)
        assert errors == [0.0]
        assert "skipped" in caplog.text

    def test_errors_need_ground_truth(self, clean_db):
        with pytest.raises(InputError):
            localization_errors(Localizer(clean_db, GAUSSIAN), [Observation(values={0: -60.0})])
