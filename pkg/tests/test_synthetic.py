import json
import math

import numpy as np
import pytest

from rtface.alignment import FaceTemplate, alignment_residual, estimate_similarity
from rtface.core import EXPRESSIONS, BBox
from rtface.errors import ConfigError, InvalidInputError
from rtface.scheduler import AGE, EXPRESSION, GENDER
from rtface.synthetic import (
    ActorSpec,
    DetectorModel,
    GroundTruthFace,
    LandmarkModel,
    LatencyModel,
    PathSpec,
    RecognizerModel,
    Scenario,
    bundled_scenarios,
    ground_truth_at,
    landmark_transform,
    load_scenario,
    save_scenario,
    stage_rng,
    synth_detect,
    synth_landmarks,
    synth_recognize,
)

from conftest import still_actor


def face(box=(100, 60, 40, 40), age=30.0, gender="female", expr=1):
    return GroundTruthFace("a", BBox(*box), age, gender, expr)


def test_ground_truth_before_entry_is_empty():
    sc = Scenario(duration=5000, actors=(still_actor("a", 10, 10, enter_ts=1000.0),))
    assert ground_truth_at(sc, 999_999) == []
    assert len(ground_truth_at(sc, 1_000_000)) == 1


def test_ground_truth_linear_path():
    sc = Scenario(duration=5000, actors=(still_actor("a", 0, 0, size=20, velocity=(10, 0)),))
    (gt,) = ground_truth_at(sc, 1_000_000)
    assert gt.box == BBox(10, 0, 20, 20)
    assert (gt.box.x + gt.box.w / 2, gt.box.y + gt.box.h / 2) == (20, 10)


def test_ground_truth_overlapping_actors_keep_declaration_order():
    sc = Scenario(duration=1000, actors=(still_actor("z", 50, 50), still_actor("b", 60, 60)))
    assert [g.actor_id for g in ground_truth_at(sc, 0)] == ["z", "b"]


def test_ground_truth_clamps_and_exits():
    sc = Scenario(duration=5000, actors=(still_actor("a", 220, 170, size=40, exit_ts=2000.0),))
    (gt,) = ground_truth_at(sc, 0)
    assert gt.box == BBox(220, 170, 20, 10)
    assert ground_truth_at(sc, 2_000_000) == []
    with pytest.raises(InvalidInputError):
        ground_truth_at(sc, 6_000_000)


def test_sinusoidal_path():
    p = PathSpec("sinusoidal", (10, 20), (0, 0), (5, 0), 1000)
    assert p.position(250_000) == pytest.approx((15, 20))
    assert p.position(500_000) == pytest.approx((10, 20))


def test_expression_timeline():
    a = ActorSpec("a", PathSpec(), (10, 10), 30, "male", expression_timeline=((1000, "anger"), (0, "fear")))
    assert EXPRESSIONS[a.expression_at(500_000)] == "fear"
    assert EXPRESSIONS[a.expression_at(1_000_000)] == "anger"


def test_noiseless_detection_reproduces_truth():
    gt = [face(), face((10, 10, 30, 30))]
    dets, lat = synth_detect(gt, DetectorModel(), np.random.default_rng(0))
    assert [d.box for d in dets] == [g.box for g in gt]
    assert lat == 20.0


def test_miss_prob_one_empties_output():
    dets, _ = synth_detect([face()], DetectorModel(miss_prob=1.0), np.random.default_rng(0))
    assert dets == []


def test_false_positive_rate_monte_carlo():
    model = DetectorModel(false_positive_rate=0.5)
    counts = [len(synth_detect([], model, stage_rng(3, f, "detect"))[0]) for f in range(10_000)]
    assert np.mean(counts) == pytest.approx(0.5, abs=0.05)


def test_blackout_suppresses_detections():
    model = DetectorModel(blackouts=((100.0, 300.0),), false_positive_rate=2.0)
    dets, _ = synth_detect([face()], model, np.random.default_rng(1), ts_us=200_000)
    assert dets == []
    dets, _ = synth_detect([face()], model, np.random.default_rng(1), ts_us=300_000)
    assert len(dets) >= 1


def test_jittered_detections_stay_in_frame():
    model = DetectorModel(center_jitter_sigma=20, size_jitter_sigma=10, false_positive_rate=1)
    for f in range(300):
        for d in synth_detect([face((200, 140, 40, 40))], model, stage_rng(0, f, "detect"))[0]:
            assert d.box.x >= 0 and d.box.y >= 0 and d.box.x2 <= 240 and d.box.y2 <= 180
            assert 0 <= d.confidence <= 1


def test_noiseless_recognition_is_exact():
    m, lat = synth_recognize(face(), {AGE, GENDER, EXPRESSION}, RecognizerModel(), np.random.default_rng(0))
    assert m.age == 30.0
    assert m.gender_p_female >= 0.5
    assert m.expression.label == "happiness"
    assert lat == 600.0


def test_recognition_latency_expression_only():
    m, lat = synth_recognize(face(), {EXPRESSION}, RecognizerModel(), np.random.default_rng(0))
    assert lat == 200.0
    assert m.age is None and m.gender_p_female is None


def test_age_noise_mae_monte_carlo():
    model = RecognizerModel(age_noise_sigma=6.14)
    err = [abs(synth_recognize(face(), {AGE}, model, stage_rng(0, i, "recognize"))[0].age - 30.0)
           for i in range(10_000)]
    assert 6.14 * math.sqrt(2 / math.pi) == pytest.approx(4.90, abs=0.005)
    assert np.mean(err) == pytest.approx(4.90, abs=0.15)


def test_confusion_matrix_accuracy_monte_carlo():
    conf = [[0.559 if i == j else 0.441 / 6 for j in range(7)] for i in range(7)]
    model = RecognizerModel(expression_confusion=conf)
    hits = [synth_recognize(face(expr=i % 7), {EXPRESSION}, model, stage_rng(1, i, "recognize"))[0]
            .expression.argmax == i % 7 for i in range(10_000)]
    assert np.mean(hits) == pytest.approx(0.559, abs=0.015)


def test_gender_flip():
    m, _ = synth_recognize(face(gender="male"), {GENDER}, RecognizerModel(gender_flip_prob=1.0),
                           np.random.default_rng(0))
    assert m.gender_p_female >= 0.5


def test_empty_task_set_rejected():
    with pytest.raises(InvalidInputError):
        synth_recognize(face(), frozenset(), RecognizerModel(), np.random.default_rng(0))


def test_confusion_rows_validated():
    with pytest.raises(ConfigError):
        RecognizerModel(expression_confusion=[[1.0] * 7] * 7)


def test_latency_models_non_negative():
    rng = np.random.default_rng(0)
    assert LatencyModel.constant(5).sample(rng) == 5
    assert all(2 <= LatencyModel("uniform", lo=2, hi=3).sample(rng) <= 3 for _ in range(100))
    assert all(LatencyModel("normal", mu=1, sigma=5).sample(rng) >= 0 for _ in range(1000))


def test_landmarks_identity_box_reproduce_template():
    tpl = FaceTemplate.default()
    pts, t = synth_landmarks(BBox(0, 0, 1, 1), tpl, LandmarkModel(), np.random.default_rng(0))
    np.testing.assert_array_equal(pts, tpl.points)


def test_landmarks_noiseless_recovered_by_alignment():
    tpl = FaceTemplate.default()
    box = BBox(70, 40, 48, 52)
    pts, gen = synth_landmarks(box, tpl, LandmarkModel(rotation_sigma=0.0), np.random.default_rng(0))
    est = estimate_similarity(tpl.points, pts)
    assert est.scale == pytest.approx(gen.scale, abs=1e-9)
    assert est.rotation == pytest.approx(gen.rotation, abs=1e-9)
    assert est.translation == pytest.approx(gen.translation, abs=1e-9)
    # template centre lands on the box centre
    c = gen.apply([[0.5, 0.5]])[0]
    assert c == pytest.approx((94, 66))


def test_landmark_noise_residual_monte_carlo():
    tpl = FaceTemplate.default()
    model = LandmarkModel(rotation_sigma=0.2, noise_sigma=0.5)
    res = []
    for i in range(1000):
        pts, _ = synth_landmarks(BBox(80, 50, 50, 50), tpl, model, stage_rng(0, i, "landmarks"))
        res.append(alignment_residual(tpl.points, pts, estimate_similarity(tpl.points, pts)))
    assert np.mean(res) == pytest.approx(0.5 * math.sqrt(2), rel=0.2)


def test_landmark_transform_rotation_keeps_centre():
    t = landmark_transform(BBox(10, 10, 20, 20), rotation=1.0)
    assert t.apply([[0.5, 0.5]])[0] == pytest.approx((20, 20))


def test_stage_streams_are_independent_and_reproducible():
    a = stage_rng(5, 10, "detect").random(4)
    assert np.array_equal(a, stage_rng(5, 10, "detect").random(4))
    assert not np.array_equal(a, stage_rng(5, 10, "recognize").random(4))
    assert not np.array_equal(a, stage_rng(5, 11, "detect").random(4))


def test_scenario_round_trip(tmp_path):
    for name, path in bundled_scenarios().items():
        sc = load_scenario(path)
        out = tmp_path / f"{name}.json"
        save_scenario(sc, out)
        assert load_scenario(out) == sc


def test_scenario_unknown_key_rejected():
    with pytest.raises(ConfigError, match="colour"):
        Scenario.from_dict({"duration": 1000, "colour": "red"})
    with pytest.raises(ConfigError):
        Scenario.from_dict({"duration": 1000, "detector_model": {"latency": {"kind": "constant"}}})
    with pytest.raises(ConfigError):
        Scenario.from_dict({"duration": -1})


def test_scenario_bad_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{ not json")
    with pytest.raises(ConfigError, match="line 1"):
        load_scenario(p)
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.json")


def test_scenario_consistency_checks():
    with pytest.raises(ConfigError):
        Scenario(duration=1000, actors=(still_actor("a", 0, 0), still_actor("a", 5, 5)))
    with pytest.raises(ConfigError):
        Scenario(duration=1000, actors=(still_actor("a", 0, 0, exit_ts=2000.0),))


def test_fingerprint_ignores_noise_and_seed():
    base = Scenario(duration=1000, actors=(still_actor("a", 0, 0),))
    noisy = Scenario(duration=1000, actors=(still_actor("a", 0, 0),), seed=9,
                     detector_model=DetectorModel(miss_prob=0.3))
    moved = Scenario(duration=1000, actors=(still_actor("a", 1, 0),))
    assert base.fingerprint() == noisy.fingerprint() != moved.fingerprint()


def test_bundled_scenarios_present():
    names = set(bundled_scenarios())
    assert {"empty", "single_actor", "two_parallel", "noisy_crowd", "overload"} <= names
    for p in bundled_scenarios().values():
        json.loads(p.read_text())
