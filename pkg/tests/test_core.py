import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtface.core import (
    EXPRESSIONS,
    AttributeMeasurement,
    BBox,
    Detection,
    ExpressionDist,
    Frame,
    centroid,
    clamp_box,
    gender_label,
    iou,
)
from rtface.errors import InvalidInputError


def raster_iou(a, b, n=1000):
    """Count cell centres of an n x n grid over the boxes' joint extent."""
    x0, y0 = min(a[0], b[0]), min(a[1], b[1])
    x1, y1 = max(a[0] + a[2], b[0] + b[2]), max(a[1] + a[3], b[1] + b[3])
    xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
    X, Y = np.meshgrid(xs, ys)

    def inside(b):
        return (X >= b[0]) & (X < b[0] + b[2]) & (Y >= b[1]) & (Y < b[1] + b[3])

    ia, ib = inside(a), inside(b)
    return (ia & ib).sum() / (ia | ib).sum()


def test_iou_identical():
    assert iou(BBox(0, 0, 2, 2), BBox(0, 0, 2, 2)) == 1.0


def test_iou_disjoint():
    assert iou(BBox(0, 0, 1, 1), BBox(5, 5, 1, 1)) == 0.0


def test_iou_partial_overlap_matches_raster_oracle():
    oracle = raster_iou((0, 0, 2, 2), (1, 1, 2, 2))
    assert oracle == pytest.approx(1 / 7, abs=1e-3)
    assert iou(BBox(0, 0, 2, 2), BBox(1, 1, 2, 2)) == pytest.approx(0.142857142857, abs=1e-12)


def test_iou_touching_edges_is_zero():
    assert iou(BBox(0, 0, 1, 1), BBox(1, 0, 1, 1)) == 0.0


@pytest.mark.parametrize("w,h", [(0, 1), (1, 0), (-1, 2)])
def test_degenerate_box_rejected(w, h):
    with pytest.raises(InvalidInputError):
        iou(BBox(0, 0, w, h), BBox(0, 0, 1, 1))
    with pytest.raises(InvalidInputError):
        centroid(BBox(0, 0, w, h))


boxes = st.builds(
    BBox,
    st.floats(-100, 100),
    st.floats(-100, 100),
    st.floats(0.01, 50),
    st.floats(0.01, 50),
)


@given(boxes, boxes)
def test_iou_symmetric_and_bounded(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0


@given(boxes)
def test_iou_self_is_one(a):
    assert iou(a, a) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "box,expected",
    [((0, 0, 2, 2), (1, 1)), ((10, 20, 4, 6), (12, 23)), ((0, 0, 240, 180), (120, 90))],
)
def test_centroid(box, expected):
    assert centroid(BBox(*box)) == expected


def test_clamp_box():
    assert clamp_box(BBox(-10, -10, 30, 30), 240, 180) == BBox(0, 0, 20, 20)
    assert clamp_box(BBox(230, 170, 30, 30), 240, 180) == BBox(230, 170, 10, 10)
    assert clamp_box(BBox(300, 0, 10, 10), 240, 180) is None


def test_frame_defaults():
    f = Frame(1, 0)
    assert (f.width, f.height) == (240, 180)
    assert f.width * 3 == f.height * 4
    assert not f.meta.detection_done and f.pixels is None


def test_detection_confidence_range():
    with pytest.raises(InvalidInputError):
        Detection(BBox(0, 0, 1, 1), 1.5)


def test_expression_dist_validation():
    with pytest.raises(InvalidInputError):
        ExpressionDist((0.5, 0.5))
    with pytest.raises(InvalidInputError):
        ExpressionDist((0.5, 0.6, 0, 0, 0, 0, 0))
    d = ExpressionDist.smoothed_one_hot(3)
    assert d.argmax == 3 and d.label == "surprise"
    assert math.fsum(d.probabilities) == pytest.approx(1.0, abs=1e-9)
    assert d.probabilities[0] == pytest.approx(0.1 / 6)


@given(st.lists(st.floats(0, 10), min_size=7, max_size=7).filter(lambda v: sum(v) > 1e-3))
def test_normalized_always_valid(weights):
    d = ExpressionDist.normalized(weights)
    assert abs(math.fsum(d.probabilities) - 1) <= 1e-9


def test_argmax_ties_lowest_index():
    assert ExpressionDist((0.4, 0.4, 0.2, 0, 0, 0, 0)).argmax == 0


def test_class_order():
    assert EXPRESSIONS == ("neutral", "happiness", "sadness", "surprise", "fear", "disgust", "anger")


def test_measurement_needs_an_attribute():
    with pytest.raises(InvalidInputError):
        AttributeMeasurement(measured_at=0)
    m = AttributeMeasurement(measured_at=5, age=31.5)
    assert AttributeMeasurement.from_dict(m.to_dict()) == m


def test_gender_threshold():
    assert gender_label(0.5) == "female"
    assert gender_label(0.4999) == "male"
