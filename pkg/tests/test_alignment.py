import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtface.alignment import (
    N_LANDMARKS,
    FaceTemplate,
    SimilarityTransform,
    alignment_residual,
    apply_transform,
    estimate_similarity,
)
from rtface.errors import DegenerateInputError, InvalidInputError

TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def umeyama(src, dst):
    """SVD-based similarity fit, independent of the complex-regression path."""
    mu_s, mu_d = src.mean(0), dst.mean(0)
    sc, dc = src - mu_s, dst - mu_d
    cov = dc.T @ sc / len(src)
    U, S, Vt = np.linalg.svd(cov)
    D = np.eye(2)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        D[1, 1] = -1
    R = U @ D @ Vt
    var = (sc ** 2).sum() / len(src)
    s = np.trace(np.diag(S) @ D) / var
    t = mu_d - s * R @ mu_s
    return s, math.atan2(R[1, 0], R[0, 0]), t


def test_identity():
    t = estimate_similarity(TRI, TRI)
    assert t.scale == pytest.approx(1, abs=1e-12)
    assert t.rotation == pytest.approx(0, abs=1e-12)
    assert t.translation == pytest.approx((0, 0), abs=1e-12)


def test_translation_only():
    t = estimate_similarity(TRI, TRI + [3, -2])
    assert t.scale == pytest.approx(1, abs=1e-12)
    assert t.rotation == pytest.approx(0, abs=1e-12)
    assert t.translation == pytest.approx((3, -2), abs=1e-12)


def test_known_similarity_round_trip():
    true = SimilarityTransform(2.0, math.pi / 2, (1.0, 1.0))
    target = apply_transform(true, TRI)
    assert alignment_residual(TRI, target, true) == pytest.approx(0, abs=1e-15)
    t = estimate_similarity(TRI, target)
    assert t.scale == pytest.approx(2, abs=1e-9)
    assert t.rotation == pytest.approx(math.pi / 2, abs=1e-9)
    assert t.translation == pytest.approx((1, 1), abs=1e-9)


def test_errors():
    with pytest.raises(DegenerateInputError):
        estimate_similarity([[1, 1], [1, 1], [1, 1]], TRI)
    with pytest.raises(InvalidInputError):
        estimate_similarity(TRI, TRI[:2])
    with pytest.raises(InvalidInputError):
        alignment_residual(TRI, TRI[:2], SimilarityTransform())
    with pytest.raises(InvalidInputError):
        SimilarityTransform(scale=0)


def test_apply_transform_examples():
    pts = np.array([[1.0, 2.0], [-3.0, 0.5]])
    np.testing.assert_array_equal(apply_transform(SimilarityTransform(), pts), pts)
    np.testing.assert_array_equal(apply_transform(SimilarityTransform(2.0), [[1, 0]]), [[2, 0]])
    np.testing.assert_allclose(apply_transform(SimilarityTransform(1, math.pi), [[1, 1]]), [[-1, -1]], atol=1e-12)


def test_residual_uniform_shift():
    assert alignment_residual(TRI, TRI + [1, 0], SimilarityTransform()) == pytest.approx(1.0)


def test_residual_under_noise_monte_carlo():
    rng = np.random.default_rng(0)
    sigma = 0.5
    src = FaceTemplate.default().points * 40
    res = []
    for _ in range(1000):
        dst = src + rng.normal(0, sigma, src.shape)
        res.append(alignment_residual(src, dst, estimate_similarity(src, dst)))
    assert np.mean(res) == pytest.approx(sigma * math.sqrt(2), rel=0.2)


transforms = st.builds(
    SimilarityTransform,
    st.floats(0.1, 10),
    st.floats(-math.pi, math.pi),
    st.tuples(st.floats(-100, 100), st.floats(-100, 100)),
)


@settings(max_examples=300)
@given(transforms, st.integers(0, 2**32 - 1))
def test_exact_recovery_matches_svd_oracle(true, seed):
    src = np.random.default_rng(seed).uniform(-50, 50, (10, 2))
    dst = apply_transform(true, src)
    t = estimate_similarity(src, dst)
    assert alignment_residual(src, dst, t) < 1e-9
    s, rot, tr = umeyama(src, dst)
    assert t.scale == pytest.approx(s, rel=1e-9)
    assert math.cos(t.rotation - rot) == pytest.approx(1, abs=1e-12)
    assert t.translation == pytest.approx(tuple(tr), abs=1e-7)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1))
def test_least_squares_beats_identity_and_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    src = rng.uniform(-1, 1, (8, 2))
    dst = rng.uniform(-1, 1, (8, 2))
    t = estimate_similarity(src, dst)
    assert alignment_residual(src, dst, t) <= alignment_residual(src, dst, SimilarityTransform()) + 1e-12
    s, rot, tr = umeyama(src, dst)
    assert t.scale == pytest.approx(s, rel=1e-9)


@settings(max_examples=200)
@given(transforms, transforms, st.integers(0, 2**32 - 1))
def test_composition(T, U, seed):
    pts = np.random.default_rng(seed).uniform(-20, 20, (6, 2))
    tp = apply_transform(T, pts)
    utp = apply_transform(U, tp)
    composed = estimate_similarity(tp, utp).compose(estimate_similarity(pts, tp))
    direct = estimate_similarity(pts, utp)
    np.testing.assert_allclose(composed.apply(pts), direct.apply(pts), atol=1e-6)


@given(transforms)
def test_inverse_round_trip(t):
    pts = np.array([[0.0, 0.0], [3.0, -1.0], [10.0, 7.5]])
    np.testing.assert_allclose(t.inverse().apply(t.apply(pts)), pts, atol=1e-9)


def test_no_reflection_fit():
    mirrored = TRI * [-1, 1]
    t = estimate_similarity(TRI, mirrored)
    assert t.scale > 0
    assert alignment_residual(TRI, mirrored, t) > 0.1


def test_default_template():
    tpl = FaceTemplate.default()
    assert len(tpl) == N_LANDMARKS
    assert tpl.points.min() >= 0 and tpl.points.max() <= 1


def test_template_file_round_trip(tmp_path):
    tpl = FaceTemplate.default()
    path = tmp_path / "template.txt"
    tpl.save(path)
    lines = path.read_text().splitlines()
    assert len(lines) == N_LANDMARKS and all(len(l.split()) == 2 for l in lines)
    assert FaceTemplate.load(path) == tpl


def test_template_file_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3\n")
    with pytest.raises(InvalidInputError):
        FaceTemplate.load(bad)
    bad.write_text("0.5 0.5\n0.5 0.5\n")
    with pytest.raises(DegenerateInputError):
        FaceTemplate.load(bad)
