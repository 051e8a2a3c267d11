import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from patchfuse.core import DimensionError, LabelMap, ProbTensor, Rect, argmax_map, validate_label_map


def test_validate_ok():
    assert validate_label_map(LabelMap(np.array([[0, 1], [1, 0]])), 9) is None


def test_validate_reports_label_over_n_max():
    v = validate_label_map(LabelMap(np.array([[0, 10], [0, 0]])), 9)
    assert v is not None and "label 10 > 9" in v.message


def test_validate_single_background_pixel_n_max_zero():
    assert validate_label_map(LabelMap(np.array([[0]]), n_max=0), 0) is None


def test_label_map_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        LabelMap(np.zeros(4, dtype=int))
    with pytest.raises(DimensionError):
        LabelMap.from_flat([0, 1, 2], 2, 2)
    with pytest.raises(TypeError):
        LabelMap(np.zeros((2, 2)))


def test_label_map_is_read_only():
    m = LabelMap(np.zeros((2, 2), dtype=int))
    with pytest.raises(ValueError):
        m.labels[0, 0] = 1


def test_row_major_index():
    m = LabelMap.from_flat(np.arange(6), width=3, height=2)
    assert m.labels[1, 0] == 3  # p = y * width + x


def test_rect_geometry():
    r = Rect(2, 3, 4, 5)
    assert (r.x1, r.y1) == (6, 8)
    assert r.center() == (5.0, 3.5)
    assert r.inside(6, 8) and not r.inside(5, 8)
    with pytest.raises(ValueError):
        Rect(0, 0, 0, 3)


def test_prob_tensor_validation():
    with pytest.raises(ValueError):
        ProbTensor(np.full((1, 1, 2), 0.6, dtype=np.float32))
    with pytest.raises(ValueError):
        ProbTensor(np.ones((1, 1, 1), dtype=np.float32))
    with pytest.raises(ValueError):
        ProbTensor(np.array([[[1.2, -0.2]]], dtype=np.float32))
    with pytest.raises(DimensionError):
        ProbTensor(np.ones((2, 2), dtype=np.float32))


@pytest.mark.parametrize("probs, expected", [
    ([0.1, 0.7, 0.2], 1),
    ([0.5, 0.5, 0.0], 0),
    ([1 / 3, 1 / 3, 1 / 3], 0),
])
def test_argmax_examples(probs, expected):
    p = ProbTensor.normalized(np.array(probs).reshape(1, 1, 3))
    assert argmax_map(p).labels[0, 0] == expected


simplex = arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(2, 7)),
                 elements=st.floats(0.01, 1.0))


@settings(max_examples=60, deadline=None)
@given(simplex)
def test_argmax_passes_validation(raw):
    p = ProbTensor.normalized(raw)
    m = argmax_map(p)
    assert validate_label_map(m, p.n_labels - 1) is None


@settings(max_examples=60, deadline=None)
@given(simplex, st.randoms(use_true_random=False))
def test_argmax_permutation_covariant(raw, rnd):
    p = ProbTensor.normalized(raw)
    L = p.n_labels
    perm = list(range(L))
    rnd.shuffle(perm)
    perm = np.array(perm)
    q = ProbTensor(p.probs[..., perm])  # channel j of q is channel perm[j] of p
    top = np.sort(p.probs, axis=2)
    unique = top[..., -1] > top[..., -2]
    inv = np.argsort(perm)
    a = argmax_map(p).labels
    b = argmax_map(q).labels
    assert np.array_equal(inv[a][unique], b[unique])


def test_normalized_sums_within_tolerance(rng):
    p = ProbTensor.normalized(rng.uniform(0, 1, (8, 8, 6)))
    assert np.all(np.abs(p.probs.sum(axis=2, dtype=np.float64) - 1) <= 1e-6)
