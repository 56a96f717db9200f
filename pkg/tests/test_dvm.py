import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emoreg.dvm import (
    DvmModel,
    IntensityRequest,
    build_direction_matrix,
    direction_vector,
    emotion_seeds,
    fit_dvm,
    global_direction,
    regularize,
    regularize_global,
)
from emoreg.errors import (
    DimensionMismatchError,
    InsufficientDataError,
    IntensityRangeError,
    UnsupportedTransitionError,
    ValidationError,
)
from emoreg.gmm import GmmFitConfig, gmm_from_arrays
from emoreg.labels import TARGET_EMOTIONS, Emotion
from emoreg.pca import PcaModel
from emoreg.synthgen import SynthConfig, generate_embeddings, generate_planted_direction
from emoreg.tensorio import EmbeddingSet


def x_axis_model():
    pca = PcaModel(mean=np.zeros(3), components=np.array([[1.0, 0.0, 0.0]]),
                   eigenvalues=np.array([1.0]), total_variance=1.0)
    return DvmModel(pcas={t: pca for t in TARGET_EMOTIONS}, dim=3)


@pytest.fixture(scope="module")
def defaults():
    es = generate_embeddings(SynthConfig(seed=1))
    return es, fit_dvm(es, GmmFitConfig(k=64, seed=1), 128)


def test_hand_example():
    m = x_axis_model()
    e_s, e_r = np.zeros(3), np.array([2.0, 3.0, 0.0])
    P = np.array([[1.0, 0.0, 0.0]])
    brute = P.T @ P @ (e_r - e_s)
    e_d = direction_vector(m, e_s, e_r, "Angry")
    assert np.abs(e_d - brute).max() < 1e-9
    assert np.allclose(e_d, [2.0, 0.0, 0.0])
    e_ir = regularize(m, IntensityRequest(e_s, e_r, "Angry", 0.5))
    assert np.abs(e_ir - [1.0, 0.0, 0.0]).max() < 1e-9


def test_zero_intensity_bitwise(rng):
    m = x_axis_model()
    e_s = np.array([-0.0, 1.5, np.nextafter(1, 2)])
    out = regularize(m, IntensityRequest(e_s, rng.standard_normal(3), "Sad", 0.0))
    assert out.tobytes() == e_s.tobytes()
    assert out is not e_s


def test_span_fixed_point(rng):
    m = x_axis_model()
    e_s = rng.standard_normal(3)
    d = np.array([1.7, 0.0, 0.0])
    out = regularize(m, IntensityRequest(e_s, e_s + d, "Happy", 1.0))
    assert np.abs(out - (e_s + d)).max() < 1e-9


def test_request_validation():
    with pytest.raises(IntensityRangeError):
        IntensityRequest(np.zeros(3), np.zeros(3), "Angry", 1.2)
    with pytest.raises(IntensityRangeError):
        IntensityRequest(np.zeros(3), np.zeros(3), "Angry", -0.1)
    with pytest.raises(UnsupportedTransitionError):
        IntensityRequest(np.zeros(3), np.zeros(3), "Neutral", 0.5)
    with pytest.raises(DimensionMismatchError):
        IntensityRequest(np.zeros(3), np.zeros(4), "Angry", 0.5)
    with pytest.raises(DimensionMismatchError):
        regularize(x_axis_model(), IntensityRequest(np.zeros(4), np.zeros(4), "Angry", 0.5))


def test_direction_matrix_self_difference():
    a, b = np.array([1.0, 2.0]), np.array([-3.0, 0.5])
    g = gmm_from_arrays([0.5, 0.5], [a, b], np.ones((2, 2)))
    dm = build_direction_matrix(g, g, "Neutral", "Angry")
    assert np.array_equal(dm.rows, np.stack([np.zeros(2), a - b, b - a, np.zeros(2)]))


def test_direction_matrix_brute_force(rng):
    ms, mt = rng.standard_normal((2, 5)), rng.standard_normal((3, 5))
    gs = gmm_from_arrays([0.5, 0.5], ms, np.ones((2, 5)))
    gt = gmm_from_arrays([1 / 3] * 3, mt, np.ones((3, 5)))
    dm = build_direction_matrix(gs, gt, "Neutral", "Sad")
    assert dm.rows.shape == (6, 5)
    for k in range(3):
        for j in range(2):
            assert np.array_equal(dm.rows[k * 2 + j], mt[k] - ms[j])


def test_direction_matrix_shape():
    rng = np.random.default_rng(0)
    g = gmm_from_arrays(np.full(64, 1 / 64), rng.standard_normal((64, 256)), np.ones((64, 256)))
    assert build_direction_matrix(g, g, "Neutral", "Happy").rows.shape == (4096, 256)


def test_direction_matrix_rejects_non_neutral_source():
    g = gmm_from_arrays([1.0], [[0.0]], [[1.0]])
    with pytest.raises(UnsupportedTransitionError):
        build_direction_matrix(g, g, "Angry", "Sad")
    with pytest.raises(UnsupportedTransitionError):
        build_direction_matrix(g, g, "Neutral", "Neutral")


def test_fit_defaults_shape(defaults):
    es, m = defaults
    assert set(m.pcas) == set(TARGET_EMOTIONS)
    for p in m.pcas.values():
        assert p.dim == 256 and p.n_components == 128
    assert m.metadata["gmm_seeds"] == {"Neutral": 1, "Angry": 2, "Happy": 3, "Sad": 4}
    assert emotion_seeds(10)[Emotion.SAD] == 13


def test_component_sweep():
    es = generate_embeddings(SynthConfig(seed=1))
    ratios = []
    for d in (64, 128, 256):
        m = fit_dvm(es, GmmFitConfig(k=64, seed=1), d)
        ratios.append([m.pcas[t].explained_variance_ratio for t in TARGET_EMOTIONS])
    ratios = np.array(ratios)
    assert np.all(np.diff(ratios, axis=0) >= -1e-12)


def test_component_limit():
    es = generate_embeddings(SynthConfig(seed=1, dim=16, samples_per_emotion=20))
    with pytest.raises(ValidationError):
        fit_dvm(es, GmmFitConfig(k=2), 17)
    with pytest.raises(ValidationError):
        fit_dvm(es, GmmFitConfig(k=2), 5)  # k^2 = 4 rows
    with pytest.raises(InsufficientDataError):
        fit_dvm(es, GmmFitConfig(k=21), 4)


def test_planted_direction_top_component():
    cfg = SynthConfig(seed=3, stddev=0.25, cluster_spread=0.5, clusters_per_emotion=4)
    es, truth = generate_planted_direction(cfg)
    m = fit_dvm(es, GmmFitConfig(k=4, seed=3), 4)
    for t in TARGET_EMOTIONS:
        assert abs(m.pcas[t].components[0] @ truth.directions[t]) >= 0.99


def test_global_two_point():
    v = np.array([1.0, -2.0, 0.5])
    es = EmbeddingSet(np.stack([np.zeros(3), v]), (Emotion.NEUTRAL, Emotion.ANGRY))
    e_s = np.array([0.3, 0.3, 0.3])
    assert np.allclose(regularize_global(es, IntensityRequest(e_s, e_s, "Angry", 1.0)), e_s + v)
    assert regularize_global(es, IntensityRequest(e_s, e_s, "Angry", 0.0)).tobytes() == e_s.tobytes()


def test_global_collinear(defaults):
    es, _ = defaults
    e_s = es.centroid("Neutral")
    g = global_direction(es, "Happy")
    for i in np.linspace(0, 1, 6):
        out = regularize_global(es, IntensityRequest(e_s, e_s, "Happy", i))
        resid = (out - e_s) - ((out - e_s) @ g / (g @ g)) * g
        assert np.linalg.norm(resid) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.floats(0, 1))
def test_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    pca = PcaModel(mean=rng.standard_normal(4), components=np.linalg.qr(rng.standard_normal((4, 2)))[0].T,
                   eigenvalues=np.ones(2), total_variance=2.0)
    m = DvmModel(pcas={t: pca for t in TARGET_EMOTIONS}, dim=4)
    e_s, e_r = rng.standard_normal(4), rng.standard_normal(4)
    da = regularize(m, IntensityRequest(e_s, e_r, "Angry", a)) - e_s
    db = regularize(m, IntensityRequest(e_s, e_r, "Angry", b)) - e_s
    assert np.abs(b * da - a * db).max() < 1e-9
