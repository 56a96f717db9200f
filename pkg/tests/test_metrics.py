import numpy as np
import pytest

from emoreg.dvm import DvmModel
from emoreg.errors import UndefinedSimilarityError, ValidationError
from emoreg.labels import TARGET_EMOTIONS
from emoreg.metrics import (
    cosine_similarity,
    intensity_sweep,
    monotone_fraction,
    monotonicity_report,
    random_direction_trials,
    sweep_along,
    validate_grid,
)
from emoreg.pca import PcaModel

GRID = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]


def test_cosine():
    v = np.array([0.3, -1.2, 4.0])
    assert cosine_similarity(v, v) == pytest.approx(1.0)
    assert cosine_similarity([1, 0], [0, 1]) == 0.0
    assert cosine_similarity([1, 0], [1, 1]) == pytest.approx(0.70710678, abs=1e-8)
    with pytest.raises(UndefinedSimilarityError):
        cosine_similarity([0, 0], [1, 1])


def test_grid_validation():
    assert validate_grid([0.0]) == [0.0]
    for bad in ([], [0.5, 0.1], [0.2, 0.2], [0.0, 1.5]):
        with pytest.raises(ValidationError):
            validate_grid(bad)


def test_report_single_point():
    rep = monotonicity_report([0.0], [0.7])
    assert rep.monotone and rep.degenerate and rep.spearman == 0.0


def test_report_increasing_and_decreasing():
    up = monotonicity_report(GRID, [0.1, 0.2, 0.25, 0.3, 0.5, 0.9])
    assert up.monotone and up.spearman == pytest.approx(1.0) and not up.degenerate
    down = monotonicity_report(GRID, [0.9, 0.5, 0.3, 0.25, 0.2, 0.1])
    assert not down.monotone and down.spearman == pytest.approx(-1.0)
    assert set(up.to_json()) >= {"grid", "similarities", "spearman", "monotone"}


def _model(dim=4):
    pca = PcaModel(mean=np.zeros(dim), components=np.eye(dim), eigenvalues=np.ones(dim), total_variance=dim)
    return DvmModel(pcas={t: pca for t in TARGET_EMOTIONS}, dim=dim)


def test_sweep_towards_anchor():
    e_s, anchor = np.array([1.0, 0, 0, 0]), np.array([0, 1.0, 0, 0])
    rep = intensity_sweep(_model(), e_s, anchor, "Angry", GRID, anchor)
    assert rep.monotone and rep.spearman == pytest.approx(1.0)
    assert all(b > a for a, b in zip(rep.similarities, rep.similarities[1:]))


def test_sweep_zero_direction_degenerate():
    e_s = np.array([1.0, 2.0, 0, 0])
    rep = intensity_sweep(_model(), e_s, e_s, "Sad", GRID, np.array([0, 1.0, 1.0, 0]))
    assert rep.degenerate and rep.spearman == 0.0 and rep.monotone


def test_sweep_grid_checked():
    with pytest.raises(ValidationError):
        sweep_along(np.ones(2), np.ones(2), np.ones(2), [0.5, 0.1])


def test_random_trials_equal_norm_and_seeded():
    e_s, d, anchor = np.ones(8), np.arange(8.0), np.ones(8)
    a = random_direction_trials(e_s, d, anchor, GRID, n_trials=5, seed=3)
    b = random_direction_trials(e_s, d, anchor, GRID, n_trials=5, seed=3)
    assert [r.similarities for r in a] == [r.similarities for r in b]
    assert 0.0 <= monotone_fraction(a) <= 1.0
    r = np.random.default_rng(3).standard_normal(8)
    r *= np.linalg.norm(d) / np.linalg.norm(r)
    assert a[0].similarities[-1] == pytest.approx(cosine_similarity(e_s + r, anchor))
