import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sbomm.models import (
    EX1_DOMAIN,
    MODELS,
    ModelSpec,
    OutOfDomainError,
    TruthRaster,
    evaluate,
    evaluate_many,
    get_model,
    true_class,
    truth_oracle,
)
from sbomm.space import Box, branch


@pytest.fixture(scope="module")
def ex1_rasters():
    return {name: truth_oracle(get_model(name), 0.2, 512)
            for name in ("ex1_rosenbrock", "ex1_absquad", "ex1_taylor")}


def test_point_values():
    assert evaluate(get_model("ex1_rosenbrock"), (1, 1)) == 0.0
    assert evaluate(get_model("ex1_rosenbrock"), (0, 0)) == 1.0
    assert evaluate(get_model("ex1_taylor"), (0, 0)) == 1.0
    assert evaluate(get_model("ex1_absquad"), (1, 1)) == 0.0
    assert evaluate(get_model("ex1_absquad"), (-1, 1)) == 0.0
    # sin(pi/2) = 1 and sin(5 pi/2) = 1
    assert evaluate(get_model("ex2_sinusoid"), (90, 90)) == pytest.approx(-3.5, abs=1e-12)


def test_diamond_reading_of_piecewise_models():
    pc = get_model("ex2_piecewise_const")
    assert evaluate(pc, (90, 90)) == 0.0
    assert evaluate(pc, (10, 10)) == 100.0      # x1 + x2 < 75
    assert evaluate(pc, (170, 20)) == 100.0     # x1 - x2 > 105
    assert evaluate(pc, (170, 170)) == 100.0    # x1 + x2 > 285
    pq = get_model("ex2_piecewise_quad")
    assert evaluate(pq, (90, 90)) == 0.0
    assert evaluate(pq, (100, 80)) == -200.0
    assert evaluate(pq, (5, 5)) == 100.0


def test_out_of_domain():
    with pytest.raises(OutOfDomainError):
        evaluate(get_model("ex1_taylor"), (2.5, 0))
    with pytest.raises(OutOfDomainError):
        evaluate(get_model("ex2_absval"), (-1, 0))


def test_unknown_model():
    with pytest.raises(KeyError):
        get_model("nope")


@pytest.mark.parametrize("name", sorted(MODELS))
def test_models_deterministic_and_total(name):
    model = MODELS[name]
    rng = np.random.default_rng(3)
    pts = rng.uniform(model.domain.lower, model.domain.upper, size=(1000, 2))
    corners = np.array([model.domain.lower, model.domain.upper])
    a = evaluate_many(model, np.vstack([pts, corners]))
    b = evaluate_many(model, np.vstack([pts, corners]))
    assert np.array_equal(a, b)
    assert np.all(np.isfinite(a))


def test_constant_model_tie_flood():
    flat = ModelSpec(9, "flat", EX1_DOMAIN, lambda x: np.zeros(len(x)))
    raster = truth_oracle(flat, 0.2, 64)
    assert raster.threshold == 0.0
    # membership is value <= threshold, so the whole tied plateau is included
    assert raster.member_fraction == 1.0


def test_oracle_rank_rule():
    raster = truth_oracle(get_model("ex1_rosenbrock"), 0.2, 64)
    values = np.sort(raster.values.ravel())
    assert raster.threshold == values[math.ceil(0.2 * 64 * 64) - 1]


@pytest.mark.parametrize("name", ["ex1_rosenbrock", "ex1_absquad", "ex1_taylor",
                                  "ex2_sinusoid", "ex2_absval", "ex2_piecewise_quad"])
def test_member_fraction_near_delta(name):
    raster = truth_oracle(get_model(name), 0.2, 512)
    assert abs(raster.member_fraction - 0.2) <= 0.02


def test_taylor_target_is_vertical_band(ex1_rasters):
    r = ex1_rasters["ex1_taylor"]
    # f3 depends only on x1, so each x1 column is all-in or all-out
    assert np.all(r.membership.all(axis=1) | ~r.membership.any(axis=1))
    x1 = r.centers[0][r.membership[:, 0]]
    assert x1.min() < 0.01 < x1.max()


def test_piecewise_const_target_inside_zero_band():
    r = truth_oracle(get_model("ex2_piecewise_const"), 0.2, 256)
    assert r.threshold == 0.0
    assert np.all(r.values[r.membership] == 0.0)


def test_true_class_examples(ex1_rasters):
    rb = ex1_rasters["ex1_rosenbrock"]
    assert true_class(rb, Box((-0.1, -0.05), (0.1, 0.05))) == 1
    assert true_class(rb, Box((-2, -2), (-1, 0))) == 2
    assert true_class(rb, Box((-1, -1), (1, 1))) == 3


def test_true_class_without_cell_centres(ex1_rasters):
    rb = ex1_rasters["ex1_rosenbrock"]
    tiny = Box((0.0001, 0.0001), (0.0002, 0.0002))
    assert true_class(rb, tiny) == 1  # f1 ~ 1 at the box centre


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 1.5), st.floats(-2, 1.5), st.floats(0.1, 0.5), st.floats(0.1, 0.5))
def test_true_class_monotone_under_refinement(ex1_rasters, x, y, w, h):
    box = Box((x, y), (min(x + w, 2.0), min(y + h, 2.0)))
    for raster in ex1_rasters.values():
        k = true_class(raster, box)
        if k in (1, 2):
            assert all(true_class(raster, child) == k for child in branch(box, 2))


def test_raster_csv_round_trip(tmp_path):
    raster = truth_oracle(get_model("ex1_taylor"), 0.2, 64)
    path = tmp_path / "r.csv"
    raster.to_csv(path)
    assert path.read_text().splitlines()[0] == "x1,x2,value,member"
    back = TruthRaster.from_csv(path, "ex1_taylor")
    assert np.array_equal(back.membership, raster.membership)
    assert back.threshold == raster.threshold
    assert np.allclose(back.domain.lower, raster.domain.lower)
    assert np.allclose(back.domain.upper, raster.domain.upper)
