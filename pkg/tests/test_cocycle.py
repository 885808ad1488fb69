from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anosov_models.cocycle import (
    CocycleWord,
    FlowSeg,
    GlueAt,
    TangentVector,
    compose,
    dpsi_cu,
    dpsi_full,
    dpsi_su,
    geometric_itineraries,
    growth_csv,
    sample_itineraries,
)
from anosov_models.errors import ConfigError, ParameterDomainError
from anosov_models.geometry import ModelParams
from anosov_models.surgery import cu_coefficients, phi_matrix_full


def explicit_product(params: ModelParams, word: CocycleWord) -> np.ndarray:
    out = np.eye(3)
    for f in word.factors:
        if isinstance(f, FlowSeg):
            step = np.diag([1.0, params.lam**f.duration, params.lam ** (-f.duration)])
        else:
            step = phi_matrix_full(params, f.r)
        out = step @ out
    return out


@st.composite
def short_words(draw, r2: float = 0.1, max_glues: int = 4, max_time: float = 1.5):
    glues = draw(st.integers(0, max_glues))
    factors = [FlowSeg(draw(st.floats(0, max_time)))]
    for _ in range(glues):
        factors.append(GlueAt(draw(st.floats(0, r2))))
        factors.append(FlowSeg(draw(st.floats(0.01, max_time))))
    return CocycleWord.from_factors(factors)


def test_word_validation():
    with pytest.raises(ParameterDomainError):
        CocycleWord((FlowSeg(1.0), GlueAt(0.1)))
    with pytest.raises(ParameterDomainError):
        CocycleWord((GlueAt(0.1),))
    with pytest.raises(ParameterDomainError):
        CocycleWord((FlowSeg(1.0), GlueAt(0.1), FlowSeg(0.0), GlueAt(0.1), FlowSeg(1.0)))
    with pytest.raises(ParameterDomainError):
        FlowSeg(-1.0)
    with pytest.raises(ParameterDomainError):
        FlowSeg(float("inf"))


def test_from_factors_pads_and_merges():
    word = CocycleWord.from_factors([GlueAt(0.05), FlowSeg(1.0), FlowSeg(2.0), GlueAt(0.02)])
    assert word.factors == (FlowSeg(0.0), GlueAt(0.05), FlowSeg(3.0), GlueAt(0.02), FlowSeg(0.0))
    assert word.total_time == 3.0
    assert word.glue_radii == [0.05, 0.02]


def test_json_round_trip():
    word = CocycleWord((FlowSeg(0.5), GlueAt(0.03), FlowSeg(2.0)))
    items = json.loads(json.dumps(word.to_json()))
    assert items == [{"flow": 0.5}, {"glue_r": 0.03}, {"flow": 2.0}]
    assert CocycleWord.from_json(items) == word
    with pytest.raises(ParameterDomainError):
        CocycleWord.from_json([{"spin": 1}])


def test_tangent_vector():
    v = TangentVector(1.0, 2.0, 2.0)
    assert v.norm == 3.0
    assert v.su == (2.0, 2.0)


def test_flow_word_examples(toy_params):
    word = CocycleWord((FlowSeg(2.0),))
    v = dpsi_full(toy_params, word) @ np.array([1.0, 2.0, 3.0])
    assert v == pytest.approx([1.0, 0.25 * 2.0, 4.0 * 3.0])
    assert np.array_equal(dpsi_full(toy_params, CocycleWord()), np.eye(3))
    assert dpsi_su(toy_params, word) == pytest.approx(np.diag([0.25, 4.0]))
    assert np.array_equal(dpsi_su(toy_params, CocycleWord((FlowSeg(0), GlueAt(0.09), FlowSeg(0)))), np.eye(2))


def test_single_glue_word_example(toy_params):
    word = CocycleWord((FlowSeg(1.0), GlueAt(0.05), FlowSeg(1.0)))
    mat = dpsi_full(toy_params, word)
    assert mat == pytest.approx(explicit_product(toy_params, word), rel=1e-12)
    assert np.linalg.det(mat) == pytest.approx(1.0, abs=1e-12)
    assert np.trace(mat[1:, 1:]) > 2.0


@given(short_words())
def test_full_matches_explicit_product_and_projects_to_su(word):
    params = ModelParams(0.5, 1, -1, 1, 0.4, 0.1)
    full = dpsi_full(params, word)
    scale = max(1.0, np.abs(full).max())
    assert np.allclose(full, explicit_product(params, word), atol=1e-10 * scale)
    assert np.allclose(dpsi_su(params, word), full[1:, 1:], atol=1e-10 * scale)
    assert np.linalg.det(dpsi_su(params, word)) == pytest.approx(1.0, abs=1e-9 * scale)


@given(short_words(), short_words())
def test_cocycle_law(w1, w2):
    params = ModelParams(0.4, 2, 1, 1, 0.4, 0.1)
    lhs = dpsi_full(params, compose(w1, w2))
    rhs = dpsi_full(params, w1) @ dpsi_full(params, w2)
    assert np.allclose(lhs, rhs, atol=1e-10 * max(1.0, np.abs(rhs).max()))


@given(st.floats(0, 10), st.floats(-5, 5), st.floats(-5, 5))
def test_pure_flow_slope_law(t, s1, s2):
    params = ModelParams(0.5, 1, -1, 1, 0.4, 0.1)
    su = dpsi_su(params, CocycleWord((FlowSeg(t),)))
    images = [(su @ np.array([s, 1.0])) for s in (s1, s2)]
    d_out = images[1][0] / images[1][1] - images[0][0] / images[0][1]
    assert d_out == pytest.approx(params.lam ** (2 * t) * (s2 - s1), rel=1e-12, abs=1e-300)


def test_cu_flow_inclination(toy_params):
    res = dpsi_cu(toy_params, CocycleWord((FlowSeg(1.5),)), -2.0)
    assert res.alpha == pytest.approx(0.5**3 * -2.0)
    assert res.matrix == pytest.approx(np.diag([1.0, 0.5**-1.5]))
    assert not res.escaped


def test_cu_identity_glues(toy_params):
    word = CocycleWord((FlowSeg(1.0), GlueAt(0.01), FlowSeg(2.0), GlueAt(0.09), FlowSeg(0.5)))
    res = dpsi_cu(toy_params, word, -1.0)
    assert res.matrix == pytest.approx(np.diag([1.0, 0.5**-3.5]))


def test_cu_example(toy_params):
    word = CocycleWord((FlowSeg(3.0), GlueAt(0.05), FlowSeg(0.0)))
    res = dpsi_cu(toy_params, word, -1.0)
    _, big_b = cu_coefficients(toy_params, 0.05, 0.5**6 * -1.0)
    assert res.matrix[1, 0] == 0.0
    assert res.matrix[1, 1] == pytest.approx(big_b * 0.5**-3, rel=1e-12)


@given(short_words(), st.floats(-3, 0.3))
def test_cu_is_restriction_of_full(word, alpha0):
    params = ModelParams(0.5, 1, -1, 1, 0.4, 0.1)
    res = dpsi_cu(params, word, alpha0, admissible=(-1e9, 1e9))
    image = dpsi_full(params, word) @ np.array([0.0, alpha0, 1.0])
    expected = np.array([res.matrix[0, 1], res.matrix[1, 1] * res.alpha, res.matrix[1, 1]])
    assert np.allclose(image, expected, rtol=1e-8, atol=1e-8 * max(1.0, np.abs(image).max()))
    assert res.matrix[0, 0] == 1.0 and res.matrix[1, 0] == 0.0


def test_cu_escape_is_reported(toy_params):
    word = CocycleWord((FlowSeg(0.0), GlueAt(0.05), FlowSeg(0.0)))
    res = dpsi_cu(toy_params, word, 0.0, admissible=(-0.1, 0.1))
    assert res.escaped


def test_sampler_contract(toy_params):
    assert sample_itineraries(toy_params, 0, 9, 2.0, seed=1) == []
    a = sample_itineraries(toy_params, 100, 9, 2.0, seed=1)
    b = sample_itineraries(toy_params, 100, 9, 2.0, seed=1)
    assert a == b
    for word in a:
        assert len(word.factors) <= 9
        interior = word.durations[1:-1]
        assert all(t >= 2.0 for t in interior)
        assert all(0 <= r <= toy_params.r2 for r in word.glue_radii)
    assert a != sample_itineraries(toy_params, 100, 9, 2.0, seed=2)


def test_sampler_partitions_by_index(toy_params):
    whole = sample_itineraries(toy_params, 40, 9, 2.0, seed=3)
    parts = sample_itineraries(toy_params, 25, 9, 2.0, seed=3) + sample_itineraries(
        toy_params, 15, 9, 2.0, seed=3, start=25
    )
    assert whole == parts


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(count=-1, max_factors=9, min_interior_time=1.0),
        dict(count=1, max_factors=0, min_interior_time=1.0),
        dict(count=1, max_factors=9, min_interior_time=0.0),
        dict(count=1, max_factors=9, min_interior_time=1.0, reentry_bound=2.0),
    ],
)
def test_sampler_rejects_inconsistent_constraints(toy_params, kwargs):
    with pytest.raises(ConfigError):
        sample_itineraries(toy_params, seed=0, **kwargs)


@pytest.mark.parametrize("m", [-1, 1])
def test_geometric_itineraries(m):
    params = ModelParams(0.5, 1, m, 1, 0.4, 0.1)
    words = geometric_itineraries(params, 50, 4, 3.0, seed=0)
    assert len(words) == 50
    for word in words:
        assert word.provenance == "geometric"
        assert all(t >= 3.0 for t in word.durations[1:-1])
        assert len(word.glue_radii) <= 4
    assert words == geometric_itineraries(params, 50, 4, 3.0, seed=0)


def test_growth_csv():
    text = growth_csv([(1.0, 0.5), (2.0, 1.25)])
    assert text.splitlines() == ["t,log_growth", "1.0,0.5", "2.0,1.25"]
