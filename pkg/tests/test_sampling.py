import numpy as np
import pytest
from hypothesis import given, settings
from scipy.stats import truncnorm
from hypothesis import strategies as st

from seqsaa.errors import NonMonotoneRequest, OddSampleSize
from seqsaa.sampling import (
    DiscreteFactor,
    ScenarioModel,
    StreamKey,
    TableFactor,
    TruncNormalFactor,
    UniformFactor,
    ValidationStream,
    antithetic_drivers,
    draw,
    draw_antithetic,
    draw_iid,
    draw_lhs,
    lhs_drivers,
    uniforms,
    validation_stream,
)


def three_point():
    return ScenarioModel([0.0], [[0.0]], [DiscreteFactor([1.0, 2.0, 3.0], [0.2, 0.5, 0.3], [1.0])])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 1000), st.integers(1, 10), st.integers(0, 2**32), st.integers(0, 50))
def test_lhs_one_point_per_stratum(n, dim, seed, ell):
    U = lhs_drivers(StreamKey(seed, "solve", ell), n, dim)
    assert U.shape == (n, dim)
    assert np.all((U >= 0) & (U < 1))
    for k in range(dim):
        assert np.array_equal(np.sort(np.floor(U[:, k] * n).astype(int)), np.arange(n))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 500).map(lambda h: 2 * h), st.integers(1, 10), st.integers(0, 2**32))
def test_antithetic_reflection_exact(n, dim, seed):
    U = antithetic_drivers(StreamKey(seed), n, dim)
    assert np.all(U[1::2] == 1.0 - U[0::2])
    assert np.array_equal(U[0::2], uniforms(StreamKey(seed), n // 2, dim))


def test_antithetic_odd_size_rejected():
    with pytest.raises(OddSampleSize):
        draw_antithetic(three_point(), StreamKey(0), 7)


def test_iid_frequencies_within_three_sigma():
    n = 100_000
    sset = draw_iid(three_point(), StreamKey(12345), n)
    counts = np.bincount(sset.support_index, minlength=3)
    p = np.array([0.2, 0.5, 0.3])
    z = (counts - n * p) / np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(z) <= 3), z


@given(st.integers(0, 2**32), st.integers(1, 40), st.integers(0, 40), st.integers(1, 5))
def test_draws_depend_only_on_their_index(seed, n, offset, dim):
    whole = uniforms(StreamKey(seed, "solve", 3), offset + n, dim)
    part = uniforms(StreamKey(seed, "solve", 3, offset), n, dim)
    assert np.array_equal(whole[offset:], part)


def test_streams_are_distinct_by_purpose_and_outer_index():
    a = uniforms(StreamKey(1, "solve", 0), 5, 2)
    b = uniforms(StreamKey(1, "solve", 1), 5, 2)
    c = uniforms(StreamKey(1, "validate", 0), 5, 2)
    d = uniforms(StreamKey(2, "solve", 0), 5, 2)
    assert not (np.array_equal(a, b) or np.array_equal(a, c) or np.array_equal(a, d))
    assert np.array_equal(a, uniforms(StreamKey(1, "solve", 0), 5, 2))


def test_unknown_purpose_and_sampler():
    with pytest.raises(ValueError):
        StreamKey(0, "other")
    with pytest.raises(ValueError):
        draw("sobol", three_point(), StreamKey(0), 4)
    with pytest.raises(ValueError):
        draw_iid(three_point(), StreamKey(0), 0)


def test_validation_stream_is_prefix_stable_and_monotone():
    model = three_point()
    small, big = validation_stream(model, 9, 10), validation_stream(model, 9, 25)
    assert np.array_equal(small.H, big.H[:10])
    assert small.ids == big.ids[:10]
    vs = ValidationStream(model, 9)
    vs(10)
    vs(10)
    with pytest.raises(NonMonotoneRequest):
        vs(5)


def test_ids_are_unique_and_reproducible():
    m = three_point()
    a = draw_lhs(m, StreamKey(4, "solve", 2), 50)
    b = draw_lhs(m, StreamKey(4, "solve", 2), 50)
    assert a.ids == b.ids and len(set(a.ids)) == 50
    assert np.array_equal(a.H, b.H)


def test_factor_inverses():
    u = np.linspace(0, 1, 101)[:-1]
    uf = UniformFactor(2.0, 5.0, [1.0])
    assert np.all((uf.inverse(u) >= 2.0) & (uf.inverse(u) < 5.0))
    tn = TruncNormalFactor(0.0, 1.0, -1.0, 2.0, [1.0])
    v = tn.inverse(u)
    assert np.all((v >= -1.0) & (v <= 2.0)) and np.all(np.diff(v) > 0)
    assert tn.inverse(np.array([0.5]))[0] == pytest.approx(truncnorm(-1.0, 2.0).median(), abs=1e-12)
    df = DiscreteFactor([1.0, 2.0, 3.0], [0.2, 0.5, 0.3], [1.0])
    assert list(df.inverse(np.array([0.0, 0.19, 0.2, 0.69, 0.7, 0.999]))) == [1, 1, 2, 2, 3, 3]


def test_bad_probabilities_rejected():
    with pytest.raises(ValueError):
        DiscreteFactor([1.0, 2.0], [0.5, 0.6], [1.0])
    with pytest.raises(ValueError):
        TableFactor([[1.0], [2.0]], [0.7, 0.7])


def test_enumerate_support_matches_realized_support_index():
    model = ScenarioModel(
        [0.0, 0.0],
        np.eye(2),
        [DiscreteFactor([1.0, 2.0], [0.5, 0.5], [1.0, 0.0]), TableFactor([[0.0, 1.0], [0.0, 2.0], [0.0, 3.0]])],
    )
    sset, probs = model.enumerate_support()
    assert model.support_size == 6 and probs.sum() == pytest.approx(1.0)
    assert np.array_equal(sset.support_index, np.arange(6))
    draws = draw_iid(model, StreamKey(0), 40)
    for i in range(40):
        assert np.array_equal(draws.H[i], sset.H[draws.support_index[i]])


def test_random_T_realization():
    model = ScenarioModel([0.0], [[1.0, 0.0]], [UniformFactor(0.0, 1.0, [0.0], [[1.0, 1.0]])])
    sset = draw_iid(model, StreamKey(0), 4)
    assert not sset.shared_T and sset.T.shape == (4, 1, 2)
    assert model.support_size is None
    rhs = sset.rhs(np.array([1.0, 1.0]))
    assert np.allclose(rhs[:, 0], -(1.0 + 2.0 * sset.T[:, 0, 1]))
