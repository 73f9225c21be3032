import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from litmap.core import (SpectralSignature, chunked_apply, euclidean_distance, l2_normalize, l2_normalize_rows,
                         pearson_correlation, pearson_rows, resample_to_grid, spectral_angle)
from litmap.errors import LengthMismatch, OutOfRangeBand, ZeroVariance, ZeroVector

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def vectors(n=st.integers(2, 40)):
    return n.flatmap(lambda k: arrays(np.float64, k, elements=finite))


def test_l2_normalize_examples():
    np.testing.assert_allclose(l2_normalize([3.0, 4.0]), [0.6, 0.8], atol=1e-15)
    u = np.array([0.0, 1.0, 0.0])
    np.testing.assert_array_equal(l2_normalize(u), u)
    with pytest.raises(ZeroVector):
        l2_normalize([0.0, 0.0])


def test_l2_normalize_keeps_signature_type():
    sig = SpectralSignature([0.5, 1.0], [3.0, 4.0], "x")
    out = l2_normalize(sig)
    assert isinstance(out, SpectralSignature)
    assert out.label == "x"
    np.testing.assert_allclose(out.values, [0.6, 0.8])


@given(vectors())
def test_l2_normalize_unit_norm(v):
    assume(np.linalg.norm(v) > 1e-6)
    out = l2_normalize(v)
    assert abs(np.linalg.norm(out) - 1) < 1e-12
    assert spectral_angle(out, v) < 1e-6


def test_l2_normalize_rows_rejects_zero_row():
    with pytest.raises(ZeroVector):
        l2_normalize_rows([[1.0, 2.0], [0.0, 0.0]])


def test_euclidean_examples():
    assert euclidean_distance([1, 2], [1, 2]) == 0
    assert euclidean_distance([0, 0], [3, 4]) == 5
    assert euclidean_distance([1, 2, 3], [2, 4, 6]) == pytest.approx(oracles.SQRT14, abs=1e-12)
    with pytest.raises(LengthMismatch):
        euclidean_distance([1, 2], [1, 2, 3])


@given(st.integers(1, 20).flatmap(lambda n: st.tuples(*[arrays(np.float64, n, elements=finite)] * 3)))
def test_triangle_inequality(abc):
    a, b, c = abc
    assert euclidean_distance(a, c) <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-9


@given(st.integers(1, 20).flatmap(lambda n: st.tuples(*[arrays(np.float64, n, elements=finite)] * 2)))
def test_distance_symmetric(ab):
    a, b = ab
    assert euclidean_distance(a, b) == euclidean_distance(b, a)


def test_pearson_examples():
    x = np.array([0.1, 0.5, 0.2, 0.9])
    assert pearson_correlation(x, x) == pytest.approx(1.0, abs=1e-12)
    assert pearson_correlation(x, -x + 3) == pytest.approx(-1.0, abs=1e-12)
    assert pearson_correlation([1, 2, 3], [1, 2, 3.5]) == pytest.approx(oracles.PEARSON_123_1235, abs=1e-12)
    assert round(pearson_correlation([1, 2, 3], [1, 2, 3.5]), 4) == 0.9934


def test_pearson_constant_is_error():
    with pytest.raises(ZeroVariance):
        pearson_correlation([1, 1, 1], [1, 2, 3])
    with pytest.raises(ZeroVariance):
        pearson_correlation([1, 2, 3], [2, 2, 2])


def _varied(v):
    return np.ptp(v) > 1e-3 * max(1.0, np.abs(v).max())


@given(st.integers(2, 30).flatmap(lambda n: st.tuples(*[arrays(np.float64, n, elements=finite)] * 2)))
def test_pearson_matches_oracle_and_symmetric(xs):
    x, s = xs
    assume(_varied(x) and _varied(s))
    r = pearson_correlation(x, s)
    assert abs(r) <= 1 + 1e-12
    assert r == pytest.approx(pearson_correlation(s, x), abs=1e-12)
    assert r == pytest.approx(oracles.pearson(list(x), list(s)), abs=1e-9)


@given(st.integers(2, 30).flatmap(lambda n: st.tuples(*[arrays(np.float64, n, elements=finite)] * 2)),
       st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_pearson_affine_invariance(xs, a, c):
    x, s = xs
    assume(_varied(x) and _varied(s))
    assert pearson_correlation(a * x + c, s) == pytest.approx(pearson_correlation(x, s), abs=1e-9)


def test_pearson_rows_flags_constant_rows():
    X = np.array([[1.0, 2.0, 3.0], [5.0, 5.0, 5.0], [3.0, 2.0, 1.0]])
    r = pearson_rows(X, [1.0, 2.0, 3.5])
    assert np.isnan(r[1])
    assert r[0] == pytest.approx(oracles.PEARSON_123_1235, abs=1e-12)
    assert r[2] == pytest.approx(-oracles.PEARSON_123_1235, abs=1e-12)


def test_resample_examples():
    sig = SpectralSignature([0.4, 0.6], [0.0, 1.0])
    assert resample_to_grid(sig, [0.5]).values[0] == pytest.approx(0.5)
    wl = np.linspace(0.4, 2.5, 7)
    same = SpectralSignature(wl, np.arange(7.0))
    np.testing.assert_array_equal(resample_to_grid(same, wl).values, same.values)


def test_resample_library_range_covers_sensor_grid():
    lib = SpectralSignature(np.linspace(0.2, 3.0, 480), np.linspace(0, 1, 480))
    out = resample_to_grid(lib, np.linspace(0.4, 2.5, 242))
    assert out.values.size == 242
    assert np.all(np.isfinite(out.values))


def test_resample_out_of_range_lists_bands():
    sig = SpectralSignature(np.linspace(0.35, 2.5, 50), np.ones(50))
    with pytest.raises(OutOfRangeBand) as err:
        resample_to_grid(sig, [0.3, 0.4, 2.6])
    assert err.value.bands == [0, 2]


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=10), st.integers(1, 5))
def test_resample_exact_on_piecewise_linear(knot_values, refine):
    knots = np.linspace(0.4, 2.5, len(knot_values))
    fine = np.linspace(0.4, 2.5, (len(knot_values) - 1) * refine + 1)
    sig = SpectralSignature(fine, np.interp(fine, knots, knot_values))
    out = resample_to_grid(sig, knots)
    np.testing.assert_allclose(out.values, knot_values, atol=1e-12)


def test_signature_validates_lengths():
    with pytest.raises(LengthMismatch):
        SpectralSignature([1.0, 2.0], [1.0])


@pytest.mark.parametrize("threads", [1, 2, 8])
def test_chunked_apply_independent_of_threads(threads):
    X = np.random.default_rng(0).random((10000, 5))
    ref = X.sum(axis=1)
    out = chunked_apply(lambda c: c.sum(axis=1), X, threads=threads, chunk=999)
    np.testing.assert_array_equal(out, ref)


def test_spectral_angle_matches_oracle():
    a, b = [1.0, 2.0, 3.0], [3.0, 1.0, 0.5]
    assert spectral_angle(a, b) == pytest.approx(oracles.spectral_angle(a, b), abs=1e-12)
    assert spectral_angle(a, [2.0, 4.0, 6.0]) == pytest.approx(0.0, abs=1e-7)
