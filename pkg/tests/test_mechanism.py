import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldpclass.core import GridSpec, LabeledPoint
from ldpclass.errors import DomainError
from ldpclass.mechanism import (
    NoiseSpec,
    build_indicator_array,
    indicator_matrix,
    laplace_from_uniform,
    privatize_batch,
    privatize_density,
    privatize_label,
    sample_laplace,
)
from ldpclass.rng import RngStream, ZeroNoise

from conftest import brute_indicator


def test_indicator_examples():
    g = GridSpec(1, 0.5)
    assert build_indicator_array((0.3,), g).cells == (0, 1)
    assert build_indicator_array((0.5,), g).cells == (1,)  # |0.5 - 0| = h is excluded
    assert brute_indicator((0.3,), g) == (0, 1)
    assert brute_indicator((0.5,), g) == (1,)


def test_indicator_domain_error():
    with pytest.raises(DomainError):
        build_indicator_array((1.5,), GridSpec(1, 0.5))


@settings(max_examples=300, deadline=None)
@given(d=st.integers(1, 3), h=st.floats(0.05, 1.0), data=st.data())
def test_indicator_matches_scan(d, h, data):
    grid = GridSpec(d, h)
    x = np.array(data.draw(st.lists(st.floats(0.0, 1.0), min_size=d, max_size=d)))
    cells = build_indicator_array(x, grid).cells
    assert cells == brute_indicator(x, grid)
    assert 1 <= len(cells) <= 2**d


def test_indicator_matrix_agrees_with_single_point():
    grid = GridSpec(2, 0.2)
    X = np.random.default_rng(3).random((200, 2))
    M = indicator_matrix(X, grid)
    for x, row in zip(X, M):
        np.testing.assert_array_equal(row, build_indicator_array(x, grid).to_dense())


def test_noise_spec():
    assert NoiseSpec(1, 1.0).scale == 4.0
    assert NoiseSpec(1, 1.0).variance == 32.0
    assert NoiseSpec(2, 0.5).scale == 16.0


def test_laplace_inverse_cdf():
    assert laplace_from_uniform(0.0, 4.0) == 0.0
    # CDF check: P(Z <= z) for z < 0 is exp(z/b)/2 = 1/2 + u
    u = -0.25
    z = laplace_from_uniform(u, 2.0)
    assert 0.5 * np.exp(z / 2.0) == pytest.approx(0.5 + u)


def test_sample_laplace_moments():
    spec = NoiseSpec(1, 1.0)
    z = sample_laplace(spec, 1_000_000, RngStream(7))
    se = np.sqrt(spec.variance / z.size)
    assert abs(z.mean()) < 4 * se
    assert abs(z.var() / 32.0 - 1) < 0.05


def test_sample_laplace_deterministic():
    spec = NoiseSpec(2, 0.5)
    a = sample_laplace(spec, 100, RngStream(1, (2, 3)))
    b = sample_laplace(spec, 100, RngStream(1, (2, 3)))
    np.testing.assert_array_equal(a, b)
    c = sample_laplace(spec, 100, RngStream(1, (2, 4)))
    assert not np.array_equal(a, c)


def test_zero_noise_reports():
    g = GridSpec(1, 0.5)
    rep = privatize_density((0.3,), g, 1.0, ZeroNoise())
    np.testing.assert_array_equal(rep.values, [1.0, 1.0, 0.0])
    assert rep.half == "density"
    lab0 = privatize_label(LabeledPoint((0.3,), 0), g, 1.0, ZeroNoise())
    np.testing.assert_array_equal(lab0.values, np.zeros(3))
    lab1 = privatize_label(LabeledPoint((0.3,), 1), g, 1.0, ZeroNoise())
    np.testing.assert_array_equal(lab1.values, rep.values)
    assert lab1.half == "label"


def test_report_expectation_is_payload():
    g = GridSpec(1, 0.25)
    rng = RngStream(5)
    reps = 20_000
    X = np.full((reps, 1), 0.3)
    Z = privatize_batch(X, None, g, 1.0, rng)
    se = np.sqrt(NoiseSpec(1, 1.0).variance / reps)
    expected = build_indicator_array((0.3,), g).to_dense()
    assert np.all(np.abs(Z.mean(axis=0) - expected) < 4 * se)


def test_label_expectation_uses_eta():
    # E[Z_j] = eta(x) 1{|x - x_j| < h}; with eta = 0.7 at a fixed x
    g = GridSpec(1, 0.5)
    reps = 40_000
    y = (np.random.default_rng(0).random(reps) < 0.7).astype(int)
    Z = privatize_batch(np.full((reps, 1), 0.3), y, g, 1.0, RngStream(8))
    se = np.sqrt((NoiseSpec(1, 1.0).variance + 0.25) / reps)
    assert np.all(np.abs(Z.mean(axis=0) - np.array([0.7, 0.7, 0.0])) < 4 * se)


def test_batch_rows_equal_single_clients():
    g = GridSpec(2, 0.3)
    rng = RngStream(99, (4,))
    X = np.random.default_rng(1).random((10, 2))
    y = np.arange(10) % 2
    batch = privatize_batch(X, y, g, 0.7, rng, first_client=5)
    for k in range(10):
        single = privatize_label(LabeledPoint(X[k], int(y[k])), g, 0.7, rng, client=5 + k)
        np.testing.assert_array_equal(batch[k], single.values)
    # splitting the batch differently gives identical rows
    part = privatize_batch(X[4:], y[4:], g, 0.7, rng, first_client=9)
    np.testing.assert_array_equal(part, batch[4:])


def test_reports_bit_identical_across_runs():
    g = GridSpec(1, 0.1)
    a = privatize_density((0.42,), g, 1.0, RngStream(2024, (0,)), client=17)
    b = privatize_density((0.42,), g, 1.0, RngStream(2024, (0,)), client=17)
    assert a.values.tobytes() == b.values.tobytes()


@settings(max_examples=300, deadline=None)
@given(d=st.integers(1, 3), h=st.floats(0.05, 1.0), data=st.data())
def test_l1_sensitivity(d, h, data):
    grid = GridSpec(d, h)
    pts = st.lists(st.floats(0.0, 1.0), min_size=d, max_size=d)
    x, xp = data.draw(pts), data.draw(pts)
    y, yp = data.draw(st.integers(0, 1)), data.draw(st.integers(0, 1))
    b = y * build_indicator_array(x, grid).to_dense()
    bp = yp * build_indicator_array(xp, grid).to_dense()
    assert np.abs(b - bp).sum() <= 2 ** (d + 1)


def test_nonzero_bound_bulk():
    rng = np.random.default_rng(11)
    for d in (1, 2, 3):
        grid = GridSpec(d, float(rng.uniform(0.05, 1.0)))
        counts = indicator_matrix(rng.random((5_000, d)), grid).sum(axis=1)
        assert counts.min() >= 1 and counts.max() <= 2**d
