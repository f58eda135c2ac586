import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldpclass.core import (
    Box,
    ClassParams,
    GridSpec,
    LabeledPoint,
    PrivacyBudget,
    PrivatizedReport,
    ball_volume,
    index_nearest,
    indicator_window,
    nearest_flat,
    split_halves,
)
from ldpclass.errors import DomainError, ParameterError

from conftest import brute_nearest


def test_grid_cell_counts():
    g = GridSpec(2, 0.25)
    assert g.size == 5
    assert g.n_cells == 25
    assert GridSpec(1, 1.0).size == 2
    assert GridSpec(1, 0.3).size == 5


@pytest.mark.parametrize("d,h", [(0, 0.5), (1, 0.0), (1, 1.5), (1, -0.1)])
def test_grid_rejects_bad_parameters(d, h):
    with pytest.raises(ParameterError):
        GridSpec(d, h)


@pytest.mark.parametrize(
    "d,h,x,expected",
    [
        (2, 0.25, (0.3, 0.6), (1, 2)),
        (1, 0.5, (0.5,), (1,)),
        (1, 0.25, (0.375,), (1,)),  # x/h = 1.5: tie goes to the lower index
    ],
)
def test_index_nearest_examples(d, h, x, expected):
    assert index_nearest(x, GridSpec(d, h)) == expected


def test_index_nearest_brute_force_example():
    g = GridSpec(2, 0.25)
    assert brute_nearest((0.3, 0.6), g) == index_nearest((0.3, 0.6), g)


def test_index_nearest_domain_error():
    with pytest.raises(DomainError):
        index_nearest((1.2,), GridSpec(1, 0.5))
    with pytest.raises(DomainError):
        index_nearest((-0.01, 0.2), GridSpec(2, 0.5))


@pytest.mark.parametrize("d,h", [(1, 0.07), (1, 0.5), (2, 0.13), (2, 0.3), (3, 0.21), (3, 0.5)])
def test_index_nearest_matches_exhaustive_argmin(d, h):
    grid = GridSpec(d, h)
    X = np.random.default_rng(d * 100 + int(h * 100)).random((10_000 if d < 3 else 2_000, d))
    fast = nearest_flat(X, grid)
    for x, k in zip(X, fast):
        assert grid.unflatten(int(k)) == brute_nearest(x, grid)


@settings(max_examples=200, deadline=None)
@given(
    d=st.integers(1, 3),
    h=st.floats(0.01, 1.0),
    data=st.data(),
)
def test_rounding_bound(d, h, data):
    grid = GridSpec(d, h)
    x = np.array(data.draw(st.lists(st.floats(0.0, 1.0), min_size=d, max_size=d)))
    j = index_nearest(x, grid)
    assert np.max(np.abs(x - grid.point(j))) <= h / 2 + 1e-12


@settings(max_examples=200, deadline=None)
@given(d=st.integers(1, 3), h=st.floats(0.05, 1.0), data=st.data())
def test_flatten_round_trip(d, h, data):
    grid = GridSpec(d, h)
    j = tuple(data.draw(st.lists(st.integers(0, grid.size - 1), min_size=d, max_size=d)))
    k = grid.flatten(j)
    assert 0 <= k < grid.n_cells
    assert grid.unflatten(k) == j


def test_flatten_is_row_major_bijection():
    grid = GridSpec(2, 0.5)
    flat = [grid.flatten((a, b)) for a in range(3) for b in range(3)]
    assert flat == list(range(9))


def test_indicator_window_examples():
    g = GridSpec(1, 0.5)
    assert indicator_window((0.5,), g) == Box((0.0,), (1.0,))
    assert indicator_window((0.1,), g) == Box((-0.5,), (0.5,))


@settings(max_examples=200, deadline=None)
@given(d=st.integers(1, 3), h=st.floats(0.02, 1.0), data=st.data())
def test_window_contains_half_bandwidth_ball(d, h, data):
    grid = GridSpec(d, h)
    x0 = np.array(data.draw(st.lists(st.floats(0.0, 1.0), min_size=d, max_size=d)))
    win = indicator_window(x0, grid)
    # the closed ball of radius h/2 around x0 lies inside its open bounding cube,
    # which in turn must sit inside the window
    assert np.all(np.asarray(win.lo) <= x0 - h / 2 + 1e-12)
    assert np.all(np.asarray(win.hi) >= x0 + h / 2 - 1e-12)


def test_ball_volume():
    assert ball_volume(1, 1.0) == pytest.approx(2.0)
    assert ball_volume(2, 1.0) == pytest.approx(math.pi)
    assert ball_volume(3, 0.5) == pytest.approx(4 / 3 * math.pi * 0.125)
    assert ball_volume(3, 0.5) == pytest.approx(0.5236, abs=1e-4)


def test_class_params_validation_and_flag():
    p = ClassParams(beta=1.0, gamma=1.0, C0=1, L=1, c0=0.5, r0=1, mu=1)
    assert p.lower_bound_valid(1)
    assert not ClassParams(beta=1.0, gamma=3.0, C0=1, L=1, c0=0.5, r0=1, mu=1).lower_bound_valid(2)
    with pytest.raises(ParameterError):
        ClassParams(beta=1.5, gamma=0, C0=1, L=1, c0=1, r0=1, mu=1)
    with pytest.raises(ParameterError):
        ClassParams(beta=1.0, gamma=-1, C0=1, L=1, c0=1, r0=1, mu=1)
    with pytest.raises(ParameterError):
        ClassParams(beta=1.0, gamma=0, C0=1, L=0, c0=1, r0=1, mu=1)


def test_labeled_point_and_budget_validation():
    assert LabeledPoint((0.2, 0.4), 1).y == 1
    with pytest.raises(DomainError):
        LabeledPoint((0.2, 1.4), 1)
    with pytest.raises(DomainError):
        LabeledPoint((0.2,), 2)
    assert float(PrivacyBudget(0.5)) == 0.5
    with pytest.raises(ParameterError):
        PrivacyBudget(0.0)


def test_privatized_report_invariants():
    g = GridSpec(1, 0.5)
    rep = PrivatizedReport("density", [1.0, 2.0, 3.0], g)
    assert not rep.values.flags.writeable
    with pytest.raises(ParameterError):
        PrivatizedReport("density", [1.0, 2.0], g)
    with pytest.raises(ParameterError):
        PrivatizedReport("density", [1.0, np.inf, 0.0], g)
    with pytest.raises(ParameterError):
        PrivatizedReport("other", [1.0, 2.0, 3.0], g)


def test_split_halves_drops_odd_point():
    assert split_halves(11) == 5
    assert split_halves(10) == 5
    with pytest.raises(ParameterError):
        split_halves(1)
