import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twophoton.errors import InsufficientFramesError
from twophoton.movement import (
    MovementSeries,
    framediff_series,
    movement_levene,
    shiftmag_series,
    window_means,
)
from twophoton.registration import AlignmentResult, RigidTransform


def _result(transforms):
    T = len(transforms)
    return AlignmentResult(transforms, np.zeros(T), np.ones((T, 2, 2), bool))


class TestFramediff:
    def test_static(self):
        s = framediff_series(np.full((4, 3, 3), 7.0))
        assert s.kind == "framediff"
        assert s.values.tolist() == [0, 0, 0]

    def test_hand(self):
        assert framediff_series(np.array([[[0, 0]], [[1, 3]]], dtype=float)).values.tolist() == [4]

    def test_too_short(self):
        with pytest.raises(InsufficientFramesError):
            framediff_series(np.ones((1, 2, 2)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-100, 100))
    def test_offset_invariant(self, seed, offset):
        ch = np.random.default_rng(seed).random((6, 4, 4)) * 10
        a = framediff_series(ch).values
        b = framediff_series(ch + offset).values
        np.testing.assert_allclose(b, a, rtol=1e-9, atol=1e-9)
        assert a.size == 5


class TestShiftmag:
    def test_identity(self):
        s = shiftmag_series(_result([RigidTransform()] * 3))
        assert s.values.tolist() == [0, 0, 0]

    def test_345(self):
        assert shiftmag_series(_result([RigidTransform(3, 4, 0.05)])).values.tolist() == [5.0]

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-0.5, 0.5))
    def test_theta_free(self, dx, dy, th):
        a = shiftmag_series(_result([RigidTransform(dx, dy, th)])).values
        b = shiftmag_series(_result([RigidTransform(dx, dy, 0.0)])).values
        assert a.tolist() == b.tolist()


class TestMovementLevene:
    def test_identical(self):
        s = MovementSeries(np.array([1.0, 4.0, 2.0, 8.0]), "framediff")
        r = movement_levene(s, s)
        assert r.W == 0 and r.p_value == 1

    def test_kind_mismatch(self):
        with pytest.raises(ValueError):
            movement_levene(MovementSeries([1, 2], "framediff"), MovementSeries([1, 2], "shiftmag"))

    def test_spread_detected(self):
        g = np.random.default_rng(11)
        rest = MovementSeries(np.abs(g.normal(10, 1, 500)), "framediff")
        stim = MovementSeries(np.abs(g.normal(10, 3, 500)), "framediff")
        assert movement_levene(rest, stim).p_value < 0.01

    def test_same_distribution_mostly_insignificant(self):
        g = np.random.default_rng(2024)
        insignificant = 0
        for _ in range(100):
            rest = MovementSeries(np.abs(g.normal(10, 2, 500)), "framediff")
            stim = MovementSeries(np.abs(g.normal(10, 2, 500)), "framediff")
            insignificant += movement_levene(rest, stim).p_value > 0.05
        assert insignificant >= 90

    def test_windowed(self):
        s = MovementSeries(np.arange(10.0), "shiftmag", frame_period_s=0.5)
        np.testing.assert_allclose(window_means(s, 1.0), [0.5, 2.5, 4.5, 6.5, 8.5])
        np.testing.assert_allclose(window_means(s, 1.5), [1, 4, 7])
        r = movement_levene(s, MovementSeries(np.arange(10.0) * 2, "shiftmag", 0.5), window_s=1.0)
        assert r.df2 == 8

    def test_pairs_timestamps(self):
        s = framediff_series(np.zeros((3, 1, 1)), frame_period_s=0.25)
        assert s.pairs() == [(0.25, 0.0), (0.5, 0.0)]
