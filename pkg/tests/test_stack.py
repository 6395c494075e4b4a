import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twophoton.stack import ImageStack, StimSchedule, frame_at, shock_times


class TestImageStack:
    def test_frame_at_minimal(self):
        s = ImageStack(np.array([1, 2, 3, 4], dtype=np.float32).reshape(1, 1, 2, 2))
        np.testing.assert_array_equal(frame_at(s, 0, 0), [[1, 2], [3, 4]])

    def test_time_out_of_range(self):
        s = ImageStack(np.zeros((2, 3, 2, 2)))
        with pytest.raises(IndexError):
            frame_at(s, 0, 3)

    def test_channel_out_of_range(self):
        s = ImageStack(np.zeros((2, 3, 2, 2)))
        with pytest.raises(IndexError):
            frame_at(s, 2, 0)

    def test_negative_index_rejected(self):
        s = ImageStack(np.zeros((2, 3, 2, 2)))
        with pytest.raises(IndexError):
            frame_at(s, 0, -1)

    def test_rejects_nan(self):
        d = np.zeros((1, 1, 2, 2))
        d[0, 0, 1, 1] = np.nan
        with pytest.raises(ValueError, match="NaN"):
            ImageStack(d)

    @pytest.mark.parametrize("period", [0.0, -1.0])
    def test_rejects_bad_period(self, period):
        with pytest.raises(ValueError):
            ImageStack(np.zeros((1, 1, 1, 1)), period)

    def test_immutable(self):
        s = ImageStack(np.zeros((1, 2, 2, 2)))
        with pytest.raises(ValueError):
            s.data[0, 0, 0, 0] = 1.0

    def test_with_channel_builds_new_stack(self):
        s = ImageStack(np.zeros((2, 2, 2, 2)))
        s2 = s.with_channel(1, np.ones((2, 2, 2)))
        assert s.data.sum() == 0
        assert s2.channel(1).sum() == 8
        assert s2.frame_period_s == s.frame_period_s

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 3), st.integers(1, 4), st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_frame_roundtrip(self, c, t, r, col, seed):
        data = np.random.default_rng(seed).random((c, t, r, col)).astype(np.float32)
        s = ImageStack(data)
        rebuilt = np.stack([np.stack([frame_at(s, ci, ti) for ti in range(t)]) for ci in range(c)])
        assert rebuilt.tobytes() == data.tobytes()


class TestShockTimes:
    def test_single_trial_twelve_shocks(self):
        times = shock_times(StimSchedule([0.0]))
        assert len(times) == 12
        np.testing.assert_allclose(times, [0.167 * k for k in range(12)], atol=1e-12)
        assert times[-1] == pytest.approx(1.837)

    def test_zero_trials(self):
        assert shock_times(StimSchedule([])) == []

    def test_one_shock_per_trial(self):
        assert shock_times(StimSchedule([3.5], shocks_per_trial=1)) == [3.5]

    def test_unsorted_trials_rejected(self):
        with pytest.raises(ValueError):
            StimSchedule([1.0, 1.0])

    @given(st.lists(st.floats(0, 1e4, allow_nan=False), max_size=20, unique=True), st.integers(1, 20))
    def test_length(self, starts, k):
        sched = StimSchedule(sorted(starts), shocks_per_trial=k)
        out = shock_times(sched)
        assert len(out) == len(starts) * k
        for i in range(len(starts)):
            trial = out[i * k:(i + 1) * k]
            assert trial == sorted(trial)
