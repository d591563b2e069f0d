import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptqkit import (
    EmptyInput,
    InvalidArgument,
    Tensor,
    channel_minmax,
    percentile,
    summary_stats,
)


class TestTensorContainer:
    def test_roundtrip_shape_and_data(self):
        t = Tensor.from_array([[1.0, 2.0], [3.0, 4.0]])
        assert t.shape == (2, 2)
        assert t.data.tolist() == [1.0, 2.0, 3.0, 4.0]
        assert t.array.dtype == np.float32

    def test_rejects_nan_and_inf(self):
        with pytest.raises(InvalidArgument):
            Tensor.from_array([1.0, float("nan")])
        with pytest.raises(InvalidArgument):
            Tensor.from_array([1.0, float("inf")])

    def test_rejects_size_mismatch(self):
        with pytest.raises(InvalidArgument):
            Tensor(shape=(3,), data=np.zeros(2, dtype=np.float32))

    def test_rejects_zero_dim_and_high_rank(self):
        with pytest.raises(EmptyInput):
            Tensor(shape=(0,), data=np.zeros(0, dtype=np.float32))
        with pytest.raises(InvalidArgument):
            Tensor.from_array(np.zeros((1, 1, 1, 1, 1)))

    def test_rejects_empty(self):
        with pytest.raises(EmptyInput):
            Tensor.from_array(np.zeros(0))

    def test_data_is_immutable(self):
        t = Tensor.from_array([1.0, 2.0])
        with pytest.raises(ValueError):
            t.data[0] = 5.0


class TestSummaryStats:
    def test_one_to_five(self):
        s = summary_stats([1, 2, 3, 4, 5])
        assert s.mean == pytest.approx(3.0)
        assert s.std == pytest.approx(math.sqrt(2.0))
        assert (s.min, s.max, s.absmax) == (1.0, 5.0, 5.0)

    def test_constant(self):
        s = summary_stats([0.0, 0.0, 0.0])
        assert s.mean == 0.0 and s.std == 0.0

    def test_symmetric_pair(self):
        s = summary_stats([-4.0, 4.0])
        assert s.mean == 0.0
        assert s.std == pytest.approx(4.0)
        assert s.absmax == 4.0

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            summary_stats(np.asarray([]))

    def test_concat_preserves_mean(self):
        rng = np.random.default_rng(7)
        t = rng.standard_normal(257).astype(np.float32)
        a = summary_stats(t).mean
        b = summary_stats(np.concatenate([t, t])).mean
        assert b == pytest.approx(a, rel=1e-6)


class TestPercentile:
    def test_endpoints(self):
        assert percentile([1, 2, 3, 4], 100) == 4.0
        assert percentile([1, 2, 3, 4], 0) == 1.0

    def test_linear_interpolation(self):
        # oracle: sorted ranks with linear interpolation
        assert percentile([1, 2, 3, 4], 50) == 2.5

    def test_out_of_range(self):
        with pytest.raises(InvalidArgument):
            percentile([1.0], 101.0)
        with pytest.raises(InvalidArgument):
            percentile([1.0], -0.5)

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_monotone_in_p(self, seed):
        rng = np.random.default_rng(seed)
        t = rng.standard_normal(41)
        values = [percentile(t, p) for p in np.linspace(0, 100, 21)]
        assert all(b >= a for a, b in zip(values, values[1:]))


class TestChannelMinmax:
    def test_rows(self):
        assert channel_minmax([[1, 2], [-3, 4]], 0) == [(1.0, 2.0), (-3.0, 4.0)]

    def test_constant(self):
        assert channel_minmax(np.full((3, 2), 7.0), 0) == [(7.0, 7.0)] * 3

    def test_matches_bruteforce_scan(self):
        rng = np.random.default_rng(11)
        t = rng.standard_normal((3, 4))
        got = channel_minmax(t, 0)
        for row, (lo, hi) in zip(t, got):
            expect_lo = min(float(v) for v in row)
            expect_hi = max(float(v) for v in row)
            assert (lo, hi) == (expect_lo, expect_hi)

    def test_axis_out_of_range(self):
        with pytest.raises(InvalidArgument):
            channel_minmax([[1.0]], 2)

    def test_global_reduce_matches_summary(self):
        rng = np.random.default_rng(3)
        t = rng.standard_normal((4, 5)).astype(np.float32)
        pairs = channel_minmax(t, 1)
        s = summary_stats(t)
        assert min(lo for lo, _ in pairs) == pytest.approx(s.min)
        assert max(hi for _, hi in pairs) == pytest.approx(s.max)
