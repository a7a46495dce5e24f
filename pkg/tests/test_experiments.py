import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rnnbounds import InvalidInputError, gen_synthetic
from rnnbounds.experiments import loglog_slope, ours_growth, regime_sweep, synthetic_profile


class TestLoglogSlope:
    @given(st.floats(-3, 3), st.floats(1e-3, 1e3))
    def test_recovers_power_law(self, power, scale):
        ts = np.array([2.0, 5.0, 17.0, 100.0])
        assert loglog_slope(ts, scale * ts**power) == pytest.approx(power, abs=1e-9)

    @pytest.mark.parametrize("ts,values", [([0, 1], [1, 2]), ([1, 2], [1, -2]), ([1, 2], [0, 1])])
    def test_rejects_non_positive(self, ts, values):
        with pytest.raises(InvalidInputError):
            loglog_slope(ts, values)


class TestOursGrowth:
    def test_contractive_saturates(self):
        # B_U < 1: the recurrent gain sum converges to 1/(1 - B_U)
        v = ours_growth(synthetic_profile(0.5), [64, 256, 1024])
        np.testing.assert_allclose(v, v[0], rtol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.1, 3.0))
    def test_non_decreasing_in_horizon(self, B_U):
        v = ours_growth(synthetic_profile(B_U), [1, 2, 4, 8, 16, 32])
        assert np.all(np.diff(v) >= -1e-12 * v[:-1])

    def test_independent_of_sample_size(self):
        p = synthetic_profile(1.5)
        assert ours_growth(p, [8], m=100)[0] == ours_growth(p, [8], m=400)[0]


@pytest.fixture(scope="module")
def rows():
    data = gen_synthetic(40, 5, 3, 2, "running-sign", seed=1)
    return regime_sweep(data, [0.5, 1.0, 1.5], seeds=3, epochs=2, hidden_dim=4)


class TestRegimeSweep:
    def test_one_row_per_norm_with_regime_labels(self, rows):
        assert [r["target_B_U"] for r in rows] == [0.5, 1.0, 1.5]
        assert [r["regime"] for r in rows] == ["I", "II", "III"]

    def test_values_are_finite_and_bounded(self, rows):
        for r in rows:
            assert 0 <= r["gap_median"] <= 1
            assert 0 <= r["train_ramp_risk"] <= 1 and 0 <= r["heldout_ramp_risk"] <= 1
            assert math.isfinite(r["vanilla_erc"]) and r["vanilla_erc"] > 0

    def test_rejects_zero_seeds(self):
        with pytest.raises(InvalidInputError):
            regime_sweep(gen_synthetic(10, 3, 2, 2, seed=0), [1.0], seeds=0)
