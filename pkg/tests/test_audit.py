import math
from fractions import Fraction

import numpy as np
import pytest

from rnnbounds import InvalidInputError, ModelWeights, SequenceDataset, audit, check_assumptions
from rnnbounds import display, gate_stats
from rnnbounds.audit import NormProfile
from rnnbounds.cells import CELL_MATRICES
from rnnbounds.data import project_to_ball
from rnnbounds.verify import orthogonal_filters


def weights(cell, d_x=2, d_h=3, d_y=2, fill=0.0, **over):
    mats = {}
    for n in CELL_MATRICES[cell]:
        shape = (d_h, d_h) if n.startswith("U") else (d_y, d_h) if n == "V" else (d_h, d_x)
        mats[n] = np.full(shape, fill)
    mats.update(over)
    return ModelWeights(cell, mats)


def dataset(m=3, T=4, d_x=2, seed=0):
    rng = np.random.default_rng(seed)
    X = project_to_ball(rng.standard_normal((m, T, d_x)))
    return SequenceDataset(X, np.ones((m, T), dtype=int), K=2)


class TestOperatingPoint:
    def test_stable_rank_ratio(self):
        value = 13.6823 / 2.6801
        assert round(value, 3) == 5.105
        assert display(value) == "5.1"
        assert value < math.sqrt(128) / 2

    def test_two_one_ratio(self):
        value = 154.5439 / 13.6823
        assert round(value, 3) == 11.295
        assert display(value) == "11.3"
        assert value == pytest.approx(math.sqrt(128), rel=0.002)

    def test_profile_ratios(self):
        p = NormProfile("vanilla", 128, 128, 128, {"U": 2.6801}, {"U": 13.6823}, {"U": 154.5439})
        assert p.stable_rank["U"] == pytest.approx(5.105, abs=5e-4)
        assert p.two_one_ratio["U"] == pytest.approx(11.295, abs=5e-4)
        row = next(p.rows())
        exact = (Fraction("13.6823") / Fraction("2.6801"), Fraction("154.5439") / Fraction("13.6823"))
        assert (row["stable_rank"], row["two_one_over_frobenius"]) == tuple(round(float(v), 4) for v in exact)
        assert (row["stable_rank"], row["two_one_over_frobenius"]) == (5.1051, 11.2952)

    def test_display_rounds_half_up(self):
        assert display(0.25) == "0.3"
        assert display(2.449999) == "2.4"


class TestAudit:
    def test_identity_weights(self):
        d = 4
        w = ModelWeights("vanilla", {"U": np.eye(d), "V": np.eye(d), "W": np.eye(d)})
        p = audit(w, B_x=1.0)
        for n in "UVW":
            assert p.B(n) == pytest.approx(1.0)
            assert p.stable_rank[n] == pytest.approx(math.sqrt(d))
        assert p.width == pytest.approx(math.sqrt(3 * d * d))
        assert p.max_dim == d

    def test_matches_numpy(self):
        rng = np.random.default_rng(1)
        w = weights("vanilla", U=rng.standard_normal((3, 3)), V=rng.standard_normal((2, 3)),
                    W=rng.standard_normal((3, 2)))
        p = audit(w)
        for n in "UVW":
            assert p.B(n) == pytest.approx(np.linalg.norm(w[n], 2), rel=1e-10)
            assert p.F(n) == pytest.approx(np.linalg.norm(w[n]), rel=1e-14)
            assert p.M(n) == pytest.approx(np.linalg.norm(w[n], axis=0).sum(), rel=1e-14)

    def test_missing_norm(self):
        p = audit(weights("vanilla"))
        with pytest.raises(InvalidInputError):
            p.B("U_h")

    def test_conv_uses_operator(self):
        w = ModelWeights("conv", {n: orthogonal_filters(np.random.default_rng(0), 2, True)
                                  for n in CELL_MATRICES["conv"]}, d=5, K=1)
        p = audit(w)
        assert p.width == 5 and p.k == 2
        assert p.B("U_cal") <= 1 + 1e-12


class TestGateStats:
    def test_mgu_zero_weights(self):
        beta, theta = gate_stats(weights("mgu"), dataset())
        assert (beta, theta) == (0.5, 0.5)

    def test_mgu_half_gate_unit_recurrence(self):
        w = weights("mgu", U_h=np.eye(3), W_h=np.ones((3, 2)))
        beta, theta = gate_stats(w, dataset())
        assert beta == pytest.approx(0.75, rel=1e-12)
        assert theta == pytest.approx(0.75, rel=1e-12)

    def test_lstm_zero_weights(self):
        beta, theta = gate_stats(weights("lstm"), dataset())
        assert (beta, theta) == (0.5, 0.5)

    def test_filled_from_data(self):
        p = audit(weights("mgu"), data=dataset())
        assert (p.beta, p.theta) == (0.5, 0.5)

    def test_rejects_vanilla(self):
        with pytest.raises(InvalidInputError):
            gate_stats(weights("vanilla"), dataset())

    def test_empty_dataset(self):
        empty = SequenceDataset(np.zeros((0, 3, 2)), np.zeros((0, 3), dtype=int), K=2)
        with pytest.raises(InvalidInputError):
            gate_stats(weights("mgu"), empty)


class TestAssumptions:
    def test_unit_inputs_pass(self):
        r = check_assumptions(weights("vanilla"), dataset())
        assert r["A1_input_norm"].passed
        assert r.passed

    def test_scaled_inputs_fail_with_measured_norm(self):
        X = np.zeros((2, 3, 2))
        X[1, 2] = [2.0, 0.0]
        X[0, 0] = [0.0, 1.0]
        r = check_assumptions(weights("vanilla"), SequenceDataset(X, np.ones((2, 3), dtype=int), 2))
        check = r["A1_input_norm"]
        assert not check.passed
        assert check.measured == 2.0 and check.threshold == 1.0
        assert not r.passed and r.failures() == [check]

    def test_sigmoid_output_fails_zero_at_origin(self):
        w = weights("vanilla")
        w.activations["y"] = w.activations["y"].of("sigmoid")
        assert not check_assumptions(w)["A3_sigma_y_zero"].passed

    def test_unbounded_hidden_activation_flagged(self):
        w = weights("vanilla")
        w.activations["h"] = w.activations["h"].of("relu")
        assert not check_assumptions(w)["A3_sigma_h_bounded"].passed

    def test_norm_caps(self):
        w = weights("vanilla", U=2 * np.eye(3))
        r = check_assumptions(w, norm_caps={"spectral": {"U": 1.0, "W": 1.0}})
        assert not r["A2_spectral_U"].passed and r["A2_spectral_U"].measured == pytest.approx(2.0)
        assert r["A2_spectral_W"].passed
        with pytest.raises(InvalidInputError):
            check_assumptions(w, norm_caps={"nuclear": {"U": 1.0}})

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_orthogonal_scaled_filters_pass(self, k):
        rng = np.random.default_rng(k)
        w = ModelWeights("conv", {n: orthogonal_filters(rng, k, True) for n in CELL_MATRICES["conv"]},
                         d=6, K=2)
        r = check_assumptions(w)
        assert all(r[f"A6_orthogonal_{n}"].passed for n in CELL_MATRICES["conv"])
        assert r["A6_pooling_norm"].passed

    def test_unscaled_filters_fail(self):
        rng = np.random.default_rng(0)
        w = ModelWeights("conv", {n: orthogonal_filters(rng, 2, False) for n in CELL_MATRICES["conv"]},
                         d=6, K=2)
        assert not check_assumptions(w)["A6_orthogonal_U_cal"].passed
