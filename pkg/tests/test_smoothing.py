import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import batch_map_smoother
from tactileflow.errors import DataValidationError
from tactileflow.smoothing import (
    SmootherConfig,
    TaxelRecording,
    kalman_forward,
    rts_backward,
    smooth,
    smooth_series,
)

CFG = SmootherConfig()


def test_defaults():
    assert (CFG.r_scale, CFG.q_scale, CFG.s0_scale) == (0.005, 0.00015, 0.005)


@pytest.mark.parametrize("field", ["r_scale", "q_scale", "s0_scale"])
def test_config_validation_names_field(field):
    with pytest.raises(DataValidationError, match=field):
        SmootherConfig(**{field: 0.0})


def test_constant_input_is_fixed_point():
    z = np.full(30, 7.25)
    fwd = kalman_forward(z)
    assert np.all(fwd.filtered == 7.25)
    assert np.all(smooth_series(z) == 7.25)


def test_perfect_measurement_limit(rng):
    z = rng.normal(size=40)
    fwd = kalman_forward(z, SmootherConfig(r_scale=1e-12))
    assert np.max(np.abs(fwd.filtered[:, 0] - z)) < 1e-6


def test_three_step_hand_oracle():
    # p(t|t-1) = p(t-1|t-1); S(t|t-1) = S + Q; K = S(t|t-1)/(S(t|t-1)+R); ...
    # evaluated by hand-rolled floats for y = [1, 2, 0.5], defaults
    fwd = kalman_forward(np.array([1.0, 2.0, 0.5]))
    assert np.allclose(fwd.filtered[:, 0], [1.0, 1.5073891625615765, 1.1552597007273544], atol=1e-14)
    assert fwd.gains[1] == pytest.approx(0.00515 / 0.01015, abs=1e-15)


def test_five_step_batch_oracle():
    y = np.array([0.3, -0.2, 0.9, 1.4, 0.1])
    # frozen from the tridiagonal MAP solve
    ref = [0.47712329778031515, 0.4824369967137246, 0.5082238055485457, 0.5222573285498232, 0.5099585714075954]
    assert np.allclose(smooth_series(y), ref, atol=1e-12)


def test_single_sample():
    z = np.array([[3.0, 4.0]])
    fwd = kalman_forward(z)
    xs, _ = rts_backward(fwd)
    assert np.array_equal(xs, z) and np.array_equal(fwd.filtered, z)


def test_last_smoothed_equals_last_filtered(rng):
    z = rng.normal(size=(25, 3))
    fwd = kalman_forward(z)
    xs, Ss = rts_backward(fwd)
    assert np.array_equal(xs[-1], fwd.filtered[-1])
    assert Ss[-1] == fwd.S_filtered[-1]


def test_empty_rejected():
    with pytest.raises(DataValidationError):
        kalman_forward(np.empty(0))


@given(
    arrays(np.float64, st.integers(1, 20), elements=st.floats(-1e3, 1e3)),
    st.floats(1e-4, 1.0),
    st.floats(1e-5, 1.0),
    st.floats(1e-4, 1.0),
)
def test_rts_equals_batch_map(y, r, q, s0):
    cfg = SmootherConfig(r, q, s0)
    ref = batch_map_smoother(y, r, q, s0)
    assert np.max(np.abs(smooth_series(y, cfg) - ref)) <= 1e-8 * max(1.0, np.max(np.abs(y)))


def test_full_matrix_path_matches_scalar(rng):
    z = rng.normal(100, 5, size=(30, 24))
    assert np.max(np.abs(smooth_series(z, full=True) - smooth_series(z))) < 1e-12


def test_covariances_stay_positive():
    fwd = kalman_forward(np.zeros(50))
    _, Ss = rts_backward(fwd)
    assert np.all(fwd.S_filtered > 0) and np.all(Ss > 0)
    fwd = kalman_forward(np.zeros((5, 3)), full=True)
    for S in fwd.S_filtered:
        assert np.allclose(S, S.T) and np.all(np.linalg.eigvalsh(S) > 0)


def test_variance_reduction_statistical():
    passes = 0
    for seed in range(100):
        z = 5.0 + np.random.default_rng(seed).normal(0, 0.1, 200)
        passes += np.var(smooth_series(z)) <= np.var(z)
    assert passes >= 99


def test_smooth_recording_keeps_shapes_and_smooths_pressure(rng):
    n = 40
    rec = TaxelRecording(np.arange(n) * 0.02, rng.normal(100, 2, (n, 24)), rng.normal(2000, 2, n))
    out = smooth(rec)
    assert out.impedances.shape == (n, 24) and out.pressure.shape == (n,)
    assert np.array_equal(out.timestamps, rec.timestamps)
    assert np.allclose(out.pressure, smooth_series(rec.pressure))


def test_recording_validation():
    t = np.array([0.0, 0.1, 0.1])
    with pytest.raises(DataValidationError, match="sample 2"):
        TaxelRecording(t, np.zeros((3, 24)), np.zeros(3))
    with pytest.raises(DataValidationError):
        TaxelRecording(np.arange(3.0), np.zeros((3, 23)), np.zeros(3))
    bad = np.zeros((3, 24))
    bad[1, 1] = np.inf
    with pytest.raises(DataValidationError):
        TaxelRecording(np.arange(3.0), bad, np.zeros(3))
