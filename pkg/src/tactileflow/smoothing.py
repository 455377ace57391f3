"""Zero-velocity Kalman filter followed by a Rauch-Tung-Striebel backward pass.

Model: transition ``Phi = I``, measurement noise ``R = r_scale * I`` and process
noise ``Q = q_scale * I``. Because all three are multiples of the identity the
channels decouple and every channel shares one scalar covariance trajectory;
the default path exploits this. ``full=True`` runs the literal matrix
recursion instead and is kept for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataValidationError, NumericalError
from .geometry import N_TAXELS


@dataclass(frozen=True)
class TaxelRecording:
    timestamps: np.ndarray
    impedances: np.ndarray
    pressure: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float)
        e = np.asarray(self.impedances, dtype=float)
        p = np.asarray(self.pressure, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise DataValidationError("recording must contain at least one sample")
        if e.shape != (t.size, N_TAXELS):
            raise DataValidationError(
                f"impedances must have shape ({t.size}, {N_TAXELS}), got {e.shape}"
            )
        if p.shape != (t.size,):
            raise DataValidationError(f"pressure must have shape ({t.size},), got {p.shape}")
        for name, arr in (("timestamps", t), ("impedances", e), ("pressure", p)):
            if not np.all(np.isfinite(arr)):
                raise DataValidationError(f"{name} contain non-finite values")
        bad = np.flatnonzero(np.diff(t) <= 0)
        if bad.size:
            raise DataValidationError(f"timestamps not strictly increasing at sample {bad[0] + 1}")
        for arr in (t, e, p):
            arr.setflags(write=False)
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "impedances", e)
        object.__setattr__(self, "pressure", p)

    def __len__(self):
        return self.timestamps.size

    @property
    def sample_rate(self) -> float:
        if len(self) < 2:
            return 1.0
        return float((len(self) - 1) / (self.timestamps[-1] - self.timestamps[0]))

    def slice(self, start: int, stop: int) -> TaxelRecording:
        return TaxelRecording(
            self.timestamps[start:stop], self.impedances[start:stop], self.pressure[start:stop]
        )


# Smoothed output has exactly the same shape and invariants.
SmoothedRecording = TaxelRecording


@dataclass(frozen=True)
class SmootherConfig:
    r_scale: float = 0.005
    q_scale: float = 0.00015
    s0_scale: float | None = None  # None -> r_scale

    def __post_init__(self):
        if self.s0_scale is None:
            object.__setattr__(self, "s0_scale", self.r_scale)
        for name in ("r_scale", "q_scale", "s0_scale"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DataValidationError(f"smoother.{name} must be > 0, got {v}")


@dataclass
class ForwardPass:
    """Filter outputs. ``filtered``/``predicted`` have shape (N, C).

    Covariances are ``(N,)`` scalars on the scalar path and ``(N, C, C)`` on the
    full-matrix path. Row 0 of the predictions equals row 0 of the filtered
    values (the filter is initialized at the first measurement).
    """

    filtered: np.ndarray
    S_filtered: np.ndarray
    predicted: np.ndarray
    S_predicted: np.ndarray
    full: bool = False
    gains: np.ndarray = field(default=None, repr=False)


def _as_2d(values) -> tuple[np.ndarray, bool]:
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        return v[:, None], True
    if v.ndim != 2:
        raise DataValidationError(f"expected (N,) or (N, C) values, got shape {v.shape}")
    return v, False


def _check_spd(S: np.ndarray, step: int) -> np.ndarray:
    if S.ndim == 0:
        if not S > 0:
            raise NumericalError(f"covariance lost positivity at step {step}")
        return S
    S = 0.5 * (S + S.T)
    if np.linalg.eigvalsh(S)[0] <= 0:
        raise NumericalError(f"covariance lost positive definiteness at step {step}")
    return S


def kalman_forward(values, cfg: SmootherConfig = SmootherConfig(), full: bool = False) -> ForwardPass:
    """Forward zero-velocity Kalman pass over an (N,) or (N, C) series."""
    z, _ = _as_2d(values)
    n, ch = z.shape
    if n == 0:
        raise DataValidationError("cannot filter an empty recording")
    filt = np.empty_like(z)
    pred = np.empty_like(z)
    filt[0] = pred[0] = z[0]
    if full:
        eye = np.eye(ch)
        Phi, R, Q = eye, cfg.r_scale * eye, cfg.q_scale * eye
        Sf = np.empty((n, ch, ch))
        Sp = np.empty((n, ch, ch))
        Sf[0] = Sp[0] = cfg.s0_scale * eye
        K = np.zeros((n, ch, ch))
        for t in range(1, n):
            pred[t] = Phi @ filt[t - 1]
            Sp[t] = _check_spd(Phi @ Sf[t - 1] @ Phi.T + Q, t)
            K[t] = np.linalg.solve(Sp[t] + R, Sp[t]).T  # Sp (Sp + R)^-1, both symmetric
            Sf[t] = _check_spd((eye - K[t]) @ Sp[t], t)
            filt[t] = pred[t] + K[t] @ (z[t] - pred[t])
        return ForwardPass(filt, Sf, pred, Sp, full=True, gains=K)

    Sf = np.empty(n)
    Sp = np.empty(n)
    K = np.zeros(n)
    Sf[0] = Sp[0] = cfg.s0_scale
    for t in range(1, n):
        pred[t] = filt[t - 1]
        Sp[t] = _check_spd(np.float64(Sf[t - 1] + cfg.q_scale), t)
        K[t] = Sp[t] / (Sp[t] + cfg.r_scale)
        Sf[t] = _check_spd(np.float64((1.0 - K[t]) * Sp[t]), t)
        filt[t] = pred[t] + K[t] * (z[t] - pred[t])
    return ForwardPass(filt, Sf, pred, Sp, full=False, gains=K)


def rts_backward(fwd: ForwardPass) -> tuple[np.ndarray, np.ndarray]:
    """Backward pass; returns smoothed states (N, C) and covariances."""
    n = fwd.filtered.shape[0]
    xs = fwd.filtered.copy()
    Ss = fwd.S_filtered.copy()
    for t in range(n - 1, 0, -1):
        if fwd.full:
            # Phi = I
            L = np.linalg.solve(fwd.S_predicted[t], fwd.S_filtered[t - 1]).T
            Ss[t - 1] = _check_spd(
                fwd.S_filtered[t - 1] + L @ (Ss[t] - fwd.S_predicted[t]) @ L.T, t - 1
            )
            xs[t - 1] = fwd.filtered[t - 1] + L @ (xs[t] - fwd.predicted[t])
        else:
            L = fwd.S_filtered[t - 1] / fwd.S_predicted[t]
            Ss[t - 1] = _check_spd(
                np.float64(fwd.S_filtered[t - 1] + L * (Ss[t] - fwd.S_predicted[t]) * L), t - 1
            )
            xs[t - 1] = fwd.filtered[t - 1] + L * (xs[t] - fwd.predicted[t])
    return xs, Ss


def smooth_series(values, cfg: SmootherConfig = SmootherConfig(), full: bool = False) -> np.ndarray:
    """Filter + smooth an (N,) or (N, C) array; output has the input's shape."""
    z, was_1d = _as_2d(values)
    xs, _ = rts_backward(kalman_forward(z, cfg, full=full))
    return xs[:, 0] if was_1d else xs


def smooth(rec: TaxelRecording, cfg: SmootherConfig = SmootherConfig(), full: bool = False) -> SmoothedRecording:
    """Smooth all 24 impedance channels and the pressure channel."""
    return replace(
        rec,
        impedances=smooth_series(rec.impedances, cfg, full=full),
        pressure=smooth_series(rec.pressure, cfg),
    )
