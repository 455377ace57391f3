"""Pressure-peak detection and before/during/after region-of-interest windows."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import peak_prominences

from .errors import DataValidationError

LABELS = ("before", "during", "after")


@dataclass(frozen=True)
class Segment:
    label: str
    start: int
    end: int  # inclusive
    anchor: int
    truncated: bool = False

    def __post_init__(self):
        if self.start > self.end:
            raise DataValidationError(f"segment start {self.start} > end {self.end}")
        # before/after windows sit next to their anchor peak, not around it
        if self.label not in ("before", "after") and not self.start <= self.anchor <= self.end:
            raise DataValidationError(f"anchor {self.anchor} outside [{self.start}, {self.end}]")

    def __len__(self):
        return self.end - self.start + 1


@dataclass(frozen=True)
class PeakConfig:
    """Thresholds in samples / pressure counts; ``None`` picks the documented default.

    Defaults: prominence = 2 * MAD of the shifted series, min separation = 0.25 s,
    half-width = 0.5 s (the latter two need the sample rate, see :meth:`resolve`).
    """

    prominence: float | None = None
    min_separation: int | None = None
    half_width: int | None = None
    mean_window: int | None = None  # None -> whole-sequence mean

    def __post_init__(self):
        if self.prominence is not None and not self.prominence > 0:
            raise DataValidationError("peaks.prominence must be > 0")
        if self.min_separation is not None and self.min_separation < 1:
            raise DataValidationError("peaks.min_separation must be >= 1")
        if self.half_width is not None and self.half_width < 0:
            raise DataValidationError("peaks.half_width must be >= 0")
        if self.mean_window is not None and self.mean_window < 1:
            raise DataValidationError("peaks.mean_window must be >= 1")

    def resolve(self, sample_rate: float) -> PeakConfig:
        return replace(
            self,
            min_separation=self.min_separation or max(1, int(round(0.25 * sample_rate))),
            half_width=self.half_width if self.half_width is not None else int(round(0.5 * sample_rate)),
        )


def mean_shift(series, window: int | None = None) -> np.ndarray:
    """Subtract the whole-sequence mean, or a centered running mean of ``window`` samples."""
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise DataValidationError("cannot mean-shift an empty series")
    if window is None:
        # centered on the first sample so constant series shift to exactly zero
        return (x - x[0]) - (x - x[0]).mean()
    from scipy.ndimage import uniform_filter1d

    return x - uniform_filter1d(x, size=window, mode="nearest")


def default_prominence(shifted) -> float:
    x = np.asarray(shifted, dtype=float)
    mad = float(np.median(np.abs(x - np.median(x))))
    return 2.0 * mad if mad > 0 else float(np.finfo(float).eps)


def find_peaks(shifted, cfg: PeakConfig = PeakConfig()) -> list[tuple[int, float]]:
    """Strict local maxima with prominence >= threshold, greedily thinned by separation.

    On a separation conflict the higher peak survives. Returns ``(index,
    prominence)`` pairs sorted by index.
    """
    x = np.asarray(shifted, dtype=float)
    if x.size == 0:
        raise DataValidationError("cannot search peaks in an empty series")
    if x.size < 3:
        return []
    cand = np.flatnonzero((x[1:-1] > x[:-2]) & (x[1:-1] > x[2:])) + 1
    if cand.size == 0:
        return []
    prom = peak_prominences(x, cand)[0]
    thresh = cfg.prominence if cfg.prominence is not None else default_prominence(x)
    keep = prom >= thresh
    cand, prom = cand[keep], prom[keep]
    sep = cfg.min_separation or 1
    order = sorted(range(cand.size), key=lambda i: (-x[cand[i]], cand[i]))
    chosen: list[int] = []
    for i in order:
        if all(abs(cand[i] - cand[j]) >= sep for j in chosen):
            chosen.append(i)
    chosen.sort(key=lambda i: cand[i])
    return [(int(cand[i]), float(prom[i])) for i in chosen]


def find_troughs(shifted, cfg: PeakConfig = PeakConfig()) -> list[tuple[int, float]]:
    return find_peaks(-np.asarray(shifted, dtype=float), cfg)


def _clip(lo: int, hi: int, bounds: tuple[int, int]):
    a, b = max(lo, bounds[0]), min(hi, bounds[1])
    return (a, b, a != lo or b != hi) if a <= b else None


def make_segments(peaks, half_width: int, horizon: int, labels=LABELS) -> list[Segment]:
    """Before/during/after windows around each peak.

    ``during = [p - w, p + w]``; ``before`` spans ``w + 1`` samples ending just
    before ``during``; ``after`` spans ``w + 1`` samples starting just after.
    Windows are clipped to the horizon and, between neighboring peaks, to the
    midpoint so that no two segments overlap. Empty windows are dropped.
    """
    w = int(half_width)
    idx = sorted(int(p[0]) if isinstance(p, (tuple, list)) else int(p) for p in peaks)
    out = []
    for k, p in enumerate(idx):
        lo = 0 if k == 0 else (idx[k - 1] + p) // 2 + 1
        hi = horizon - 1 if k == len(idx) - 1 else (p + idx[k + 1]) // 2
        windows = {
            "before": (p - 2 * w - 1, p - w - 1),
            "during": (p - w, p + w),
            "after": (p + w + 1, p + 2 * w + 1),
        }
        for label in labels:
            a, b = windows[label]
            clipped = _clip(a, b, (lo, hi))
            if clipped is None:
                continue
            s, e, trunc = clipped
            out.append(Segment(label, s, e, p, trunc))
    return sorted(out, key=lambda s: s.start)


def event_segments(events, half_width: int, horizon: int) -> list[Segment]:
    """Tagged windows centered on events, given as ``(index, tag)`` pairs.

    Used for static-scenario labeling where peaks and troughs both mark events.
    """
    ev = sorted((int(i), str(tag)) for i, tag in events)
    out = []
    for k, (p, tag) in enumerate(ev):
        lo = 0 if k == 0 else (ev[k - 1][0] + p) // 2 + 1
        hi = horizon - 1 if k == len(ev) - 1 else (p + ev[k + 1][0]) // 2
        clipped = _clip(p - half_width, p + half_width, (lo, hi))
        if clipped is not None:
            out.append(Segment(tag, clipped[0], clipped[1], p, clipped[2]))
    return out


def segment_pressure(pressure, cfg: PeakConfig, sample_rate: float, labels=LABELS) -> tuple[list[Segment], list[tuple[int, float]]]:
    """Mean-shift, detect peaks and build segments in one call."""
    cfg = cfg.resolve(sample_rate)
    shifted = mean_shift(pressure, cfg.mean_window)
    peaks = find_peaks(shifted, cfg)
    return make_segments(peaks, cfg.half_width, len(shifted), labels), peaks
