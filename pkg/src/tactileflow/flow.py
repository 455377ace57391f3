"""Dense two-frame motion estimation by polynomial expansion (Farnebäck).

Each neighborhood is modeled as ``f(u) ~ u^T A u + b^T u + c`` with
``u = (dx, dy)`` in (column, row) pixel offsets. Between two frames a
displacement ``d`` satisfies ``A d = -(b2 - b1) / 2``; the per-pixel
constraints are averaged over a Gaussian window and solved coarse-to-fine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DataValidationError
from .frames import TactileFrame


@dataclass(frozen=True)
class FarnebackConfig:
    window_radius: int = 7
    poly_sigma: float = 1.5
    levels: int = 3
    pyr_scale: float = 0.5
    iterations: int = 5
    post_sigma: float = 1.1
    poly_radius: int | None = None  # None -> ceil(3 * poly_sigma)
    residual_guard: bool = False  # drop the most harmful vectors until the warp residual bound holds

    def __post_init__(self):
        if self.levels < 1:
            raise DataValidationError("flow.levels must be >= 1")
        if not 0.0 < self.pyr_scale < 1.0:
            raise DataValidationError("flow.pyr_scale must lie in (0, 1)")
        if self.iterations < 1:
            raise DataValidationError("flow.iterations must be >= 1")
        if self.window_radius < 1:
            raise DataValidationError("flow.window_radius must be >= 1")
        if not self.poly_sigma > 0:
            raise DataValidationError("flow.poly_sigma must be > 0")
        if self.post_sigma < 0:
            raise DataValidationError("flow.post_sigma must be >= 0")
        if self.poly_radius is None:
            object.__setattr__(self, "poly_radius", max(1, math.ceil(3 * self.poly_sigma)))


@dataclass(frozen=True)
class PolyExpansion:
    A: np.ndarray  # (H, W, 2, 2)
    b: np.ndarray  # (H, W, 2)
    c: np.ndarray  # (H, W)


@dataclass(frozen=True)
class FlowField:
    vx: np.ndarray
    vy: np.ndarray
    mask: np.ndarray

    @property
    def shape(self):
        return self.vx.shape

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class AggregateFlow:
    direction: np.ndarray
    magnitude: float
    coverage: float

    @property
    def angle(self) -> float:
        return float(np.arctan2(self.direction[1], self.direction[0]))


def _applicability(cfg: FarnebackConfig):
    n = cfg.poly_radius
    x = np.arange(-n, n + 1, dtype=float)
    g = np.exp(-x * x / (2 * cfg.poly_sigma**2))
    g /= g.sum()
    return x, g


def _gram_inverse(cfg: FarnebackConfig) -> np.ndarray:
    x, g = _applicability(cfg)
    X, Y = np.meshgrid(x, x, indexing="xy")  # X varies along columns
    W = np.outer(g, g)
    basis = np.stack([np.ones_like(X), X, Y, X * X, Y * Y, X * Y])
    G = np.einsum("ixy,jxy,xy->ij", basis, basis, W)
    return np.linalg.inv(G)


def polynomial_expansion(frame, cfg: FarnebackConfig = FarnebackConfig()) -> PolyExpansion:
    """Per-pixel weighted least-squares quadratic fit (separable correlations)."""
    img = frame.intensity if isinstance(frame, TactileFrame) else np.asarray(frame, float)
    x, g = _applicability(cfg)
    xg, xxg = x * g, x * x * g

    def corr(wrow, wcol):
        tmp = ndimage.correlate1d(img, wcol, axis=1, mode="reflect")
        return ndimage.correlate1d(tmp, wrow, axis=0, mode="reflect")

    # moments of [1, x, y, x^2, y^2, xy]; x runs along columns, y along rows
    m = np.stack(
        [corr(g, g), corr(g, xg), corr(xg, g), corr(g, xxg), corr(xxg, g), corr(xg, xg)],
        axis=-1,
    )
    r = m @ _gram_inverse(cfg).T
    A = np.empty(img.shape + (2, 2))
    A[..., 0, 0] = r[..., 3]
    A[..., 1, 1] = r[..., 4]
    A[..., 0, 1] = A[..., 1, 0] = 0.5 * r[..., 5]
    return PolyExpansion(A, r[..., 1:3].copy(), r[..., 0].copy())


def _resample(img: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    h, w = img.shape
    H, W = shape
    rows = (np.arange(H) + 0.5) * (h / H) - 0.5
    cols = (np.arange(W) + 0.5) * (w / W) - 0.5
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return ndimage.map_coordinates(img, [rr, cc], order=1, mode="nearest")


def _pyramid(img: np.ndarray, cfg: FarnebackConfig) -> list[np.ndarray]:
    levels = [img]
    min_side = 2 * (cfg.poly_radius + 1)
    for _ in range(1, cfg.levels):
        prev = levels[-1]
        shape = tuple(int(round(s * cfg.pyr_scale)) for s in prev.shape)
        if min(shape) < min_side:
            break
        sigma = (1.0 / cfg.pyr_scale - 1.0) * 0.5
        levels.append(_resample(ndimage.gaussian_filter(prev, sigma, mode="reflect"), shape))
    return levels


def _bilinear(h: int, w: int, dx: np.ndarray, dy: np.ndarray):
    """Gather indices and weights for sampling at (row + dy, col + dx), edge-clamped."""
    rr = np.clip(np.arange(h, dtype=float)[:, None] + dy, 0, h - 1)
    cc = np.clip(np.arange(w, dtype=float)[None, :] + dx, 0, w - 1)
    r0 = np.minimum(np.floor(rr).astype(np.intp), h - 2)
    c0 = np.minimum(np.floor(cc).astype(np.intp), w - 2)
    fr, fc = rr - r0, cc - c0
    i00 = r0 * w + c0
    return (i00, i00 + 1, i00 + w, i00 + w + 1), ((1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc)


def _warp(arr: np.ndarray, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Sample ``arr`` (H, W, ...) at (row + dy, col + dx), bilinear, edge-clamped."""
    h, w = dx.shape
    idx, wts = _bilinear(h, w, dx, dy)
    flat = arr.reshape(h * w, -1)
    out = sum(flat[i] * wt.reshape(h, w, 1) for i, wt in zip(idx, wts))
    return out.reshape(arr.shape)


def _window_average(arr: np.ndarray, cfg: FarnebackConfig) -> np.ndarray:
    sigma = cfg.window_radius / 2.0
    return ndimage.gaussian_filter(arr, (sigma, sigma, 0), truncate=2.0, mode="reflect")


def _packed(p: PolyExpansion) -> np.ndarray:
    return np.stack([p.A[..., 0, 0], p.A[..., 0, 1], p.A[..., 1, 1], p.b[..., 0], p.b[..., 1]], -1)


def _refine(p1: PolyExpansion, p2: PolyExpansion, d: np.ndarray, cfg: FarnebackConfig) -> np.ndarray:
    q1, q2 = _packed(p1), _packed(p2)
    for _ in range(cfg.iterations):
        q2w = _warp(q2, d[..., 0], d[..., 1]) if np.any(d) else q2
        a11, a12, a22 = (0.5 * (q1[..., k] + q2w[..., k]) for k in range(3))
        dx, dy = d[..., 0], d[..., 1]
        r1 = -0.5 * (q2w[..., 3] - q1[..., 3]) + a11 * dx + a12 * dy
        r2 = -0.5 * (q2w[..., 4] - q1[..., 4]) + a12 * dx + a22 * dy
        # normal equations (A^T A) d = A^T r; A is symmetric
        stack = np.stack(
            [
                a11 * a11 + a12 * a12,
                a12 * (a11 + a22),
                a12 * a12 + a22 * a22,
                a11 * r1 + a12 * r2,
                a12 * r1 + a22 * r2,
            ],
            -1,
        )
        g11, g12, g22, h1, h2 = np.moveaxis(_window_average(stack, cfg), -1, 0)
        lam = 1e-12 + 1e-6 * float(np.mean(g11 + g22))
        g11 = g11 + lam
        g22 = g22 + lam
        det = g11 * g22 - g12 * g12
        d = np.stack([(g22 * h1 - g12 * h2) / det, (g11 * h2 - g12 * h1) / det], -1)
    return d


def _check_pair(a: TactileFrame, b: TactileFrame):
    if a.shape != b.shape:
        raise DataValidationError(f"frame sizes differ: {a.shape} vs {b.shape}")
    if a.projection != b.projection:
        raise DataValidationError(f"frame projections differ: {a.projection} vs {b.projection}")


def validity_mask(prev: TactileFrame, nxt: TactileFrame, cfg: FarnebackConfig) -> np.ndarray:
    """Joint silhouette eroded by one averaging-window radius (image border counts as boundary)."""
    k = 2 * cfg.window_radius + 1
    return ndimage.binary_erosion(prev.mask & nxt.mask, structure=np.ones((k, k), bool), border_value=0)


def expand_pyramid(frame: TactileFrame, cfg: FarnebackConfig = FarnebackConfig()) -> list[PolyExpansion]:
    """Polynomial expansions of every pyramid level, finest first."""
    return [polynomial_expansion(level, cfg) for level in _pyramid(frame.intensity, cfg)]


def estimate_flow(
    prev: TactileFrame,
    nxt: TactileFrame,
    cfg: FarnebackConfig = FarnebackConfig(),
    init_flow: FlowField | None = None,
    expansions: tuple[list[PolyExpansion], list[PolyExpansion]] | None = None,
) -> FlowField:
    """Coarse-to-fine displacement field from ``prev`` to ``nxt``, in pixels.

    ``expansions`` may carry precomputed :func:`expand_pyramid` results for
    both frames so that a frame shared by two pairs is expanded only once.
    """
    _check_pair(prev, nxt)
    e1, e2 = expansions or (expand_pyramid(prev, cfg), expand_pyramid(nxt, cfg))
    d = None
    for lvl in range(len(e1) - 1, -1, -1):
        shape = e1[lvl].c.shape
        if d is None:
            d = np.zeros(shape + (2,))
            if init_flow is not None:
                fy, fx = shape[0] / prev.shape[0], shape[1] / prev.shape[1]
                d[..., 0] = _resample(init_flow.vx, shape) * fx
                d[..., 1] = _resample(init_flow.vy, shape) * fy
        else:
            fy, fx = shape[0] / d.shape[0], shape[1] / d.shape[1]
            d = np.stack([_resample(d[..., 0], shape) * fx, _resample(d[..., 1], shape) * fy], -1)
        d = _refine(e1[lvl], e2[lvl], d, cfg)
        if cfg.post_sigma > 0:
            d = ndimage.gaussian_filter(d, (cfg.post_sigma, cfg.post_sigma, 0), mode="reflect")
    mask = validity_mask(prev, nxt, cfg)
    fl = FlowField(np.where(mask, d[..., 0], 0.0), np.where(mask, d[..., 1], 0.0), mask)
    if cfg.residual_guard and mask.any():
        fl = _guard(prev, nxt, fl)
    return fl


def _pixel_residual(prev: TactileFrame, nxt: TactileFrame, vx: np.ndarray, vy: np.ndarray) -> np.ndarray:
    return np.abs(_warp(nxt.intensity, vx, vy) - prev.intensity)


def _guard(prev: TactileFrame, nxt: TactileFrame, fl: FlowField) -> FlowField:
    # zero the most harmful vectors first until the masked-mean residual is no worse than zero flow's
    m = fl.mask
    gain = (_pixel_residual(prev, nxt, 0 * fl.vx, 0 * fl.vy) - _pixel_residual(prev, nxt, fl.vx, fl.vy))[m]
    if gain.sum() >= 0:
        return fl
    order = np.argsort(gain, kind="stable")
    total = gain.sum() - np.cumsum(gain[order])
    n_drop = int(np.argmax(total >= 0)) + 1
    keep = np.ones(gain.size, bool)
    keep[order[:n_drop]] = False
    scale = np.zeros(fl.vx.shape)
    scale[m] = keep
    return FlowField(scale * fl.vx, scale * fl.vy, m)


def flow_sequence(frames: list[TactileFrame], cfg: FarnebackConfig = FarnebackConfig(), jobs: int = 1) -> list[FlowField]:
    """Flow for every consecutive pair; each frame is expanded once."""
    if len(frames) < 2:
        raise DataValidationError("need >= 2 frames")
    exps = _map(lambda f: expand_pyramid(f, cfg), frames, jobs)
    pairs = range(len(frames) - 1)
    return _map(
        lambda i: estimate_flow(frames[i], frames[i + 1], cfg, expansions=(exps[i], exps[i + 1])),
        pairs,
        jobs,
    )


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def warp_residual(prev: TactileFrame, nxt: TactileFrame, flow: FlowField) -> float:
    """Mean over the flow mask of ``|I_next(x + v) - I_prev(x)|``."""
    if not flow.mask.any():
        raise DataValidationError("flow mask is empty")
    warped = _warp(nxt.intensity, flow.vx, flow.vy)
    return float(np.mean(np.abs(warped - prev.intensity)[flow.mask]))


def aggregate(flow: FlowField | list[FlowField], tau: float = 0.1) -> AggregateFlow:
    """Magnitude-weighted mean flow vector over the validity mask.

    A list of fields is pooled pixel-wise, which is how a whole segment is
    summarized.
    """
    fields = flow if isinstance(flow, (list, tuple)) else [flow]
    vx = np.concatenate([f.vx[f.mask] for f in fields]) if fields else np.empty(0)
    vy = np.concatenate([f.vy[f.mask] for f in fields]) if fields else np.empty(0)
    if vx.size == 0:
        raise DataValidationError("cannot aggregate a flow field with an empty mask")
    mag = np.hypot(vx, vy)
    total = mag.sum()
    coverage = float(np.count_nonzero(mag > tau) / mag.size)
    if total == 0:
        return AggregateFlow(np.zeros(2), 0.0, coverage)
    mean = np.array([np.sum(mag * vx), np.sum(mag * vy)]) / total
    norm = float(np.hypot(*mean))
    direction = mean / norm if norm > 0 else np.zeros(2)
    return AggregateFlow(direction, norm, coverage)
