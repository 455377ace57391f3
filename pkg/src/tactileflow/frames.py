"""Tactile surface construction and orthographic tactile-frame rendering.

Frame axis convention (shared with :mod:`tactileflow.synth`): a projection
keeps two world axes ``(u, v)``; image column index grows with ``u`` and row
index grows with ``v``. Flow ``(vx, vy)`` is therefore ``(du, dv)`` in pixels.

=========  =====  =====  ==============  =========================
plane      u      v      depth (camera)  surface half
=========  =====  =====  ==============  =========================
top-xy     x      y      +z              whole surface
left-yz    y      z      -x              phi <  3 pi / 2 (x <= cx)
right-yz   y      z      +x              phi >= 3 pi / 2 (x >= cx)
=========  =====  =====  ==============  =========================

Pixel intensity is the normalized depth of the surface point nearest to the
camera. The surface is rendered as the triangulated parameter grid with a
depth buffer, so the silhouette has no sampling holes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError
from .geometry import EllipsoidModel, param_to_point, surface_normal
from .interpolation import GridSpec, SurfaceField

PLANES = {
    "top-xy": (0, 1, 2, 1.0),
    "left-yz": (1, 2, 0, -1.0),
    "right-yz": (1, 2, 0, 1.0),
}
PLANE_ALIASES = {"top": "top-xy", "left": "left-yz", "right": "right-yz"}


def plane_id(name: str) -> str:
    name = PLANE_ALIASES.get(name, name)
    if name not in PLANES:
        raise DataValidationError(f"unknown projection {name!r}; expected one of {sorted(PLANES)}")
    return name


@dataclass(frozen=True)
class SurfaceGeometry:
    """Static per-grid geometry: base points and outward normals, (Ht, Wp, 3)."""

    grid: GridSpec
    base: np.ndarray
    normals: np.ndarray

    @classmethod
    def build(cls, model: EllipsoidModel, grid: GridSpec) -> SurfaceGeometry:
        params = grid.params()
        return cls(grid, param_to_point(model, params), surface_normal(model, params))


@dataclass(frozen=True)
class TactileSurface:
    grid: GridSpec
    base: np.ndarray
    displaced: np.ndarray
    values: np.ndarray
    scale: float


def build_tactile_surface(
    surf_field: SurfaceField,
    model: EllipsoidModel,
    scale: float,
    geometry: SurfaceGeometry | None = None,
) -> TactileSurface:
    """Displace every grid site along its outward normal by ``value * scale``."""
    geo = geometry or SurfaceGeometry.build(model, surf_field.grid)
    vals = np.asarray(surf_field.values, dtype=float)
    displaced = geo.base + (vals * scale)[..., None] * geo.normals
    return TactileSurface(surf_field.grid, geo.base, displaced, vals, float(scale))


@dataclass(frozen=True)
class ProjectionSpec:
    plane: str
    shape: tuple[int, int] = (128, 128)
    window: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)  # u0, u1, v0, v1

    def __post_init__(self):
        object.__setattr__(self, "plane", plane_id(self.plane))
        h, w = (int(s) for s in self.shape)
        if h < 2 or w < 2:
            raise DataValidationError(f"frame shape must exceed 1x1, got {self.shape}")
        u0, u1, v0, v1 = (float(x) for x in self.window)
        if not (u1 > u0 and v1 > v0):
            raise DataValidationError(f"degenerate projection window {self.window}")
        object.__setattr__(self, "shape", (h, w))
        object.__setattr__(self, "window", (u0, u1, v0, v1))

    @property
    def axes(self):
        return PLANES[self.plane]

    @property
    def pixel_size(self) -> tuple[float, float]:
        """World size of one pixel along u (columns) and v (rows)."""
        u0, u1, v0, v1 = self.window
        return (u1 - u0) / self.shape[1], (v1 - v0) / self.shape[0]

    def depth(self, points: np.ndarray) -> np.ndarray:
        _, _, k, sign = self.axes
        return sign * points[..., k]

    def to_pixels(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Continuous (col, row) coordinates; integer values are pixel centers."""
        iu, iv, _, _ = self.axes
        du, dv = self.pixel_size
        u0, _, v0, _ = self.window
        return (points[..., iu] - u0) / du - 0.5, (points[..., iv] - v0) / dv - 0.5

    def half_mask(self, grid: GridSpec) -> np.ndarray:
        """Per-cell membership of the rendered half, shape (Ht-1, Wp-1)."""
        phi_c = 0.5 * (grid.phi[:-1] + grid.phi[1:])
        if self.plane == "left-yz":
            cols = phi_c < 1.5 * np.pi
        elif self.plane == "right-yz":
            cols = phi_c >= 1.5 * np.pi
        else:
            cols = np.ones_like(phi_c, dtype=bool)
        return np.broadcast_to(cols, (grid.n_theta - 1, grid.n_phi - 1))


def default_projection(
    model: EllipsoidModel, plane: str, shape=(128, 128), margin: float | None = None
) -> ProjectionSpec:
    """Window enclosing the projected half-ellipsoid plus ``margin`` mm, square pixels."""
    plane = plane_id(plane)
    probe = ProjectionSpec(plane, shape)
    grid = GridSpec(33, 65)
    pts = SurfaceGeometry.build(model, grid).base
    cells = probe.half_mask(grid)
    keep = np.zeros((grid.n_theta, grid.n_phi), bool)
    keep[:-1, :-1] |= cells
    keep[1:, 1:] |= cells
    keep[:-1, 1:] |= cells
    keep[1:, :-1] |= cells
    iu, iv, _, _ = probe.axes
    u, v = pts[keep][:, iu], pts[keep][:, iv]
    m = 0.35 * max(model.a, model.b, model.c) if margin is None else margin
    u0, u1, v0, v1 = u.min() - m, u.max() + m, v.min() - m, v.max() + m
    h, w = probe.shape
    # grow the narrower extent so pixels are square
    px = max((u1 - u0) / w, (v1 - v0) / h)
    uc, vc = 0.5 * (u0 + u1), 0.5 * (v0 + v1)
    return ProjectionSpec(plane, (h, w), (uc - px * w / 2, uc + px * w / 2, vc - px * h / 2, vc + px * h / 2))


@dataclass(frozen=True)
class TactileFrame:
    intensity: np.ndarray
    mask: np.ndarray
    projection: str
    norm_bounds: tuple[float, float]
    timestamp: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        I = np.asarray(self.intensity, dtype=float)
        if I.ndim != 2 or min(I.shape) < 2:
            raise DataValidationError(f"frame must be a 2D grid larger than 1x1, got {I.shape}")
        if np.any(~np.isfinite(I)) or I.min() < 0.0 or I.max() > 1.0:
            raise DataValidationError("frame intensities must lie in [0, 1]")
        m = np.ones(I.shape, bool) if self.mask is None else np.asarray(self.mask, bool)
        if m.shape != I.shape:
            raise DataValidationError("mask shape differs from intensity shape")
        object.__setattr__(self, "intensity", I)
        object.__setattr__(self, "mask", m)

    @property
    def shape(self):
        return self.intensity.shape


def _triangles(grid: GridSpec, cells: np.ndarray) -> np.ndarray:
    ht, wp = grid.n_theta, grid.n_phi
    idx = np.arange(ht * wp).reshape(ht, wp)
    a, b = idx[:-1, :-1][cells], idx[1:, :-1][cells]
    c, d = idx[:-1, 1:][cells], idx[1:, 1:][cells]
    return np.concatenate([np.stack([a, b, c], 1), np.stack([d, c, b], 1)])


def surface_depth_range(surface: TactileSurface, spec: ProjectionSpec) -> tuple[float, float]:
    """Depth extent of the rendered half of one surface."""
    tri = _triangles(surface.grid, spec.half_mask(surface.grid))
    used = np.unique(tri)
    d = spec.depth(surface.displaced.reshape(-1, 3)[used])
    return float(d.min()), float(d.max())


def rasterize(points: np.ndarray, tri: np.ndarray, spec: ProjectionSpec) -> np.ndarray:
    """Depth buffer of a triangle mesh; uncovered pixels are ``-inf``."""
    h, w = spec.shape
    px, py = spec.to_pixels(points)
    dep = spec.depth(points)
    x, y, z = px[tri], py[tri], dep[tri]  # (T, 3)
    area = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    c0 = np.maximum(np.ceil(x.min(1)), 0).astype(np.int64)
    c1 = np.minimum(np.floor(x.max(1)), w - 1).astype(np.int64)
    r0 = np.maximum(np.ceil(y.min(1)), 0).astype(np.int64)
    r1 = np.minimum(np.floor(y.max(1)), h - 1).astype(np.int64)
    bw, bh = c1 - c0 + 1, r1 - r0 + 1
    live = (bw > 0) & (bh > 0) & (np.abs(area) > 1e-12)
    zbuf = np.full(h * w, -np.inf)
    keys = bh[live] * (w + 1) + bw[live]
    live_idx = np.flatnonzero(live)
    for key in np.unique(keys):
        sel = live_idx[keys == key]
        kh, kw = divmod(int(key), w + 1)
        oy, ox = np.divmod(np.arange(kh * kw), kw)
        cc = c0[sel, None] + ox[None, :]
        rr = r0[sel, None] + oy[None, :]
        xs, ys = x[sel], y[sel]
        ar = area[sel, None]
        # barycentric weights via signed sub-areas
        l1 = ((cc - xs[:, 0:1]) * (ys[:, 2:3] - ys[:, 0:1]) - (xs[:, 2:3] - xs[:, 0:1]) * (rr - ys[:, 0:1])) / ar
        l2 = ((xs[:, 1:2] - xs[:, 0:1]) * (rr - ys[:, 0:1]) - (cc - xs[:, 0:1]) * (ys[:, 1:2] - ys[:, 0:1])) / ar
        l0 = 1.0 - l1 - l2
        eps = -1e-9
        inside = (l0 >= eps) & (l1 >= eps) & (l2 >= eps)
        zs = z[sel]
        depth = l0 * zs[:, 0:1] + l1 * zs[:, 1:2] + l2 * zs[:, 2:3]
        np.maximum.at(zbuf, (rr * w + cc)[inside], depth[inside])
    return zbuf.reshape(h, w)


def render_frame(
    surface: TactileSurface,
    spec: ProjectionSpec,
    norm_bounds: tuple[float, float],
    timestamp: float = 0.0,
) -> TactileFrame:
    """Orthographic height-map frame of one tactile surface.

    ``norm_bounds`` must be fixed for a whole sequence; per-frame bounds would
    inject global brightness changes into the flow.
    """
    lo, hi = (float(v) for v in norm_bounds)
    if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
        raise DataValidationError(f"degenerate normalization bounds ({lo}, {hi})")
    tri = _triangles(surface.grid, spec.half_mask(surface.grid))
    zbuf = rasterize(surface.displaced.reshape(-1, 3), tri, spec)
    mask = np.isfinite(zbuf)
    inten = np.zeros(spec.shape)
    inten[mask] = np.clip((zbuf[mask] - lo) / (hi - lo), 0.0, 1.0)
    return TactileFrame(inten, mask, spec.plane, (lo, hi), float(timestamp))
