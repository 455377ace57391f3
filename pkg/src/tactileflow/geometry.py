"""Half-ellipsoid sensor core: taxel layout, fitting, parametrization, geodesics.

Surface parametrization (all lengths in millimeters)::

    x = cx + a sin(theta) cos(phi)
    y = cy + b sin(theta) sin(phi)
    z = cz + c cos(theta)

with theta in [0, pi] and phi in [pi, 2 pi], so the modeled half of the core
is the one with ``y <= cy``.

Every function here is vectorized: ``SurfaceParam`` fields may be scalars or
broadcastable arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import DataValidationError, FitError, NumericalError

N_TAXELS = 24
PHI_MIN = np.pi
PHI_MAX = 2.0 * np.pi
_RANGE_SLACK = 1e-12


@dataclass(frozen=True)
class TaxelLayout:
    """24 taxel positions in the sensor frame (row ``i`` is taxel ``i + 1``)."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.shape != (N_TAXELS, 3):
            raise DataValidationError(
                f"taxel layout must have shape ({N_TAXELS}, 3), got {pos.shape}"
            )
        if not np.all(np.isfinite(pos)):
            raise DataValidationError("taxel layout contains non-finite coordinates")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    def check_half_space(self, model: EllipsoidModel, slack: float = 0.5) -> None:
        """Raise unless every taxel lies in the modeled half (``y <= cy + slack``)."""
        dy = self.positions[:, 1] - model.centroid[1]
        bad = np.flatnonzero(dy > slack)
        if bad.size:
            raise DataValidationError(
                f"taxels {', '.join(str(i + 1) for i in bad)} lie outside the "
                f"modeled half-space y <= {model.centroid[1] + slack:.4g}"
            )


@dataclass(frozen=True)
class EllipsoidModel:
    a: float
    b: float
    c: float
    centroid: np.ndarray = None

    def __post_init__(self):
        axes = np.array([self.a, self.b, self.c], dtype=float)
        if not (np.all(np.isfinite(axes)) and np.all(axes > 0)):
            raise DataValidationError(f"semi-axes must be positive and finite, got {axes}")
        cen = np.zeros(3) if self.centroid is None else np.asarray(self.centroid, float)
        if cen.shape != (3,) or not np.all(np.isfinite(cen)):
            raise DataValidationError(f"centroid must be a finite 3-vector, got {cen}")
        cen.setflags(write=False)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "centroid", cen)

    @property
    def axes(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    def algebraic_residuals(self, points) -> np.ndarray:
        u = (np.asarray(points, float) - self.centroid) / self.axes
        return np.sum(u * u, axis=-1) - 1.0


@dataclass(frozen=True)
class SurfaceParam:
    """Surface coordinates; ``theta`` in [0, pi], ``phi`` in [pi, 2 pi]."""

    theta: np.ndarray | float
    phi: np.ndarray | float

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        ph = np.asarray(self.phi, dtype=float)
        if np.any(~np.isfinite(th)) or np.any(~np.isfinite(ph)):
            raise DataValidationError("surface parameters must be finite")
        if np.any(th < -_RANGE_SLACK) or np.any(th > np.pi + _RANGE_SLACK):
            raise DataValidationError("theta outside [0, pi]")
        if np.any(ph < PHI_MIN - _RANGE_SLACK) or np.any(ph > PHI_MAX + _RANGE_SLACK):
            raise DataValidationError("phi outside [pi, 2 pi]")
        th = np.clip(th, 0.0, np.pi)
        ph = np.clip(ph, PHI_MIN, PHI_MAX)
        object.__setattr__(self, "theta", th if th.ndim else float(th))
        object.__setattr__(self, "phi", ph if ph.ndim else float(ph))

    def __len__(self):
        return np.size(self.theta)

    def __getitem__(self, idx):
        return SurfaceParam(np.asarray(self.theta)[idx], np.asarray(self.phi)[idx])


def param_to_point(model: EllipsoidModel, p: SurfaceParam) -> np.ndarray:
    """Map surface parameters to 3D points; output shape ``(..., 3)``."""
    th, ph = np.broadcast_arrays(np.asarray(p.theta), np.asarray(p.phi))
    st = np.sin(th)
    local = np.stack(
        [model.a * st * np.cos(ph), model.b * st * np.sin(ph), model.c * np.cos(th)],
        axis=-1,
    )
    return local + model.centroid


def point_to_param(
    model: EllipsoidModel,
    x,
    max_radial_offset: float = 0.5,
    half_tolerance: float = 1e-6,
) -> SurfaceParam:
    """Inverse parametrization through radial projection from the centroid.

    ``max_radial_offset`` bounds ``| |u| - 1 |`` where ``u`` are the scaled
    coordinates of ``x``. At the poles phi is undefined and pi is returned.
    """
    u = (np.asarray(x, dtype=float) - model.centroid) / model.axes
    r = np.linalg.norm(u, axis=-1)
    if np.any(r < 1e-12):
        raise NumericalError("point coincides with the ellipsoid centroid")
    if np.any(np.abs(r - 1.0) > max_radial_offset):
        raise DataValidationError(
            f"point(s) farther than {max_radial_offset} (relative) from the surface"
        )
    un = u / r[..., None]
    theta = np.arccos(np.clip(un[..., 2], -1.0, 1.0))
    rho = np.hypot(un[..., 0], un[..., 1])
    if np.any(un[..., 1] > half_tolerance):
        raise DataValidationError("point(s) outside the modeled half (y > cy)")
    # y ~ 0 within tolerance: snap to the domain boundary on the matching side
    phi = np.mod(np.arctan2(np.minimum(un[..., 1], 0.0), un[..., 0]), 2.0 * np.pi)
    phi = np.where((phi == 0.0) & (un[..., 0] > 0), PHI_MAX, phi)
    phi = np.where(phi < PHI_MIN, PHI_MIN, phi)
    phi = np.where(rho < 1e-12, PHI_MIN, phi)
    return SurfaceParam(theta, phi)


def surface_normal(model: EllipsoidModel, p: SurfaceParam) -> np.ndarray:
    """Outward unit normal (normalized gradient of the implicit function)."""
    local = param_to_point(model, p) - model.centroid
    g = local / model.axes**2
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def geodesic_distance(
    model: EllipsoidModel, p: SurfaceParam, q: SurfaceParam, n_segments: int = 50
) -> np.ndarray | float:
    """Polyline length along the parameter-space straight line from p to q.

    The path visits ``n_segments + 1`` surface points obtained by linear
    interpolation of (theta, phi); the result is the sum of chord lengths.
    """
    if n_segments < 1:
        raise DataValidationError("n_segments must be >= 1")
    pt, pp, qt, qp = np.broadcast_arrays(
        np.asarray(p.theta), np.asarray(p.phi), np.asarray(q.theta), np.asarray(q.phi)
    )
    s = np.linspace(0.0, 1.0, n_segments + 1).reshape((-1,) + (1,) * pt.ndim)
    th = pt + s * (qt - pt)
    ph = pp + s * (qp - pp)
    st = np.sin(th)
    pts = np.stack(
        [model.a * st * np.cos(ph), model.b * st * np.sin(ph), model.c * np.cos(th)],
        axis=-1,
    )
    d = np.linalg.norm(np.diff(pts, axis=0), axis=-1).sum(axis=0)
    return d if d.ndim else float(d)


def pairwise_geodesics(
    model: EllipsoidModel, sites: SurfaceParam, targets: SurfaceParam,
    n_segments: int = 50, chunk: int = 2048,
) -> np.ndarray:
    """Geodesic distance matrix of shape ``(len(sites), len(targets))``."""
    st = np.atleast_1d(np.asarray(sites.theta)).ravel()
    sp = np.atleast_1d(np.asarray(sites.phi)).ravel()
    tt = np.atleast_1d(np.asarray(targets.theta)).ravel()
    tp = np.atleast_1d(np.asarray(targets.phi)).ravel()
    out = np.empty((st.size, tt.size))
    for i0 in range(0, st.size, chunk):
        sl = slice(i0, i0 + chunk)
        out[sl] = geodesic_distance(
            model,
            SurfaceParam(st[sl, None], sp[sl, None]),
            SurfaceParam(tt[None, :], tp[None, :]),
            n_segments,
        )
    return out


_MONOMIALS = ("x^2", "y^2", "z^2", "x", "y", "z")


def _design(points: np.ndarray) -> np.ndarray:
    x, y, z = points.T
    return np.column_stack([x * x, y * y, z * z, x, y, z])


def fit_ellipsoid(layout: TaxelLayout | np.ndarray, rcond: float = 1e-10) -> EllipsoidModel:
    """Axis-aligned ellipsoid minimizing the summed squared algebraic residual.

    A linear solve of ``A x^2 + B y^2 + C z^2 + D x + E y + F z = 1`` seeds a
    Levenberg-Marquardt refinement of the exact residual
    ``sum(((p - centroid) / axes)^2) - 1`` in (axes, centroid).
    """
    pts = layout.positions if isinstance(layout, TaxelLayout) else np.asarray(layout, float)
    shift = pts.mean(axis=0)
    scale = np.abs(pts - shift).max()
    if not np.isfinite(scale) or scale == 0.0:
        raise FitError("degenerate layout: all points coincide (deficient directions x, y, z)")
    q = (pts - shift) / scale
    M = _design(q)
    _, sv, vt = np.linalg.svd(M, full_matrices=False)
    if sv[-1] <= rcond * sv[0]:
        null = vt[-1]
        terms = " + ".join(
            f"{w:+.3g}*{m}" for w, m in zip(null, _MONOMIALS) if abs(w) > 1e-3
        )
        raise FitError(f"degenerate layout: rank-deficient normal equations along [{terms}]")
    coef, *_ = np.linalg.lstsq(M, np.ones(len(q)), rcond=None)
    A, B, C, D, E, F = coef
    if min(A, B, C) <= 0:
        raise FitError(f"least-squares quadric is not an ellipsoid (A, B, C = {A:.3g}, {B:.3g}, {C:.3g})")
    cen = -0.5 * np.array([D / A, E / B, F / C])
    g = 1.0 + D * D / (4 * A) + E * E / (4 * B) + F * F / (4 * C)
    if g <= 0:
        raise FitError("least-squares quadric has an empty real locus")
    axes0 = np.sqrt(g / np.array([A, B, C]))

    def resid(v):
        return np.sum(((q - v[3:]) / v[:3]) ** 2, axis=1) - 1.0

    sol = least_squares(resid, np.concatenate([axes0, cen]), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    v = sol.x if sol.success else np.concatenate([axes0, cen])
    axes = np.abs(v[:3]) * scale
    return EllipsoidModel(*axes, centroid=v[3:] * scale + shift)


def reference_layout(model: EllipsoidModel | None = None) -> TaxelLayout:
    """Deterministic synthetic 24-taxel layout spread over the modeled half."""
    model = model or REFERENCE_MODEL
    rows = [(0.1, 3), (0.3, 5), (0.5, 8), (0.7, 5), (0.9, 3)]
    pad = 0.05
    th, ph = [], []
    for frac, n in rows:
        for k in range(n):
            th.append(frac * np.pi)
            ph.append(np.pi + pad + (np.pi - 2 * pad) * k / (n - 1))
    return TaxelLayout(param_to_point(model, SurfaceParam(np.array(th), np.array(ph))))


REFERENCE_MODEL = EllipsoidModel(7.0, 10.0, 6.0, centroid=np.zeros(3))
