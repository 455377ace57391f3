"""Geodesic Gaussian-kernel interpolation of taxel values over the surface.

    k(p, q) = exp(-d(p, q) / (2 sigma^2))        (literal form, default)
    k(p, q) = exp(-d(p, q)^2 / (2 sigma^2))      (``squared=True``)

    value(p) = sum_i k(p, p_i) v_i / sum_i k(p, p_i)

``d`` is the polyline geodesic from :mod:`tactileflow.geometry`. The weight
matrix depends only on geometry and config, so it is built once per
(model, taxel sites, grid, config) and reused for every time step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError, NumericalError
from .geometry import (
    PHI_MAX,
    PHI_MIN,
    EllipsoidModel,
    SurfaceParam,
    geodesic_distance,
    pairwise_geodesics,
)


@dataclass(frozen=True)
class KernelConfig:
    sigma: float = 4.0
    n_segments: int = 50
    squared: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DataValidationError(f"kernel.sigma must be > 0, got {self.sigma}")
        if int(self.n_segments) < 1:
            raise DataValidationError("kernel.n_segments must be >= 1")


@dataclass(frozen=True)
class GridSpec:
    """Regular theta x phi grid over the full mapping domain (endpoints included)."""

    n_theta: int = 64
    n_phi: int = 128

    def __post_init__(self):
        if self.n_theta < 2 or self.n_phi < 2:
            raise DataValidationError(f"grid.n_theta and grid.n_phi must be >= 2, got {self.n_theta}x{self.n_phi}")

    @property
    def theta(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.n_theta)

    @property
    def phi(self) -> np.ndarray:
        return np.linspace(PHI_MIN, PHI_MAX, self.n_phi)

    def params(self) -> SurfaceParam:
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        return SurfaceParam(th, ph)


@dataclass(frozen=True)
class SurfaceField:
    grid: GridSpec
    values: np.ndarray  # (n_theta, n_phi)

    def params(self) -> SurfaceParam:
        return self.grid.params()


def _kernel(d, cfg: KernelConfig):
    d = np.asarray(d, dtype=float)
    return np.exp(-(d * d if cfg.squared else d) / (2.0 * cfg.sigma**2))


def kernel_weight(model: EllipsoidModel, p: SurfaceParam, q: SurfaceParam, cfg: KernelConfig = KernelConfig()):
    w = _kernel(geodesic_distance(model, p, q, cfg.n_segments), cfg)
    return w if w.ndim else float(w)


class InterpolationWeights:
    """Row-normalized kernel weights from sample sites to taxel sites.

    Immutable after construction; safe to share across threads.
    """

    def __init__(self, model: EllipsoidModel, taxel_params: SurfaceParam, sites: SurfaceParam, cfg: KernelConfig = KernelConfig()):
        self.cfg = cfg
        self.site_shape = np.shape(np.broadcast_arrays(np.asarray(sites.theta), np.asarray(sites.phi))[0])
        d = pairwise_geodesics(model, sites, taxel_params, cfg.n_segments)
        k = _kernel(d, cfg)
        total = k.sum(axis=1)
        bad = np.flatnonzero(~(total > 0))
        if bad.size:
            th = np.atleast_1d(np.asarray(sites.theta)).ravel()
            ph = np.atleast_1d(np.asarray(sites.phi)).ravel()
            i = bad[0]
            raise NumericalError(
                f"kernel weights underflow at site {i} (theta={th[i]:.4g}, phi={ph[i]:.4g}); "
                f"sigma={cfg.sigma} is too small"
            )
        self.raw = k
        self.weights = k / total[:, None]
        self.raw.setflags(write=False)
        self.weights.setflags(write=False)

    def apply(self, values) -> np.ndarray:
        """Interpolate one (24,) value vector, or a (T, 24) stack, onto the sites."""
        v = np.asarray(values, dtype=float)
        out = v @ self.weights.T
        # exact reproduction of constants; a matmul can round c * sum(w) off c
        const = np.ptp(v, axis=-1) == 0
        if np.any(const):
            out = np.where(np.expand_dims(const, -1), v[..., :1], out)
        lo = v.min(axis=-1, keepdims=True)
        hi = v.max(axis=-1, keepdims=True)
        out = np.clip(out, lo, hi)
        return out.reshape(v.shape[:-1] + self.site_shape)


def interpolate_at(model, taxel_params: SurfaceParam, values, sites: SurfaceParam, cfg: KernelConfig = KernelConfig()) -> np.ndarray:
    """Uncached evaluation of the kernel estimator at arbitrary sites."""
    return InterpolationWeights(model, taxel_params, sites, cfg).apply(values)


def interpolate_field(
    model: EllipsoidModel,
    taxel_params: SurfaceParam,
    values,
    grid: GridSpec = GridSpec(),
    cfg: KernelConfig = KernelConfig(),
    weights: InterpolationWeights | None = None,
) -> SurfaceField:
    if len(taxel_params) != np.shape(values)[-1]:
        raise DataValidationError("one value per taxel site is required")
    if weights is None:
        weights = InterpolationWeights(model, taxel_params, grid.params(), cfg)
    return SurfaceField(grid, weights.apply(values))
