"""Synthetic taxel recordings with known contact trajectories.

Contact model: the contact point travels in the sensor's x-y plane and is lifted
onto the upper dome of the core (``z >= cz``). Taxel ``i`` reads::

    baseline + load(t) * exp(-g(taxel_i, contact(t))^2 / (2 w^2)) + noise

where ``g`` is the polyline geodesic and ``load`` carries the feature term,
``amplitude + feature_gain * height * profile(s(t))`` with ``s`` the travel
distance relative to the feature. The pressure channel follows the contact
force alone, ``pressure_baseline + pressure_gain * load(t) + noise``, so it does
not depend on where the taxels sit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import DataValidationError
from .frames import ProjectionSpec
from .geometry import (
    REFERENCE_MODEL,
    EllipsoidModel,
    SurfaceParam,
    TaxelLayout,
    geodesic_distance,
    point_to_param,
    reference_layout,
)
from .smoothing import TaxelRecording

KINDS = ("flat-slide", "bump-crossing", "ridge-crossing", "static-slip")


@dataclass(frozen=True)
class Scenario:
    kind: str = "bump-crossing"
    feature_height: float = 1.0  # mm
    feature_width: float = 1.5  # mm of travel (FWHM for bumps, plateau length for ridges)
    heading: float = 0.0  # rad, direction of travel in the x-y plane
    speed: float = 2.0  # mm/s
    center_x: float = 0.0  # path midpoint, relative to the centroid (mm)
    center_y: float = -5.0
    feature_time: float = 0.5  # fraction of the duration at which the feature is crossed
    duration: float = 4.0  # s
    sample_rate: float = 50.0  # Hz
    noise_std: float = 2.0  # counts
    baseline: float = 100.0
    amplitude: float = 400.0
    feature_gain: float = 400.0  # counts per mm of feature height
    contact_width: float = 2.5  # mm, geodesic
    onset: float = 0.2  # s, contact load ramp
    pressure_baseline: float = 2000.0
    pressure_gain: float = 0.25
    slip_time: float = 0.6  # static-slip: fraction of duration at slip onset
    rotation_rate: float = 0.4  # static-slip: rad/s of contact rotation
    rotation_radius: float = 1.0  # static-slip: mm

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataValidationError(f"scenario.kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("duration", "sample_rate", "contact_width", "amplitude"):
            if not getattr(self, name) > 0:
                raise DataValidationError(f"scenario.{name} must be > 0")
        for name in ("feature_height", "feature_width", "noise_std", "speed"):
            if getattr(self, name) < 0:
                raise DataValidationError(f"scenario.{name} must be >= 0")
        if self.kind in ("bump-crossing", "ridge-crossing") and not self.feature_width > 0:
            raise DataValidationError("scenario.feature_width must be > 0 for feature crossings")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate)) + 1


@dataclass(frozen=True)
class GroundTruth:
    timestamps: np.ndarray
    contact: SurfaceParam
    points: np.ndarray  # (N, 3) contact centroid in the sensor frame
    velocity: np.ndarray  # (N, 3) mm/s
    load: np.ndarray  # (N,)
    events: dict = field(default_factory=dict)

    def __len__(self):
        return self.timestamps.size


def _feature_profile(sc: Scenario, s: np.ndarray) -> np.ndarray:
    if sc.kind == "bump-crossing":
        sd = sc.feature_width / (2.0 * np.sqrt(2.0 * np.log(2.0)))
        return np.exp(-0.5 * (s / sd) ** 2)
    if sc.kind == "ridge-crossing":
        edge = 0.15 * sc.feature_width
        half = 0.5 * sc.feature_width
        return 0.5 * (erf((s + half) / edge) - erf((s - half) / edge))
    return np.zeros_like(s)


def _path(sc: Scenario, model: EllipsoidModel, t: np.ndarray):
    """Planar contact path (x, y) and planar velocity, relative to the centroid."""
    tf = sc.feature_time * sc.duration
    hd = np.array([np.cos(sc.heading), np.sin(sc.heading)])
    if sc.kind == "static-slip":
        ts = sc.slip_time * sc.duration
        ang = sc.rotation_rate * t
        r = sc.rotation_radius
        rot = np.stack([r * np.cos(ang) - r, r * np.sin(ang)], -1)
        drot = np.stack([-r * sc.rotation_rate * np.sin(ang), r * sc.rotation_rate * np.cos(ang)], -1)
        # slow downward creep after slip onset
        creep = np.where(t > ts, t - ts, 0.0)[:, None] * sc.speed * np.array([0.0, -1.0])
        dcreep = np.where(t > ts, 1.0, 0.0)[:, None] * sc.speed * np.array([0.0, -1.0])
        xy = np.array([sc.center_x, sc.center_y]) + rot + creep
        return xy, drot + dcreep
    if sc.kind == "flat-slide" and sc.speed == 0:
        xy = np.tile([sc.center_x, sc.center_y], (t.size, 1))
        return xy, np.zeros_like(xy)
    xy = np.array([sc.center_x, sc.center_y]) + (t - tf)[:, None] * sc.speed * hd
    return xy, np.tile(sc.speed * hd, (t.size, 1))


def _lift(model: EllipsoidModel, xy: np.ndarray, vxy: np.ndarray):
    ux, uy = xy[:, 0] / model.a, xy[:, 1] / model.b
    q = 1.0 - ux * ux - uy * uy
    bad = np.flatnonzero((q <= 0) | (xy[:, 1] > 0))
    if bad.size:
        raise DataValidationError(
            f"contact trajectory leaves the surface domain at sample {bad[0]} "
            f"(x={xy[bad[0], 0]:.3g}, y={xy[bad[0], 1]:.3g} mm from the centroid)"
        )
    z = model.c * np.sqrt(q)
    dz = -model.c * (ux * vxy[:, 0] / model.a + uy * vxy[:, 1] / model.b) / np.sqrt(q)
    pts = np.column_stack([xy, z]) + model.centroid
    return pts, np.column_stack([vxy, dz])


def _load(sc: Scenario, t: np.ndarray) -> np.ndarray:
    ramp = np.clip(t / sc.onset, 0.0, 1.0) if sc.onset > 0 else np.ones_like(t)
    ramp = 0.5 - 0.5 * np.cos(np.pi * ramp)
    if sc.kind == "static-slip":
        ts = sc.slip_time * sc.duration
        # load builds while water is poured, then drops sharply when the grasp slips
        build = 1.0 + 0.8 * np.clip(t / ts, 0.0, 1.0)
        drop = np.where(t > ts, 0.6 * (1.0 - np.exp(-(t - ts) / 0.15)), 0.0)
        return ramp * sc.amplitude * (build - drop)
    s = sc.speed * (t - sc.feature_time * sc.duration)
    return ramp * (sc.amplitude + sc.feature_gain * sc.feature_height * _feature_profile(sc, s))


def generate(
    scenario: Scenario,
    layout: TaxelLayout | None = None,
    model: EllipsoidModel | None = None,
    seed: int = 0,
) -> tuple[TaxelRecording, GroundTruth]:
    """Deterministic (given ``seed``) recording and its ground truth."""
    sc = scenario
    model = model or REFERENCE_MODEL
    layout = layout or reference_layout(model)
    t = np.arange(sc.n_samples) / sc.sample_rate
    xy, vxy = _path(sc, model, t)
    pts, vel = _lift(model, xy, vxy)
    contact = point_to_param(model, pts)
    taxels = point_to_param(model, layout.positions, max_radial_offset=np.inf)
    g = geodesic_distance(
        model,
        SurfaceParam(np.asarray(contact.theta)[:, None], np.asarray(contact.phi)[:, None]),
        SurfaceParam(np.asarray(taxels.theta)[None, :], np.asarray(taxels.phi)[None, :]),
    )
    load = _load(sc, t)
    excess = load[:, None] * np.exp(-(g**2) / (2.0 * sc.contact_width**2))
    rng = np.random.default_rng(seed)
    imp = sc.baseline + excess + rng.normal(0.0, sc.noise_std, excess.shape)
    pres = sc.pressure_baseline + sc.pressure_gain * load + rng.normal(0.0, sc.noise_std, t.size)

    events = {"contact_onset": 0}
    if sc.kind in ("bump-crossing", "ridge-crossing"):
        events["feature_crossing"] = int(round(sc.feature_time * sc.duration * sc.sample_rate))
    if sc.kind == "static-slip":
        events["slip_onset"] = int(np.searchsorted(t, sc.slip_time * sc.duration, side="right"))
    rec = TaxelRecording(t, imp, pres)
    gt = GroundTruth(t, contact, pts, vel, load, events)
    return rec, gt


def replay_expected_flow(gt: GroundTruth, projection: ProjectionSpec) -> np.ndarray:
    """Per-sample unit direction of contact motion in frame pixel coordinates.

    Rows are zero where the contact is stationary.
    """
    iu, iv, _, _ = projection.axes
    du, dv = projection.pixel_size
    v = np.column_stack([gt.velocity[:, iu] / du, gt.velocity[:, iv] / dv])
    n = np.linalg.norm(v, axis=1, keepdims=True)
    return np.divide(v, n, out=np.zeros_like(v), where=n > 0)


def expected_direction(gt: GroundTruth, projection: ProjectionSpec, start: int, end: int) -> np.ndarray:
    """Unit mean pixel-space velocity over samples ``start..end`` (inclusive)."""
    iu, iv, _, _ = projection.axes
    du, dv = projection.pixel_size
    v = gt.velocity[start : end + 1]
    m = np.array([v[:, iu].mean() / du, v[:, iv].mean() / dv])
    n = np.linalg.norm(m)
    return m / n if n > 0 else np.zeros(2)
