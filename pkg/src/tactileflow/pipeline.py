"""Smooth -> fit -> surface -> frames -> flow, optionally restricted to pressure segments."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import PipelineConfig
from .errors import DataValidationError
from .flow import AggregateFlow, FlowField, _map, aggregate, expand_pyramid, estimate_flow
from .frames import (
    ProjectionSpec,
    SurfaceGeometry,
    TactileFrame,
    TactileSurface,
    _triangles,
    default_projection,
    render_frame,
)
from .geometry import EllipsoidModel, SurfaceParam, TaxelLayout, fit_ellipsoid, point_to_param, reference_layout
from .interpolation import InterpolationWeights
from .segmentation import Segment, segment_pressure
from .smoothing import TaxelRecording, smooth

HALF_SLACK = 0.5  # mm a taxel may sit past the y = cy plane


@dataclass(frozen=True)
class Sensor:
    """Everything that depends on the layout and config but not on the data."""

    layout: TaxelLayout
    model: EllipsoidModel
    taxel_params: SurfaceParam
    weights: InterpolationWeights
    geometry: SurfaceGeometry

    @classmethod
    def prepare(cls, layout: TaxelLayout | None, cfg: PipelineConfig) -> Sensor:
        layout = layout or reference_layout()
        model = fit_ellipsoid(layout)
        layout.check_half_space(model, HALF_SLACK)
        params = point_to_param(model, layout.positions, max_radial_offset=0.5, half_tolerance=HALF_SLACK / model.b)
        weights = InterpolationWeights(model, params, cfg.grid.params(), cfg.kernel)
        return cls(layout, model, params, weights, SurfaceGeometry.build(model, cfg.grid))


def surface_values(rec: TaxelRecording, tare: str) -> np.ndarray:
    v = np.asarray(rec.impedances, dtype=float)
    if tare == "first":
        return v - v[:1]
    if tare == "min":
        return v - v.min(axis=0, keepdims=True)
    return v


def resolve_scale(values: np.ndarray, model: EllipsoidModel, cfg: PipelineConfig) -> float:
    if cfg.surface.scale is not None:
        return cfg.surface.scale
    peak = float(np.max(np.abs(values)))
    return cfg.surface.max_fraction * model.c / peak if peak > 0 else 1.0


def projection_for(sensor: Sensor, plane: str, cfg: PipelineConfig, max_disp: float) -> ProjectionSpec:
    margin = cfg.frames.margin
    if margin is None:
        margin = max_disp + 0.05 * float(max(sensor.model.axes))
    return default_projection(sensor.model, plane, cfg.frames.shape, margin)


def sequence_bounds(sensor: Sensor, values: np.ndarray, scale: float, spec: ProjectionSpec, chunk: int = 64) -> tuple[float, float]:
    """Depth range of the rendered half over every sample of the sequence."""
    geo = sensor.geometry
    used = np.unique(_triangles(geo.grid, spec.half_mask(geo.grid)))
    base = spec.depth(geo.base.reshape(-1, 3)[used])
    nrm = spec.depth(geo.normals.reshape(-1, 3)[used])
    lo, hi = np.inf, -np.inf
    for s in range(0, values.shape[0], chunk):
        f = sensor.weights.apply(values[s : s + chunk]).reshape(-1, geo.grid.n_theta * geo.grid.n_phi)[:, used]
        d = base + scale * f * nrm
        lo, hi = min(lo, float(d.min())), max(hi, float(d.max()))
    if not hi > lo:
        hi = lo + 1.0
    return lo, hi


def render_indices(
    sensor: Sensor,
    values: np.ndarray,
    timestamps: np.ndarray,
    indices,
    spec: ProjectionSpec,
    scale: float,
    bounds: tuple[float, float],
    jobs: int = 1,
) -> dict[int, TactileFrame]:
    geo = sensor.geometry

    def one(i):
        vals = sensor.weights.apply(values[i])
        disp = geo.base + (vals * scale)[..., None] * geo.normals
        surf = TactileSurface(geo.grid, geo.base, disp, vals, scale)
        fr = render_frame(surf, spec, bounds, float(timestamps[i]))
        fr.meta["index"] = int(i)
        return fr

    idx = [int(i) for i in indices]
    return dict(zip(idx, _map(one, idx, jobs)))


@dataclass(frozen=True)
class SegmentFlow:
    segment: Segment
    projection: str
    pairs: list[int]  # flow k goes from sample pairs[k] to pairs[k] + 1
    flows: list[FlowField]
    summary: AggregateFlow


@dataclass
class PipelineResult:
    smoothed: TaxelRecording
    sensor: Sensor
    scale: float
    segments: list[Segment]
    peaks: list[tuple[int, float]]
    projections: dict[str, ProjectionSpec] = field(default_factory=dict)
    frames: dict[str, dict[int, TactileFrame]] = field(default_factory=dict)
    results: list[SegmentFlow] = field(default_factory=list)


def whole_segment(n: int) -> Segment:
    return Segment("all", 0, n - 1, 0)


def run_pipeline(
    rec: TaxelRecording,
    cfg: PipelineConfig = PipelineConfig(),
    layout: TaxelLayout | None = None,
    jobs: int = 1,
    whole_sequence: bool = False,
) -> PipelineResult:
    smoothed = smooth(rec, cfg.smoother) if cfg.segmentation.smooth else rec
    sensor = Sensor.prepare(layout, cfg)
    values = surface_values(smoothed, cfg.surface.tare)
    scale = resolve_scale(values, sensor.model, cfg)

    if cfg.segmentation.enabled and not whole_sequence:
        segments, peaks = segment_pressure(smoothed.pressure, cfg.peaks, smoothed.sample_rate, cfg.segmentation.labels)
    else:
        segments, peaks = [whole_segment(len(smoothed))], []
    needed = sorted({i for s in segments if len(s) >= 2 for i in range(s.start, s.end + 1)})

    out = PipelineResult(smoothed, sensor, scale, segments, peaks)
    max_disp = scale * float(np.max(np.abs(values)))
    for plane in cfg.frames.projections:
        spec = projection_for(sensor, plane, cfg, max_disp)
        bounds = sequence_bounds(sensor, values, scale, spec)
        frames = render_indices(sensor, values, smoothed.timestamps, needed, spec, scale, bounds, jobs)
        out.projections[plane] = spec
        out.frames[plane] = frames
        exps = dict(zip(needed, _map(lambda i: expand_pyramid(frames[i], cfg.flow), needed, jobs)))
        for seg in segments:
            if len(seg) < 2:
                continue
            pairs = list(range(seg.start, seg.end))
            flows = _map(
                lambda i: estimate_flow(frames[i], frames[i + 1], cfg.flow, expansions=(exps[i], exps[i + 1])),
                pairs,
                jobs,
            )
            try:
                summary = aggregate(flows, cfg.aggregate.tau)
            except DataValidationError:
                summary = AggregateFlow(np.zeros(2), 0.0, 0.0)
            out.results.append(SegmentFlow(seg, plane, pairs, flows, summary))
    return out
