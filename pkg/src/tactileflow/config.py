"""Pipeline configuration and its key=value file form.

Keys are dotted ``section.field``; sections map onto the per-module config
dataclasses (``smoother``, ``kernel``, ``grid``, ``flow``, ``peaks``) plus the
pipeline-level ``frames``, ``surface``, ``segmentation`` and ``aggregate``.
Any key may be omitted.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

from .errors import DataValidationError
from .flow import FarnebackConfig
from .frames import plane_id
from .interpolation import GridSpec, KernelConfig
from .io import dataclass_from_kv, read_kv
from .segmentation import LABELS, PeakConfig
from .smoothing import SmootherConfig

TARE_MODES = ("none", "first", "min")


@dataclass(frozen=True)
class FramesConfig:
    projections: tuple[str, ...] = ("top",)
    shape: tuple[int, int] = (128, 128)
    margin: float | None = None  # mm around the surface silhouette; None -> max displacement + 5% of the largest axis

    def __post_init__(self):
        if not self.projections:
            raise DataValidationError("frames.projections must name at least one plane")
        object.__setattr__(self, "projections", tuple(plane_id(p) for p in self.projections))
        if len(self.shape) != 2 or min(self.shape) < 2:
            raise DataValidationError(f"frames.shape must be HxW with both > 1, got {self.shape}")
        if self.margin is not None and self.margin < 0:
            raise DataValidationError("frames.margin must be >= 0")


@dataclass(frozen=True)
class SurfaceConfig:
    scale: float | None = None  # mm per count; None -> max_fraction * c / max|p|
    max_fraction: float = 0.3
    tare: str = "none"

    def __post_init__(self):
        if self.scale is not None and not self.scale > 0:
            raise DataValidationError("surface.scale must be > 0 or auto")
        if not self.max_fraction > 0:
            raise DataValidationError("surface.max_fraction must be > 0")
        if self.tare not in TARE_MODES:
            raise DataValidationError(f"surface.tare must be one of {TARE_MODES}")


@dataclass(frozen=True)
class SegmentationConfig:
    enabled: bool = True
    labels: tuple[str, ...] = LABELS
    smooth: bool = True  # smooth before rendering

    def __post_init__(self):
        bad = [lb for lb in self.labels if lb not in LABELS]
        if bad or not self.labels:
            raise DataValidationError(f"segmentation.labels must be a subset of {LABELS}")


@dataclass(frozen=True)
class AggregateConfig:
    tau: float = 0.1

    def __post_init__(self):
        if self.tau < 0:
            raise DataValidationError("aggregate.tau must be >= 0")


@dataclass(frozen=True)
class PipelineConfig:
    smoother: SmootherConfig = field(default_factory=SmootherConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    frames: FramesConfig = field(default_factory=FramesConfig)
    surface: SurfaceConfig = field(default_factory=SurfaceConfig)
    flow: FarnebackConfig = field(default_factory=FarnebackConfig)
    peaks: PeakConfig = field(default_factory=PeakConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    aggregate: AggregateConfig = field(default_factory=AggregateConfig)

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> PipelineConfig:
        sections = {f.name: f for f in fields(cls)}
        grouped: dict[str, dict[str, str]] = {}
        for key, val in kv.items():
            head, _, tail = key.partition(".")
            if head not in sections or not tail:
                raise DataValidationError(f"unknown config key {key!r}")
            grouped.setdefault(head, {})[key] = val
        parts = {}
        for name, sub in grouped.items():
            sub_cls = type(getattr(cls(), name))
            parts[name] = dataclass_from_kv(sub_cls, sub, prefix=name)
        return cls(**parts)

    @classmethod
    def load(cls, path) -> PipelineConfig:
        return cls.from_kv(read_kv(path))

    def to_kv(self) -> dict:
        out = {}
        for f in fields(self):
            for k, v in asdict(getattr(self, f.name)).items():
                out[f"{f.name}.{k}"] = "auto" if v is None else v
        return out

    def with_projection(self, plane: str) -> PipelineConfig:
        return replace(self, frames=replace(self.frames, projections=(plane_id(plane),)))
