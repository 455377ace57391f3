"""Tactile flow for a 24-taxel ellipsoidal fingertip sensor."""

from .config import PipelineConfig
from .errors import DataValidationError, FitError, NumericalError, TactileFlowError
from .flow import FarnebackConfig, FlowField, aggregate, estimate_flow, flow_sequence
from .frames import ProjectionSpec, TactileFrame, build_tactile_surface, default_projection, render_frame
from .geometry import (
    REFERENCE_MODEL,
    EllipsoidModel,
    SurfaceParam,
    TaxelLayout,
    fit_ellipsoid,
    geodesic_distance,
    param_to_point,
    point_to_param,
    reference_layout,
)
from .interpolation import GridSpec, KernelConfig, interpolate_field
from .pipeline import run_pipeline
from .segmentation import PeakConfig, Segment, find_peaks, make_segments, segment_pressure
from .smoothing import SmootherConfig, TaxelRecording, smooth
from .synth import Scenario, expected_direction, generate, replay_expected_flow

__version__ = "0.1.0"
