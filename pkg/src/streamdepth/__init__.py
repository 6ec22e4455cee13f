"""Streaming Tukey depth contours via incremental directional quantiles."""

from .changedetect import (
    ChangeDetector,
    ChangeEvent,
    DetectorParams,
    ScoreReport,
    score_detections,
)
from .engine import DepthTracker, TrackerConfig, estimate_depth, make_directions
from .geometry import (
    DepthSnapshot,
    DirectionSet,
    Envelope,
    contour_polyline_2d,
    envelope_contains,
    equidistant_filter,
    point_depth_query,
    point_depths,
    ray_envelope_intercept,
    sample_uniform_directions,
)
from .metrics import (
    ErrorReport,
    MetricRays,
    compute_ed,
    compute_made,
    default_ray_count,
    ed_between_snapshots,
)
from .oracle import (
    GaussianModel,
    MonteCarloModel,
    mc_depth,
    mvn_contour_intercept,
    mvn_depth,
    tangent_direction_depth,
    true_quantile_snapshot,
)
from .quantiles import (
    JointQuantileState,
    QuantileBank,
    QuantileState,
    StepSchedule,
    dumique_update,
    joint_update,
    offline_quantile_type8,
    offline_quantiles_type8,
    step_schedule_next,
)
from .synthdata import (
    StreamSpec,
    ar_covariance,
    default_regimes_2d,
    dynamic_truth,
    equicorrelation,
    gen_dynamic,
    gen_regime_stream,
    gen_static,
    gen_stream,
)

__version__ = "0.1.0"

__all__ = [
    "ChangeDetector",
    "ChangeEvent",
    "DepthSnapshot",
    "DepthTracker",
    "DetectorParams",
    "DirectionSet",
    "Envelope",
    "ErrorReport",
    "GaussianModel",
    "JointQuantileState",
    "MetricRays",
    "MonteCarloModel",
    "QuantileBank",
    "QuantileState",
    "ScoreReport",
    "StepSchedule",
    "StreamSpec",
    "TrackerConfig",
    "ar_covariance",
    "compute_ed",
    "compute_made",
    "contour_polyline_2d",
    "default_ray_count",
    "default_regimes_2d",
    "dumique_update",
    "dynamic_truth",
    "ed_between_snapshots",
    "envelope_contains",
    "equicorrelation",
    "equidistant_filter",
    "estimate_depth",
    "gen_dynamic",
    "gen_regime_stream",
    "gen_static",
    "gen_stream",
    "joint_update",
    "make_directions",
    "mc_depth",
    "mvn_contour_intercept",
    "mvn_depth",
    "offline_quantile_type8",
    "offline_quantiles_type8",
    "point_depth_query",
    "point_depths",
    "ray_envelope_intercept",
    "sample_uniform_directions",
    "score_detections",
    "step_schedule_next",
    "tangent_direction_depth",
    "true_quantile_snapshot",
]
