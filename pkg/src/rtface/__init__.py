"""Simulated real-time face-analysis pipeline: buffering, tracking, cadence
scheduling, attribute smoothing, alignment and evaluation metrics."""

from .aggregation import AttributeWindows, SmoothedAttributes, smoothed
from .alignment import (
    FaceTemplate,
    SimilarityTransform,
    alignment_residual,
    apply_transform,
    estimate_similarity,
)
from .core import (
    EXPRESSIONS,
    AttributeMeasurement,
    BBox,
    Detection,
    ExpressionDist,
    Frame,
    FrameMeta,
    centroid,
    iou,
)
from .errors import (
    ConfigError,
    ContractError,
    DegenerateInputError,
    InvalidInputError,
    OrderingError,
    PipelineError,
)
from .evaluation import (
    EvalReport,
    age_mae,
    average_precision,
    classification_accuracy,
    evaluate,
    identity_switches,
    timing_stats,
)
from .frame_buffer import FrameStore
from .runtime import AnnotatedFrame, PipelineConfig, RunResult, run
from .scheduler import CadencePolicy, expected_cost, tasks_for
from .synthetic import Scenario, bundled_scenarios, ground_truth_at, load_scenario
from .trace import TraceEvent, read_trace
from .tracker import TrackerConfig, TrackRegistry

__version__ = "0.1.0"
