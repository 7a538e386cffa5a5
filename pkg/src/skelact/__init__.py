"""Trainable skeleton-pose detectors for human action recognition.

A pose detector is configured automatically from one prototype skeleton by
recording every joint's polar position about the body barycenter together
with a distance-adaptive tolerance width. Banks of such detectors act as
feature extractors: each frame becomes a vector of detector responses,
classified per frame by one-vs-all linear scorers with background rejection
and aggregated to action level by majority voting.
"""

from .classifier import (
    BACKGROUND,
    ActionDecision,
    FrameDecision,
    LinearOvaModel,
    classify_action,
    classify_frame,
    load_model,
    save_model,
    train_ova,
)
from .dataset import (
    DatasetIndex,
    IndexEntry,
    SplitSpec,
    load_canonical,
    load_msrda_file,
    make_split,
    normalize_sequence,
    parse_msrda_skeleton,
    save_canonical,
)
from .detector import (
    DetectorProvenance,
    JointTuple,
    PoseDetector,
    ToleranceParams,
    VariantPolicy,
    apply_detector,
    apply_detector_variants,
    configure_detector,
    joint_score,
    reflect_detector,
    scale_detector,
    sigma_for_joint,
)
from .errors import ConfigError, DataError, ParseError, SkelactError
from .features import (
    DetectorBank,
    FeatureVector,
    build_bank,
    extract_features,
    load_bank,
    sample_prototypes,
    save_bank,
)
from .metrics import EvalReport, compute_metrics
from .pipeline import PipelineConfig, run_pipeline
from .render import render_skeleton_svg
from .skeleton import (
    JointId,
    PoseSequence,
    SkeletonLayout,
    SkeletonPose,
    barycenter,
    kinect20_layout,
    mirror_pose,
    skeletal_distance,
    to_polar,
)

__version__ = "0.1.0"

__all__ = [
    "ActionDecision",
    "BACKGROUND",
    "ConfigError",
    "DataError",
    "DatasetIndex",
    "DetectorBank",
    "DetectorProvenance",
    "EvalReport",
    "FeatureVector",
    "FrameDecision",
    "IndexEntry",
    "JointId",
    "JointTuple",
    "LinearOvaModel",
    "ParseError",
    "PipelineConfig",
    "PoseDetector",
    "PoseSequence",
    "SkelactError",
    "SkeletonLayout",
    "SkeletonPose",
    "SplitSpec",
    "ToleranceParams",
    "VariantPolicy",
    "apply_detector",
    "apply_detector_variants",
    "barycenter",
    "build_bank",
    "classify_action",
    "classify_frame",
    "compute_metrics",
    "configure_detector",
    "extract_features",
    "joint_score",
    "kinect20_layout",
    "load_bank",
    "load_canonical",
    "load_model",
    "load_msrda_file",
    "make_split",
    "mirror_pose",
    "normalize_sequence",
    "parse_msrda_skeleton",
    "reflect_detector",
    "render_skeleton_svg",
    "run_pipeline",
    "sample_prototypes",
    "save_bank",
    "save_canonical",
    "save_model",
    "scale_detector",
    "sigma_for_joint",
    "skeletal_distance",
    "to_polar",
    "train_ova",
]
