from ._core import (
    EvalReport,
    FrameFeatures,
    GroundTruth,
    Keypoint,
    LoopResult,
    Pipeline,
    SynthConfig,
    SynthOutput,
    Vocabulary,
    database_frame_count,
    evaluate,
    generate_aliasing,
    load_features,
    load_ground_truth,
    save_features,
    save_ground_truth,
)

__all__ = [
    "EvalReport",
    "FrameFeatures",
    "GroundTruth",
    "Keypoint",
    "LoopResult",
    "Pipeline",
    "SynthConfig",
    "SynthOutput",
    "Vocabulary",
    "database_frame_count",
    "evaluate",
    "generate_aliasing",
    "load_features",
    "load_ground_truth",
    "save_features",
    "save_ground_truth",
]
