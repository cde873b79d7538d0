"""Deterministic domain-randomized synthetic dataset generation and
object-detection evaluation toolkit."""

from .evaluator import (
    AdaptedConfusionMatrix,
    Detection,
    EvalReport,
    adapted_confusion,
    average_precision,
    evaluate_detections,
    f1_at,
    g_ml,
    g_reality,
    iou,
    match_for_ap,
    mean_ap,
    parse_annotations,
    parse_detections,
)
from .geometry import (
    Aabb,
    CameraModel,
    Mesh,
    MeshParseError,
    Pose,
    camera_from_spherical,
    compose_trs,
    compute_aabb,
    look_at,
    parse_mesh,
    perspective,
    project,
)
from .labeler import BoxMethod, GroundTruthBox, PixelBox, annotate, bbox_from_pixels, to_yolo_lines
from .pipeline import (
    RunManifest,
    default_config,
    evaluate,
    generate,
    load_config,
    preview,
    save_config,
    write_image,
)
from .postprocess import PostprocessConfig, apply_postprocess, gaussian_blur, pepper_salt
from .renderer import Frame, LightModel, Texture, planar_uv, render, sample_texture, shade
from .rng import RandomStream, derive_stream
from .sampler import (
    Appearance,
    GenerationConfig,
    SceneInstance,
    ScenePlan,
    make_distractor_mesh,
    sample_camera,
    sample_scene,
    settle,
)

__version__ = "0.1.0"
