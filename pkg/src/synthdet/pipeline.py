"""Dataset generation / evaluation pipeline and on-disk formats.

A run writes, under the output root::

    train/images/000000.png   train/labels/000000.txt   train/classes.txt
    valid/images/000050.png   valid/labels/000050.txt   valid/classes.txt
    manifest.json

Basenames are zero-padded global image indices; validation images
continue the training index space.  RGB images are 8-bit PNG; depth
images are 16-bit grayscale PNG holding millimeters.  The manifest
records the config digest, seed, counts, class names, and per-image
timing.  Everything except the timing section is reproducible
byte-for-byte from (config, master seed).
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import assets
from .evaluator import (
    AnnotationParseError,
    EvalReport,
    evaluate_detections,
    g_ml,
    g_reality,
    parse_annotations,
    parse_detections,
)
from .labeler import BoxMethod, annotate, to_yolo_lines
from .postprocess import PostprocessConfig, apply_postprocess
from .renderer import Frame, render
from .rng import derive_stream
from .sampler import ConfigError, GenerationConfig, sample_scene, settle

TOOL_VERSION = "0.1.0"

_REQUIRED_KEYS = {
    "grid_n", "grid_d", "z_pos", "eps_pos", "eps_rot", "p_objects",
    "p_texture", "t_pos", "c_pos", "r_width", "r_height", "fov_deg", "i_type",
}
_OPTIONAL_KEYS = {"postprocess", "bb_method", "settle_enabled", "distractor_dims"}
_POSTPROCESS_KEYS = {
    "apply_pepper_prob", "pepper_rate", "apply_blur_prob", "blur_kernel_choices",
    "cutout_rect_count", "cutout_circle_count", "cutout_line_count",
    "cutout_size", "line_thickness",
}


def default_config() -> GenerationConfig:
    """The shipped default parameterization: 2x2 grid, +-10% horizontal
    jitter, equal class/distractor/void odds, textures with probability
    0.8, 45 degree FOV, pitch in +-0.17 rad, image sides in 640..1300 px,
    pepper-and-salt and blur with per-image probability 1.0 and 0.5."""
    n_outcomes = 12  # 10 classes + distractor + void, equal chance
    return GenerationConfig(
        grid_n=2,
        grid_d=0.1,
        z_pos=0.05,
        eps_pos=(0.1, 0.1, 0.0),
        eps_rot=((-math.pi, math.pi), (-math.pi, math.pi), (-math.pi, math.pi)),
        p_objects=tuple([1.0 / n_outcomes] * n_outcomes),
        p_texture=0.8,
        t_pos=((0.0, 0.0), (0.0, 0.0), (0.0, 0.0)),
        c_pos=((0.0, 2.0 * math.pi), (-0.17, 0.17), (0.4, 0.8)),
        r_width=(640, 1300),
        r_height=(640, 1300),
        fov_y=math.radians(45.0),
        i_type="RGB",
        distractor_dims=((0.01, 0.06),) * 3,
        settle_enabled=True,
        postprocess=PostprocessConfig(apply_pepper_prob=1.0, apply_blur_prob=0.5),
        bb_method=BoxMethod.ALL_POINT,
    )


def config_to_dict(cfg: GenerationConfig) -> dict:
    pp = cfg.postprocess
    return {
        "grid_n": cfg.grid_n,
        "grid_d": cfg.grid_d,
        "z_pos": cfg.z_pos,
        "eps_pos": list(cfg.eps_pos),
        "eps_rot": [list(r) for r in cfg.eps_rot],
        "p_objects": list(cfg.p_objects),
        "p_texture": cfg.p_texture,
        "t_pos": [list(r) for r in cfg.t_pos],
        "c_pos": [list(r) for r in cfg.c_pos],
        "r_width": list(cfg.r_width),
        "r_height": list(cfg.r_height),
        "fov_deg": math.degrees(cfg.fov_y),
        "i_type": cfg.i_type,
        "distractor_dims": [list(r) for r in cfg.distractor_dims],
        "settle_enabled": cfg.settle_enabled,
        "bb_method": cfg.bb_method.value,
        "postprocess": {
            "apply_pepper_prob": pp.apply_pepper_prob,
            "pepper_rate": pp.pepper_rate,
            "apply_blur_prob": pp.apply_blur_prob,
            "blur_kernel_choices": list(pp.blur_kernel_choices),
            "cutout_rect_count": list(pp.cutout_rect_count),
            "cutout_circle_count": list(pp.cutout_circle_count),
            "cutout_line_count": list(pp.cutout_line_count),
            "cutout_size": list(pp.cutout_size),
            "line_thickness": list(pp.line_thickness),
        },
    }


def config_from_dict(doc: dict) -> GenerationConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(doc) - _REQUIRED_KEYS - _OPTIONAL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = _REQUIRED_KEYS - set(doc)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")

    def pair(v, key):
        if not (isinstance(v, (list, tuple)) and len(v) == 2):
            raise ConfigError(f"{key}: expected a [lo, hi] pair, got {v!r}")
        return (v[0], v[1])

    def triple_of_pairs(v, key):
        if not (isinstance(v, (list, tuple)) and len(v) == 3):
            raise ConfigError(f"{key}: expected 3 [lo, hi] pairs")
        return tuple(pair(p, key) for p in v)

    pp_doc = doc.get("postprocess", {})
    if not isinstance(pp_doc, dict):
        raise ConfigError("postprocess: expected an object")
    pp_unknown = set(pp_doc) - _POSTPROCESS_KEYS
    if pp_unknown:
        raise ConfigError(f"postprocess: unknown keys {sorted(pp_unknown)}")
    pp_kwargs = dict(pp_doc)
    for k in ("blur_kernel_choices",):
        if k in pp_kwargs:
            pp_kwargs[k] = tuple(int(x) for x in pp_kwargs[k])
    for k in ("cutout_rect_count", "cutout_circle_count", "cutout_line_count"):
        if k in pp_kwargs:
            pp_kwargs[k] = (int(pp_kwargs[k][0]), int(pp_kwargs[k][1]))
    for k in ("cutout_size", "line_thickness"):
        if k in pp_kwargs:
            pp_kwargs[k] = pair(pp_kwargs[k], k)
    try:
        postprocess = PostprocessConfig(**pp_kwargs)
    except ValueError as e:
        raise ConfigError(f"postprocess: {e}")

    eps_pos = doc["eps_pos"]
    if not (isinstance(eps_pos, (list, tuple)) and len(eps_pos) == 3):
        raise ConfigError("eps_pos: expected 3 values")
    try:
        bb_method = BoxMethod(doc.get("bb_method", "all_point"))
    except ValueError:
        raise ConfigError(f"bb_method: unknown value {doc.get('bb_method')!r}")
    try:
        return GenerationConfig(
            grid_n=int(doc["grid_n"]),
            grid_d=float(doc["grid_d"]),
            z_pos=float(doc["z_pos"]),
            eps_pos=tuple(float(e) for e in eps_pos),
            eps_rot=triple_of_pairs(doc["eps_rot"], "eps_rot"),
            p_objects=tuple(float(p) for p in doc["p_objects"]),
            p_texture=float(doc["p_texture"]),
            t_pos=triple_of_pairs(doc["t_pos"], "t_pos"),
            c_pos=triple_of_pairs(doc["c_pos"], "c_pos"),
            r_width=(int(doc["r_width"][0]), int(doc["r_width"][1])),
            r_height=(int(doc["r_height"][0]), int(doc["r_height"][1])),
            fov_y=math.radians(float(doc["fov_deg"])),
            i_type=str(doc["i_type"]),
            distractor_dims=triple_of_pairs(
                doc.get("distractor_dims", [[0.01, 0.06]] * 3), "distractor_dims"
            ),
            settle_enabled=bool(doc.get("settle_enabled", True)),
            postprocess=postprocess,
            bb_method=bb_method,
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e))


def load_config(path: str | Path) -> GenerationConfig:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}")
    return config_from_dict(doc)


def save_config(cfg: GenerationConfig, path: str | Path):
    Path(path).write_text(canonical_config_text(cfg))


def canonical_config_text(cfg: GenerationConfig) -> str:
    return json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":")) + "\n"


def config_digest(cfg: GenerationConfig) -> str:
    return hashlib.sha256(canonical_config_text(cfg).encode()).hexdigest()


@dataclass
class RunManifest:
    version: str
    config_digest: str
    master_seed: int
    counts: dict[str, int]
    class_names: list[str]
    groups: dict[str, str] | None = None  # basename -> group tag
    timing: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "config_digest": self.config_digest,
            "master_seed": self.master_seed,
            "counts": self.counts,
            "class_names": self.class_names,
            "groups": self.groups,
            "timing": self.timing,
        }


def write_image(frame: Frame, path: str | Path, kind: str):
    """kind "rgb": 8-bit PNG; kind "depth16": 16-bit grayscale PNG in
    millimeters, clamped to 65535."""
    if kind == "rgb":
        if frame.rgb is None:
            raise ValueError("frame has no RGB channels")
        Image.fromarray(frame.rgb, mode="RGB").save(path, format="PNG")
    elif kind == "depth16":
        if frame.depth is None:
            raise ValueError("frame has no depth channel")
        mm = np.clip(np.rint(frame.depth * 1000.0), 0, 65535).astype(np.uint16)
        Image.fromarray(mm).save(path, format="PNG")
    else:
        raise ValueError(f"unknown image kind {kind!r}")


def _resolve_assets(cfg: GenerationConfig, meshes, textures, class_names):
    if meshes is None:
        meshes = assets.builtin_meshes()
        if class_names is None:
            class_names = list(assets.BUILTIN_CLASS_NAMES)
    if class_names is None:
        class_names = [f"class_{i:02d}" for i in range(len(meshes))]
    if textures is None:
        textures = assets.builtin_textures()
    if cfg.num_classes > len(meshes):
        raise ConfigError(
            f"config defines {cfg.num_classes} classes but only "
            f"{len(meshes)} meshes are available"
        )
    return meshes, textures, class_names


def generate_one(cfg: GenerationConfig, meshes, textures, master_seed: int, index: int,
                 split: str) -> tuple[Frame, list, dict]:
    """Produce one image's frame, labels, and per-stage timing (ms)."""
    timing = {}
    t0 = time.perf_counter()
    scene_stream = derive_stream(master_seed, f"{split}.scene", index)
    plan = sample_scene(cfg, meshes, textures, scene_stream)
    timing["sample"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if cfg.settle_enabled:
        plan = settle(plan, meshes)
    timing["settle"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    frame = render(plan, meshes, textures, cfg.i_type)
    timing["render"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    boxes = annotate(plan, meshes, cfg.bb_method)
    timing["annotate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    noise_stream = derive_stream(master_seed, f"{split}.noise", index)
    frame = apply_postprocess(frame, cfg.postprocess, noise_stream)
    timing["postprocess"] = time.perf_counter() - t0

    timing = {k: v * 1000.0 for k, v in timing.items()}
    return frame, boxes, timing


def _write_outputs(cfg: GenerationConfig, frame: Frame, boxes, split_root: Path, index: int):
    base = f"{index:06d}"
    if cfg.i_type == "RGB":
        write_image(frame, split_root / "images" / f"{base}.png", "rgb")
    elif cfg.i_type == "D":
        write_image(frame, split_root / "images" / f"{base}.png", "depth16")
    else:
        write_image(frame, split_root / "images" / f"{base}.png", "rgb")
        write_image(frame, split_root / "images" / f"{base}_depth.png", "depth16")
    (split_root / "labels" / f"{base}.txt").write_text(to_yolo_lines(boxes))


def _generate_chunk(args) -> list[tuple[int, dict]]:
    cfg, meshes, textures, out_dir, n_train, master_seed, indices = args
    out = Path(out_dir)
    results = []
    for i in indices:
        split = "train" if i < n_train else "valid"
        t0 = time.perf_counter()
        try:
            frame, boxes, timing = generate_one(cfg, meshes, textures, master_seed, i, split)
            tw = time.perf_counter()
            _write_outputs(cfg, frame, boxes, out / split, i)
            timing["write"] = (time.perf_counter() - tw) * 1000.0
        except Exception as e:
            raise RuntimeError(
                f"image {i} (split {split}, seed {master_seed}) failed: {e}"
            ) from e
        timing["total"] = (time.perf_counter() - t0) * 1000.0
        results.append((i, timing))
    return results


def generate(
    cfg: GenerationConfig,
    out_dir: str | Path,
    n_train: int,
    n_valid: int,
    master_seed: int,
    workers: int = 1,
    meshes=None,
    textures=None,
    class_names: list[str] | None = None,
) -> RunManifest:
    """Generate a full train/valid dataset tree.

    Output bytes are independent of ``workers``; each image is produced
    from streams derived solely from (master seed, split, index).
    """
    meshes, textures, class_names = _resolve_assets(cfg, meshes, textures, class_names)
    out = Path(out_dir)
    for split in ("train", "valid"):
        (out / split / "images").mkdir(parents=True, exist_ok=True)
        (out / split / "labels").mkdir(parents=True, exist_ok=True)
        (out / split / "classes.txt").write_text(
            "".join(f"{n}\n" for n in class_names[: cfg.num_classes])
        )

    indices = list(range(n_train + n_valid))
    if workers <= 1 or not indices:
        results = _generate_chunk(
            (cfg, meshes, textures, str(out), n_train, master_seed, indices)
        )
    else:
        chunks = [indices[k::workers] for k in range(workers)]
        chunks = [c for c in chunks if c]
        results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(
                _generate_chunk,
                [(cfg, meshes, textures, str(out), n_train, master_seed, c) for c in chunks],
            ):
                results.extend(part)

    results.sort(key=lambda r: r[0])
    per_image = [t["total"] for _, t in results]
    stages = {}
    for name in ("sample", "settle", "render", "annotate", "postprocess", "write"):
        vals = [t[name] for _, t in results if name in t]
        if vals:
            stages[name] = float(np.median(vals))
    manifest = RunManifest(
        version=TOOL_VERSION,
        config_digest=config_digest(cfg),
        master_seed=master_seed,
        counts={"train": n_train, "valid": n_valid},
        class_names=class_names[: cfg.num_classes],
        timing={
            "per_image_ms": per_image,
            "median_ms": float(np.median(per_image)) if per_image else 0.0,
            "stage_median_ms": stages,
        },
    )
    (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2) + "\n")
    return manifest


_PALETTE = [
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200), (245, 130, 48),
    (145, 30, 180), (70, 240, 240), (240, 50, 230), (210, 245, 60), (0, 128, 128),
]


def preview(
    cfg: GenerationConfig,
    master_seed: int,
    index: int,
    out_png: str | Path,
    meshes=None,
    textures=None,
):
    """Render one image with its ground-truth boxes drawn as 1-px
    outlines, color-keyed by class.  Inspection aid only."""
    meshes, textures, _ = _resolve_assets(cfg, meshes, textures, None)
    split = "train"
    frame, boxes, _ = generate_one(cfg, meshes, textures, master_seed, index, split)
    if frame.rgb is None:  # depth-only config: visualize normalized depth
        d = frame.depth
        lo, hi = float(d.min()), float(d.max())
        g = np.zeros_like(d) if hi == lo else (d - lo) / (hi - lo)
        rgb = np.repeat((255 - g * 255).astype(np.uint8)[..., None], 3, axis=2)
        frame = Frame(frame.width, frame.height, rgb, frame.depth)
    rgb = frame.rgb.copy()
    h, w = rgb.shape[:2]
    for b in boxes:
        color = _PALETTE[b.class_id % len(_PALETTE)]
        x0 = int(np.clip(round((b.x_center - b.width / 2) * w), 0, w - 1))
        x1 = int(np.clip(round((b.x_center + b.width / 2) * w), 0, w - 1))
        y0 = int(np.clip(round((b.y_center - b.height / 2) * h), 0, h - 1))
        y1 = int(np.clip(round((b.y_center + b.height / 2) * h), 0, h - 1))
        rgb[y0, x0 : x1 + 1] = color
        rgb[y1, x0 : x1 + 1] = color
        rgb[y0 : y1 + 1, x0] = color
        rgb[y0 : y1 + 1, x1] = color
    write_image(Frame(w, h, rgb, None), out_png, "rgb")


def _collect_labels(directory: Path) -> dict[str, Path]:
    root = directory / "labels" if (directory / "labels").is_dir() else directory
    return {p.stem: p for p in sorted(root.glob("*.txt")) if p.name != "classes.txt"}


def evaluate(
    gt_dir: str | Path,
    pred_dir: str | Path,
    iou_thr: float = 0.5,
    conf_thr: float = 0.8,
    report_path: str | Path | None = None,
    map_train: float | None = None,
    map_valid: float | None = None,
    map_test: float | None = None,
    num_classes: int | None = None,
) -> EvalReport:
    """Score a directory of detection files against YOLO ground truth.

    Every ground-truth basename defines an image; a missing prediction
    file means zero detections, but prediction files without a matching
    ground truth are an error.
    """
    gt_root = Path(gt_dir)
    gt_files = _collect_labels(gt_root)
    if not gt_files:
        raise FileNotFoundError(f"no ground-truth label files in {gt_dir}")
    pred_files = _collect_labels(Path(pred_dir))
    orphans = sorted(set(pred_files) - set(gt_files))
    if orphans:
        raise ValueError(f"prediction files without ground truth: {orphans}")

    gts, dets = [], []
    for base, path in gt_files.items():
        try:
            for g in parse_annotations(path.read_text()):
                gts.append((base, g))
        except AnnotationParseError as e:
            raise AnnotationParseError(f"{path}: {e}")
        if base in pred_files:
            try:
                for d in parse_detections(pred_files[base].read_text()):
                    dets.append((base, d))
            except AnnotationParseError as e:
                raise AnnotationParseError(f"{pred_files[base]}: {e}")

    if num_classes is None:
        classes_txt = gt_root / "classes.txt"
        if not classes_txt.is_file():
            classes_txt = gt_root.parent / "classes.txt"
        if classes_txt.is_file():
            num_classes = len(classes_txt.read_text().splitlines())
        else:
            ids = [g.class_id for _, g in gts] + [d.class_id for _, d in dets]
            num_classes = max(ids) + 1 if ids else 1

    groups = None
    for manifest_path in (gt_root / "manifest.json", gt_root.parent / "manifest.json"):
        if manifest_path.is_file():
            doc = json.loads(manifest_path.read_text())
            if doc.get("groups"):
                groups = {k: v for k, v in doc["groups"].items() if k in gt_files}
            break

    report = evaluate_detections(dets, gts, num_classes, iou_thr, conf_thr, groups)
    if map_train is not None and map_valid is not None:
        report.g_ml = g_ml(map_train, map_valid)
    if map_valid is not None and map_test is not None:
        report.g_reality = g_reality(map_valid, map_test)

    if report_path is not None:
        report_path = Path(report_path)
        report_path.write_text(json.dumps(report_to_dict(report), indent=2) + "\n")
        report_path.with_suffix(".txt").write_text(report_text(report))
    return report


def report_to_dict(report: EvalReport) -> dict:
    return {
        "map50": report.map50,
        "per_class_ap": {str(k): v for k, v in sorted(report.per_class_ap.items())},
        "classes_without_gt": report.classes_without_gt,
        "f1_curve": [{"conf": c, "f1": f} for c, f in report.f1_curve],
        "confusion": {
            "conf_threshold": report.confusion.conf_threshold,
            "iou_threshold": report.confusion.iou_threshold,
            "counts": report.confusion.counts.tolist(),
        },
        "per_group": report.per_group,
        "g_ml": report.g_ml,
        "g_reality": report.g_reality,
    }


def report_text(report: EvalReport) -> str:
    lines = []
    lines.append(f"mAP50: {report.map50:.2f}")
    lines.append("")
    lines.append("class   AP")
    for c, ap in sorted(report.per_class_ap.items()):
        lines.append(f"{c:5d}   {ap:6.2f}")
    if report.per_group:
        lines.append("")
        lines.append("group   mAP50")
        for tag, v in sorted(report.per_group.items()):
            lines.append(f"{tag:>5}   {v:6.2f}")
    lines.append("")
    cm = report.confusion
    lines.append(
        f"confusion matrix (conf >= {cm.conf_threshold}, iou >= {cm.iou_threshold}),"
        " rows = ground truth, cols = predicted, last index = none:"
    )
    for row in cm.counts:
        lines.append("  " + " ".join(f"{v:6d}" for v in row))
    if report.g_ml is not None:
        lines.append("")
        lines.append(f"G_ML: {report.g_ml:.2f}")
    if report.g_reality is not None:
        lines.append(f"G_reality: {report.g_reality:.2f}")
    return "\n".join(lines) + "\n"
