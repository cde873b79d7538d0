"""Ground-truth bounding boxes from scene geometry.

Two labeling strategies are supported: projecting only the eight corners
of each object's world axis-aligned bounding box, or projecting every
mesh vertex.  The all-point variant is always at least as tight.  Labels
are written in the YOLO text format (one normalized box per line).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .geometry import Mesh, compose_trs, compute_aabb, project_points, transform_points

if TYPE_CHECKING:  # pragma: no cover
    from .sampler import ScenePlan


class BoxMethod(enum.Enum):
    EIGHT_POINT = "eight_point"
    ALL_POINT = "all_point"


class BehindCameraError(ValueError):
    """A point to be labeled lies at or behind the camera plane."""


@dataclass(frozen=True)
class PixelBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError("pixel box has negative extent")


@dataclass(frozen=True)
class GroundTruthBox:
    """Normalized YOLO-style box; coordinates are image fractions."""

    class_id: int
    x_center: float
    y_center: float
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("box extents must be positive")
        for lo, hi in (
            (self.x_center - self.width / 2, self.x_center + self.width / 2),
            (self.y_center - self.height / 2, self.y_center + self.height / 2),
        ):
            if lo < -1e-9 or hi > 1 + 1e-9:
                raise ValueError("box extends outside the unit image square")


def bbox_from_pixels(points: np.ndarray) -> PixelBox:
    """Min/max pixel box of projected points, shape (N, 2)."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(p) == 0:
        raise ValueError("bbox_from_pixels requires at least one point")
    return PixelBox(p[:, 0].min(), p[:, 1].min(), p[:, 0].max(), p[:, 1].max())


def annotate(plan: "ScenePlan", meshes, method: BoxMethod) -> list[GroundTruthBox]:
    """Ground-truth boxes for every labeled (non-distractor) instance.

    Boxes are clipped to the image and dropped when the clipped extent
    falls below one pixel.  Occlusion is ignored.
    """
    cam = plan.camera
    view, proj = cam.view(), cam.projection()
    out: list[GroundTruthBox] = []
    for inst in plan.instances:
        if inst.class_id is None:
            continue
        mesh = meshes[inst.class_id]
        world = transform_points(compose_trs(inst.pose), mesh.vertices)
        if method is BoxMethod.EIGHT_POINT:
            world = compute_aabb(world).corners()
        px, py, _, ok = project_points(world, view, proj, cam.width, cam.height)
        if not np.all(ok):
            raise BehindCameraError(
                f"instance at slot {inst.slot} has vertices behind the camera"
            )
        box = bbox_from_pixels(np.stack([px, py], axis=1))
        x0 = min(max(box.x_min, 0.0), cam.width)
        x1 = min(max(box.x_max, 0.0), cam.width)
        y0 = min(max(box.y_min, 0.0), cam.height)
        y1 = min(max(box.y_max, 0.0), cam.height)
        if x1 - x0 < 1.0 or y1 - y0 < 1.0:
            continue
        out.append(
            GroundTruthBox(
                class_id=inst.class_id,
                x_center=(x0 + x1) / 2.0 / cam.width,
                y_center=(y0 + y1) / 2.0 / cam.height,
                width=(x1 - x0) / cam.width,
                height=(y1 - y0) / cam.height,
            )
        )
    return out


def to_yolo_lines(boxes: list[GroundTruthBox]) -> str:
    """Serialize boxes as YOLO label text, six decimals, LF endings."""
    return "".join(
        f"{b.class_id} {b.x_center:.6f} {b.y_center:.6f} {b.width:.6f} {b.height:.6f}\n"
        for b in boxes
    )
