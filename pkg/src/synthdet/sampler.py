"""Randomized scene sampling.

One scene is an n x n grid of slots; each slot independently receives a
class object, a distracting cuboid, or nothing, then position / rotation
jitter and an appearance (texture or flat color).  The camera orbits a
sampled target point and is rejection-resampled until every placed
object's center projects inside the image.  A quasi-static settle then
drops each object straight down onto the ground plane.

The draw order is fixed (slots row-major; per slot: kind, position,
rotation, appearance; then ground appearance, then camera, then
distractor dims, then lighting) so a plan is fully determined by its
random stream identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    CameraModel,
    Mesh,
    Pose,
    camera_from_spherical,
    compose_trs,
    project_points,
    spherical_up,
    transform_points,
    vec3,
)
from .labeler import BoxMethod
from .postprocess import PostprocessConfig
from .renderer import LightModel, Texture
from .rng import RandomStream

NEAR_DEFAULT = 0.01
FAR_DEFAULT = 10.0
AMBIENT = 0.35
LIGHT_INTENSITY_RANGE = (0.6, 1.0)
CAMERA_MAX_ATTEMPTS = 1000

Range = tuple[float, float]


class ConfigError(ValueError):
    """A generation config violates one of its invariants."""


class CameraSamplingError(RuntimeError):
    """No camera satisfying the visibility constraint was found."""


@dataclass(frozen=True)
class GenerationConfig:
    grid_n: int
    grid_d: float
    z_pos: float
    eps_pos: tuple[float, float, float]  # fractions of grid_d
    eps_rot: tuple[Range, Range, Range]  # radians
    p_objects: tuple[float, ...]  # classes..., distractor, void
    p_texture: float
    t_pos: tuple[Range, Range, Range]  # m
    c_pos: tuple[Range, Range, Range]  # yaw rad, pitch rad, distance m
    r_width: tuple[int, int]
    r_height: tuple[int, int]
    fov_y: float  # radians
    i_type: str  # "RGB" | "D" | "RGBD"
    distractor_dims: tuple[Range, Range, Range]  # m
    settle_enabled: bool = True
    postprocess: PostprocessConfig = PostprocessConfig()
    bb_method: BoxMethod = BoxMethod.ALL_POINT
    near: float = NEAR_DEFAULT
    far: float = FAR_DEFAULT

    def __post_init__(self):
        if self.grid_n < 1:
            raise ConfigError("grid_n must be >= 1")
        if not (self.grid_d > 0):
            raise ConfigError("grid_d must be positive")
        if self.z_pos < 0:
            raise ConfigError("z_pos must be >= 0")
        if len(self.p_objects) < 3:
            raise ConfigError("p_objects needs at least one class plus distractor and void")
        if any(p < 0 for p in self.p_objects):
            raise ConfigError("p_objects entries must be >= 0")
        if abs(sum(self.p_objects) - 1.0) > 1e-9:
            raise ConfigError(f"p_objects must sum to 1, got {sum(self.p_objects)}")
        if not (0.0 <= self.p_texture <= 1.0):
            raise ConfigError("p_texture must be in [0, 1]")
        for name in ("eps_rot", "t_pos", "c_pos", "distractor_dims"):
            for lo, hi in getattr(self, name):
                if lo > hi:
                    raise ConfigError(f"{name}: lo {lo} > hi {hi}")
        for name in ("r_width", "r_height"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 1:
                raise ConfigError(f"{name}: invalid range ({lo}, {hi})")
        if not (0 < self.fov_y < math.pi):
            raise ConfigError("fov_y must be in (0, pi) radians")
        if self.i_type not in ("RGB", "D", "RGBD"):
            raise ConfigError(f"i_type must be RGB, D or RGBD, got {self.i_type!r}")

    @property
    def num_classes(self) -> int:
        return len(self.p_objects) - 2


@dataclass(frozen=True)
class Appearance:
    """Either a texture-bank index or a flat RGB color in [0, 1]."""

    texture_id: int | None = None
    color: tuple[float, float, float] | None = None

    def __post_init__(self):
        if (self.texture_id is None) == (self.color is None):
            raise ValueError("exactly one of texture_id / color must be set")


@dataclass(frozen=True)
class SceneInstance:
    slot: tuple[int, int]
    class_id: int | None  # None -> distractor
    dims: np.ndarray | None  # cuboid dims, distractors only
    pose: Pose
    appearance: Appearance


@dataclass(frozen=True)
class ScenePlan:
    instances: tuple[SceneInstance, ...]
    camera: CameraModel
    ground_appearance: Appearance
    lights: LightModel
    seed_record: tuple[int, str, int]  # stream identity (seed, tag, index)


def instance_mesh(inst: SceneInstance, meshes) -> Mesh:
    if inst.class_id is not None:
        return meshes[inst.class_id]
    return make_distractor_mesh(inst.dims)


def make_distractor_mesh(dims) -> Mesh:
    """Centered cuboid: 8 vertices, 12 triangles."""
    d = np.asarray(dims, dtype=np.float64)
    if np.any(d <= 0):
        raise ValueError(f"distractor dims must be positive, got {d}")
    hx, hy, hz = d / 2.0
    verts = np.array(
        [[sx, sy, sz] for sx in (-hx, hx) for sy in (-hy, hy) for sz in (-hz, hz)]
    )
    tris = np.array(
        [
            [0, 1, 3], [0, 3, 2],  # -x
            [4, 6, 7], [4, 7, 5],  # +x
            [0, 4, 5], [0, 5, 1],  # -y
            [2, 3, 7], [2, 7, 6],  # +y
            [0, 2, 6], [0, 6, 4],  # -z
            [1, 5, 7], [1, 7, 3],  # +z
        ],
        dtype=np.int64,
    )
    return Mesh(verts, tris, class_id=None)


def _sample_kind(cfg: GenerationConfig, stream: RandomStream) -> int | str:
    """-> class index, "distractor", or "void"."""
    u = stream.next_unit()
    acc = 0.0
    for i, p in enumerate(cfg.p_objects):
        acc += p
        if u < acc:
            break
    else:
        i = len(cfg.p_objects) - 1
    if i == len(cfg.p_objects) - 2:
        return "distractor"
    if i == len(cfg.p_objects) - 1:
        return "void"
    return i


def _sample_appearance(cfg: GenerationConfig, texture_bank, stream: RandomStream) -> Appearance:
    if stream.next_unit() < cfg.p_texture:
        if not texture_bank:
            raise ValueError("texture bank is empty but p_texture > 0")
        return Appearance(texture_id=stream.next_int(0, len(texture_bank) - 1))
    return Appearance(color=(stream.next_unit(), stream.next_unit(), stream.next_unit()))


def sample_camera(
    cfg: GenerationConfig, plan_centers: list[np.ndarray], stream: RandomStream
) -> CameraModel:
    """Rejection-sample a camera until every center projects strictly
    inside the image with positive clip w."""
    for _ in range(CAMERA_MAX_ATTEMPTS):
        target = vec3(*(stream.next_uniform(lo, hi) for lo, hi in cfg.t_pos))
        yaw = stream.next_uniform(*cfg.c_pos[0])
        pitch = stream.next_uniform(*cfg.c_pos[1])
        distance = stream.next_uniform(*cfg.c_pos[2])
        width = stream.next_int(*cfg.r_width)
        height = stream.next_int(*cfg.r_height)
        eye = camera_from_spherical(target, yaw, pitch, distance)
        cam = CameraModel(
            eye=eye,
            target=target,
            up=spherical_up(yaw, pitch),
            fov_y=cfg.fov_y,
            near=cfg.near,
            far=cfg.far,
            width=width,
            height=height,
        )
        if not plan_centers:
            return cam
        px, py, depth, ok = project_points(
            np.asarray(plan_centers), cam.view(), cam.projection(), width, height
        )
        visible = (
            ok
            & (px > 0) & (px < width) & (py > 0) & (py < height)
            & (depth >= cfg.near) & (depth <= cfg.far)
        )
        if np.all(visible):
            return cam
    raise CameraSamplingError(
        f"no camera satisfied the visibility constraint in {CAMERA_MAX_ATTEMPTS} attempts"
    )


def sample_scene(
    cfg: GenerationConfig, meshes, texture_bank: list[Texture], stream: RandomStream
) -> ScenePlan:
    """Sample one full scene plan from the stream in the fixed draw order."""
    if cfg.num_classes > len(meshes):
        raise ValueError(
            f"config has {cfg.num_classes} classes but only {len(meshes)} meshes"
        )
    half = (cfg.grid_n - 1) / 2.0
    pending: list[dict] = []
    for i in range(cfg.grid_n):
        for j in range(cfg.grid_n):
            kind = _sample_kind(cfg, stream)
            if kind == "void":
                continue
            gx = (i - half) * cfg.grid_d
            gy = (j - half) * cfg.grid_d
            ex, ey, ez = (e * cfg.grid_d for e in cfg.eps_pos)
            pos = vec3(
                gx + stream.next_uniform(-ex, ex),
                gy + stream.next_uniform(-ey, ey),
                cfg.z_pos + stream.next_uniform(-ez, ez),
            )
            rot = vec3(*(stream.next_uniform(lo, hi) for lo, hi in cfg.eps_rot))
            appearance = _sample_appearance(cfg, texture_bank, stream)
            pending.append(
                {
                    "slot": (i, j),
                    "class_id": None if kind == "distractor" else kind,
                    "pose": Pose(pos, rot),
                    "appearance": appearance,
                }
            )

    ground_appearance = _sample_appearance(cfg, texture_bank, stream)
    centers = [p["pose"].translation for p in pending]
    camera = sample_camera(cfg, centers, stream)

    instances = []
    for p in pending:
        dims = None
        if p["class_id"] is None:
            dims = vec3(*(stream.next_uniform(lo, hi) for lo, hi in cfg.distractor_dims))
        instances.append(
            SceneInstance(
                slot=p["slot"],
                class_id=p["class_id"],
                dims=dims,
                pose=p["pose"],
                appearance=p["appearance"],
            )
        )

    z = stream.next_unit()
    phi = stream.next_uniform(0.0, 2.0 * math.pi)
    r = math.sqrt(max(0.0, 1.0 - z * z))
    intensity = stream.next_uniform(*LIGHT_INTENSITY_RANGE)
    direction = np.array([r * math.cos(phi), r * math.sin(phi), z])
    direction = direction / np.linalg.norm(direction)
    lights = LightModel(ambient=AMBIENT, direction=direction, intensity=intensity)

    return ScenePlan(
        instances=tuple(instances),
        camera=camera,
        ground_appearance=ground_appearance,
        lights=lights,
        seed_record=(stream.master_seed, stream.purpose_tag, stream.index),
    )


def settle(plan: ScenePlan, meshes) -> ScenePlan:
    """Quasi-static drop: translate each instance straight down until its
    lowest transformed vertex touches z = 0.  Rotation is unchanged."""
    settled = []
    for inst in plan.instances:
        mesh = instance_mesh(inst, meshes)
        if len(mesh.vertices) == 0:
            raise ValueError(f"instance at slot {inst.slot} has an empty mesh")
        world = transform_points(compose_trs(inst.pose), mesh.vertices)
        min_z = float(world[:, 2].min())
        t = inst.pose.translation
        new_pose = replace(inst.pose, translation=vec3(t[0], t[1], t[2] - min_z))
        settled.append(replace(inst, pose=new_pose))
    return replace(plan, instances=tuple(settled))
