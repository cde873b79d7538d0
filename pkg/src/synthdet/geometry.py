"""3-D math for scene construction and labeling.

Conventions used throughout the toolkit:

* World space is right-handed, z up, units in meters.
* Rotations are extrinsic X-Y-Z Euler angles; a pose matrix is
  ``T @ Rz @ Ry @ Rx @ S``.
* The camera looks along -z in eye space (right-handed view matrix).
* Image origin is the top-left pixel corner, y grows downward.
* Matrices are 4x4 row-major numpy arrays applied to column vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Type aliases: a Vec3 is a float64 array of shape (3,), a Mat4 a (4, 4).
Vec3 = np.ndarray
Mat4 = np.ndarray


def vec3(x: float, y: float, z: float) -> Vec3:
    return np.array([x, y, z], dtype=np.float64)


class MeshParseError(ValueError):
    """Raised when a mesh file cannot be parsed; message names the line."""


@dataclass(frozen=True)
class Pose:
    """Translation + extrinsic XYZ Euler rotation + uniform scale."""

    translation: Vec3
    rotation: Vec3  # (rx, ry, rz) radians
    scale: float = 1.0

    def __post_init__(self):
        if not (self.scale > 0):
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not (np.all(np.isfinite(self.translation)) and np.all(np.isfinite(self.rotation))):
            raise ValueError("pose components must be finite")

    @staticmethod
    def identity() -> "Pose":
        return Pose(vec3(0, 0, 0), vec3(0, 0, 0), 1.0)


@dataclass(frozen=True)
class Mesh:
    """Triangle mesh of one object class.

    ``class_id`` is None for meshes that belong to no labeled class
    (distractors).
    """

    vertices: np.ndarray  # (N, 3) float64
    triangles: np.ndarray  # (M, 3) int64 vertex indices
    uvs: np.ndarray | None = None  # (N, 2) float64
    normals: np.ndarray | None = None  # (N, 3) float64
    class_id: int | None = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        t = np.asarray(self.triangles, dtype=np.int64)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if len(t) < 1:
            raise ValueError("mesh must have at least one triangle")
        if not np.all(np.isfinite(v)):
            raise ValueError("mesh has non-finite vertex coordinates")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        if self.uvs is not None:
            uv = np.asarray(self.uvs, dtype=np.float64)
            if len(uv) != len(v):
                raise ValueError("uv count must equal vertex count")
            object.__setattr__(self, "uvs", uv)
        if self.normals is not None:
            nm = np.asarray(self.normals, dtype=np.float64)
            object.__setattr__(self, "normals", nm)


@dataclass(frozen=True)
class Aabb:
    min: Vec3
    max: Vec3

    def __post_init__(self):
        if np.any(self.min > self.max):
            raise ValueError("aabb min must be <= max componentwise")

    def corners(self) -> np.ndarray:
        """The 8 corner points, shape (8, 3)."""
        lo, hi = self.min, self.max
        return np.array(
            [
                [x, y, z]
                for x in (lo[0], hi[0])
                for y in (lo[1], hi[1])
                for z in (lo[2], hi[2])
            ],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class CameraModel:
    eye: Vec3
    target: Vec3
    up: Vec3
    fov_y: float  # radians
    near: float
    far: float
    width: int
    height: int

    def __post_init__(self):
        if not (0 < self.near < self.far):
            raise ValueError("require 0 < near < far")
        if not (0 < self.fov_y < math.pi):
            raise ValueError("fov_y must be in (0, pi)")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if np.allclose(self.eye, self.target):
            raise ValueError("eye must differ from target")

    def view(self) -> Mat4:
        return look_at(self.eye, self.target, self.up)

    def projection(self) -> Mat4:
        return perspective(self.fov_y, self.width / self.height, self.near, self.far)


def parse_mesh(text: str, class_id: int | None = None) -> Mesh:
    """Parse a Wavefront OBJ subset (v, vt, vn, f; other directives ignored).

    Faces with more than three vertices are fan-triangulated from the
    first vertex.  Negative indices are resolved relative to the count of
    elements parsed so far, per the OBJ convention.  UVs and normals are
    stored per vertex, taken from the face references (last one wins).
    """
    verts: list[list[float]] = []
    uvs: list[list[float]] = []
    norms: list[list[float]] = []
    vert_uv: dict[int, int] = {}
    vert_norm: dict[int, int] = {}
    tris: list[tuple[int, int, int]] = []

    def fail(lineno: int, msg: str):
        raise MeshParseError(f"line {lineno}: {msg}")

    def floats(parts: list[str], lineno: int, n: int) -> list[float]:
        try:
            out = [float(p) for p in parts[:n]]
        except ValueError:
            fail(lineno, f"non-numeric coordinate in {parts!r}")
        if len(out) < n:
            fail(lineno, f"expected {n} coordinates, got {len(out)}")
        return out

    def resolve(idx: int, count: int, lineno: int) -> int:
        i = idx + count if idx < 0 else idx - 1
        if not (0 <= i < count):
            fail(lineno, f"index {idx} out of range (have {count})")
        return i

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            verts.append(floats(parts[1:], lineno, 3))
        elif tag == "vt":
            uvs.append(floats(parts[1:], lineno, 2))
        elif tag == "vn":
            norms.append(floats(parts[1:], lineno, 3))
        elif tag == "f":
            refs = parts[1:]
            if len(refs) < 3:
                fail(lineno, f"face with {len(refs)} vertices")
            corner: list[int] = []
            for ref in refs:
                fields = ref.split("/")
                try:
                    vi = int(fields[0])
                except ValueError:
                    fail(lineno, f"non-numeric vertex index {fields[0]!r}")
                vi = resolve(vi, len(verts), lineno)
                if len(fields) > 1 and fields[1]:
                    vert_uv[vi] = resolve(int(fields[1]), len(uvs), lineno)
                if len(fields) > 2 and fields[2]:
                    vert_norm[vi] = resolve(int(fields[2]), len(norms), lineno)
                corner.append(vi)
            for k in range(1, len(corner) - 1):
                tris.append((corner[0], corner[k], corner[k + 1]))

    if not tris:
        raise MeshParseError("no faces found")
    vertices = np.array(verts, dtype=np.float64)
    uv_arr = None
    if uvs and vert_uv:
        uv_arr = np.zeros((len(verts), 2), dtype=np.float64)
        for vi, ti in vert_uv.items():
            uv_arr[vi] = uvs[ti]
    norm_arr = None
    if norms and vert_norm:
        norm_arr = np.zeros((len(verts), 3), dtype=np.float64)
        for vi, ni in vert_norm.items():
            norm_arr[vi] = norms[ni]
    return Mesh(vertices, np.array(tris, dtype=np.int64), uv_arr, norm_arr, class_id)


def compose_trs(pose: Pose) -> Mat4:
    """Pose matrix T @ Rz @ Ry @ Rx @ S (extrinsic X-Y-Z rotation order)."""
    rx, ry, rz = (float(a) for a in pose.rotation)
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    cz, sz = math.cos(rz), math.sin(rz)
    s = pose.scale
    m_rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    m_ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    m_rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    rot = m_rz @ m_ry @ m_rx
    m = np.eye(4)
    m[:3, :3] = rot * s
    m[:3, 3] = pose.translation
    return m


def transform_points(m: Mat4, points: np.ndarray) -> np.ndarray:
    """Apply an affine 4x4 to points of shape (N, 3)."""
    p = np.asarray(points, dtype=np.float64)
    return p @ m[:3, :3].T + m[:3, 3]


def compute_aabb(points: np.ndarray) -> Aabb:
    p = np.asarray(points, dtype=np.float64)
    if p.size == 0:
        raise ValueError("compute_aabb requires at least one point")
    p = p.reshape(-1, 3)
    return Aabb(p.min(axis=0), p.max(axis=0))


def look_at(eye: Vec3, target: Vec3, up: Vec3) -> Mat4:
    eye = np.asarray(eye, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    fwd = target - eye
    n = np.linalg.norm(fwd)
    if n == 0:
        raise ValueError("eye and target coincide")
    fwd = fwd / n
    side = np.cross(fwd, up)
    sn = np.linalg.norm(side)
    if sn < 1e-12:
        raise ValueError("up vector parallel to view direction")
    side = side / sn
    upv = np.cross(side, fwd)
    m = np.eye(4)
    m[0, :3] = side
    m[1, :3] = upv
    m[2, :3] = -fwd
    m[0, 3] = -side @ eye
    m[1, 3] = -upv @ eye
    m[2, 3] = fwd @ eye
    return m


def perspective(fov_y: float, aspect: float, near: float, far: float) -> Mat4:
    """Standard right-handed frustum; clip w carries -z_eye."""
    f = 1.0 / math.tan(fov_y / 2.0)
    m = np.zeros((4, 4))
    m[0, 0] = f / aspect
    m[1, 1] = f
    m[2, 2] = (far + near) / (near - far)
    m[2, 3] = 2.0 * far * near / (near - far)
    m[3, 2] = -1.0
    return m


def project(
    point: Vec3, view: Mat4, proj: Mat4, width: int, height: int
) -> tuple[float, float, float] | None:
    """Project one world point to pixel coordinates.

    Returns ``(px, py, depth_eye)`` with the pixel origin at the top-left
    corner, or None when the point is at or behind the camera plane
    (clip w <= 0).
    """
    res = project_points(np.asarray(point, dtype=np.float64)[None, :], view, proj, width, height)
    px, py, depth, ok = res
    if not ok[0]:
        return None
    return float(px[0]), float(py[0]), float(depth[0])


def project_points(
    points: np.ndarray, view: Mat4, proj: Mat4, width: int, height: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized projection.

    Returns ``(px, py, depth_eye, in_front)``; entries with
    ``in_front == False`` hold garbage pixel values.
    """
    p = np.asarray(points, dtype=np.float64)
    eye = p @ view[:3, :3].T + view[:3, 3]
    clip = eye @ proj[:3, :3].T + proj[:3, 3]
    w = -(eye[:, 2])  # proj row 3 is (0, 0, -1, 0)
    ok = w > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ndc_x = clip[:, 0] / w
        ndc_y = clip[:, 1] / w
    px = (ndc_x + 1.0) / 2.0 * width
    py = (1.0 - ndc_y) / 2.0 * height
    return px, py, w, ok


def camera_from_spherical(target: Vec3, yaw: float, pitch: float, distance: float) -> Vec3:
    """Camera eye from yaw around global z, pitch from the x-y plane, and
    distance from the target."""
    if not (distance > 0):
        raise ValueError("distance must be positive")
    cp = math.cos(pitch)
    offset = np.array(
        [cp * math.cos(yaw), cp * math.sin(yaw), math.sin(pitch)], dtype=np.float64
    )
    return np.asarray(target, dtype=np.float64) + distance * offset


def spherical_up(yaw: float, pitch: float) -> Vec3:
    """Up vector for a zero-roll spherical camera; falls back to a
    horizontal up when the view direction is vertical."""
    if abs(math.cos(pitch)) < 1e-9:
        return vec3(-math.cos(yaw), -math.sin(yaw), 0.0)
    return vec3(0.0, 0.0, 1.0)
