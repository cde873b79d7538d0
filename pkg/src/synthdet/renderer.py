"""Software z-buffer renderer for sampled scenes.

Produces RGB and/or depth frames of a scene plan: a large ground-plane
quad at z = 0 plus every placed instance, rasterized with
perspective-correct interpolation and flat Lambert shading.  Back-face
culling is off (thin parts must render from both sides); the face normal
is flipped toward the camera before shading.

Depth stores the eye-space axial distance (-z_eye) in meters; pixels
with no hit keep the sky color and depth = far.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .geometry import Mesh, compose_trs, transform_points
from .raster import raster_triangles

if TYPE_CHECKING:  # pragma: no cover
    from .sampler import Appearance, ScenePlan

SKY_COLOR = (128, 178, 255)
GROUND_UV_PERIOD_M = 0.5  # ground texture repeats every 0.5 m


@dataclass(frozen=True)
class Texture:
    pixels: np.ndarray  # (H, W, 3) uint8

    def __post_init__(self):
        p = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("texture must be (H, W, 3) with H, W >= 1")
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class LightModel:
    ambient: float
    direction: np.ndarray  # unit vector, surface -> light
    intensity: float

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("light direction must be a unit vector")
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class Frame:
    width: int
    height: int
    rgb: np.ndarray | None  # (H, W, 3) uint8
    depth: np.ndarray | None  # (H, W) float64, meters


def shade(normal: np.ndarray, base: np.ndarray, light: LightModel) -> np.ndarray:
    """Lambert: clamp(base * (ambient + intensity * max(0, n.l)));
    base and result are RGB in [0, 1]."""
    lam = light.ambient + light.intensity * max(0.0, float(np.dot(normal, light.direction)))
    return np.clip(np.asarray(base, dtype=np.float64) * lam, 0.0, 1.0)


def sample_texture(tex: Texture, u: float, v: float) -> np.ndarray:
    """Repeat-wrapped bilinear sample; returns RGB floats in [0, 255]."""
    tw, th = tex.width, tex.height
    fx = u * tw - 0.5
    fy = v * th - 0.5
    ix, iy = int(np.floor(fx)), int(np.floor(fy))
    ax, ay = fx - ix, fy - iy
    x0, x1 = ix % tw, (ix + 1) % tw
    y0, y1 = iy % th, (iy + 1) % th
    p = tex.pixels.astype(np.float64)
    return (
        (1 - ax) * (1 - ay) * p[y0, x0]
        + ax * (1 - ay) * p[y0, x1]
        + (1 - ax) * ay * p[y1, x0]
        + ax * ay * p[y1, x1]
    )


def planar_uv(mesh: Mesh) -> np.ndarray:
    """Per-corner fallback UVs, shape (T, 3, 2).

    Each triangle is projected onto the two axes orthogonal to the
    dominant component of its face normal, shifted to the object AABB
    corner and scaled by 1 / (largest AABB extent).
    """
    v = mesh.vertices
    t = mesh.triangles
    lo = v.min(axis=0)
    extent = float((v.max(axis=0) - lo).max())
    scale = 1.0 / extent if extent > 0 else 1.0
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    n = np.cross(p1 - p0, p2 - p0)
    dominant = np.argmax(np.abs(n), axis=1)
    uvs = np.empty((len(t), 3, 2), dtype=np.float64)
    axes_for = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
    for d, (a, b) in axes_for.items():
        sel = dominant == d
        for c, pc in enumerate((p0, p1, p2)):
            uvs[sel, c, 0] = (pc[sel, a] - lo[a]) * scale
            uvs[sel, c, 1] = (pc[sel, b] - lo[b]) * scale
    return uvs


def _corner_uvs(mesh: Mesh) -> np.ndarray:
    if mesh.uvs is not None:
        return mesh.uvs[mesh.triangles]
    return planar_uv(mesh)


def _face_shades(world: np.ndarray, tris: np.ndarray, eye: np.ndarray, light: LightModel) -> np.ndarray:
    p0, p1, p2 = world[tris[:, 0]], world[tris[:, 1]], world[tris[:, 2]]
    n = np.cross(p1 - p0, p2 - p0)
    norm = np.linalg.norm(n, axis=1)
    norm[norm == 0] = 1.0
    n = n / norm[:, None]
    centroid = (p0 + p1 + p2) / 3.0
    to_eye = eye[None, :] - centroid
    flip = np.sum(n * to_eye, axis=1) < 0
    n[flip] = -n[flip]
    lam = light.ambient + light.intensity * np.maximum(0.0, n @ light.direction)
    return lam


def _clip_near(corners_eye: np.ndarray, uvs: np.ndarray, near: float):
    """Sutherland-Hodgman clip of one triangle against z_eye = -near.

    Returns (eye_positions, uvs) arrays of fan-triangulated output, or
    None when fully clipped.
    """
    keep = []
    n_in = 0
    pts = [(corners_eye[i], uvs[i]) for i in range(3)]
    out_pts = []
    for i in range(3):
        a, ua = pts[i]
        b, ub = pts[(i + 1) % 3]
        a_in = a[2] <= -near
        b_in = b[2] <= -near
        if a_in:
            out_pts.append((a, ua))
        if a_in != b_in:
            t = (-near - a[2]) / (b[2] - a[2])
            out_pts.append((a + t * (b - a), ua + t * (ub - ua)))
    if len(out_pts) < 3:
        return None
    tri_eye = []
    tri_uv = []
    for k in range(1, len(out_pts) - 1):
        tri_eye.append([out_pts[0][0], out_pts[k][0], out_pts[k + 1][0]])
        tri_uv.append([out_pts[0][1], out_pts[k][1], out_pts[k + 1][1]])
    return np.array(tri_eye), np.array(tri_uv)


_DUMMY_TEX = np.zeros((1, 1, 3), dtype=np.uint8)


def _draw(
    rgb,
    depth,
    world: np.ndarray,
    tris: np.ndarray,
    corner_uvs: np.ndarray,
    shades: np.ndarray,
    texture: np.ndarray | None,
    base_color: np.ndarray,
    view: np.ndarray,
    proj: np.ndarray,
    width: int,
    height: int,
    near: float,
    far: float,
):
    eye_pts = world @ view[:3, :3].T + view[:3, 3]
    c_eye = eye_pts[tris]  # (T, 3, 3)
    c_uv = corner_uvs
    d = -c_eye[:, :, 2]
    in_front = np.all(d > near, axis=1)
    behind = np.all(d <= near, axis=1)
    crossing = ~in_front & ~behind

    batches = []
    if np.any(in_front):
        batches.append((c_eye[in_front], c_uv[in_front], shades[in_front]))
    if np.any(crossing):
        for ti in np.nonzero(crossing)[0]:
            clipped = _clip_near(c_eye[ti], c_uv[ti], near)
            if clipped is None:
                continue
            ce, cu = clipped
            batches.append((ce, cu, np.full(len(ce), shades[ti])))

    f = proj[1, 1]
    fx = proj[0, 0]
    for ce, cu, sh in batches:
        dd = -ce[:, :, 2]
        inv_d = 1.0 / dd
        ndc_x = fx * ce[:, :, 0] * inv_d
        ndc_y = f * ce[:, :, 1] * inv_d
        px = (ndc_x + 1.0) / 2.0 * width
        py = (1.0 - ndc_y) / 2.0 * height
        raster_triangles(
            rgb,
            depth,
            np.ascontiguousarray(px),
            np.ascontiguousarray(py),
            np.ascontiguousarray(inv_d),
            np.ascontiguousarray(cu[:, :, 0] * inv_d),
            np.ascontiguousarray(cu[:, :, 1] * inv_d),
            np.ascontiguousarray(sh),
            texture is not None,
            texture if texture is not None else _DUMMY_TEX,
            np.asarray(base_color, dtype=np.float64),
            far,
        )


def _resolve_appearance(appearance: "Appearance", textures: list[Texture]):
    """-> (texture pixels or None, base color in [0, 1])."""
    if appearance.texture_id is not None:
        return textures[appearance.texture_id].pixels, np.ones(3)
    return None, np.asarray(appearance.color, dtype=np.float64)


def render(
    plan: "ScenePlan",
    meshes,
    textures: list[Texture],
    i_type: str = "RGB",
) -> Frame:
    """Rasterize a scene plan into an RGB, depth, or RGB-D frame."""
    from .sampler import instance_mesh  # deferred: sampler imports renderer types

    cam = plan.camera
    view = cam.view()
    proj = cam.projection()
    w, h = cam.width, cam.height
    rgb = np.empty((h, w, 3), dtype=np.uint8)
    rgb[:, :] = SKY_COLOR
    depth = np.full((h, w), cam.far, dtype=np.float64)

    # ground plane quad at z = 0, sized to cover the horizon
    extent = 50.0 * max(
        float(np.linalg.norm(cam.eye - cam.target)),
        float(np.abs(cam.target).max()),
        0.02,
    )
    cxy = np.array([cam.target[0], cam.target[1]])
    gp = np.array(
        [
            [cxy[0] - extent, cxy[1] - extent, 0.0],
            [cxy[0] + extent, cxy[1] - extent, 0.0],
            [cxy[0] + extent, cxy[1] + extent, 0.0],
            [cxy[0] - extent, cxy[1] + extent, 0.0],
        ]
    )
    gtris = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    guv = gp[:, :2][gtris] / GROUND_UV_PERIOD_M
    gshades = _face_shades(gp, gtris, cam.eye, plan.lights)
    gtex, gcolor = _resolve_appearance(plan.ground_appearance, textures)
    _draw(rgb, depth, gp, gtris, guv, gshades, gtex, gcolor, view, proj, w, h, cam.near, cam.far)

    for inst in plan.instances:
        mesh = instance_mesh(inst, meshes)
        world = transform_points(compose_trs(inst.pose), mesh.vertices)
        shades = _face_shades(world, mesh.triangles, cam.eye, plan.lights)
        tex, color = _resolve_appearance(inst.appearance, textures)
        _draw(
            rgb,
            depth,
            world,
            mesh.triangles,
            _corner_uvs(mesh),
            shades,
            tex,
            color,
            view,
            proj,
            w,
            h,
            cam.near,
            cam.far,
        )

    return Frame(
        width=w,
        height=h,
        rgb=rgb if i_type in ("RGB", "RGBD") else None,
        depth=depth if i_type in ("D", "RGBD") else None,
    )
