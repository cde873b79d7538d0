"""Mesh and texture asset resolution.

Assets can come from directories (OBJ meshes, raster image textures,
both enumerated in sorted filename order so class ids and texture ids
are stable), or from the built-in procedural bank used by the default
configuration: ten simple part-like meshes and a seeded set of
checker / stripe / noise textures.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .geometry import Mesh, parse_mesh
from .renderer import Texture
from .rng import RandomStream

BUILTIN_CLASS_NAMES = (
    "slab",
    "bar",
    "column",
    "ell",
    "tee",
    "wedge",
    "pyramid",
    "cross",
    "step",
    "channel",
)

_TEXTURE_SEED = 0x5EED_7E37  # fixed bank seed


def _cuboid(dx, dy, dz, offset=(0.0, 0.0, 0.0)):
    ox, oy, oz = offset
    hx, hy, hz = dx / 2, dy / 2, dz / 2
    verts = [
        [ox + sx, oy + sy, oz + sz]
        for sx in (-hx, hx)
        for sy in (-hy, hy)
        for sz in (-hz, hz)
    ]
    tris = [
        [0, 1, 3], [0, 3, 2],
        [4, 6, 7], [4, 7, 5],
        [0, 4, 5], [0, 5, 1],
        [2, 3, 7], [2, 7, 6],
        [0, 2, 6], [0, 6, 4],
        [1, 5, 7], [1, 7, 3],
    ]
    return verts, tris


def _union(parts) -> tuple[list, list]:
    verts: list = []
    tris: list = []
    for pv, pt in parts:
        base = len(verts)
        verts.extend(pv)
        tris.extend([[a + base, b + base, c + base] for a, b, c in pt])
    return verts, tris


def _prism(points_xy, dz):
    """Extrude a convex polygon (ccw) along z, centered on z = 0."""
    n = len(points_xy)
    verts = [[x, y, -dz / 2] for x, y in points_xy] + [
        [x, y, dz / 2] for x, y in points_xy
    ]
    tris = []
    for k in range(1, n - 1):  # bottom + top fans
        tris.append([0, k + 1, k])
        tris.append([n, n + k, n + k + 1])
    for k in range(n):  # sides
        a, b = k, (k + 1) % n
        tris.append([a, b, n + b])
        tris.append([a, n + b, n + a])
    return verts, tris


def builtin_meshes() -> list[Mesh]:
    """Ten deterministic part-like meshes, sizes in the few-cm range."""
    specs = [
        _cuboid(0.06, 0.04, 0.01),  # slab
        _cuboid(0.08, 0.015, 0.015),  # bar
        _cuboid(0.02, 0.02, 0.07),  # column
        _union([_cuboid(0.06, 0.015, 0.01), _cuboid(0.015, 0.04, 0.01, (-0.0225, 0.0275, 0))]),  # ell
        _union([_cuboid(0.06, 0.015, 0.012), _cuboid(0.015, 0.045, 0.012, (0, 0.03, 0))]),  # tee
        _prism([(-0.03, -0.02), (0.03, -0.02), (0.03, 0.02)], 0.02),  # wedge
        None,  # pyramid, built below
        _union([_cuboid(0.07, 0.015, 0.01), _cuboid(0.015, 0.07, 0.01)]),  # cross
        _union([_cuboid(0.05, 0.03, 0.01), _cuboid(0.025, 0.03, 0.01, (-0.0125, 0, 0.01))]),  # step
        _union([
            _cuboid(0.06, 0.03, 0.008),
            _cuboid(0.06, 0.008, 0.02, (0, -0.011, 0.014)),
            _cuboid(0.06, 0.008, 0.02, (0, 0.011, 0.014)),
        ]),  # channel
    ]
    s = 0.025
    pyramid = (
        [[-s, -s, 0], [s, -s, 0], [s, s, 0], [-s, s, 0], [0, 0, 0.04]],
        [[0, 2, 1], [0, 3, 2], [0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
    )
    specs[6] = pyramid
    meshes = []
    for cid, (verts, tris) in enumerate(specs):
        v = np.array(verts, dtype=np.float64)
        v -= v.mean(axis=0)  # center so rotation behaves sensibly
        meshes.append(Mesh(v, np.array(tris, dtype=np.int64), class_id=cid))
    return meshes


def builtin_textures(count: int = 16, size: int = 64) -> list[Texture]:
    """Seeded procedural texture bank: checkers, stripes, and noise."""
    bank = []
    for i in range(count):
        stream = RandomStream(_TEXTURE_SEED, "texture", i)
        c0 = np.array([stream.next_int(0, 255) for _ in range(3)], dtype=np.float64)
        c1 = np.array([stream.next_int(0, 255) for _ in range(3)], dtype=np.float64)
        style = i % 3
        yy, xx = np.mgrid[0:size, 0:size]
        if style == 0:
            cell = stream.next_int(4, 16)
            mask = ((xx // cell) + (yy // cell)) % 2 == 0
            px = np.where(mask[..., None], c0, c1)
        elif style == 1:
            cell = stream.next_int(3, 12)
            mask = (xx // cell) % 2 == 0
            px = np.where(mask[..., None], c0, c1)
        else:
            u = stream.next_unit_block(size * size).reshape(size, size, 1)
            px = c0 + (c1 - c0) * u
        bank.append(Texture(np.clip(px, 0, 255).astype(np.uint8)))
    return bank


def load_meshes(directory: str | Path) -> tuple[list[Mesh], list[str]]:
    """OBJ files in sorted name order; class_id = position, class name =
    file stem."""
    paths = sorted(Path(directory).glob("*.obj"))
    if not paths:
        raise FileNotFoundError(f"no .obj meshes found in {directory}")
    meshes, names = [], []
    for cid, p in enumerate(paths):
        meshes.append(parse_mesh(p.read_text(), class_id=cid))
        names.append(p.stem)
    return meshes, names


def load_textures(directory: str | Path) -> list[Texture]:
    """Raster images in sorted name order, converted to 8-bit RGB."""
    exts = {".png", ".jpg", ".jpeg", ".bmp", ".tga"}
    paths = sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in exts)
    if not paths:
        raise FileNotFoundError(f"no texture images found in {directory}")
    return [Texture(np.asarray(Image.open(p).convert("RGB"))) for p in paths]
