import math

import numpy as np
import pytest

from synthdet import assets
from synthdet.geometry import Mesh


def unit_cube_mesh(class_id=0) -> Mesh:
    verts = np.array(
        [[x, y, z] for x in (-0.5, 0.5) for y in (-0.5, 0.5) for z in (-0.5, 0.5)]
    )
    tris = np.array(
        [
            [0, 1, 3], [0, 3, 2],
            [4, 6, 7], [4, 7, 5],
            [0, 4, 5], [0, 5, 1],
            [2, 3, 7], [2, 7, 6],
            [0, 2, 6], [0, 6, 4],
            [1, 5, 7], [1, 7, 3],
        ],
        dtype=np.int64,
    )
    return Mesh(verts, tris, class_id=class_id)


def tetrahedron_mesh(class_id=0) -> Mesh:
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.float64)
    tris = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]], dtype=np.int64)
    return Mesh(verts, tris, class_id=class_id)


@pytest.fixture(scope="session")
def builtin_meshes():
    return assets.builtin_meshes()


@pytest.fixture(scope="session")
def builtin_textures():
    return assets.builtin_textures()
