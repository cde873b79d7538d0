import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import unit_cube_mesh
from synthdet.geometry import Pose, compose_trs, project_points, transform_points, vec3
from synthdet.pipeline import default_config
from synthdet.postprocess import PostprocessConfig
from synthdet.rng import derive_stream
from synthdet.sampler import (
    CameraSamplingError,
    ConfigError,
    GenerationConfig,
    instance_mesh,
    make_distractor_mesh,
    sample_camera,
    sample_scene,
    settle,
)


def small_config(**overrides):
    cfg = default_config()
    base = dict(
        r_width=(640, 640),
        r_height=(480, 480),
        postprocess=PostprocessConfig.disabled(),
    )
    base.update(overrides)
    return replace(cfg, **base)


def test_all_void_scene(builtin_meshes, builtin_textures):
    cfg = small_config(p_objects=(0.0,) * 11 + (1.0,))
    plan = sample_scene(cfg, builtin_meshes, builtin_textures, derive_stream(1, "s", 0))
    assert plan.instances == ()


def test_zero_jitter_positions_on_grid(builtin_meshes, builtin_textures):
    cfg = small_config(
        p_objects=(1.0,) + (0.0,) * 11,
        eps_pos=(0.0, 0.0, 0.0),
        eps_rot=((0.0, 0.0),) * 3,
    )
    plan = sample_scene(cfg, builtin_meshes, builtin_textures, derive_stream(2, "s", 0))
    assert len(plan.instances) == 4
    expected = {(-0.05, -0.05), (-0.05, 0.05), (0.05, -0.05), (0.05, 0.05)}
    got = {(round(i.pose.translation[0], 9), round(i.pose.translation[1], 9)) for i in plan.instances}
    assert got == expected
    for inst in plan.instances:
        assert inst.pose.translation[2] == cfg.z_pos
        assert np.allclose(inst.pose.rotation, 0.0)


def test_kind_frequencies_match_p_objects(builtin_meshes, builtin_textures):
    # 10k kind draws, uniform over 12 outcomes, 4-sigma binomial bound
    from synthdet.sampler import _sample_kind

    cfg = small_config()
    stream = derive_stream(3, "s", 0)
    n = 10_000
    counts = {}
    for _ in range(n):
        k = _sample_kind(cfg, stream)
        counts[k] = counts.get(k, 0) + 1
    p = 1.0 / 12.0
    sigma = math.sqrt(n * p * (1 - p))
    outcomes = list(range(10)) + ["distractor", "void"]
    for k in outcomes:
        assert abs(counts.get(k, 0) - n * p) < 4 * sigma, k


def test_deterministic_camera_with_collapsed_ranges():
    cfg = small_config(
        t_pos=((0.1, 0.1), (0.2, 0.2), (0.0, 0.0)),
        c_pos=((0.3, 0.3), (0.4, 0.4), (0.6, 0.6)),
    )
    cam = sample_camera(cfg, [], derive_stream(4, "s", 0))
    assert np.allclose(cam.target, [0.1, 0.2, 0.0])
    assert cam.width == 640 and cam.height == 480
    from synthdet.geometry import camera_from_spherical

    assert np.allclose(cam.eye, camera_from_spherical(vec3(0.1, 0.2, 0.0), 0.3, 0.4, 0.6))


def test_single_center_at_target_always_accepted():
    cfg = small_config(t_pos=((0.0, 0.0),) * 3)
    cam = sample_camera(cfg, [vec3(0, 0, 0)], derive_stream(5, "s", 0))
    px, py, _, ok = project_points(
        np.zeros((1, 3)), cam.view(), cam.projection(), cam.width, cam.height
    )
    assert ok[0] and 0 < px[0] < cam.width and 0 < py[0] < cam.height


def test_unreachable_center_errors():
    cfg = small_config(c_pos=((0.0, 2 * math.pi), (-0.17, 0.17), (0.4, 0.8)))
    with pytest.raises(CameraSamplingError):
        # farther than the far plane from every reachable eye position
        sample_camera(cfg, [vec3(100.0, 0, 0)], derive_stream(6, "s", 0))


def test_accepted_plans_reproject_inside(builtin_meshes, builtin_textures):
    cfg = small_config()
    for seed in range(30):
        plan = sample_scene(cfg, builtin_meshes, builtin_textures, derive_stream(seed, "s", 1))
        if not plan.instances:
            continue
        centers = np.array([i.pose.translation for i in plan.instances])
        cam = plan.camera
        px, py, _, ok = project_points(centers, cam.view(), cam.projection(), cam.width, cam.height)
        assert np.all(ok)
        assert np.all((px > 0) & (px < cam.width) & (py > 0) & (py < cam.height))


def test_identical_stream_identical_plan(builtin_meshes, builtin_textures):
    cfg = small_config()
    a = sample_scene(cfg, builtin_meshes, builtin_textures, derive_stream(7, "s", 3))
    b = sample_scene(cfg, builtin_meshes, builtin_textures, derive_stream(7, "s", 3))
    assert len(a.instances) == len(b.instances)
    for ia, ib in zip(a.instances, b.instances):
        assert ia.slot == ib.slot and ia.class_id == ib.class_id
        assert np.array_equal(ia.pose.translation, ib.pose.translation)
        assert np.array_equal(ia.pose.rotation, ib.pose.rotation)
        assert ia.appearance == ib.appearance
    assert np.array_equal(a.camera.eye, b.camera.eye)
    assert a.camera.width == b.camera.width
    assert np.array_equal(a.lights.direction, b.lights.direction)


class TestSettle:
    def _plan_with(self, pose):
        from synthdet.renderer import LightModel
        from synthdet.sampler import Appearance, SceneInstance, ScenePlan
        from synthdet.geometry import CameraModel

        inst = SceneInstance((0, 0), 0, None, pose, Appearance(color=(1, 1, 1)))
        cam = CameraModel(
            vec3(1, 0, 0.5), vec3(0, 0, 0), vec3(0, 0, 1), math.radians(45), 0.01, 10, 64, 64
        )
        light = LightModel(0.35, vec3(0, 0, 1), 0.8)
        return ScenePlan((inst,), cam, Appearance(color=(0, 0, 0)), light, (0, "t", 0))

    def test_axis_aligned_cube_from_height(self):
        plan = self._plan_with(Pose(vec3(0, 0, 5.0), vec3(0, 0, 0)))
        out = settle(plan, [unit_cube_mesh()])
        world = transform_points(
            compose_trs(out.instances[0].pose), unit_cube_mesh().vertices
        )
        assert abs(world[:, 2].min()) < 1e-12
        assert abs(out.instances[0].pose.translation[2] - 0.5) < 1e-12

    def test_rotated_cube_rests_on_edge(self):
        plan = self._plan_with(Pose(vec3(0, 0, 5.0), vec3(math.pi / 4, 0, 0)))
        out = settle(plan, [unit_cube_mesh()])
        pose = out.instances[0].pose
        world = transform_points(compose_trs(pose), unit_cube_mesh().vertices)
        assert abs(world[:, 2].min()) < 1e-12
        # center sits half the rotated diagonal above the plane
        assert abs(pose.translation[2] - math.sqrt(2) / 2) < 1e-12
        assert np.allclose(pose.rotation, [math.pi / 4, 0, 0])

    def test_settle_keeps_xy_and_rotation(self):
        plan = self._plan_with(Pose(vec3(0.3, -0.2, 1.0), vec3(0.1, 0.2, 0.3)))
        out = settle(plan, [unit_cube_mesh()])
        pose = out.instances[0].pose
        assert pose.translation[0] == 0.3 and pose.translation[1] == -0.2
        assert np.allclose(pose.rotation, [0.1, 0.2, 0.3])


class TestDistractorMesh:
    def test_unit_dims_aabb(self):
        m = make_distractor_mesh(vec3(1, 1, 1))
        assert np.allclose(m.vertices.min(axis=0), [-0.5, -0.5, -0.5])
        assert np.allclose(m.vertices.max(axis=0), [0.5, 0.5, 0.5])
        assert len(m.vertices) == 8 and len(m.triangles) == 12

    def test_anisotropic_extents(self):
        m = make_distractor_mesh(vec3(2, 1, 3))
        ext = m.vertices.max(axis=0) - m.vertices.min(axis=0)
        assert np.allclose(ext, [2, 1, 3])

    def test_signed_volume_oracle(self):
        # divergence theorem: V = sum over faces of dot(v0, cross(v1, v2)) / 6
        dims = (0.7, 1.3, 0.4)
        m = make_distractor_mesh(vec3(*dims))
        v = m.vertices
        vol = 0.0
        for a, b, c in m.triangles:
            vol += np.dot(v[a], np.cross(v[b], v[c])) / 6.0
        assert abs(abs(vol) - dims[0] * dims[1] * dims[2]) < 1e-9

    def test_nonpositive_dims_error(self):
        with pytest.raises(ValueError):
            make_distractor_mesh(vec3(1, 0, 1))


def test_distractor_instances_get_dims(builtin_meshes, builtin_textures):
    cfg = small_config(p_objects=(0.0,) * 10 + (1.0, 0.0))
    plan = sample_scene(cfg, builtin_meshes, builtin_textures, derive_stream(8, "s", 0))
    assert len(plan.instances) == 4
    for inst in plan.instances:
        assert inst.class_id is None
        for k, (lo, hi) in enumerate(cfg.distractor_dims):
            assert lo <= inst.dims[k] <= hi
        mesh = instance_mesh(inst, builtin_meshes)
        assert len(mesh.triangles) == 12


def test_empty_texture_bank_errors(builtin_meshes):
    cfg = small_config()
    with pytest.raises(ValueError, match="texture bank"):
        sample_scene(cfg, builtin_meshes, [], derive_stream(9, "s", 0))


class TestConfigValidation:
    def test_probability_sum(self):
        with pytest.raises(ConfigError, match="p_objects"):
            small_config(p_objects=(0.5, 0.2, 0.2))

    def test_bad_range(self):
        with pytest.raises(ConfigError, match="c_pos"):
            small_config(c_pos=((1.0, 0.0), (0.0, 0.0), (0.5, 0.5)))

    def test_bad_i_type(self):
        with pytest.raises(ConfigError, match="i_type"):
            small_config(i_type="BGR")

    def test_grid(self):
        with pytest.raises(ConfigError):
            small_config(grid_n=0)
