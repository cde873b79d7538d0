"""End-to-end acceptance gate.

Each test checks one release criterion and prints a single [PASS]/[FAIL]
line with the measured value, so the run log doubles as a report.
"""

import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from conftest import tetrahedron_mesh, unit_cube_mesh
from synthdet.evaluator import (
    adapted_confusion,
    average_precision,
    g_reality,
    parse_annotations,
    parse_detections,
)
from synthdet.geometry import CameraModel, Mesh, Pose, vec3
from synthdet.labeler import BoxMethod, annotate
from synthdet.pipeline import default_config, generate
from synthdet.postprocess import gaussian_blur, pepper_salt
from synthdet.renderer import LightModel
from synthdet.rng import derive_stream
from synthdet.sampler import Appearance, SceneInstance, ScenePlan, settle
from test_evaluator import ap_oracle, det, gt, random_eval_instance


def report(capfd, ok: bool, name: str, detail: str):
    with capfd.disabled():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def tree_files(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and p.name != "manifest.json"
    }


def manifest_sans_timing(root: Path) -> dict:
    doc = json.loads((root / "manifest.json").read_text())
    doc.pop("timing", None)
    return doc


def test_determinism_across_runs_and_workers(tmp_path, capfd):
    cfg = default_config()
    runs = {}
    for name, workers in (("a", 1), ("b", 1), ("c", 4)):
        generate(cfg, tmp_path / name, n_train=50, n_valid=10, master_seed=42, workers=workers)
        runs[name] = tree_files(tmp_path / name)
    same_rerun = runs["a"] == runs["b"]
    same_workers = runs["a"] == runs["c"]
    manifests_agree = manifest_sans_timing(tmp_path / "a") == manifest_sans_timing(
        tmp_path / "c"
    ) == manifest_sans_timing(tmp_path / "b")
    ok = same_rerun and same_workers and manifests_agree
    report(
        capfd, ok, "determinism",
        f"50+10 images, seed 42: rerun identical={same_rerun}, "
        f"workers 1 vs 4 identical={same_workers}, manifests agree={manifests_agree} "
        "(timing stats excluded)",
    )


def test_throughput_budget(tmp_path, capfd):
    cfg = replace(
        default_config(),
        grid_n=3,  # at most 9 objects
        p_objects=tuple([0.8 / 10] * 10 + [0.1, 0.1]),
        r_width=(640, 640),
        r_height=(480, 480),
    )
    generate(cfg, tmp_path, n_train=200, n_valid=0, master_seed=7)
    doc = json.loads((tmp_path / "manifest.json").read_text())
    median_s = doc["timing"]["median_ms"] / 1000.0
    ok = median_s <= 0.5
    report(
        capfd, ok, "throughput",
        f"median {median_s * 1000:.1f} ms/image over 200 images at 640x480 "
        f"(budget 500 ms, hard ceiling 1000 ms)",
    )


# -- independent plain-float projector used only by the label criterion -------


def _oracle_project(point, eye, target, fov_y, width, height):
    fx, fy, fz = (target[i] - eye[i] for i in range(3))
    n = math.sqrt(fx * fx + fy * fy + fz * fz)
    fx, fy, fz = fx / n, fy / n, fz / n
    ux, uy, uz = 0.0, 0.0, 1.0
    rx, ry, rz = fy * uz - fz * uy, fz * ux - fx * uz, fx * uy - fy * ux
    n = math.sqrt(rx * rx + ry * ry + rz * rz)
    rx, ry, rz = rx / n, ry / n, rz / n
    ux, uy, uz = ry * fz - rz * fy, rz * fx - rx * fz, rx * fy - ry * fx
    px, py, pz = (point[i] - eye[i] for i in range(3))
    x_eye = rx * px + ry * py + rz * pz
    y_eye = ux * px + uy * py + uz * pz
    z_eye = -(fx * px + fy * py + fz * pz)
    f = 1.0 / math.tan(fov_y / 2.0)
    aspect = width / height
    w = -z_eye
    sx = (f / aspect) * x_eye / w
    sy = f * y_eye / w
    return (sx + 1.0) / 2.0 * width, (1.0 - sy) / 2.0 * height


def _oracle_cube_corners(pose_t, pose_r, scale):
    ax, ay, az = pose_r
    out = []
    for x in (-0.5, 0.5):
        for y in (-0.5, 0.5):
            for z in (-0.5, 0.5):
                x1, y1, z1 = x * scale, y * scale, z * scale
                y2 = y1 * math.cos(ax) - z1 * math.sin(ax)
                z2 = y1 * math.sin(ax) + z1 * math.cos(ax)
                x2 = x1
                x3 = x2 * math.cos(ay) + z2 * math.sin(ay)
                z3 = -x2 * math.sin(ay) + z2 * math.cos(ay)
                y3 = y2
                x4 = x3 * math.cos(az) - y3 * math.sin(az)
                y4 = x3 * math.sin(az) + y3 * math.cos(az)
                z4 = z3
                out.append((x4 + pose_t[0], y4 + pose_t[1], z4 + pose_t[2]))
    return out


CUBE_CASES = [
    # (translation, rotation, scale, eye, target)
    ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.2, (1.5, 0.0, 0.5), (0.0, 0.0, 0.0)),
    ((0.05, -0.05, 0.1), (0.3, 0.0, 0.0), 0.15, (1.0, 1.0, 0.8), (0.0, 0.0, 0.1)),
    ((0.0, 0.1, 0.05), (0.0, 0.5, 0.0), 0.1, (-1.2, 0.4, 0.6), (0.0, 0.05, 0.0)),
    ((-0.1, 0.0, 0.2), (0.0, 0.0, 0.8), 0.25, (0.3, -1.4, 0.9), (-0.05, 0.0, 0.1)),
    ((0.02, 0.03, 0.04), (0.4, -0.3, 1.1), 0.12, (0.9, 0.9, 1.2), (0.0, 0.0, 0.05)),
]


def test_bounding_box_correctness(capfd):
    w, h = 640, 480
    worst = 0.0
    for t, r, s, eye, target in CUBE_CASES:
        cam = CameraModel(
            vec3(*eye), vec3(*target), vec3(0, 0, 1), math.radians(45), 0.01, 10.0, w, h
        )
        inst = SceneInstance((0, 0), 0, None, Pose(vec3(*t), vec3(*r), s),
                             Appearance(color=(1, 1, 1)))
        plan = ScenePlan((inst,), cam, Appearance(color=(0, 0, 0)),
                         LightModel(0.35, vec3(0, 0, 1), 0.8), (0, "t", 0))
        (box,) = annotate(plan, [unit_cube_mesh()], BoxMethod.ALL_POINT)
        pts = [
            _oracle_project(p, eye, target, math.radians(45), w, h)
            for p in _oracle_cube_corners(t, r, s)
        ]
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        expect = (
            (min(xs) + max(xs)) / 2 / w, (min(ys) + max(ys)) / 2 / h,
            (max(xs) - min(xs)) / w, (max(ys) - min(ys)) / h,
        )
        got = (box.x_center, box.y_center, box.width, box.height)
        worst = max(worst, max(abs(a - b) for a, b in zip(got, expect)))
    ok = worst < 1 / 640
    report(capfd, ok, "label correctness",
           f"5 hand-built cube/camera cases, worst coordinate error "
           f"{worst * 640:.4f} px (tolerance 1 px at 640 wide)")


def random_hull_mesh(stream) -> Mesh:
    pts = stream.next_unit_block(1500).reshape(500, 3) * 2.0 - 1.0
    hull = ConvexHull(pts)
    return Mesh(pts, hull.simplices.astype(np.int64), class_id=0)


def test_containment_property(capfd):
    stream = derive_stream(100, "contain", 0)
    meshes = [unit_cube_mesh(0), tetrahedron_mesh(1), random_hull_mesh(stream)]
    violations = 0
    checked = 0
    trials = 0
    while checked < 1000 and trials < 5000:
        trials += 1
        mesh = meshes[stream.next_int(0, 2)]
        pose = Pose(
            vec3(*(stream.next_uniform(-0.1, 0.1) for _ in range(3))),
            vec3(*(stream.next_uniform(-math.pi, math.pi) for _ in range(3))),
            scale=stream.next_uniform(0.05, 0.3),
        )
        yaw = stream.next_uniform(0, 2 * math.pi)
        pitch = stream.next_uniform(0.2, 1.2)
        eye = (
            1.5 * math.cos(pitch) * math.cos(yaw),
            1.5 * math.cos(pitch) * math.sin(yaw),
            1.5 * math.sin(pitch),
        )
        cam = CameraModel(vec3(*eye), vec3(0, 0, 0), vec3(0, 0, 1),
                          math.radians(45), 0.01, 10.0, 640, 480)
        inst = SceneInstance((0, 0), 0, None, pose, Appearance(color=(1, 1, 1)))
        plan = ScenePlan((inst,), cam, Appearance(color=(0, 0, 0)),
                         LightModel(0.35, vec3(0, 0, 1), 0.8), (0, "t", 0))
        ap = annotate(plan, [mesh], BoxMethod.ALL_POINT)
        ep = annotate(plan, [mesh], BoxMethod.EIGHT_POINT)
        if not ap or not ep:
            continue
        checked += 1
        a, e = ap[0], ep[0]
        tol = 1e-9
        inside = (
            a.x_center - a.width / 2 >= e.x_center - e.width / 2 - tol
            and a.x_center + a.width / 2 <= e.x_center + e.width / 2 + tol
            and a.y_center - a.height / 2 >= e.y_center - e.height / 2 - tol
            and a.y_center + a.height / 2 <= e.y_center + e.height / 2 + tol
        )
        violations += 0 if inside else 1
    ok = checked >= 1000 and violations == 0
    report(capfd, ok, "containment",
           f"tight box inside corner box in {checked - violations}/{checked} trials "
           "(cube, tetrahedron, 500-vertex hull)")


def test_ap_oracle_equivalence(capfd):
    stream = derive_stream(101, "ap", 0)
    worst = 0.0
    for _ in range(500):
        n = stream.next_int(1, 40)
        total_gt = stream.next_int(1, 20)
        flags, tp_left = [], total_gt
        for _ in range(n):
            is_tp = tp_left > 0 and stream.next_unit() < 0.5
            flags.append(is_tp)
            tp_left -= 1 if is_tp else 0
        worst = max(worst, abs(average_precision(flags, total_gt) - ap_oracle(flags, total_gt)))
    ok = worst < 1e-9
    report(capfd, ok, "AP oracle",
           f"500 random instances, max |AP - envelope oracle| = {worst:.2e}")


def test_reality_gap_values(capfd):
    a = round(g_reality(99.84, 83.16), 2)
    b = round(g_reality(99.84, 10.83), 2)
    ok = abs(a - 16.68) < 1e-9 and abs(b - 89.01) < 1e-9
    report(capfd, ok, "reality gap",
           f"g_reality(99.84, 83.16) = {a}, g_reality(99.84, 10.83) = {b} "
           "(expected 16.68 and 89.01)")


def test_confusion_matrix_rules(capfd):
    # perfect one-to-one -> diagonal
    g1 = [("a", gt(0, 0.1, 0.1, 0.3, 0.3)), ("a", gt(1, 0.5, 0.5, 0.7, 0.7))]
    d1 = [("a", det(0, 0.95, 0.1, 0.1, 0.3, 0.3)), ("a", det(1, 0.95, 0.5, 0.5, 0.7, 0.7))]
    m1 = adapted_confusion(d1, g1, 2, 0.8, 0.5).counts
    e1 = np.zeros((3, 3), dtype=np.int64)
    e1[0, 0] = e1[1, 1] = 1
    case1 = np.array_equal(m1, e1)

    # missed ground truth -> extra column
    m2 = adapted_confusion([], [("a", gt(1, 0.1, 0.1, 0.3, 0.3))], 2, 0.8, 0.5).counts
    e2 = np.zeros((3, 3), dtype=np.int64)
    e2[1, 2] = 1
    case2 = np.array_equal(m2, e2)

    # two predictions over one ground truth -> that truth counted twice
    g3 = [("a", gt(0, 0.1, 0.1, 0.4, 0.4))]
    d3 = [("a", det(0, 0.95, 0.1, 0.1, 0.4, 0.4)), ("a", det(1, 0.9, 0.12, 0.1, 0.42, 0.4))]
    m3 = adapted_confusion(d3, g3, 2, 0.8, 0.5).counts
    e3 = np.zeros((3, 3), dtype=np.int64)
    e3[0, 0] = e3[0, 1] = 1
    case3 = np.array_equal(m3, e3)

    ok = case1 and case2 and case3
    report(capfd, ok, "confusion rules",
           f"diagonal={case1}, missed-truth column={case2}, double-count row={case3}")


def test_settle_invariant(capfd):
    stream = derive_stream(102, "settle", 0)
    meshes = [unit_cube_mesh(0), tetrahedron_mesh(1)]
    cam = CameraModel(vec3(1, 1, 1), vec3(0, 0, 0), vec3(0, 0, 1),
                      math.radians(45), 0.01, 10.0, 64, 64)
    worst = 0.0
    for _ in range(1000):
        if stream.next_unit() < 0.3:
            dims = vec3(*(stream.next_uniform(0.01, 0.06) for _ in range(3)))
            inst = SceneInstance((0, 0), None, dims,
                                 Pose(vec3(0, 0, stream.next_uniform(0, 0.2)),
                                      vec3(*(stream.next_uniform(-math.pi, math.pi)
                                             for _ in range(3)))),
                                 Appearance(color=(1, 1, 1)))
        else:
            inst = SceneInstance((0, 0), stream.next_int(0, 1), None,
                                 Pose(vec3(stream.next_uniform(-0.1, 0.1),
                                           stream.next_uniform(-0.1, 0.1),
                                           stream.next_uniform(0, 0.2)),
                                      vec3(*(stream.next_uniform(-math.pi, math.pi)
                                             for _ in range(3))),
                                      scale=stream.next_uniform(0.05, 0.3)),
                                 Appearance(color=(1, 1, 1)))
        plan = ScenePlan((inst,), cam, Appearance(color=(0, 0, 0)),
                         LightModel(0.35, vec3(0, 0, 1), 0.8), (0, "t", 0))
        settled = settle(plan, meshes)
        from synthdet.geometry import compose_trs, transform_points
        from synthdet.sampler import instance_mesh

        s = settled.instances[0]
        world = transform_points(compose_trs(s.pose), instance_mesh(s, meshes).vertices)
        worst = max(worst, abs(float(world[:, 2].min())))
    ok = worst <= 1e-6
    report(capfd, ok, "settle invariant",
           f"1000 dropped instances, max |lowest vertex z| = {worst:.2e} m "
           "(tolerance 1e-6)")


def test_noise_statistics(capfd):
    rgb = np.full((512, 512, 3), 100, dtype=np.uint8)
    out = pepper_salt(rgb, 0.05, derive_stream(103, "noise", 0))
    frac = float(np.mean(out != 100))
    stat_ok = abs(frac - 0.05) < 0.005

    ident_pepper = np.array_equal(pepper_salt(rgb, 0.0, derive_stream(103, "noise", 1)), rgb)
    const = np.full((64, 64, 3), 42, dtype=np.uint8)
    ident_blur = np.array_equal(gaussian_blur(const, 7), const)
    ok = stat_ok and ident_pepper and ident_blur
    report(capfd, ok, "noise statistics",
           f"rate 0.05 altered fraction {frac:.4f} (within 0.005), "
           f"rate-0 identity={ident_pepper}, constant-blur identity={ident_blur}")


def test_structural_smoke_100_images(tmp_path, capfd):
    cfg = default_config()
    generate(cfg, tmp_path, n_train=100, n_valid=0, master_seed=1234)
    labels = sorted((tmp_path / "train" / "labels").glob("*.txt"))
    n_files = len(labels)
    classes_seen = set()
    coords_ok = True
    for path in labels:
        for b in parse_annotations(path.read_text()):
            classes_seen.add(b.class_id)
            for v in (b.x_center - b.width / 2, b.x_center + b.width / 2,
                      b.y_center - b.height / 2, b.y_center + b.height / 2):
                coords_ok = coords_ok and -1e-9 <= v <= 1 + 1e-9
    all_classes = classes_seen == set(range(10))
    # the detection parser accepts a synthesized prediction per image
    for path in labels[:5]:
        lines = []
        for b in parse_annotations(path.read_text()):
            lines.append(
                f"{b.class_id} 0.9 {b.x_center} {b.y_center} {b.width} {b.height}"
            )
        parse_detections("\n".join(lines))
    ok = n_files == 100 and coords_ok and all_classes
    report(capfd, ok, "structural smoke",
           f"100 generated images: {n_files} label files parse, "
           f"coordinates in unit square={coords_ok}, "
           f"classes present={len(classes_seen)}/10")
