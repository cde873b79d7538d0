"""Generate from your own meshes instead of the built-in bank.

Shows the OBJ loading path and how class count, meshes, and the config's
object probabilities fit together.

Run:  python3 demos/custom_assets.py
"""

from dataclasses import replace
from pathlib import Path

from synthdet.assets import builtin_textures, load_meshes
from synthdet.pipeline import default_config, generate

mesh_dir = Path("demo_out/meshes")
mesh_dir.mkdir(parents=True, exist_ok=True)

# Two tiny OBJ files: a square slab and a tetrahedron.  Any triangle (or
# fan-triangulatable polygon) OBJ with optional vt/vn records works.
# Coordinates are meters; keep objects a few centimeters across so they
# fit the default camera orbit (0.4-0.8 m from the scene center).
(mesh_dir / "a_slab.obj").write_text(
    "v -0.04 -0.04 0\nv 0.04 -0.04 0\nv 0.04 0.04 0\nv -0.04 0.04 0\n"
    "v -0.04 -0.04 0.016\nv 0.04 -0.04 0.016\nv 0.04 0.04 0.016\nv -0.04 0.04 0.016\n"
    "f 1 4 3 2\nf 5 6 7 8\nf 1 2 6 5\nf 2 3 7 6\nf 3 4 8 7\nf 4 1 5 8\n"
)
(mesh_dir / "b_tetra.obj").write_text(
    "v 0 0 0\nv 0.06 0 0\nv 0 0.06 0\nv 0 0 0.06\n"
    "f 1 3 2\nf 1 2 4\nf 2 3 4\nf 1 4 3\n"
)

# Files load in sorted order; the stem becomes the class name, the index
# the class id (a_slab -> 0, b_tetra -> 1).
meshes, names = load_meshes(mesh_dir)
print("classes:", names)

# p_objects must have one entry per class plus distractor plus void, and
# sum to 1.  Two classes here, so four entries.
cfg = replace(
    default_config(),
    p_objects=(0.35, 0.35, 0.15, 0.15),
    r_width=(480, 480),
    r_height=(360, 360),
)

manifest = generate(
    cfg,
    "demo_out/custom",
    n_train=6,
    n_valid=2,
    master_seed=7,
    meshes=meshes,
    textures=builtin_textures(),
    class_names=names,
)
print(f"wrote {manifest.counts} images under demo_out/custom")
print("class names recorded in manifest:", manifest.class_names)
