"""Command-line interface.

Subcommands: ``generate`` (write a dataset), ``evaluate`` (score
detections against ground truth), ``preview`` (render one image with its
boxes drawn).  Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from . import assets, pipeline
from .evaluator import AnnotationParseError
from .sampler import CameraSamplingError, ConfigError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthdet",
        description="Deterministic domain-randomized dataset generation and "
        "object-detection evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a labeled synthetic dataset")
    gen.add_argument("--config", required=True, help="JSON generation config")
    gen.add_argument("--out", required=True, help="output dataset root")
    gen.add_argument("--train", type=int, required=True, help="training image count")
    gen.add_argument("--valid", type=int, required=True, help="validation image count")
    gen.add_argument("--seed", type=int, required=True, help="master seed")
    gen.add_argument("--workers", type=int, default=1)
    gen.add_argument("--meshes", help="directory of OBJ meshes (default: built-in set)")
    gen.add_argument("--textures", help="directory of texture images (default: built-in bank)")

    ev = sub.add_parser("evaluate", help="score detections against ground truth")
    ev.add_argument("--gt", required=True, help="ground-truth label directory")
    ev.add_argument("--pred", required=True, help="prediction file directory")
    ev.add_argument("--iou", type=float, default=0.5)
    ev.add_argument("--conf", type=float, default=0.8)
    ev.add_argument("--map-train", type=float, default=None)
    ev.add_argument("--map-valid", type=float, default=None)
    ev.add_argument("--map-test", type=float, default=None)
    ev.add_argument("--report", required=True, help="output report JSON path")

    pv = sub.add_parser("preview", help="render one image with its boxes drawn")
    pv.add_argument("--config", required=True)
    pv.add_argument("--seed", type=int, required=True)
    pv.add_argument("--index", type=int, required=True)
    pv.add_argument("--out", required=True, help="output PNG path")
    pv.add_argument("--meshes")
    pv.add_argument("--textures")
    return parser


def _load_assets(args):
    meshes = class_names = textures = None
    if args.meshes:
        meshes, class_names = assets.load_meshes(args.meshes)
    if args.textures:
        textures = assets.load_textures(args.textures)
    return meshes, textures, class_names


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            cfg = pipeline.load_config(args.config)
            meshes, textures, class_names = _load_assets(args)
            manifest = pipeline.generate(
                cfg,
                args.out,
                args.train,
                args.valid,
                args.seed,
                workers=args.workers,
                meshes=meshes,
                textures=textures,
                class_names=class_names,
            )
            print(
                f"generated {args.train} train + {args.valid} valid images in {args.out} "
                f"(median {manifest.timing['median_ms']:.1f} ms/image)"
            )
        elif args.command == "evaluate":
            report = pipeline.evaluate(
                args.gt,
                args.pred,
                iou_thr=args.iou,
                conf_thr=args.conf,
                report_path=args.report,
                map_train=args.map_train,
                map_valid=args.map_valid,
                map_test=args.map_test,
            )
            print(pipeline.report_text(report), end="")
        elif args.command == "preview":
            cfg = pipeline.load_config(args.config)
            meshes, textures, _ = _load_assets(args)
            pipeline.preview(
                cfg, args.seed, args.index, args.out, meshes=meshes, textures=textures
            )
            print(f"wrote {args.out}")
    except (ConfigError, CameraSamplingError, AnnotationParseError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
