"""Command-line interface.

Subcommands run the pipeline stages on a scene file: `generate`,
`accumulate`, `mesh`, `slice`, `analyze`, `run` (all or --stage subset)
and `validate`. Exit codes: 0 ok, 2 validation error, 3 I/O error,
4 resource limit.
"""

from __future__ import annotations

import argparse
import sys

from .errors import (
    EXIT_IO,
    EXIT_OK,
    EXIT_RESOURCE,
    EXIT_VALIDATION,
    InputFormatError,
    InvalidArgumentError,
    ResourceLimitError,
    SceneValidationError,
)
from .pipeline import remodel_step, run_pipeline
from .scene import STAGES, load_scene, serialize_scene


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rheospan",
        description="Generate bridging structures: deck loft, helicoid lattice, raster accumulation, fabrication data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_stage=False):
        p.add_argument("--scene", required=True, help="scene JSON file")
        p.add_argument("--out", default=None, help="output directory (default: scene's output.dir)")
        p.add_argument("--raster", default=None, help="override the accumulation raster (remodel step)")
        p.add_argument("--threads", type=int, default=1, help="worker count; affects speed only, never output")
        p.add_argument("--verbose", action="store_true", help="progress notes on stdout")
        p.add_argument("--dump-grid", action="store_true", help="also dump the sampled voxel grid (VGRID)")
        if with_stage:
            p.add_argument(
                "--stage",
                default=",".join(STAGES),
                help=f"comma-separated subset of {','.join(STAGES)}",
            )

    for name in STAGES:
        p = sub.add_parser(name, help=f"run the {name} stage")
        add_common(p)
    run_p = sub.add_parser("run", help="run all stages (or --stage subset)")
    add_common(run_p, with_stage=True)
    val_p = sub.add_parser("validate", help="parse and validate a scene file")
    val_p.add_argument("--scene", required=True, help="scene JSON file")
    val_p.add_argument("--verbose", action="store_true", help="echo the resolved scene")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        scene = load_scene(args.scene)
        if args.command == "validate":
            if args.verbose:
                sys.stdout.write(serialize_scene(scene))
            print(f"OK {args.scene}")
            return EXIT_OK
        if args.raster:
            scene = remodel_step(scene, args.raster)
        stages = list(STAGES) if args.command == "run" else [args.command]
        if args.command == "run" and args.stage:
            stages = [s.strip() for s in args.stage.split(",") if s.strip()]
        manifest = run_pipeline(
            scene,
            stages=stages,
            out_dir=args.out,
            dump_grid=args.dump_grid,
            threads=args.threads,
            verbose=args.verbose,
        )
        print(f"OK {len(manifest['products'])} products ({', '.join(manifest['stages'])})")
        return EXIT_OK
    except SceneValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InvalidArgumentError as exc:
        print(f"error: E_VALIDATION {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceLimitError as exc:
        print(f"error: E_RESOURCE {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except InputFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: E_IO {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
