"""Command line: ``chirpqpm run|render|validate|presets``.

Exit codes: 0 success, 2 config parse error, 3 config validation error,
4 numeric failure or a run with failed points, 5 I/O or product integrity
error.  ``CHIRPQPM_OUTPUT_DIR`` sets the default parent directory for runs.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import list_presets, load_config, preset_text
from .errors import ChirpQPMError

EXIT_OK = 0
EXIT_CODES = {"parse": 2, "validation": 3, "numeric": 4, "io": 5}


def _cmd_run(args):
    from .scenario import run_scenario

    cfg = load_config(args.config)
    result = run_scenario(cfg, args.output, workers=args.workers)
    print(f"{result.output_dir}: {len(result.manifest['files'])} products, status {result.manifest['status']}")
    for err in result.manifest["errors"]:
        print(f"  failed {err['point']}: {err['error']}", file=sys.stderr)
    if args.render:
        from .render import render

        render(result.output_dir)
    return EXIT_OK if result.ok else EXIT_CODES["numeric"]


def _cmd_render(args):
    from .render import render

    paths = render(args.directory, style=args.style, density=args.density)
    print(f"wrote {len(paths)} figures to {args.directory}/figures")
    return EXIT_OK


def _cmd_validate(args):
    cfg = load_config(args.config)
    print(f"{args.config}: ok ({cfg.name}, {len(cfg.points())} points, outputs {', '.join(cfg.outputs)})")
    return EXIT_OK


def _cmd_presets(args):
    if args.action == "list":
        for name in list_presets():
            print(name)
    else:
        sys.stdout.write(preset_text(args.name))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="chirpqpm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="compute the products of a scenario")
    p.add_argument("config", help="config file or bundled preset name")
    p.add_argument("-o", "--output", help="output directory (default: $CHIRPQPM_OUTPUT_DIR/<name>)")
    p.add_argument("-j", "--workers", type=int, default=1, help="parallel scenario points")
    p.add_argument("--render", action="store_true", help="render figures after the run")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("render", help="draw figures from an existing run directory")
    p.add_argument("directory")
    p.add_argument("--style", default="default")
    p.add_argument("--density", choices=("wavelength", "omega"), default="wavelength")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("validate", help="parse and validate a config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("presets", help="bundled figure presets")
    psub = p.add_subparsers(dest="action", required=True)
    psub.add_parser("list")
    show = psub.add_parser("show")
    show.add_argument("name")
    p.set_defaults(func=_cmd_presets)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ChirpQPMError as exc:
        print(f"error ({exc.category}): {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, EXIT_CODES["numeric"])
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return EXIT_CODES["io"]
