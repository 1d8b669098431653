"""Command-line entry point: ``nnsph simulate | validate | curves``.

Exit codes: 0 success, 1 invalid scene or arguments, 2 simulation divergence.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _accel
from .engine import SimulationDiverged
from .frames import DiagnosticsWriter, FrameRecord, FrameWriter
from .sampling import EmptyBody
from .scene import ParseError, SceneConfig, ValidationError, build_world, load_scene

log = logging.getLogger("nnsph")

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2
OUTPUT_ENV = "NNSPH_OUTPUT_DIR"


def output_directory(cfg: SceneConfig, override=None) -> Path:
    """``--out`` wins, then the environment variable, then the scene's own setting."""
    if override:
        return Path(override)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    d = Path(cfg.output.directory)
    return d if d.is_absolute() else Path.cwd() / d


def simulate(cfg: SceneConfig, frames: int | None = None, out_dir=None, formats=None, progress=None):
    """Run ``frames`` frames, writing frame 0 (initial state) through ``frames``.

    Returns the final world. Raises :class:`SimulationDiverged` after flushing
    everything written so far.
    """
    frames = cfg.output.frames if frames is None else frames
    out = output_directory(cfg, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    world = build_world(cfg)
    writer = FrameWriter(out, formats or cfg.output.formats)
    diag = DiagnosticsWriter(out / "diagnostics.csv")
    written = 0
    try:
        writer.submit(FrameRecord.from_world(world))
        for _ in range(frames):
            t0 = time.perf_counter()
            world.advance_frame(cfg.output.frame_interval)
            for row in world.diagnostics[written:]:
                diag.write(row)
            written = len(world.diagnostics)
            writer.submit(FrameRecord.from_world(world))
            if progress:
                progress(world, time.perf_counter() - t0)
    except SimulationDiverged:
        for row in world.diagnostics[written:]:
            diag.write(row)
        raise
    finally:
        diag.close()
        writer.close()
    return world


def _parse_range(text: str):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if not 0 < lo < hi:
        raise argparse.ArgumentTypeError("range needs 0 < LO < HI")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nnsph", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scene and write frames")
    s.add_argument("scene")
    s.add_argument("--frames", type=int, default=None)
    s.add_argument("--out", default=None)
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--deterministic", action="store_true", help="single-threaded, bitwise reproducible")

    v = sub.add_parser("validate", help="check a scene without running it")
    v.add_argument("scene")

    c = sub.add_parser("curves", help="viscosity against strain rate for one material, as CSV")
    c.add_argument("scene")
    c.add_argument("--model", required=True, help="material name in the scene")
    c.add_argument("--range", type=_parse_range, default=(1e-2, 1e2))
    c.add_argument("--points", type=int, default=200)
    c.add_argument("--out", default=None, help="CSV path (stdout when omitted)")
    return p


def _load(path):
    try:
        return load_scene(path)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
    except ValidationError as exc:
        for e in exc.errors:
            print(f"invalid: {e}", file=sys.stderr)
    return None


def _cmd_validate(args) -> int:
    cfg = _load(args.scene)
    if cfg is None:
        return EXIT_INVALID
    try:
        world = build_world(cfg)
    except (ValidationError, EmptyBody, ValueError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"{cfg.name}: ok ({world.n} particles, {len(world.xb)} boundary samples)")
    return EXIT_OK


def _cmd_curves(args) -> int:
    cfg = _load(args.scene)
    if cfg is None:
        return EXIT_INVALID
    if args.model not in cfg.materials:
        print(f"invalid: no material {args.model!r}; have {sorted(cfg.materials)}", file=sys.stderr)
        return EXIT_INVALID
    if args.points < 2:
        print("invalid: --points must be >= 2", file=sys.stderr)
        return EXIT_INVALID
    model = cfg.materials[args.model].viscosity
    rate = np.logspace(np.log10(args.range[0]), np.log10(args.range[1]), args.points)
    mu = model(rate)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["strain_rate", "mu"])
        for a, b in zip(rate.tolist(), mu.tolist()):
            w.writerow([repr(a), repr(b)])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg = _load(args.scene)
    if cfg is None:
        return EXIT_INVALID
    if args.frames is not None and args.frames < 0:
        print("invalid: --frames must be >= 0", file=sys.stderr)
        return EXIT_INVALID
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    _accel.set_threads(1 if args.deterministic else args.threads)

    def progress(world, seconds):
        log.info("frame %d  t=%.4f  %.3fs", world.frame, world.time, seconds)

    try:
        world = simulate(cfg, args.frames, args.out, progress=progress)
    except SimulationDiverged as exc:
        print(f"diverged: {exc} (last good frame {exc.last_good_frame})", file=sys.stderr)
        return EXIT_DIVERGED
    except (ValidationError, EmptyBody) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"{cfg.name}: {world.frame} frames, t={world.time:.4f}s")
    return EXIT_OK


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handler = {"simulate": _cmd_simulate, "validate": _cmd_validate, "curves": _cmd_curves}[args.command]
    return handler(args)


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
