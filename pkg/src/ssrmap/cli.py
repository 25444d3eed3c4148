"""Command-line entry points.

``ssrmap render``    render the scene to WAV (environment or hrir mode)
``ssrmap simulate``  run the condition grid (sharded, resumable)
``ssrmap refine``    emit the refined-mesh condition list for an atlas
``ssrmap serve``     serve an atlas over HTTP (plus the optional web UI)
``batch_process``    hearing-device batch interface (separate executable)
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path


def _add_render(sub):
    p = sub.add_parser("render", help="render the scene to a WAV file")
    p.add_argument("--type", required=True, dest="mode",
                   choices=("environment", "hrir"))
    p.add_argument("--out", required=True)
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--x", type=float, default=2.5)
    p.add_argument("--y", type=float, default=2.5)
    p.add_argument("--z", type=float, default=1.5)
    p.add_argument("--receiver", default="ortf", choices=("ortf",))
    p.add_argument("--azimuth", type=float, default=0.0)
    p.add_argument("--tv", type=int, choices=(0, 1), default=1)
    p.add_argument("--cr", type=int, choices=(0, 1), default=1)
    p.add_argument("--reverb", type=int, choices=(0, 1), default=1)
    p.add_argument("--scene", default=None, help="scene template file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1,
                   help="hrir realizations (files suffixed _0.._k)")


def _cmd_render(args) -> int:
    from . import scene
    from .audio import BinauralSignal, write_wav
    from .renderer import render_environment, render_hrir

    tpl = (scene.parse_template(Path(args.scene).read_text())
           if args.scene else scene.bundled_template())
    params = scene.SceneParams(
        mode=args.mode, start_s=args.start, duration_s=args.duration,
        probe_xyz=(args.x, args.y, args.z), receiver_type=args.receiver,
        receiver_azimuth_deg=args.azimuth, tv_on=bool(args.tv),
        connected_room_on=bool(args.cr), reverb_on=bool(args.reverb))
    instance = scene.instantiate(tpl, params)
    if args.mode == "environment":
        signal = render_environment(instance, seed=args.seed)
        write_wav(args.out, signal)
        print(f"wrote {args.out} ({signal.duration_s:.1f} s, "
              f"{signal.level_db_spl():.1f} dB SPL)")
    else:
        irs = render_hrir(instance, repeats=args.repeats, seed=args.seed)
        if args.repeats == 1:
            write_wav(args.out, BinauralSignal(irs[0].ir))
            print(f"wrote {args.out}")
        else:
            stem = Path(args.out)
            for k, ir in enumerate(irs):
                path = stem.with_name(f"{stem.stem}_{k}{stem.suffix}")
                write_wav(path, BinauralSignal(ir.ir))
                print(f"wrote {path}")
    return 0


def _add_simulate(sub):
    p = sub.add_parser("simulate", help="simulate SRTs over a condition grid")
    p.add_argument("--grid", choices=("paper", "ci"), default="ci")
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--shard-id", type=int, default=None,
                   help="run only this shard (default: all, sequentially)")
    p.add_argument("--out", required=True)
    p.add_argument("--scene", default=None)


def _cmd_simulate(args) -> int:
    from . import scene
    from .orchestrator import (enumerate_conditions, ci_grid, paper_grid,
                               run_shard, simulate_grid)
    from .simulate import Simulator

    tpl = (scene.parse_template(Path(args.scene).read_text())
           if args.scene else scene.bundled_template())
    walkable = scene.instantiate(tpl, scene.SceneParams()).walkable
    grid = (paper_grid(walkable) if args.grid == "paper"
            else ci_grid(walkable))
    sim = Simulator(template=tpl, budget=grid.budget)
    if args.shard_id is not None:
        conditions = enumerate_conditions(grid)
        run_shard(conditions, args.shards, args.shard_id,
                  Path(args.out) / "results", simulator=sim,
                  budget=grid.budget)
        print(f"shard {args.shard_id}/{args.shards} finished")
    else:
        atlas = simulate_grid(grid, args.out, simulator=sim,
                              shards=args.shards)
        print(f"wrote {Path(args.out) / 'atlas.tsv'} "
              f"({len(atlas.entries)} conditions)")
    return 0


def _add_refine(sub):
    p = sub.add_parser("refine", help="emit refined-mesh conditions")
    p.add_argument("--atlas", required=True)
    p.add_argument("--out", default=None,
                   help="write the condition list here (default stdout)")


def _cmd_refine(args) -> int:
    from .orchestrator import enumerate_conditions, read_atlas, refine_mesh

    atlas = read_atlas(args.atlas)
    grid = refine_mesh(atlas)
    conditions = enumerate_conditions(grid)
    lines = [c.canonical() for c in conditions]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out} ({len(lines)} conditions at "
              f"{grid.mesh_m:.3g} m mesh)")
    else:
        sys.stdout.write(text)
    return 0


def _add_serve(sub):
    p = sub.add_parser("serve", help="serve an atlas over HTTP")
    p.add_argument("--atlas", required=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--scene", default=None)
    p.add_argument("--ui", default=None, help="static UI bundle directory")


def _cmd_serve(args) -> int:
    from . import scene
    from .mapserver import serve

    tpl = (scene.parse_template(Path(args.scene).read_text())
           if args.scene else None)
    ui_dir = args.ui
    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    serve(args.atlas, port=args.port, host=args.host, template=tpl,
          ui_dir=ui_dir)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(levelname)s %(message)s")
    parser = argparse.ArgumentParser(prog="ssrmap")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_render(sub)
    _add_simulate(sub)
    _add_refine(sub)
    _add_serve(sub)
    args = parser.parse_args(argv)
    return {
        "render": _cmd_render,
        "simulate": _cmd_simulate,
        "refine": _cmd_refine,
        "serve": _cmd_serve,
    }[args.command](args)


def batch_process_main(argv=None) -> int:
    """``batch_process <SOURCELIST> <TARGETLIST> <INCREMENT> <OFFSET>``"""
    parser = argparse.ArgumentParser(prog="batch_process")
    parser.add_argument("sourcelist")
    parser.add_argument("targetlist")
    parser.add_argument("increment", type=int)
    parser.add_argument("offset", type=int)
    parser.add_argument("--config", default=None,
                        help="device config file (key = value)")
    args = parser.parse_args(argv)

    from .device import batch_process, load_device_config

    cfg = load_device_config(args.config) if args.config else None
    report = batch_process(args.sourcelist, args.targetlist,
                           args.increment, args.offset, cfg)
    for idx, src, err in report.errors:
        print(f"item {idx} failed ({src}): {err}", file=sys.stderr)
    print(f"processed {len(report.processed)} items, "
          f"{len(report.errors)} errors")
    return 1 if report.errors else 0


if __name__ == "__main__":
    sys.exit(main())
