"""HTTP serving of the SRT atlas plus color quantization.

Quantization happens server-side so every client renders identically: the
SRT range 45..85 dB SPL is split into n color grades (12 by default,
about 3.3 dB per grade), values outside the range clamp to the end
grades, and each SRT also gets a vocal-effort label (casual .. shouted).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import scene as scene_mod
from .orchestrator import PROFILES, ConditionSpec, SrtAtlas, read_atlas

ALLOWED_COLOR_COUNTS = (8, 12, 16, 24)


def _fixture() -> dict:
    return json.loads((resources.files("ssrmap.data") / "colors.json").read_text())


def interpolate_palette(anchors, n: int) -> list:
    """Sample n colors along the anchor gradient (linear in RGB)."""
    rgb = np.array([
        [int(a[1:3], 16), int(a[3:5], 16), int(a[5:7], 16)] for a in anchors
    ], dtype=float)
    pos = np.linspace(0.0, 1.0, len(anchors))
    want = np.linspace(0.0, 1.0, n)
    out = []
    for w in want:
        channels = [int(round(np.interp(w, pos, rgb[:, c]))) for c in range(3)]
        out.append("#{:02x}{:02x}{:02x}".format(*channels))
    return out


@dataclass(frozen=True)
class ColorScale:
    n_colors: int = 12
    lo_db_spl: float = 45.0
    hi_db_spl: float = 85.0
    palette: tuple = ()
    effort_bands: tuple = ()   # ((label, lo, hi), ...)

    @property
    def grade_width_db(self) -> float:
        return (self.hi_db_spl - self.lo_db_spl) / self.n_colors


def default_scale(n_colors: int = None) -> ColorScale:
    fx = _fixture()
    n = n_colors or fx["n_colors"]
    return ColorScale(
        n_colors=n,
        lo_db_spl=float(fx["lo_db_spl"]),
        hi_db_spl=float(fx["hi_db_spl"]),
        palette=tuple(interpolate_palette(fx["anchors"], n)),
        effort_bands=tuple((b[0], float(b[1]), float(b[2]))
                           for b in fx["effort_bands"]),
    )


def quantize_level(srt_db_spl: float, scale: ColorScale) -> int:
    """Color grade index; out-of-range levels clamp to the end grades."""
    idx = int(np.floor((srt_db_spl - scale.lo_db_spl) / scale.grade_width_db))
    return int(np.clip(idx, 0, scale.n_colors - 1))


def effort_label(srt_db_spl: float, scale: ColorScale) -> str:
    """Vocal-effort class of the band containing the level.

    Bands are half-open [lo, hi); levels below the scale are 'casual',
    at/above the top band's start 'shouted'.
    """
    bands = scale.effort_bands
    if srt_db_spl < bands[0][1]:
        return bands[0][0]
    for label, lo, hi in bands[:-1]:
        if lo <= srt_db_spl < hi:
            return label
    return bands[-1][0]


def scene_meta(instance: scene_mod.SceneInstance) -> dict:
    return {
        "name": instance.name,
        "rooms": [
            {"name": r.name, "origin": list(map(float, r.origin)),
             "size": list(map(float, r.size))}
            for r in instance.rooms
        ],
        "walkable": {
            "x0": instance.walkable.x0, "y0": instance.walkable.y0,
            "x1": instance.walkable.x1, "y1": instance.walkable.y1,
        },
        "furniture": [
            {"name": name, "box": list(box)}
            for name, box in instance.furniture
        ],
        "apertures": [
            {"name": name, **attrs} for name, attrs in instance.apertures
        ],
        "sources": [
            {"name": s.name, "position": list(map(float, s.position))}
            for s in instance.sources if s.name != "probe"
        ],
        "listener": {
            "position": list(map(float, instance.receiver.position)),
        },
    }


def create_app(atlas: SrtAtlas = None, template: scene_mod.SceneTemplate = None,
               ui_dir=None):
    """FastAPI app over an immutable atlas snapshot.

    Requests are read-only; swapping ``app.state.atlas`` replaces the
    whole snapshot atomically. Returns 503 until an atlas is loaded.
    """
    from fastapi import FastAPI, HTTPException, Query
    from fastapi.middleware.cors import CORSMiddleware

    template = template or scene_mod.bundled_template()
    instance = scene_mod.instantiate(template, scene_mod.SceneParams())

    app = FastAPI(title="ssrmap", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["GET"],
        allow_headers=["*"],
    )
    app.state.atlas = atlas
    app.state.instance = instance

    def _atlas() -> SrtAtlas:
        if app.state.atlas is None:
            raise HTTPException(status_code=503, detail="atlas not loaded")
        return app.state.atlas

    @app.get("/api/meta")
    def meta():
        atlas = _atlas()
        scale = default_scale()
        meshes = atlas.meshes()
        mesh = min(meshes) if meshes else None
        walk = instance.walkable
        nx, ny = walk.lattice(mesh) if mesh else (0, 0)
        return {
            "scene": scene_meta(instance),
            "grid": {
                "mesh_m": mesh,
                "origin": [walk.x0, walk.y0],
                "nx": nx, "ny": ny, "z": walk.z,
            },
            "orientations": list(atlas.azimuths()),
            "profiles": list(atlas.profiles()),
            "colors": {
                "n": scale.n_colors,
                "allowed_n": list(ALLOWED_COLOR_COUNTS),
                "lo_db_spl": scale.lo_db_spl,
                "hi_db_spl": scale.hi_db_spl,
                "palette": list(scale.palette),
                "effort_bands": [list(b) for b in scale.effort_bands],
            },
            "atlas_meta": atlas.metadata,
        }

    @app.get("/api/map")
    def srt_map(azimuth: int = Query(...), tv: int = Query(..., ge=0, le=1),
                door: int = Query(..., ge=0, le=1),
                profile: str = Query(...), n: int = Query(None),
                mesh: float = Query(None)):
        atlas = _atlas()
        if profile not in PROFILES:
            raise HTTPException(status_code=422,
                                detail=f"unknown profile {profile!r}")
        if n is not None and n not in ALLOWED_COLOR_COUNTS:
            raise HTTPException(status_code=422,
                                detail=f"color count must be one of "
                                       f"{ALLOWED_COLOR_COUNTS}")
        meshes = atlas.meshes()
        mesh_m = mesh if mesh is not None else (min(meshes) if meshes else None)
        selected = {
            cond: entry for cond, entry in atlas.entries.items()
            if (cond.azimuth_deg == azimuth and cond.tv == tv
                and cond.door == door and cond.profile == profile
                and abs(cond.mesh_m - (mesh_m or 0)) < 1e-9)
        }
        if not selected:
            raise HTTPException(status_code=404,
                                detail="unknown condition combination")
        scale = default_scale(n)
        walk = instance.walkable
        cells = []
        for cond in sorted(selected, key=ConditionSpec.sort_key):
            entry = selected[cond]
            x, y, _ = walk.cell_position(cond.ix, cond.iy, cond.mesh_m)
            finite = bool(np.isfinite(entry.srt_db_spl))
            cells.append({
                "ix": cond.ix, "iy": cond.iy,
                "x": x, "y": y,
                "srt_db_spl": entry.srt_db_spl if finite else None,
                "grade": quantize_level(entry.srt_db_spl, scale) if finite else None,
                "effort": effort_label(entry.srt_db_spl, scale) if finite else None,
                "flag": entry.flag,
            })
        nx, ny = walk.lattice(mesh_m)
        return {
            "azimuth": azimuth, "tv": tv, "door": door, "profile": profile,
            "mesh_m": mesh_m, "nx": nx, "ny": ny,
            "n_colors": scale.n_colors,
            "palette": list(scale.palette),
            "cells": cells,
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True),
                  name="ui")
    return app


def serve(atlas_path, port: int = 8080, host: str = "127.0.0.1",
          template=None, ui_dir=None):
    import uvicorn

    atlas = read_atlas(atlas_path)
    app = create_app(atlas=atlas, template=template, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
