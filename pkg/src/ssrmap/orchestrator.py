"""Condition grid enumeration, sharded runs, atlas persistence.

The full demonstration grid is 5 head orientations x 48 talker cells x
2 TV states x 2 door states x 3 listener profiles = 2880 conditions. Each
condition is an independent job; shards select conditions by
(increment, offset) striding, write one result file per condition
atomically, and can resume. Per-condition seeds are the 64-bit FNV-1a
hash of the scene hash plus the canonical condition string, so any shard
layout reproduces identical results.
"""
from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .recognizer import FLAG_ERROR, SimBudget
from .seeds import fnv1a64
from .simulate import CI_BUDGET, PAPER_BUDGET, Simulator

logger = logging.getLogger(__name__)

PROFILES = ("normal", "impaired_unaided", "impaired_aided")
AZIMUTHS_DEG = (-90, -45, 0, 45, 90)
DEFAULT_MESH_M = 0.5

ATLAS_COLUMNS = ("azimuth_deg", "ix", "iy", "mesh_m", "tv", "door",
                 "profile", "srt_db_spl", "flag")


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class ConditionSpec:
    azimuth_deg: int
    ix: int
    iy: int
    mesh_m: float
    tv: int
    door: int
    profile: str

    def canonical(self) -> str:
        return (f"az={self.azimuth_deg};ix={self.ix};iy={self.iy};"
                f"mesh={self.mesh_m:.3f};tv={self.tv};door={self.door};"
                f"profile={self.profile}")

    def condition_id(self) -> str:
        mesh_mm = int(round(self.mesh_m * 1000))
        return (f"az{self.azimuth_deg:+04d}_ix{self.ix:02d}_iy{self.iy:02d}"
                f"_m{mesh_mm:04d}_tv{self.tv}_d{self.door}_{self.profile}")

    def sort_key(self):
        return (self.azimuth_deg, self.iy, self.ix, self.mesh_m, self.tv,
                self.door, PROFILES.index(self.profile))


@dataclass(frozen=True)
class GridConfig:
    azimuths_deg: tuple = AZIMUTHS_DEG
    cells: tuple = ()                 # ((ix, iy), ...) row-major
    mesh_m: float = DEFAULT_MESH_M
    tv_states: tuple = (0, 1)
    door_states: tuple = (0, 1)
    profiles: tuple = PROFILES
    budget: SimBudget = field(default_factory=lambda: PAPER_BUDGET)

    def n_conditions(self) -> int:
        return (len(self.azimuths_deg) * len(self.cells)
                * len(self.tv_states) * len(self.door_states)
                * len(self.profiles))


def walkable_cells(walkable, mesh_m: float) -> tuple:
    """Row-major lattice cells of the walkable area at a mesh size."""
    nx, ny = walkable.lattice(mesh_m)
    return tuple((ix, iy) for iy in range(ny) for ix in range(nx))


def paper_grid(walkable, budget: SimBudget = None) -> GridConfig:
    return GridConfig(cells=walkable_cells(walkable, DEFAULT_MESH_M),
                      budget=budget or PAPER_BUDGET)


def ci_grid(walkable=None, budget: SimBudget = None) -> GridConfig:
    """Reduced grid: one orientation, 3x3 cells, all noise states."""
    cells = tuple((ix, iy) for iy in (1, 3, 5) for ix in (1, 3, 5))
    return GridConfig(azimuths_deg=(0,), cells=cells,
                      budget=budget or CI_BUDGET)


def enumerate_conditions(grid: GridConfig) -> list:
    """Deterministic cartesian product, orientation-major."""
    if not grid.cells or not grid.azimuths_deg or not grid.profiles:
        raise GridError("empty grid")
    out = []
    for az in grid.azimuths_deg:
        for ix, iy in grid.cells:
            for tv in grid.tv_states:
                for door in grid.door_states:
                    for profile in grid.profiles:
                        out.append(ConditionSpec(
                            azimuth_deg=az, ix=ix, iy=iy, mesh_m=grid.mesh_m,
                            tv=tv, door=door, profile=profile))
    return out


def condition_seed(scene_hash: int, cond: ConditionSpec) -> int:
    return fnv1a64(f"{scene_hash:016x}|{cond.canonical()}")


# ---------------------------------------------------------------------
# Atlas persistence
# ---------------------------------------------------------------------
@dataclass
class SrtEntry:
    srt_db_spl: float          # NaN when flag == "error"
    flag: str
    extras: tuple = ()         # (value, ...) aligned with atlas extra columns


@dataclass
class SrtAtlas:
    entries: dict = field(default_factory=dict)   # ConditionSpec -> SrtEntry
    metadata: dict = field(default_factory=dict)
    extra_columns: tuple = ()

    def meshes(self) -> tuple:
        return tuple(sorted({c.mesh_m for c in self.entries}))

    def azimuths(self) -> tuple:
        return tuple(sorted({c.azimuth_deg for c in self.entries}))

    def profiles(self) -> tuple:
        present = {c.profile for c in self.entries}
        return tuple(p for p in PROFILES if p in present)

    def srt(self, cond: ConditionSpec) -> float:
        return self.entries[cond].srt_db_spl


def format_row(cond: ConditionSpec, entry: SrtEntry) -> str:
    srt = "NA" if not np.isfinite(entry.srt_db_spl) else f"{entry.srt_db_spl:.4f}"
    cells = [str(cond.azimuth_deg), str(cond.ix), str(cond.iy),
             f"{cond.mesh_m:.3f}", str(cond.tv), str(cond.door),
             cond.profile, srt, entry.flag]
    cells.extend(str(v) for v in entry.extras)
    return "\t".join(cells)


def write_atlas(atlas: SrtAtlas, path) -> None:
    """Canonical TSV: sorted rows, fixed float formatting, #meta header."""
    lines = []
    for key in sorted(atlas.metadata):
        lines.append(f"#meta {key}={atlas.metadata[key]}")
    lines.append("\t".join(ATLAS_COLUMNS + atlas.extra_columns))
    for cond in sorted(atlas.entries, key=ConditionSpec.sort_key):
        lines.append(format_row(cond, atlas.entries[cond]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_atlas(path) -> SrtAtlas:
    atlas = SrtAtlas()
    header = None
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("#meta "):
            key, _, value = line[len("#meta "):].partition("=")
            atlas.metadata[key] = value
            continue
        if line.startswith("#"):
            continue
        parts = line.split("\t")
        if header is None:
            header = parts
            missing = [c for c in ATLAS_COLUMNS if c not in header]
            if missing:
                raise GridError(f"{path}:{lineno}: missing columns {missing}")
            atlas.extra_columns = tuple(
                c for c in header if c not in ATLAS_COLUMNS)
            continue
        try:
            row = dict(zip(header, parts))
            cond = ConditionSpec(
                azimuth_deg=int(row["azimuth_deg"]), ix=int(row["ix"]),
                iy=int(row["iy"]), mesh_m=float(row["mesh_m"]),
                tv=int(row["tv"]), door=int(row["door"]),
                profile=row["profile"])
            srt = np.nan if row["srt_db_spl"] == "NA" else float(row["srt_db_spl"])
            extras = tuple(row[c] for c in atlas.extra_columns)
            atlas.entries[cond] = SrtEntry(srt_db_spl=srt, flag=row["flag"],
                                           extras=extras)
        except (KeyError, ValueError, IndexError) as exc:
            raise GridError(f"{path}:{lineno}: malformed row ({exc})") from exc
    if header is None:
        raise GridError(f"{path}: no header line")
    return atlas


def refine_mesh(atlas: SrtAtlas) -> GridConfig:
    """Grid for half the mesh size, excluding already-computed cells.

    Lattice points at mesh/2 whose indices are both even coincide with
    existing samples and are reused as-is.
    """
    if not atlas.entries:
        raise GridError("empty atlas")
    meshes = atlas.meshes()
    mesh = min(meshes)
    fine = mesh / 2.0
    conds = list(atlas.entries)
    max_ix = max(c.ix for c in conds if c.mesh_m == mesh)
    max_iy = max(c.iy for c in conds if c.mesh_m == mesh)
    cells = tuple(
        (ix, iy)
        for iy in range(2 * max_iy + 1)
        for ix in range(2 * max_ix + 1)
        if ix % 2 or iy % 2
    )
    first = conds[0]
    budget_meta = atlas.metadata.get("budget", "")
    budget = parse_budget(budget_meta) if budget_meta else PAPER_BUDGET
    return GridConfig(
        azimuths_deg=atlas.azimuths(), cells=cells, mesh_m=fine,
        tv_states=tuple(sorted({c.tv for c in conds})),
        door_states=tuple(sorted({c.door for c in conds})),
        profiles=atlas.profiles() or (first.profile,),
        budget=budget)


def format_budget(budget: SimBudget) -> str:
    return (f"n_train={budget.n_train},n_test={budget.n_test},"
            f"n_levels={budget.n_levels},step={budget.level_step_db:g}")


def parse_budget(text: str) -> SimBudget:
    kv = dict(p.split("=") for p in text.split(","))
    return SimBudget(n_train=int(kv["n_train"]), n_test=int(kv["n_test"]),
                     n_levels=int(kv["n_levels"]),
                     level_step_db=float(kv.get("step", 3)))


# ---------------------------------------------------------------------
# Shard runner
# ---------------------------------------------------------------------
def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_shard(conditions, increment: int, offset: int, out_dir,
              simulator: Simulator = None, budget: SimBudget = None,
              resume: bool = True) -> list:
    """Run conditions offset, offset+increment, ...; one file each.

    Result files are written with a temp-then-rename so concurrent shards
    and interrupted runs never leave partial rows; existing files are
    skipped (resumable). Per-condition failures are recorded as error
    rows and the shard continues.
    """
    if increment < 1 or not 0 <= offset < increment:
        raise GridError("need increment >= 1 and 0 <= offset < increment")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if simulator is None:
        simulator = Simulator(budget=budget)
    done = []
    for idx in range(offset, len(conditions), increment):
        cond = conditions[idx]
        path = out_dir / f"{cond.condition_id()}.tsv"
        if resume and path.exists():
            done.append(path)
            continue
        try:
            result, _, info = simulator.simulate_condition(
                cond, budget=budget)
            entry = SrtEntry(srt_db_spl=result.srt_db_spl, flag=result.flag)
            logger.info("condition %s: srt=%.2f dB SPL flag=%s (%.1f s)",
                        cond.condition_id(), result.srt_db_spl, result.flag,
                        info["wall_s"])
        except Exception:
            logger.exception("condition %s failed", cond.condition_id())
            entry = SrtEntry(srt_db_spl=np.nan, flag=FLAG_ERROR)
        _atomic_write(path, format_row(cond, entry) + "\n")
        done.append(path)
    return done


def collect_atlas(out_dir, conditions, metadata: dict = None) -> SrtAtlas:
    """Merge per-condition result files into one atlas."""
    out_dir = Path(out_dir)
    atlas = SrtAtlas(metadata=dict(metadata or {}))
    for cond in conditions:
        path = out_dir / f"{cond.condition_id()}.tsv"
        if not path.exists():
            continue
        parts = path.read_text().strip().split("\t")
        srt = np.nan if parts[7] == "NA" else float(parts[7])
        atlas.entries[cond] = SrtEntry(srt_db_spl=srt, flag=parts[8])
    return atlas


def simulate_grid(grid: GridConfig, out_dir, template=None, shards: int = 1,
                  simulator: Simulator = None, metadata: dict = None) -> SrtAtlas:
    """Convenience runner: all shards sequentially, then merge + write."""
    conditions = enumerate_conditions(grid)
    out_dir = Path(out_dir)
    sim = simulator or Simulator(template=template, budget=grid.budget)
    for shard_id in range(shards):
        run_shard(conditions, shards, shard_id, out_dir / "results",
                  simulator=sim, budget=grid.budget)
    meta = {
        "scene_hash": f"{sim.scene_hash:016x}",
        "seed_scheme": "fnv1a64(scene|condition)",
        "version": "0.1.0",
        "budget": format_budget(grid.budget),
        "mesh_m": f"{grid.mesh_m:.3f}",
    }
    meta.update(metadata or {})
    atlas = collect_atlas(out_dir / "results", conditions, metadata=meta)
    write_atlas(atlas, out_dir / "atlas.tsv")
    return atlas
