import numpy as np
import pytest

from ssrmap import orchestrator
from ssrmap.orchestrator import (ConditionSpec, GridConfig, GridError,
                                 SrtAtlas, SrtEntry, ci_grid, collect_atlas,
                                 condition_seed, enumerate_conditions,
                                 paper_grid, read_atlas, refine_mesh,
                                 run_shard, walkable_cells, write_atlas)
from ssrmap.recognizer import SrtResult
from ssrmap.scene import SceneParams, bundled_template, instantiate
from ssrmap.seeds import fnv1a64


@pytest.fixture(scope="module")
def walkable():
    return instantiate(bundled_template(), SceneParams()).walkable


def test_paper_grid_counts(walkable):
    grid = paper_grid(walkable)
    assert len(grid.cells) == 48
    assert grid.n_conditions() == 2880
    assert len(enumerate_conditions(grid)) == 2880


def test_small_grid_arithmetic():
    grid = GridConfig(azimuths_deg=(0,), cells=((0, 0), (1, 0), (0, 1), (1, 1)),
                      tv_states=(1,), door_states=(1,), profiles=("normal",))
    assert len(enumerate_conditions(grid)) == 4


def test_enumeration_is_deterministic(walkable):
    grid = ci_grid(walkable)
    a = enumerate_conditions(grid)
    b = enumerate_conditions(grid)
    assert a == b
    # orientation-major, then row-major cells, then tv, door, profile
    assert a[0].profile == "normal"
    assert a[1].profile == "impaired_unaided"
    assert a[2].profile == "impaired_aided"
    assert a[0].tv == 0 and a[0].door == 0
    assert a[3].door == 1


def test_empty_grid_rejected():
    with pytest.raises(GridError):
        enumerate_conditions(GridConfig(cells=()))


def test_walkable_cells_row_major(walkable):
    cells = walkable_cells(walkable, 0.5)
    assert len(cells) == 48
    assert cells[0] == (0, 0)
    assert cells[1] == (1, 0)
    assert cells[8] == (0, 1)


def test_condition_seed_is_stable_fnv():
    cond = ConditionSpec(azimuth_deg=0, ix=1, iy=2, mesh_m=0.5, tv=1,
                         door=0, profile="normal")
    expected = fnv1a64(f"{0x1234:016x}|{cond.canonical()}")
    assert condition_seed(0x1234, cond) == expected
    assert cond.canonical() == "az=0;ix=1;iy=2;mesh=0.500;tv=1;door=0;profile=normal"


def _small_atlas():
    atlas = SrtAtlas(metadata={"scene_hash": "abc", "budget":
                               "n_train=4,n_test=2,n_levels=3,step=3"})
    for ix, iy in ((0, 0), (1, 0), (0, 1), (1, 1)):
        cond = ConditionSpec(azimuth_deg=0, ix=ix, iy=iy, mesh_m=0.5,
                             tv=1, door=1, profile="normal")
        atlas.entries[cond] = SrtEntry(srt_db_spl=50.0 + ix + iy, flag="ok")
    return atlas


def test_atlas_round_trip(tmp_path):
    atlas = _small_atlas()
    path = tmp_path / "atlas.tsv"
    write_atlas(atlas, path)
    back = read_atlas(path)
    assert back.metadata["scene_hash"] == "abc"
    assert set(back.entries) == set(atlas.entries)
    for cond, entry in atlas.entries.items():
        assert back.entries[cond].srt_db_spl == pytest.approx(entry.srt_db_spl)
        assert back.entries[cond].flag == entry.flag
    # writing again yields identical bytes
    path2 = tmp_path / "atlas2.tsv"
    write_atlas(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_atlas_na_rows(tmp_path):
    atlas = _small_atlas()
    cond = ConditionSpec(azimuth_deg=0, ix=2, iy=0, mesh_m=0.5, tv=1,
                         door=1, profile="normal")
    atlas.entries[cond] = SrtEntry(srt_db_spl=np.nan, flag="error")
    path = tmp_path / "atlas.tsv"
    write_atlas(atlas, path)
    assert "\tNA\t" in path.read_text()
    back = read_atlas(path)
    assert np.isnan(back.entries[cond].srt_db_spl)
    assert back.entries[cond].flag == "error"


def test_atlas_preserves_unknown_columns(tmp_path):
    path = tmp_path / "atlas.tsv"
    header = "\t".join(orchestrator.ATLAS_COLUMNS + ("note",))
    row = "0\t1\t1\t0.500\t1\t0\tnormal\t51.5000\tok\thello"
    path.write_text(f"{header}\n{row}\n")
    atlas = read_atlas(path)
    assert atlas.extra_columns == ("note",)
    entry = next(iter(atlas.entries.values()))
    assert entry.extras == ("hello",)
    out = tmp_path / "out.tsv"
    write_atlas(atlas, out)
    assert "hello" in out.read_text()


def test_atlas_malformed_row_reports_line(tmp_path):
    path = tmp_path / "atlas.tsv"
    header = "\t".join(orchestrator.ATLAS_COLUMNS)
    path.write_text(f"{header}\n0\t1\n")
    with pytest.raises(GridError, match=":2"):
        read_atlas(path)


def test_hand_written_row_parses(tmp_path):
    path = tmp_path / "atlas.tsv"
    header = "\t".join(orchestrator.ATLAS_COLUMNS)
    path.write_text(
        f"{header}\n-45\t3\t2\t0.250\t0\t1\timpaired_aided\t61.2500\tok\n")
    atlas = read_atlas(path)
    cond = next(iter(atlas.entries))
    assert cond == ConditionSpec(azimuth_deg=-45, ix=3, iy=2, mesh_m=0.25,
                                 tv=0, door=1, profile="impaired_aided")


def test_refine_mesh_counts(walkable):
    atlas = SrtAtlas()
    for ix, iy in walkable_cells(walkable, 0.5):
        cond = ConditionSpec(azimuth_deg=0, ix=ix, iy=iy, mesh_m=0.5,
                             tv=1, door=1, profile="normal")
        atlas.entries[cond] = SrtEntry(srt_db_spl=50.0, flag="ok")
    grid = refine_mesh(atlas)
    assert grid.mesh_m == 0.25
    # 15 x 11 lattice minus the 48 reused coarse points
    assert len(grid.cells) == 15 * 11 - 48
    # refining twice covers the same points as refining to quarter mesh
    atlas2 = SrtAtlas()
    for ix, iy in list(grid.cells) + [(2 * ix, 2 * iy) for ix, iy
                                      in walkable_cells(walkable, 0.5)]:
        cond = ConditionSpec(azimuth_deg=0, ix=ix, iy=iy, mesh_m=0.25,
                             tv=1, door=1, profile="normal")
        atlas2.entries[cond] = SrtEntry(srt_db_spl=50.0, flag="ok")
    grid2 = refine_mesh(atlas2)
    quarter_points = {(ix, iy) for ix, iy in grid2.cells}
    direct = {(ix, iy) for iy in range(21) for ix in range(29)
              if ix % 2 or iy % 2}
    assert quarter_points == direct


def test_refine_mesh_rejects_empty():
    with pytest.raises(GridError):
        refine_mesh(SrtAtlas())


class _StubSimulator:
    """Deterministic stand-in so shard logic is testable in milliseconds."""

    def __init__(self, fail_ids=()):
        self.fail_ids = set(fail_ids)

    def simulate_condition(self, cond, budget=None):
        if cond.condition_id() in self.fail_ids:
            raise RuntimeError("boom")
        seed = condition_seed(0xABCD, cond)
        srt = 40.0 + (seed % 1000) / 100.0
        return (SrtResult(condition_id=cond.condition_id(), srt_db_spl=srt),
                None, {"wall_s": 0.0, "attempts": 1})


def _tiny_conditions():
    grid = GridConfig(azimuths_deg=(0, 45), cells=((0, 0), (1, 0)),
                      tv_states=(0, 1), door_states=(0,),
                      profiles=("normal",))
    return enumerate_conditions(grid)


def test_run_shard_partition_property(tmp_path):
    conditions = _tiny_conditions()
    run_shard(conditions, 1, 0, tmp_path / "a", simulator=_StubSimulator())
    for offset in range(4):
        run_shard(conditions, 4, offset, tmp_path / "b",
                  simulator=_StubSimulator())
    atlas_a = collect_atlas(tmp_path / "a", conditions)
    atlas_b = collect_atlas(tmp_path / "b", conditions)
    write_atlas(atlas_a, tmp_path / "a.tsv")
    write_atlas(atlas_b, tmp_path / "b.tsv")
    assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()


def test_run_shard_is_resumable(tmp_path):
    conditions = _tiny_conditions()
    out = tmp_path / "results"
    run_shard(conditions, 1, 0, out, simulator=_StubSimulator())
    victim = out / f"{conditions[0].condition_id()}.tsv"
    original = victim.read_bytes()
    victim.unlink()
    mtimes = {p.name: p.stat().st_mtime_ns for p in out.glob("*.tsv")}
    run_shard(conditions, 1, 0, out, simulator=_StubSimulator())
    assert victim.read_bytes() == original
    for p in out.glob("*.tsv"):
        if p.name != victim.name:
            assert p.stat().st_mtime_ns == mtimes[p.name]


def test_run_shard_records_errors(tmp_path):
    conditions = _tiny_conditions()
    bad = conditions[2].condition_id()
    run_shard(conditions, 1, 0, tmp_path / "r",
              simulator=_StubSimulator(fail_ids=[bad]))
    atlas = collect_atlas(tmp_path / "r", conditions)
    entry = atlas.entries[conditions[2]]
    assert entry.flag == "error"
    assert np.isnan(entry.srt_db_spl)
    assert sum(1 for e in atlas.entries.values() if e.flag == "ok") == 7


def test_run_shard_validates_offsets(tmp_path):
    with pytest.raises(GridError):
        run_shard(_tiny_conditions(), 2, 2, tmp_path,
                  simulator=_StubSimulator())
