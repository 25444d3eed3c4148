"""A tiny SRT atlas rendered as a quantized spatial map.

Simulates a coarse 4x3 talker grid for the normal profile with all noise
on (micro budget, a few minutes), then draws the quantized nearest-neighbor
speech recognition map exactly as the web UI would: one uniform square per
sample, 12 color grades from 45 to 85 dB SPL.

The resulting atlas can also be served:  ssrmap serve --atlas <out>/atlas.tsv
"""
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib import patches

from ssrmap.mapserver import default_scale, effort_label, quantize_level
from ssrmap.orchestrator import GridConfig, enumerate_conditions, simulate_grid
from ssrmap.recognizer import SimBudget
from ssrmap.scene import SceneParams, bundled_template, instantiate
from ssrmap.simulate import Simulator

OUT = pathlib.Path(__file__).with_suffix("")
OUT.mkdir(exist_ok=True)

budget = SimBudget(n_train=40, n_test=15, n_levels=5)
grid = GridConfig(
    azimuths_deg=(0,),
    cells=tuple((ix, iy) for iy in (0, 2, 4) for ix in (0, 2, 4, 6)),
    tv_states=(1,), door_states=(1,), profiles=("normal",), budget=budget)
print(f"{len(enumerate_conditions(grid))} conditions at micro budget...")

sim = Simulator(budget=budget)
atlas = simulate_grid(grid, OUT / "run", simulator=sim)
print(f"atlas written to {OUT/'run'/'atlas.tsv'}")

instance = instantiate(bundled_template(), SceneParams())
walk = instance.walkable
scale = default_scale()

fig, ax = plt.subplots(figsize=(7, 6))
for cond, entry in atlas.entries.items():
    x, y, _ = walk.cell_position(cond.ix, cond.iy, cond.mesh_m)
    grade = quantize_level(entry.srt_db_spl, scale)
    ax.add_patch(patches.Rectangle(
        (x - 0.5, y - 0.5), 1.0, 1.0, facecolor=scale.palette[grade],
        edgecolor="none"))
    ax.text(x, y, f"{entry.srt_db_spl:.0f}\n{effort_label(entry.srt_db_spl, scale)}",
            ha="center", va="center", fontsize=7)
room = instance.rooms[0]
ax.add_patch(patches.Rectangle(room.origin[:2], room.size[0], room.size[1],
                               fill=False, edgecolor="k", lw=1.5))
lx, ly, _ = instance.receiver.position
ax.plot(lx, ly, "o", ms=14, mfc="white", mec="k")
for name, box in instance.furniture:
    ax.add_patch(patches.Rectangle((box[0], box[1]), box[2] - box[0],
                                   box[3] - box[1], facecolor="none",
                                   edgecolor="red", lw=1.0))
    ax.text(box[0], box[3] + 0.05, name, fontsize=8, color="red")
ax.set_xlim(-0.5, 5.5)
ax.set_ylim(-0.5, 4.5)
ax.set_aspect("equal")
ax.set_title("speech levels needed for 50% word recognition "
             "(normal hearing, TV on, door open)")
fig.tight_layout()
fig.savefig(OUT / "spatial_map.png", dpi=120)
print(f"wrote {OUT/'spatial_map.png'}")
