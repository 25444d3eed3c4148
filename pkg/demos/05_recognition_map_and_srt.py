"""One simulated speech recognition experiment, end to end.

Runs a single condition (head straight, talker mid-room, TV on, door open,
normal hearing) at a small budget, draws the recognition result map over
(training level x test level) and reports the interpolated SRT-50.
Takes around half a minute.
"""
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ssrmap.orchestrator import ConditionSpec
from ssrmap.recognizer import SimBudget
from ssrmap.simulate import Simulator

OUT = pathlib.Path(__file__).with_suffix("")
OUT.mkdir(exist_ok=True)

budget = SimBudget(n_train=40, n_test=15, n_levels=5)
sim = Simulator(budget=budget)
cond = ConditionSpec(azimuth_deg=0, ix=3, iy=3, mesh_m=0.5, tv=1, door=1,
                     profile="normal")
result, rmap, info = sim.simulate_condition(cond)

print(f"condition {cond.condition_id()}")
print(f"masker at the ear: {info['masker_db_spl']:.1f} dB SPL")
print(f"SRT-50: {result.srt_db_spl:.2f} dB SPL ({result.flag}), "
      f"best training level {result.achieved_at_train_level:.0f} dB SPL")
print(f"{info['attempts']} level-window attempt(s), {info['wall_s']:.1f} s")

fig, ax = plt.subplots(figsize=(6, 5))
im = ax.imshow(rmap.pct_correct, origin="lower", cmap="viridis",
               vmin=0, vmax=100,
               extent=[rmap.test_levels[0] - 1.5, rmap.test_levels[-1] + 1.5,
                       rmap.train_levels[0] - 1.5, rmap.train_levels[-1] + 1.5])
ax.set_xlabel("test level / dB SPL")
ax.set_ylabel("training level / dB SPL")
ax.set_title("recognition result map (% words correct)")
for i, ltr in enumerate(rmap.train_levels):
    for j, lte in enumerate(rmap.test_levels):
        ax.text(lte, ltr, f"{rmap.pct_correct[i, j]:.0f}",
                ha="center", va="center", fontsize=8, color="white")
ax.axvline(result.srt_db_spl, color="red", lw=1.0, label="SRT-50")
ax.legend(loc="upper left")
fig.colorbar(im, ax=ax)
fig.tight_layout()
fig.savefig(OUT / "result_map.png", dpi=120)
print(f"wrote {OUT/'result_map.png'}")
