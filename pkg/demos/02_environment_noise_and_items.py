"""Environment maskers and noisy speech items.

Renders the 10 s binaural environment recording for each noise state,
reports the received levels, then assembles a noisy test item: a matrix
sentence at a chosen production level, through a talker IR, plus a random
masker fragment.
"""
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ssrmap import corpus, renderer
from ssrmap.scene import SceneParams, bundled_template, instantiate
from ssrmap.seeds import rng_for

OUT = pathlib.Path(__file__).with_suffix("")
OUT.mkdir(exist_ok=True)

template = bundled_template()

print("masker level at the listener per noise state:")
maskers = {}
for tv in (0, 1):
    for door in (0, 1):
        params = SceneParams(mode="environment", tv_on=bool(tv),
                             connected_room_on=bool(door))
        env = renderer.render_environment(instantiate(template, params),
                                          seed=0)
        maskers[(tv, door)] = env
        level = env.level_db_spl() if np.any(env.samples) else float("-inf")
        print(f"  tv={tv} door={door}: {level:6.1f} dB SPL")

# --- one noisy item ------------------------------------------------------
grammar = corpus.default_grammar()
sentence = corpus.Sentence(word_ids=(3, 1, 4, 1, 5))
print("\nsentence:", grammar.label(sentence))

hrir_params = SceneParams(mode="hrir", probe_xyz=(1.75, 2.25, 1.5))
irs = renderer.render_hrir(instantiate(template, hrir_params), repeats=5,
                           seed=0)
item = corpus.build_noisy_item(sentence, 62.0, irs, maskers[(1, 1)],
                               rng_for("demo-item", 0), grammar=grammar)
print(f"item: {item.samples.shape[1] / item.sample_rate:.2f} s at "
      f"{item.level_db_spl():.1f} dB SPL overall")

fig, axes = plt.subplots(2, 1, figsize=(9, 5), sharex=True)
t = np.arange(item.samples.shape[1]) / item.sample_rate
for ch, ax in enumerate(axes):
    ax.plot(t, item.samples[ch], lw=0.3)
    ax.set_ylabel("left" if ch == 0 else "right")
axes[0].set_title("noisy speech item: speech at 62 dB SPL in the "
                  "TV + open-door masker")
axes[-1].set_xlabel("time / s")
fig.tight_layout()
fig.savefig(OUT / "noisy_item.png", dpi=120)
print(f"wrote {OUT/'noisy_item.png'}")

# --- level linearity ------------------------------------------------------
quiet = corpus.build_noisy_item(
    sentence, 62.0, irs,
    renderer.render_environment(
        instantiate(template, SceneParams(mode="environment", tv_on=False,
                                          connected_room_on=False)), seed=0),
    rng_for("demo-item", 1), grammar=grammar)
print(f"speech-only item RMS level: {quiet.level_db_spl():.1f} dB SPL "
      "(production level minus the acoustic path loss)")
