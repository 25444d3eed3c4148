"""The listener front end: log-Mel grams, hearing loss, binaural features.

Shows the calibrated log-Mel analysis of a noisy item, what the N3
hearing-loss profile does to it (threshold floor plus 10 dB level
uncertainty), and the [left ; right ; left - right] feature assembly.
"""
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ssrmap import corpus, listener, renderer
from ssrmap.scene import SceneParams, bundled_template, instantiate
from ssrmap.seeds import rng_for

OUT = pathlib.Path(__file__).with_suffix("")
OUT.mkdir(exist_ok=True)

template = bundled_template()
grammar = corpus.default_grammar()
sentence = corpus.Sentence(word_ids=(0, 2, 4, 6, 8))

irs = renderer.render_hrir(
    instantiate(template, SceneParams(mode="hrir", probe_xyz=(1.5, 2.5, 1.5))),
    repeats=1, seed=0)
masker = renderer.render_environment(
    instantiate(template, SceneParams(mode="environment")), seed=0)
item = corpus.build_noisy_item(sentence, 65.0, irs, masker,
                               rng_for("demo-feat", 0), grammar=grammar)

gl, gr = listener.log_mel(item)
print(f"gram: {gl.n_frames} frames x {gl.n_bands} bands, "
      f"band centers {gl.band_centers_hz[0]:.0f}..{gl.band_centers_hz[-1]:.0f} Hz")

profiles = {name: listener.make_profile(name)
            for name in ("normal", "impaired_unaided")}
degraded = {
    name: listener.apply_hearing_loss(gl, profile, rng_for("demo-feat", name),
                                      noise_before_floor=False)
    for name, profile in profiles.items()
}

fig, axes = plt.subplots(3, 1, figsize=(9, 8), sharex=True)
panels = [("clean log-Mel (left ear)", gl.levels_db),
          ("normal profile (floor + 1 dB uncertainty)",
           degraded["normal"].levels_db),
          ("impaired profile (N3 floor + 10 dB uncertainty)",
           degraded["impaired_unaided"].levels_db)]
for ax, (title, levels) in zip(axes, panels):
    im = ax.imshow(levels.T, origin="lower", aspect="auto",
                   vmin=0, vmax=80, cmap="magma")
    ax.set_title(title)
    ax.set_ylabel("mel band")
fig.colorbar(im, ax=axes, label="band level / dB SPL")
axes[-1].set_xlabel("frame")
fig.savefig(OUT / "hearing_loss.png", dpi=120)
print(f"wrote {OUT/'hearing_loss.png'}")

feats = listener.binaural_features(gl, gr)
print(f"binaural features: {feats.shape[0]} frames x {feats.shape[1]} dims "
      "(left, right, left-right)")
ild = feats[:, 40:].mean(axis=0)
print("mean interaural difference per band (dB):",
      np.round(ild[:8], 1), "...")
