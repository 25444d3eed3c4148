"""The hearing-device model: prescription rule and compressor dynamics.

Plots the per-band gain prescription for the standard N4 audiogram and the
attack/decay step response of the envelope tracker (50 ms / 500 ms).
"""
import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ssrmap import device
from ssrmap.audio import BinauralSignal, db_to_lin

OUT = pathlib.Path(__file__).with_suffix("")
OUT.mkdir(exist_ok=True)

cfg = device.default_device_config()

# --- prescription curves -------------------------------------------------
levels = np.linspace(20, 110, 181)
fig, ax = plt.subplots(figsize=(7, 4))
for b, fc in enumerate(cfg.band_centers_hz):
    ax.plot(levels, cfg.gain_table.gain_db(b, levels), label=f"{fc:.0f} Hz")
ax.set_xlabel("band input level / dB SPL")
ax.set_ylabel("prescribed gain / dB")
ax.set_title("half-gain compressive fit to the N4 standard audiogram")
ax.legend(ncol=2, fontsize=8)
ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(OUT / "prescription.png", dpi=120)
print(f"wrote {OUT/'prescription.png'}")

# --- step response --------------------------------------------------------
fs = 16000
t = np.arange(int(5.0 * fs)) / fs
tone = np.sqrt(2) * np.sin(2 * np.pi * 1000 * t)
amp = np.where(t < 1.0, db_to_lin(-40), db_to_lin(-20))
amp = np.where(t < 2.5, amp, db_to_lin(-40))
env, times = device.track_envelopes(BinauralSignal(np.stack([tone * amp] * 2)),
                                    device.DeviceConfig())
fig, ax = plt.subplots(figsize=(8, 4))
ax.plot(times, 20 * np.log10(env[0, 2] + 1e-12) + 130, lw=1.2,
        label="smoothed 1 kHz band envelope")
ax.plot(t, 20 * np.log10(amp * np.sqrt(0.5)) + 130, lw=0.8, ls="--",
        label="input band level")
ax.axvline(1.05, color="k", lw=0.5)
ax.axvline(3.0, color="k", lw=0.5)
ax.set_xlabel("time / s")
ax.set_ylabel("level / dB SPL")
ax.set_title("asymmetric envelope smoothing: 50 ms attack, 500 ms decay")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "step_response.png", dpi=120)
print(f"wrote {OUT/'step_response.png'}")

# --- level in / level out -------------------------------------------------
print("steady 1 kHz tone, input level -> aided output level:")
for spl in (40, 55, 65, 80, 95):
    tone = np.sqrt(2) * np.sin(2 * np.pi * 1000 * np.arange(fs) / fs)
    sig = BinauralSignal(np.stack([tone, tone]) * db_to_lin(spl - 130.0))
    out = device.compress(sig, cfg)
    print(f"  {spl:3d} dB SPL -> {out.level_db_spl():5.1f} dB SPL")
