"""Seeded source-signal generators for the environment renderer.

Each noise source in the scene carries a ``<signal>`` spec naming one of
the generators here. Signals are deterministic functions of (kind, seed)
and are produced from scene time zero so a recording starting at
``start_s`` is a plain slice.
"""
from __future__ import annotations

import numpy as np
from scipy import signal as sps

from .audio import db_to_lin
from .scene import SignalSpec
from .seeds import rng_for


def _speech_shaped(rng: np.random.Generator, n: int, fs: int) -> np.ndarray:
    """Noise with a coarse long-term speech spectrum.

    Flat-ish up to ~500 Hz, then falling; realized with a one-pole lowpass
    at 500 Hz plus a gentle first-order highpass at 100 Hz.
    """
    white = rng.standard_normal(n + fs // 10)
    b, a = sps.butter(1, 500 / (fs / 2), btype="low")
    shaped = sps.lfilter(b, a, white)
    b, a = sps.butter(1, 100 / (fs / 2), btype="high")
    shaped = sps.lfilter(b, a, shaped)
    return shaped[fs // 10:]  # drop filter warm-up


def _amplitude_modulate(x: np.ndarray, fs: int, rate_hz: float,
                        depth: float) -> np.ndarray:
    t = np.arange(len(x)) / fs
    mod = 1.0 + depth * np.sin(2 * np.pi * rate_hz * t)
    # keep the long-term RMS independent of modulation depth
    return x * mod / np.sqrt(1.0 + 0.5 * depth ** 2)


def _lowpass_noise(rng: np.random.Generator, n: int, fs: int,
                   cutoff_hz: float) -> np.ndarray:
    white = rng.standard_normal(n + fs // 10)
    b, a = sps.butter(4, cutoff_hz / (fs / 2), btype="low")
    return sps.lfilter(b, a, white)[fs // 10:]


def generate(spec: SignalSpec, n_samples: int, fs: int, seed_key: str) -> np.ndarray:
    """Render ``n_samples`` of a source signal from scene time zero.

    The output RMS equals the spec's free-field level at 1 m under the
    130 dB SPL calibration convention.
    """
    seed = spec.attrs.get("seed", "0")
    rng = rng_for("src", seed_key, spec.kind, seed)
    if spec.kind == "speech_shaped_am":
        x = _speech_shaped(rng, n_samples, fs)
        x = _amplitude_modulate(
            x, fs,
            rate_hz=float(spec.attrs.get("mod_hz", "4.0")),
            depth=float(spec.attrs.get("mod_depth", "0.8")),
        )
    elif spec.kind == "lowpass_noise":
        x = _lowpass_noise(rng, n_samples, fs,
                           cutoff_hz=float(spec.attrs.get("cutoff_hz", "2000")))
    elif spec.kind == "white_noise":
        x = rng.standard_normal(n_samples)
    elif spec.kind == "impulse":
        x = np.zeros(n_samples)
        x[0] = 1.0
        return x  # impulse amplitude is not level-scaled
    else:
        raise ValueError(f"unknown signal kind {spec.kind!r}")
    current = np.sqrt(np.mean(np.square(x)))
    target = db_to_lin(spec.level_db_spl - 130.0)
    return x * (target / max(current, 1e-30))
