"""Binaural scene rendering: image sources, ORTF receiver, reverb tail.

Two operation modes mirror the render-script interface:

* ``environment`` -- sum every unmuted noise source convolved with its
  source-to-ear response, yielding a calibrated binaural noise recording.
* ``hrir`` -- binaural impulse responses from a probe position, repeated
  with a shared deterministic early part (image sources through the ORTF
  capsule delays/gains) and per-realization stochastic late tails.

Propagation is an axis-aligned image-source model (default order 2) plus
an exponentially decaying Gaussian tail matched to the scene RT60. The
receiver is an ORTF pair: two cardioids 17 cm apart angled +/-55 degrees,
a deliberately coarse stand-in for a head.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import signal as sps

from . import sources
from .audio import BinauralSignal, ImpulseResponsePair, SampleRateError
from .scene import MODE_ENVIRONMENT, MODE_HRIR, Room, SceneInstance
from .seeds import rng_for

SPEED_OF_SOUND = 343.0
R_MIN = 0.2           # clamps the 1/r singularity next to the listener
DEFAULT_ORDER = 2
IR_DURATION_S = 1.0
CAPSULE_SPACING = 0.17
CAPSULE_ANGLE_DEG = 55.0


class RenderError(ValueError):
    pass


def cardioid_gain(angle_rad):
    """Cardioid directivity, 1 on axis, 0 at the rear null."""
    return 0.5 * (1.0 + np.cos(angle_rad))


def _rotation(azimuth_deg: float) -> np.ndarray:
    """2-D rotation taking the 0-degree look direction (+y) to the azimuth.

    Positive azimuth turns counterclockwise seen from above, i.e. toward
    the listener's left.
    """
    a = np.deg2rad(azimuth_deg)
    return np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])


@dataclass(frozen=True)
class OrtfReceiver:
    """Near-coincident cardioid pair; left capsule is index 0."""

    position: np.ndarray
    azimuth_deg: float
    capsule_spacing: float = CAPSULE_SPACING
    capsule_angle_deg: float = CAPSULE_ANGLE_DEG

    def look_vector(self) -> np.ndarray:
        d = _rotation(self.azimuth_deg) @ np.array([0.0, 1.0])
        return np.array([d[0], d[1], 0.0])

    def capsule_positions(self) -> np.ndarray:
        rot = _rotation(self.azimuth_deg)
        left = rot @ np.array([-self.capsule_spacing / 2, 0.0])
        right = rot @ np.array([self.capsule_spacing / 2, 0.0])
        pos = np.asarray(self.position, dtype=float)
        return np.array([
            pos + np.array([left[0], left[1], 0.0]),
            pos + np.array([right[0], right[1], 0.0]),
        ])

    def capsule_axes(self) -> np.ndarray:
        axes = []
        for sign in (+1, -1):  # left capsule points left of the look axis
            d = _rotation(self.azimuth_deg + sign * self.capsule_angle_deg) @ \
                np.array([0.0, 1.0])
            axes.append([d[0], d[1], 0.0])
        return np.array(axes)


@dataclass(frozen=True)
class ImageSource:
    position: np.ndarray
    reflections: int


def image_sources(room: Room, src, order: int) -> list:
    """Direct path plus mirror images up to the given reflection order."""
    src = np.asarray(src, dtype=float)
    if not 0 <= order <= 3:
        raise RenderError(f"reflection order {order} outside [0, 3]")
    if not room.contains(src):
        raise RenderError(f"source {src} outside room {room.name!r}")
    rel = src - room.origin
    size = room.size

    # per-axis mirror options (u, n) with reflection count |n - u| + |n|
    per_axis = []
    for axis in range(3):
        options = []
        for u, n in product((0, 1), range(-order, order + 1)):
            k = abs(n - u) + abs(n)
            if k <= order:
                coord = (1 - 2 * u) * rel[axis] + 2 * n * size[axis]
                options.append((coord, k))
        per_axis.append(options)

    images = []
    for (x, kx), (y, ky), (z, kz) in product(*per_axis):
        k = kx + ky + kz
        if k <= order:
            pos = room.origin + np.array([x, y, z])
            images.append(ImageSource(position=pos, reflections=k))
    return images


def path_gain(image: ImageSource, point, reflection_coeff: float,
              r_min: float = R_MIN) -> float:
    r = float(np.linalg.norm(image.position - np.asarray(point, dtype=float)))
    return reflection_coeff ** image.reflections / max(r, r_min)


def _add_fractional_impulse(ir: np.ndarray, delay_samples: float,
                            amplitude: float) -> None:
    """Linear-interpolation fractional delay; realizes ITD sub-sample shifts."""
    n0 = int(np.floor(delay_samples))
    frac = delay_samples - n0
    if 0 <= n0 < len(ir):
        ir[n0] += amplitude * (1.0 - frac)
    if 0 <= n0 + 1 < len(ir):
        ir[n0 + 1] += amplitude * frac


def _binaural_ir_early(instance: SceneInstance, src_position,
                       order: int = DEFAULT_ORDER,
                       duration_s: float = IR_DURATION_S) -> np.ndarray:
    """Deterministic image-source part of a source-to-ears response."""
    fs = instance.sample_rate
    room = instance.room_of(instance.receiver.position)
    receiver = OrtfReceiver(
        position=np.asarray(instance.receiver.position, dtype=float),
        azimuth_deg=instance.receiver.azimuth_deg,
    )
    capsules = receiver.capsule_positions()
    axes = receiver.capsule_axes()
    images = image_sources(room, src_position, order)

    n = int(round(duration_s * fs))
    ir = np.zeros((2, n))
    for image in images:
        for ch in range(2):
            vec = image.position - capsules[ch]
            r = float(np.linalg.norm(vec))
            direction = vec / max(r, 1e-12)
            cos_angle = float(np.clip(np.dot(direction, axes[ch]), -1.0, 1.0))
            amp = (room.reflection ** image.reflections
                   / max(r, R_MIN)
                   * cardioid_gain(np.arccos(cos_angle)))
            _add_fractional_impulse(ir[ch], r / SPEED_OF_SOUND * fs, amp)
    return ir


def _late_tail(instance: SceneInstance, src_position, n: int,
               seed_key: str, realization: int) -> np.ndarray:
    """Exponentially decaying Gaussian tail matched to the scene RT60.

    Independent noise per channel (diffuse field); amplitude referenced to
    the direct-path gain so the tail level scales with source distance.
    """
    fs = instance.sample_rate
    reverb = instance.reverb
    rng = rng_for("tail", seed_key, realization)
    r_direct = float(np.linalg.norm(
        np.asarray(src_position, dtype=float)
        - np.asarray(instance.receiver.position, dtype=float)))
    t0 = r_direct / SPEED_OF_SOUND
    t = np.arange(n) / fs
    envelope = np.where(
        t >= t0,
        10.0 ** (-3.0 * (t - t0) / reverb.rt60_s),
        0.0,
    )
    amp = 10.0 ** (reverb.level_db / 20.0) / max(r_direct, R_MIN)
    return amp * envelope * rng.standard_normal((2, n))


def binaural_ir(instance: SceneInstance, src_position, seed_key: str,
                realization: int = 0, order: int = DEFAULT_ORDER,
                duration_s: float = IR_DURATION_S) -> np.ndarray:
    ir = _binaural_ir_early(instance, src_position, order, duration_s)
    if instance.reverb.enabled:
        ir = ir + _late_tail(instance, src_position, ir.shape[1],
                             seed_key, realization)
    return ir


def render_hrir(instance: SceneInstance, probe=None, repeats: int = 5,
                seed: int = 0, order: int = DEFAULT_ORDER) -> list:
    """Probe-to-ears impulse responses, one per stochastic-tail realization."""
    if instance.mode != MODE_HRIR:
        raise RenderError("render_hrir requires an instance in hrir mode")
    if repeats < 1:
        raise RenderError("repeats must be >= 1")
    if probe is None:
        probe = instance.source("probe").position
    probe = np.asarray(probe, dtype=float)
    instance.room_of(probe)  # raises if outside the geometry

    early = _binaural_ir_early(instance, probe, order)
    seed_key = f"{seed}|hrir|{probe[0]:.6g},{probe[1]:.6g},{probe[2]:.6g}"
    out = []
    for k in range(repeats):
        ir = early.copy()
        if instance.reverb.enabled:
            ir += _late_tail(instance, probe, ir.shape[1], seed_key, k)
        out.append(ImpulseResponsePair(
            ir=ir, sample_rate=instance.sample_rate,
            probe_position=probe, realization_index=k,
        ))
    return out


def render_environment(instance: SceneInstance, start_s: float = None,
                       duration_s: float = None, seed: int = 0,
                       order: int = DEFAULT_ORDER) -> BinauralSignal:
    """Binaural recording of all unmuted noise sources.

    With every source muted the output is digital silence (models the
    quiet room with the door closed and the TV off).
    """
    if instance.mode != MODE_ENVIRONMENT:
        raise RenderError("render_environment requires environment mode")
    fs = instance.sample_rate
    start_s = instance.start_s if start_s is None else start_s
    duration_s = instance.duration_s if duration_s is None else duration_s
    if duration_s <= 0:
        raise RenderError("duration_s must be > 0")
    n = int(round(duration_s * fs))
    n_start = int(round(start_s * fs))
    out = np.zeros((2, n))
    for src in instance.unmuted_sources():
        if src.name == "probe":
            continue
        dry = sources.generate(src.signal, n_start + n, fs,
                               seed_key=f"{seed}|{src.name}")[n_start:]
        ir = binaural_ir(instance, src.position,
                         seed_key=f"{seed}|env|{src.name}", order=order)
        for ch in range(2):
            out[ch] += sps.fftconvolve(dry, ir[ch])[:n]
    return BinauralSignal(out, sample_rate=fs)


def fast_convolve(x, ir: ImpulseResponsePair) -> BinauralSignal:
    """FFT convolution of a source signal with a binaural IR.

    Accepts a mono array (applied to both IR channels) or a BinauralSignal
    (convolved channel-wise). Output length is N + M - 1.
    """
    if isinstance(x, BinauralSignal):
        if x.sample_rate != ir.sample_rate:
            raise SampleRateError(
                f"sample rates differ: {x.sample_rate} vs {ir.sample_rate}"
            )
        data = x.samples
        fs = x.sample_rate
        y = np.stack([
            sps.fftconvolve(data[0], ir.ir[0]),
            sps.fftconvolve(data[1], ir.ir[1]),
        ])
    else:
        data = np.asarray(x, dtype=float)
        if data.ndim != 1:
            raise ValueError("mono input must be 1-D")
        fs = ir.sample_rate
        y = np.stack([
            sps.fftconvolve(data, ir.ir[0]),
            sps.fftconvolve(data, ir.ir[1]),
        ])
    return BinauralSignal(y, sample_rate=fs)
