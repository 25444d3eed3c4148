"""Calibrated two-channel sample buffers and WAV I/O.

All audio in the toolchain is carried as linear amplitude relative to full
scale, with a fixed calibration: a signal with 0 dBFS RMS represents
130 dB SPL. Level-dependent stages (hearing device, hearing thresholds)
rely on this convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile

SAMPLE_RATE = 16000
CALIBRATION_DB_SPL = 130.0


class CalibrationError(ValueError):
    """Raised when a stage receives audio with an unexpected calibration."""


class SampleRateError(ValueError):
    """Raised on sample-rate mismatches between signals or filters."""


def db_to_lin(db: float) -> float:
    return 10.0 ** (db / 20.0)


def lin_to_db(amplitude) -> float:
    return 20.0 * np.log10(np.maximum(amplitude, 1e-30))


def rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x), dtype=np.float64)))


@dataclass
class BinauralSignal:
    """2 x N buffer of linear amplitude with its calibration.

    samples[0] is the left channel, samples[1] the right channel.
    """

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    calibration_db_spl: float = CALIBRATION_DB_SPL

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples))
        if self.samples.shape[0] != 2:
            raise ValueError(
                f"expected 2 channels, got shape {self.samples.shape}"
            )

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate

    def level_db_spl(self) -> float:
        """Broadband level over both channels in dB SPL."""
        return float(lin_to_db(rms(self.samples))) + self.calibration_db_spl

    def channel_levels_db_spl(self) -> np.ndarray:
        r = np.sqrt(np.mean(np.square(self.samples), axis=1))
        return lin_to_db(r) + self.calibration_db_spl


@dataclass
class ImpulseResponsePair:
    """Binaural impulse response from one probe position to the two ears."""

    ir: np.ndarray
    sample_rate: int = SAMPLE_RATE
    probe_position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    realization_index: int = 0

    def __post_init__(self):
        self.ir = np.atleast_2d(np.asarray(self.ir))
        if self.ir.shape[0] != 2:
            raise ValueError(f"expected 2 channels, got shape {self.ir.shape}")
        self.probe_position = np.asarray(self.probe_position, dtype=float)

    @property
    def n_samples(self) -> int:
        return self.ir.shape[1]


def write_wav(path, signal: BinauralSignal) -> None:
    """Write a 32-bit float stereo RIFF WAV file."""
    data = np.asarray(signal.samples, dtype=np.float32).T.copy()
    wavfile.write(str(path), signal.sample_rate, data)


def read_wav(path, calibration_db_spl: float = CALIBRATION_DB_SPL) -> BinauralSignal:
    """Read a stereo WAV file written by :func:`write_wav`."""
    sr, data = wavfile.read(str(path))
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected 2 channels, got {data.shape[1]}")
    if data.dtype != np.float32:
        # integer PCM fallback, normalize to full scale
        info = np.iinfo(data.dtype)
        data = data.astype(np.float64) / max(abs(info.min), info.max)
    return BinauralSignal(data.T.astype(np.float64), sample_rate=int(sr),
                          calibration_db_spl=calibration_db_spl)
