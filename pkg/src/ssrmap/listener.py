"""Listener model: log-Mel analysis, hearing loss, binaural features.

The listener is modeled inside the recognizer's feature extraction. Per
ear channel a calibrated log-Mel spectrogram is computed (band levels in
dB SPL); the hearing loss is imposed there as additive Gaussian level
uncertainty plus a hard lower threshold per band; finally left, right and
left-minus-right band levels are concatenated into the feature vector, a
simple blind binaural representation.

Key property of this hearing-loss model: plain amplification shifts band
levels above the threshold floor (so audibility deficits are compensable)
but leaves the level-uncertainty noise untouched (so the distortion
component is not).
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .audio import BinauralSignal, SampleRateError

N_BANDS = 20
FMIN_HZ = 64.0
FMAX_HZ = 8000.0
FRAME_MS = 25.0
HOP_MS = 10.0
N_FFT = 512
POWER_FLOOR = 1e-30  # digital silence maps to a large negative sentinel

PROFILE_NAMES = ("normal", "impaired_unaided", "impaired_aided")


class FeatureError(ValueError):
    pass


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=float) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=float) / 2595.0) - 1.0)


def mel_band_centers(n_bands: int = N_BANDS, fmin: float = FMIN_HZ,
                     fmax: float = FMAX_HZ) -> np.ndarray:
    edges = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_bands + 2)
    return mel_to_hz(edges[1:-1])


def mel_filterbank(fs: int, n_fft: int = N_FFT, n_bands: int = N_BANDS,
                   fmin: float = FMIN_HZ, fmax: float = FMAX_HZ) -> np.ndarray:
    """Triangular mel weights, peak 1, on rfft bin frequencies.

    Adjacent triangles sum to 1 between the first and last band centers,
    so summing band powers recovers the in-band total power.
    """
    if fmax > fs / 2 + 1e-9:
        raise SampleRateError(
            f"filterbank fmax {fmax} exceeds Nyquist {fs / 2}"
        )
    mel_pts = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_bands + 2)
    hz_pts = mel_to_hz(mel_pts)
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / fs)
    weights = np.zeros((n_bands, len(freqs)))
    for b in range(n_bands):
        lo, mid, hi = hz_pts[b], hz_pts[b + 1], hz_pts[b + 2]
        rising = (freqs - lo) / (mid - lo)
        falling = (hi - freqs) / (hi - mid)
        weights[b] = np.clip(np.minimum(rising, falling), 0.0, None)
    return weights


@dataclass
class LogMelGram:
    """Frames x bands matrix of band levels in dB SPL."""

    levels_db: np.ndarray
    band_centers_hz: np.ndarray
    hop_ms: float = HOP_MS
    frame_ms: float = FRAME_MS

    @property
    def n_frames(self) -> int:
        return self.levels_db.shape[0]

    @property
    def n_bands(self) -> int:
        return self.levels_db.shape[1]


@dataclass(frozen=True)
class ListenerProfile:
    name: str
    thresholds_db_spl: np.ndarray   # per mel band
    level_uncertainty_db: float
    aided: bool = False

    def __post_init__(self):
        if self.level_uncertainty_db <= 0:
            raise FeatureError("level uncertainty must be > 0")
        if not np.all(np.isfinite(self.thresholds_db_spl)):
            raise FeatureError("thresholds must be finite")


def _load_tsv_pairs(name: str) -> tuple:
    text = (resources.files("ssrmap.data") / name).read_text()
    freqs, values = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        freqs.append(float(parts[0]))
        values.append([float(p) for p in parts[1:]])
    return np.array(freqs), np.array(values)


def minimum_audible_field() -> tuple:
    """(freqs_hz, threshold_db_spl) for the normal-hearing reference."""
    freqs, values = _load_tsv_pairs("min_audible_field.tsv")
    return freqs, values[:, 0]


def _interp_log_freq(f_query, f_known, values) -> np.ndarray:
    return np.interp(np.log(f_query), np.log(f_known), values)


def band_thresholds_db_spl(audiogram_freqs=None, audiogram_db_hl=None,
                           band_centers=None) -> np.ndarray:
    """Per-mel-band hearing threshold floor in dB SPL.

    Interpolates the audiogram (dB HL) onto the band centers in
    log-frequency and adds the free-field normal-hearing threshold. With
    no audiogram this yields the normal profile's floor.
    """
    if band_centers is None:
        band_centers = mel_band_centers()
    maf_f, maf_v = minimum_audible_field()
    maf = _interp_log_freq(band_centers, maf_f, maf_v)
    if audiogram_freqs is None:
        return maf
    hl = _interp_log_freq(band_centers, np.asarray(audiogram_freqs, float),
                          np.asarray(audiogram_db_hl, float))
    return maf + hl


def make_profile(name: str, audiogram=None,
                 level_uncertainty_db: float = None) -> ListenerProfile:
    """Standard profiles: normal (sigma 1 dB), impaired (N3, sigma 10 dB)."""
    from .device import standard_audiogram  # fixture lives with the device

    if name not in PROFILE_NAMES:
        raise FeatureError(f"unknown profile {name!r}")
    if name == "normal":
        thresholds = band_thresholds_db_spl()
        sigma = 1.0 if level_uncertainty_db is None else level_uncertainty_db
        return ListenerProfile(name, thresholds, sigma, aided=False)
    if audiogram is None:
        audiogram = standard_audiogram("N3")
    thresholds = band_thresholds_db_spl(audiogram.freqs_hz,
                                        audiogram.thresholds_db_hl)
    sigma = 10.0 if level_uncertainty_db is None else level_uncertainty_db
    return ListenerProfile(name, thresholds, sigma,
                           aided=(name == "impaired_aided"))


def frame_count(n_samples: int, fs: int) -> int:
    win = int(round(FRAME_MS * 1e-3 * fs))
    hop = int(round(HOP_MS * 1e-3 * fs))
    if n_samples < win:
        return 0
    return 1 + (n_samples - win) // hop


class MelAnalyzer:
    """Reusable framing + filterbank state for one sample rate."""

    def __init__(self, fs: int, n_bands: int = N_BANDS):
        self.fs = fs
        self.win = int(round(FRAME_MS * 1e-3 * fs))
        self.hop = int(round(HOP_MS * 1e-3 * fs))
        self.window = np.hanning(self.win + 1)[:-1]  # periodic hann
        self.weights = mel_filterbank(fs, N_FFT, n_bands)
        self.band_centers = mel_band_centers(n_bands)
        # bin-power scaling so that summed bin powers estimate the frame
        # mean square of a stationary input (one-sided spectrum)
        scale = 1.0 / (N_FFT * np.sum(self.window ** 2))
        coeff = np.full(N_FFT // 2 + 1, 2.0 * scale)
        coeff[0] = scale
        coeff[-1] = scale
        self.bin_coeff = coeff
        self.window32 = self.window.astype(np.float32)
        self.bin_coeff32 = coeff.astype(np.float32)
        self.weights32 = self.weights.astype(np.float32)

    def band_power(self, x: np.ndarray) -> np.ndarray:
        """Frames x bands mean-square power of one channel."""
        return self.band_power_batch(np.asarray(x)[None, :])[0]

    def band_power_batch(self, x: np.ndarray) -> np.ndarray:
        """(batch, frames, bands) power for equal-length signals (batch, n)."""
        x = np.ascontiguousarray(x, dtype=np.float32)
        n_batch, n = x.shape
        n_frames = frame_count(n, self.fs)
        if n_frames <= 0:
            raise FeatureError(f"input too short for one {FRAME_MS} ms frame")
        sb, st = x.strides
        frames = np.lib.stride_tricks.as_strided(
            x, shape=(n_batch, n_frames, self.win),
            strides=(sb, self.hop * st, st), writeable=False)
        spec = np.fft.rfft(frames * self.window32, n=N_FFT, axis=2)
        power = (spec.real ** 2 + spec.imag ** 2) * self.bin_coeff32
        return power @ self.weights32.T


_ANALYZERS = {}


def _analyzer(fs: int) -> MelAnalyzer:
    if fs not in _ANALYZERS:
        _ANALYZERS[fs] = MelAnalyzer(fs)
    return _ANALYZERS[fs]


def log_mel(x: BinauralSignal) -> tuple:
    """Left and right calibrated log-Mel grams of a binaural signal.

    Band levels are in dB SPL: a full-band stationary noise at K dB SPL
    yields band levels that sum (in power) to K dB SPL.
    """
    ana = _analyzer(x.sample_rate)
    p = ana.band_power_batch(np.asarray(x.samples))
    grams = []
    for ch in range(2):
        levels = 10.0 * np.log10(np.maximum(p[ch], POWER_FLOOR)) \
            + x.calibration_db_spl
        grams.append(LogMelGram(levels_db=levels.astype(np.float32),
                                band_centers_hz=ana.band_centers))
    return grams[0], grams[1]


def log_mel_batch(signals: np.ndarray, sample_rate: int,
                  calibration_db_spl: float = 130.0) -> tuple:
    """Batched log-Mel: (n, 2, L) audio -> left/right (n, frames, bands)."""
    ana = _analyzer(sample_rate)
    n, n_ch, length = signals.shape
    p = ana.band_power_batch(signals.reshape(n * n_ch, length))
    levels = (10.0 * np.log10(np.maximum(p, POWER_FLOOR))
              + calibration_db_spl).astype(np.float32)
    levels = levels.reshape(n, n_ch, levels.shape[1], levels.shape[2])
    return levels[:, 0], levels[:, 1]


def apply_hearing_loss(gram: LogMelGram, profile: ListenerProfile,
                       rng: np.random.Generator,
                       noise_before_floor: bool = True) -> LogMelGram:
    """Impose level uncertainty and the hard threshold floor.

    Default order adds the Gaussian level noise first and floors second,
    so sub-threshold fluctuations stay inaudible; the alternative order is
    available for comparison.
    """
    x = gram.levels_db.astype(np.float64)
    noise = rng.normal(0.0, profile.level_uncertainty_db, size=x.shape)
    floor = profile.thresholds_db_spl[None, :]
    if noise_before_floor:
        out = np.maximum(x + noise, floor)
    else:
        out = np.maximum(x, floor) + noise
    return LogMelGram(levels_db=out.astype(np.float32),
                      band_centers_hz=gram.band_centers_hz,
                      hop_ms=gram.hop_ms, frame_ms=gram.frame_ms)


def binaural_features(gl: LogMelGram, gr: LogMelGram) -> np.ndarray:
    """Frames x (3*bands) matrix: [left ; right ; left - right]."""
    if gl.levels_db.shape != gr.levels_db.shape:
        raise FeatureError(
            f"shape mismatch {gl.levels_db.shape} vs {gr.levels_db.shape}"
        )
    left = gl.levels_db
    right = gr.levels_db
    return np.concatenate([left, right, left - right], axis=1)


def extract_features(x: BinauralSignal, profile: ListenerProfile,
                     rng: np.random.Generator) -> np.ndarray:
    """Full front end: log-Mel, per-ear hearing loss, binaural assembly."""
    gl, gr = log_mel(x)
    gl = apply_hearing_loss(gl, profile, rng)
    gr = apply_hearing_loss(gr, profile, rng)
    return binaural_features(gl, gr)


_DUMP_MAGIC = b"SSRF\x01"


def write_feature_dump(path, features: np.ndarray) -> None:
    """Debug dump: magic, uint32 rows/cols, float32 row-major data."""
    arr = np.ascontiguousarray(features, dtype=np.float32)
    with open(path, "wb") as fh:
        fh.write(_DUMP_MAGIC)
        fh.write(np.array(arr.shape, dtype=np.uint32).tobytes())
        fh.write(arr.tobytes())


def read_feature_dump(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(len(_DUMP_MAGIC))
        if magic != _DUMP_MAGIC:
            raise FeatureError(f"{path}: not a feature dump")
        rows, cols = np.frombuffer(fh.read(8), dtype=np.uint32)
        data = np.frombuffer(fh.read(), dtype=np.float32)
    return data.reshape(int(rows), int(cols)).copy()
