import numpy as np
import pytest

from ssrmap import listener
from ssrmap.audio import BinauralSignal, db_to_lin
from ssrmap.listener import (FeatureError, ListenerProfile, _analyzer,
                             apply_hearing_loss, binaural_features,
                             extract_features, frame_count, log_mel,
                             log_mel_batch, make_profile, mel_filterbank,
                             read_feature_dump, write_feature_dump)
from ssrmap.seeds import rng_for

FS = 16000


def tone_signal(freq, db_spl, seconds=2.0):
    t = np.arange(int(seconds * FS)) / FS
    amp = np.sqrt(2) * db_to_lin(db_spl - 130.0)
    x = amp * np.sin(2 * np.pi * freq * t)
    return BinauralSignal(np.stack([x, x]))


def test_frame_count_arithmetic():
    assert frame_count(32000, FS) == 198
    assert frame_count(400, FS) == 1
    assert frame_count(399, FS) == 0


def test_silence_maps_to_sentinel():
    gl, gr = log_mel(BinauralSignal(np.zeros((2, 8000))))
    np.testing.assert_allclose(gl.levels_db, -170.0, atol=1e-3)
    np.testing.assert_allclose(gr.levels_db, -170.0, atol=1e-3)


def test_tone_band_level_calibrated():
    gl, _ = log_mel(tone_signal(1000.0, 70.0))
    mean_levels = gl.levels_db.mean(axis=0)
    band = int(np.argmax(mean_levels))
    # the band containing 1 kHz dominates and reads the tone level
    assert abs(gl.band_centers_hz[band] - 1000.0) < 200.0
    assert abs(mean_levels[band] - 70.0) <= 1.0


def test_noise_band_levels_sum_to_broadband_level():
    rng = np.random.default_rng(0)
    K = 65.0
    w = rng.standard_normal(4 * FS)
    w *= db_to_lin(K - 130.0) / np.sqrt(np.mean(w ** 2))
    gl, _ = log_mel(BinauralSignal(np.stack([w, w])))
    total = 10 * np.log10(np.sum(10 ** (gl.levels_db / 10.0), axis=1))
    assert abs(float(np.mean(total)) - K) <= 1.0


def test_filterbank_partition_of_unity():
    weights = mel_filterbank(FS)
    freqs = np.fft.rfftfreq(512, 1 / FS)
    centers = listener.mel_band_centers()
    inner = (freqs >= centers[0]) & (freqs <= centers[-1])
    np.testing.assert_allclose(weights.sum(axis=0)[inner], 1.0, atol=1e-9)


def test_log_mel_batch_matches_single():
    rng = np.random.default_rng(1)
    sigs = rng.standard_normal((3, 2, 8000)) * 1e-3
    gl_b, gr_b = log_mel_batch(sigs, FS)
    for k in range(3):
        gl, gr = log_mel(BinauralSignal(sigs[k]))
        np.testing.assert_allclose(gl_b[k], gl.levels_db, atol=1e-4)
        np.testing.assert_allclose(gr_b[k], gr.levels_db, atol=1e-4)


def test_profiles():
    normal = make_profile("normal")
    impaired = make_profile("impaired_unaided")
    aided = make_profile("impaired_aided")
    assert normal.level_uncertainty_db == 1.0
    assert impaired.level_uncertainty_db == 10.0
    assert aided.aided and not impaired.aided
    np.testing.assert_array_equal(impaired.thresholds_db_spl,
                                  aided.thresholds_db_spl)
    assert np.all(impaired.thresholds_db_spl > normal.thresholds_db_spl)
    with pytest.raises(FeatureError):
        make_profile("bionic")
    with pytest.raises(FeatureError):
        ListenerProfile("x", np.zeros(20), level_uncertainty_db=0.0)


def _gram(levels):
    return listener.LogMelGram(
        levels_db=np.asarray(levels, dtype=np.float32),
        band_centers_hz=listener.mel_band_centers())


def test_hearing_loss_identity_limit():
    g = _gram(np.random.default_rng(0).normal(60, 5, size=(50, 20)))
    p = ListenerProfile("x", np.full(20, -1e6), level_uncertainty_db=1e-9)
    out = apply_hearing_loss(g, p, rng_for("t", 0))
    np.testing.assert_allclose(out.levels_db, g.levels_db, atol=1e-4)


def test_hearing_loss_floor_dominates_silence():
    g = _gram(np.full((40, 20), -170.0))
    p = ListenerProfile("x", np.full(20, 20.0), level_uncertainty_db=1.0)
    out = apply_hearing_loss(g, p, rng_for("t", 1))
    np.testing.assert_array_equal(out.levels_db, np.full((40, 20), 20.0,
                                                         dtype=np.float32))


def test_hearing_loss_noise_statistics():
    cells = (500, 20)  # 10^4 cells is plenty for a quick check
    g = _gram(np.full(cells, 90.0))
    p = ListenerProfile("x", np.full(20, 0.0), level_uncertainty_db=10.0)
    out = apply_hearing_loss(g, p, rng_for("t", 2))
    resid = out.levels_db.astype(np.float64) - 90.0
    assert abs(np.std(resid) - 10.0) < 0.5


def test_hearing_loss_floor_mode_switch():
    g = _gram(np.full((100, 20), -170.0))
    p = ListenerProfile("x", np.full(20, 30.0), level_uncertainty_db=5.0)
    floored_first = apply_hearing_loss(g, p, rng_for("t", 3),
                                       noise_before_floor=False)
    # floor-then-noise leaves the noise visible on the floored cells
    assert np.std(floored_first.levels_db - 30.0) > 1.0


def test_gain_compensation_asymmetry():
    # amplification shifts above-floor cells exactly, noise stays put
    base = np.random.default_rng(4).normal(70, 3, size=(60, 20))
    p = ListenerProfile("x", np.full(20, 0.0), level_uncertainty_db=10.0)
    out1 = apply_hearing_loss(_gram(base), p, rng_for("g", 1))
    out2 = apply_hearing_loss(_gram(base + 12.0), p, rng_for("g", 1))
    np.testing.assert_allclose(out2.levels_db - out1.levels_db, 12.0,
                               atol=1e-3)


def test_hearing_loss_determinism():
    g = _gram(np.random.default_rng(1).normal(50, 8, size=(30, 20)))
    p = make_profile("impaired_unaided")
    a = apply_hearing_loss(g, p, rng_for("d", 7))
    b = apply_hearing_loss(g, p, rng_for("d", 7))
    np.testing.assert_array_equal(a.levels_db, b.levels_db)


def test_binaural_features_blocks():
    gl = _gram(np.full((10, 20), 50.0))
    gr = _gram(np.full((10, 20), 44.0))
    feats = binaural_features(gl, gr)
    assert feats.shape == (10, 60)
    np.testing.assert_allclose(feats[:, 40:], 6.0)
    same = binaural_features(gl, gl)
    np.testing.assert_allclose(same[:, 40:], 0.0)


def test_binaural_features_shape_mismatch():
    gl = _gram(np.zeros((10, 20)))
    gr = _gram(np.zeros((11, 20)))
    with pytest.raises(FeatureError):
        binaural_features(gl, gr)


def test_extract_features_shape():
    x = BinauralSignal(np.random.default_rng(0).standard_normal((2, 8000))
                       * 1e-3)
    feats = extract_features(x, make_profile("normal"), rng_for("f", 0))
    assert feats.shape == (frame_count(8000, FS), 60)


def test_feature_dump_round_trip(tmp_path):
    feats = np.random.default_rng(0).standard_normal((12, 60)).astype(
        np.float32)
    path = tmp_path / "features.bin"
    write_feature_dump(path, feats)
    back = read_feature_dump(path)
    np.testing.assert_array_equal(back, feats)
    with pytest.raises(FeatureError):
        (tmp_path / "bogus.bin").write_bytes(b"nope")
        read_feature_dump(tmp_path / "bogus.bin")


def test_sample_rate_mismatch_rejected():
    with pytest.raises(Exception):
        mel_filterbank(8000)  # fmax 8 kHz above the 4 kHz Nyquist
