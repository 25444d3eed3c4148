import numpy as np
import pytest

from ssrmap import corpus
from ssrmap.audio import BinauralSignal, ImpulseResponsePair, db_to_lin
from ssrmap.corpus import (CorpusError, Sentence, balanced_sentences,
                           build_noisy_item, default_grammar,
                           enumerate_sentences, sentence_audio,
                           synthesize_word)
from ssrmap.seeds import rng_for


@pytest.fixture(scope="module")
def grammar():
    return default_grammar()


def test_grammar_shape(grammar):
    assert len(grammar.words) == 50
    assert len(grammar.slots) == 5
    labels = {w.label for w in grammar.words}
    assert len(labels) == 50


def test_sentence_validation():
    with pytest.raises(CorpusError):
        Sentence(word_ids=(0, 1, 2))
    with pytest.raises(CorpusError):
        Sentence(word_ids=(0, 1, 2, 3, 10))
    s = Sentence(word_ids=(1, 2, 3, 4, 5))
    assert s.global_ids() == (1, 12, 23, 34, 45)


def test_enumerate_exhaustive(grammar):
    sentences = enumerate_sentences(grammar, corpus.SENTENCE_SPACE, seed=0)
    assert len({s.word_ids for s in sentences}) == corpus.SENTENCE_SPACE


def test_enumerate_deterministic_and_bounded(grammar):
    a = enumerate_sentences(grammar, 1, seed=5)
    b = enumerate_sentences(grammar, 1, seed=5)
    assert a == b
    with pytest.raises(CorpusError):
        enumerate_sentences(grammar, corpus.SENTENCE_SPACE + 1, seed=0)


def test_enumerate_slot_marginals_uniform(grammar):
    # chi-square against uniform per slot, two different seeds
    for seed in (1, 2):
        sentences = enumerate_sentences(grammar, 1000, seed=seed)
        for slot in range(5):
            counts = np.bincount([s.word_ids[slot] for s in sentences],
                                 minlength=10)
            chi2 = float(np.sum((counts - 100.0) ** 2 / 100.0))
            # dof 9: far tail bound, fails with probability << 1e-6
            assert chi2 < 60.0
    assert (enumerate_sentences(grammar, 100, seed=1)
            != enumerate_sentences(grammar, 100, seed=2))


def test_balanced_sentences_cover_all_words(grammar):
    sentences = balanced_sentences(grammar, 60, seed=0)
    for slot in range(5):
        counts = np.bincount([s.word_ids[slot] for s in sentences],
                             minlength=10)
        assert np.all(counts == 6)


def test_balanced_sentences_respect_exclusions(grammar):
    train = balanced_sentences(grammar, 60, seed=1)
    test = balanced_sentences(grammar, 20, seed=2, exclude=train)
    train_set = {s.word_ids for s in train}
    assert all(s.word_ids not in train_set for s in test)
    assert len({s.word_ids for s in test}) == 20


def test_word_synthesis_contracts():
    a = synthesize_word(0)
    b = synthesize_word(0)
    np.testing.assert_array_equal(a, b)
    assert len(a) == 6400
    for wid in (0, 17, 49):
        w = synthesize_word(wid)
        rms_dbfs = 20 * np.log10(np.sqrt(np.mean(w ** 2)))
        assert abs(rms_dbfs - corpus.WORD_RMS_DBFS) < 0.01
    with pytest.raises(CorpusError):
        synthesize_word(50)


def test_word_centroid_trajectories_distinct():
    def centroids(wid):
        w = synthesize_word(wid)
        out = []
        bounds = np.linspace(0, len(w), 4).astype(int)
        for k in range(3):
            seg = w[bounds[k]:bounds[k + 1]]
            spec = np.abs(np.fft.rfft(seg)) ** 2
            freqs = np.fft.rfftfreq(len(seg), 1 / 16000)
            out.append(np.sum(freqs * spec) / np.sum(spec))
        return np.array(out)

    trajs = np.stack([centroids(w) for w in range(50)])
    dists = np.linalg.norm(trajs[:, None, :] - trajs[None, :, :], axis=2)
    np.fill_diagonal(dists, np.inf)
    assert dists.min() > 0.0


def test_sentence_audio_duration(grammar):
    s = Sentence(word_ids=(0, 1, 2, 3, 4))
    audio = sentence_audio(grammar, s)
    assert len(audio) == 5 * 6400


def _delta_ir(gain=1.0, n=64):
    ir = np.zeros((2, n))
    ir[:, 0] = gain
    return ImpulseResponsePair(ir=ir)


def test_noisy_item_silent_masker_level(grammar):
    s = Sentence(word_ids=(1, 1, 1, 1, 1))
    masker = BinauralSignal(np.zeros((2, 160000)))
    gain = 0.25
    item = build_noisy_item(s, 65.0, [_delta_ir(gain)], masker,
                            rng_for("t", 0), grammar=grammar)
    # dry speech is scaled to 65 dB SPL; the IR then applies its path gain
    n_speech = 5 * 6400
    got = np.sqrt(np.mean(item.samples[0][:n_speech] ** 2))
    expected = db_to_lin(65.0 - 130.0) * gain
    assert got == pytest.approx(expected, rel=1e-6)


def test_noisy_item_level_linearity(grammar):
    s = Sentence(word_ids=(2, 3, 4, 5, 6))
    masker = BinauralSignal(np.zeros((2, 160000)))
    a = build_noisy_item(s, 62.0, [_delta_ir()], masker, rng_for("x", 1),
                         grammar=grammar)
    b = build_noisy_item(s, 65.0, [_delta_ir()], masker, rng_for("x", 1),
                         grammar=grammar)
    np.testing.assert_allclose(b.samples, a.samples * 10 ** (3 / 20),
                               rtol=1e-9, atol=1e-15)


def test_noisy_item_masker_unscaled_and_offset_random(grammar):
    s = Sentence(word_ids=(0, 0, 0, 0, 0))
    rng = np.random.default_rng(9)
    masker = BinauralSignal(rng.standard_normal((2, 160000)) * 1e-3)
    speech_only = build_noisy_item(
        s, 60.0, [_delta_ir()], BinauralSignal(np.zeros((2, 160000))),
        rng_for("y", 1), grammar=grammar)
    item1 = build_noisy_item(s, 60.0, [_delta_ir()], masker, rng_for("y", 1),
                             grammar=grammar)
    item2 = build_noisy_item(s, 60.0, [_delta_ir()], masker, rng_for("y", 2),
                             grammar=grammar)
    frag1 = item1.samples - speech_only.samples
    frag2 = item2.samples - speech_only.samples
    # identical speech component, different masker fragments
    assert not np.array_equal(frag1, frag2)
    # fragments are literal slices of the masker (never rescaled)
    n = frag1.shape[1]
    found = False
    data = masker.samples
    for off in range(data.shape[1] - n + 1):
        if np.allclose(data[:, off:off + n], frag1, atol=1e-12):
            found = True
            break
    assert found


def test_noisy_item_tiles_short_masker(grammar):
    s = Sentence(word_ids=(1, 2, 3, 4, 5))
    short = BinauralSignal(np.ones((2, 8000)) * 1e-4)
    item = build_noisy_item(s, 60.0, [_delta_ir()], short, rng_for("z", 0),
                            grammar=grammar)
    assert item.samples.shape[1] == 5 * 6400 + 3200


def test_noisy_item_requires_irs(grammar):
    s = Sentence(word_ids=(0, 1, 2, 3, 4))
    masker = BinauralSignal(np.zeros((2, 160000)))
    with pytest.raises(CorpusError):
        build_noisy_item(s, 60.0, [], masker, rng_for("w", 0),
                         grammar=grammar)


def test_noisy_item_cycles_ir_realizations(grammar):
    s = Sentence(word_ids=(0, 1, 2, 3, 4))
    masker = BinauralSignal(np.zeros((2, 160000)))
    irs = [_delta_ir(gain=0.5), _delta_ir(gain=1.0)]
    a = build_noisy_item(s, 60.0, irs, masker, rng_for("v", 0),
                         grammar=grammar, item_index=0)
    b = build_noisy_item(s, 60.0, irs, masker, rng_for("v", 0),
                         grammar=grammar, item_index=1)
    c = build_noisy_item(s, 60.0, irs, masker, rng_for("v", 0),
                         grammar=grammar, item_index=2)
    np.testing.assert_allclose(b.samples, 2 * a.samples, rtol=1e-12)
    np.testing.assert_allclose(c.samples, a.samples, rtol=1e-12)
