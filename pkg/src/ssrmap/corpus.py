"""Matrix-sentence speech model with synthetic pseudo-words.

The speech test is a closed 5-slot grammar (name verb numeral adjective
object) with 10 words per slot, hence 10^5 valid sentences. Real matrix
recordings are not redistributable, so word audio is synthesized: each
word is 0.4 s of three 133 ms segments, each a sum of three formant-like
tones. Segment formant triples are drawn from a small shared alphabet via
an injective word code, so different words share segments (keeping the
task confusable near threshold) while every word remains distinct.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal as sps

from .audio import BinauralSignal, SAMPLE_RATE, db_to_lin
from .seeds import rng_for

SLOTS = ("name", "verb", "numeral", "adjective", "object")
WORDS_PER_SLOT = 10
N_WORDS = len(SLOTS) * WORDS_PER_SLOT
SENTENCE_SPACE = WORDS_PER_SLOT ** len(SLOTS)

WORD_DURATION_S = 0.4
N_SEGMENTS = 3
WORD_RMS_DBFS = -20.0

_WORD_LABELS = (
    "peter kathy lucy alan nina oscar rachel steven hannah barry".split(),
    "got sees bought gives wants sold likes keeps wins holds".split(),
    "two three four five six seven eight nine twelve sixty".split(),
    "large small old cheap heavy green dark wet red pretty".split(),
    "rings tables chairs spoons boxes stones cups bikes plates shoes".split(),
)

# Word identity rides on the F2/F3 formants (1..4 kHz); F1 is shared by
# all words, so low-frequency audibility alone cannot discriminate them.
# This mirrors real matrix speech, where a sloping high-frequency loss
# removes most of the word-discriminating information.
_F1_BY_SEGMENT = (430.0, 465.0, 445.0)
_F2_ALPHABET = tuple(1000.0 + 200.0 * k for k in range(8))
_F3_ALPHABET = tuple(2600.0 + 200.0 * k for k in range(8))
_FORMANT_AMPS = (1.0, 0.7, 0.5)


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class WordEntry:
    word_id: int          # global id in [0, 50)
    slot: int
    index_in_slot: int
    label: str


@dataclass(frozen=True)
class MatrixGrammar:
    words: tuple
    synthesis_seed: int = 0

    @property
    def slots(self) -> tuple:
        return SLOTS

    def word(self, slot: int, index: int) -> WordEntry:
        return self.words[slot * WORDS_PER_SLOT + index]

    def label(self, sentence: "Sentence") -> str:
        return " ".join(
            self.word(s, w).label for s, w in enumerate(sentence.word_ids)
        )


def default_grammar(synthesis_seed: int = 0) -> MatrixGrammar:
    words = []
    for slot, labels in enumerate(_WORD_LABELS):
        for idx, label in enumerate(labels):
            words.append(WordEntry(
                word_id=slot * WORDS_PER_SLOT + idx,
                slot=slot, index_in_slot=idx, label=label,
            ))
    return MatrixGrammar(words=tuple(words), synthesis_seed=synthesis_seed)


@dataclass(frozen=True)
class Sentence:
    """Per-slot word indices, each in [0, 10)."""

    word_ids: tuple

    def __post_init__(self):
        if len(self.word_ids) != len(SLOTS):
            raise CorpusError(f"sentence needs {len(SLOTS)} words")
        if any(not 0 <= w < WORDS_PER_SLOT for w in self.word_ids):
            raise CorpusError(f"word index outside [0, {WORDS_PER_SLOT})")

    def global_ids(self) -> tuple:
        return tuple(s * WORDS_PER_SLOT + w for s, w in enumerate(self.word_ids))

    @staticmethod
    def from_code(code: int) -> "Sentence":
        ids = []
        for _ in SLOTS:
            ids.append(code % WORDS_PER_SLOT)
            code //= WORDS_PER_SLOT
        return Sentence(word_ids=tuple(reversed(ids)))


def enumerate_sentences(grammar: MatrixGrammar, count: int,
                        seed: int) -> list:
    """Uniform sample of distinct sentences from the full 10^5 space."""
    if count > SENTENCE_SPACE:
        raise CorpusError(f"count {count} exceeds sentence space {SENTENCE_SPACE}")
    rng = rng_for("sentences", grammar.synthesis_seed, seed)
    codes = rng.choice(SENTENCE_SPACE, size=count, replace=False)
    return [Sentence.from_code(int(c)) for c in codes]


def balanced_sentences(grammar: MatrixGrammar, count: int, seed: int,
                       exclude: Sequence[Sentence] = ()) -> list:
    """Test-list style sampling: each slot cycles through shuffled decades.

    Every word appears floor/ceil(count/10) times per slot, the usual
    matrix-test list construction. Sentences colliding with ``exclude``
    (or repeating) are re-drawn deterministically.
    """
    rng = rng_for("balanced", grammar.synthesis_seed, seed)
    columns = []
    for _ in SLOTS:
        col = []
        while len(col) < count:
            col.extend(rng.permutation(WORDS_PER_SLOT))
        columns.append(col[:count])
    taken = {s.word_ids for s in exclude}
    out = []
    for i in range(count):
        ids = tuple(int(columns[s][i]) for s in range(len(SLOTS)))
        while ids in taken:
            slot = int(rng.integers(len(SLOTS)))
            new = list(ids)
            new[slot] = int(rng.integers(WORDS_PER_SLOT))
            ids = tuple(new)
        taken.add(ids)
        out.append(Sentence(word_ids=ids))
    return out


def _formant_code(word_id: int) -> list:
    """Injective word -> per-segment (F1, F2, F3) triples, sharing segments.

    Words with a common code digit share whole segments, which keeps the
    closed-set task confusable near audibility.
    """
    a = word_id % len(_F2_ALPHABET)
    b = word_id // len(_F2_ALPHABET)
    triples = []
    for seg in range(N_SEGMENTS):
        f2 = _F2_ALPHABET[(a + seg * b) % len(_F2_ALPHABET)]
        f3 = _F3_ALPHABET[(b + seg * a) % len(_F3_ALPHABET)]
        triples.append((_F1_BY_SEGMENT[seg], f2, f3))
    return triples


def synthesize_word(word_id: int, seed: int = 0,
                    fs: int = SAMPLE_RATE) -> np.ndarray:
    """0.4 s pseudo-word, normalized to -20 dBFS RMS, bit-reproducible."""
    if not 0 <= word_id < N_WORDS:
        raise CorpusError(f"unknown word id {word_id}")
    n_total = int(round(WORD_DURATION_S * fs))
    bounds = np.linspace(0, n_total, N_SEGMENTS + 1).astype(int)
    rng = rng_for("word", seed, word_id)
    ramp_n = int(0.005 * fs)
    ramp = 0.5 * (1 - np.cos(np.linspace(0, np.pi, ramp_n)))

    x = np.zeros(n_total)
    for seg, triple in enumerate(_formant_code(word_id)):
        n0, n1 = bounds[seg], bounds[seg + 1]
        t = np.arange(n1 - n0) / fs
        seg_x = np.zeros(n1 - n0)
        for freq, amp in zip(triple, _FORMANT_AMPS):
            phase = rng.uniform(0, 2 * np.pi)
            seg_x += amp * np.sin(2 * np.pi * freq * t + phase)
        seg_x[:ramp_n] *= ramp
        seg_x[-ramp_n:] *= ramp[::-1]
        x[n0:n1] = seg_x
    target = db_to_lin(WORD_RMS_DBFS)
    return x * (target / np.sqrt(np.mean(np.square(x))))


def sentence_audio(grammar: MatrixGrammar, sentence: Sentence,
                   fs: int = SAMPLE_RATE) -> np.ndarray:
    """Dry sentence: the five word waveforms concatenated without gaps."""
    return np.concatenate([
        synthesize_word(gid, seed=grammar.synthesis_seed, fs=fs)
        for gid in sentence.global_ids()
    ])


def _masker_fragment(masker: BinauralSignal, n: int,
                     rng: np.random.Generator) -> tuple:
    """Random masker slice and its offset; tiles (10 ms crossfade) if short."""
    data = masker.samples
    if data.shape[1] < n:
        xf = int(0.010 * masker.sample_rate)
        if data.shape[1] <= xf:
            raise CorpusError("masker too short to tile")
        fade = np.linspace(0.0, 1.0, xf)
        tiled = data
        while tiled.shape[1] < n:
            seam = tiled[:, -xf:] * (1 - fade) + data[:, :xf] * fade
            tiled = np.concatenate([tiled[:, :-xf], seam, data[:, xf:]], axis=1)
        data = tiled
    offset = int(rng.integers(0, data.shape[1] - n + 1))
    return data[:, offset:offset + n], offset


def build_noisy_item(sentence_or_audio, level_db_spl: float, irs: Sequence,
                     masker: BinauralSignal, rng: np.random.Generator,
                     grammar: MatrixGrammar = None, item_index: int = 0,
                     tail_pad_s: float = 0.2) -> BinauralSignal:
    """One noisy test item: leveled speech through an IR plus a masker cut.

    The speech level is set on the dry signal before IR filtering (map
    colors then read as talker production levels); the masker is never
    rescaled. IR realizations cycle round-robin with ``item_index``.
    """
    if not irs:
        raise CorpusError("empty impulse-response list")
    if isinstance(sentence_or_audio, Sentence):
        if grammar is None:
            raise CorpusError("grammar required when passing a Sentence")
        dry = sentence_audio(grammar, sentence_or_audio)
    else:
        dry = np.asarray(sentence_or_audio, dtype=float)
    ir = irs[item_index % len(irs)]
    fs = ir.sample_rate
    dry_rms = np.sqrt(np.mean(np.square(dry)))
    scale = db_to_lin(level_db_spl - 130.0) / max(dry_rms, 1e-30)
    n_item = len(dry) + int(round(tail_pad_s * fs))
    speech = np.zeros((2, n_item))
    for ch in range(2):
        conv = sps.fftconvolve(dry * scale, ir.ir[ch])[:n_item]
        speech[ch, :len(conv)] = conv
    fragment, _ = _masker_fragment(masker, n_item, rng)
    return BinauralSignal(speech + fragment, sample_rate=fs)


MANIFEST_HEADER = "item_id\tsentence\tlevel_db_spl\tir_realization\tmasker_offset_samples"


def write_corpus_manifest(path, rows) -> None:
    """TSV manifest of noisy items.

    Each row is (item_id, Sentence, level_db_spl, ir_realization,
    masker_offset_samples); the sentence is recorded as its five per-slot
    word indices joined with spaces.
    """
    lines = [MANIFEST_HEADER]
    for item_id, sentence, level, realization, offset in rows:
        words = " ".join(str(w) for w in sentence.word_ids)
        lines.append(f"{item_id}\t{words}\t{level:.1f}\t{realization}\t{offset}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_corpus_manifest(path) -> list:
    rows = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MANIFEST_HEADER:
        raise CorpusError(f"{path}: not a corpus manifest")
    for line in lines[1:]:
        item_id, words, level, realization, offset = line.split("\t")
        sentence = Sentence(word_ids=tuple(int(w) for w in words.split()))
        rows.append((item_id, sentence, float(level), int(realization),
                     int(offset)))
    return rows
