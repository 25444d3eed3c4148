"""Whole-word HMM listener back end.

Per training level a set of 50 left-to-right whole-word models (diagonal
Gaussian emissions) is trained with segmental k-means on matched noisy
material; test items are decoded over the 5-slot matrix lattice, which
only admits valid sentences. The word-correct percentages over the
(training level x test level) grid form the recognition result map from
which the speech reception threshold is interpolated.

Transitions carry no weights: every lattice path over T frames has T arcs
through the no-skip topology, so decoding depends purely on the acoustic
scores and is invariant to any global weighting of them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import N_WORDS, Sentence, SLOTS, WORDS_PER_SLOT

N_STATES = 6
VAR_FLOOR = 1e-3
MAX_TRAIN_ITER = 10
NEG_INF = np.float32(-1e30)

FLAG_OK = "ok"
FLAG_UNBOUNDED_LOW = "unbounded_low"
FLAG_UNBOUNDED_HIGH = "unbounded_high"
FLAG_ERROR = "error"


class TrainingError(ValueError):
    pass


@dataclass
class WordModel:
    word_id: int
    means: np.ndarray       # (n_states, dim)
    variances: np.ndarray   # (n_states, dim), floored

    @property
    def n_states(self) -> int:
        return self.means.shape[0]


@dataclass
class ModelSet:
    """All 50 word models stacked for batched scoring."""

    means: np.ndarray       # (n_words, n_states, dim)
    variances: np.ndarray

    @property
    def n_states(self) -> int:
        return self.means.shape[1]

    @property
    def dim(self) -> int:
        return self.means.shape[2]

    def word_models(self) -> list:
        return [WordModel(w, self.means[w], self.variances[w])
                for w in range(self.means.shape[0])]

    @staticmethod
    def from_models(models: Sequence[WordModel]) -> "ModelSet":
        order = sorted(models, key=lambda m: m.word_id)
        if [m.word_id for m in order] != list(range(N_WORDS)):
            raise TrainingError("model set must cover all 50 words")
        return ModelSet(
            means=np.stack([m.means for m in order]).astype(np.float32),
            variances=np.stack([m.variances for m in order]).astype(np.float32),
        )


def _emission_terms(model_set: ModelSet):
    """Matmul decomposition of the diagonal-Gaussian log-likelihood.

    loglik(x, s) = x^2 . a_s + x . b_s + c_s with
    a = -1/(2 var), b = mu/var, c = -0.5 (D log 2pi + sum log var + mu^2/var).
    """
    var = model_set.variances.reshape(-1, model_set.dim).astype(np.float64)
    mu = model_set.means.reshape(-1, model_set.dim).astype(np.float64)
    a = (-0.5 / var).T
    b = (mu / var).T
    c = -0.5 * (model_set.dim * np.log(2 * np.pi)
                + np.sum(np.log(var), axis=1)
                + np.sum(mu * mu / var, axis=1))
    return a.astype(np.float32), b.astype(np.float32), c.astype(np.float32)


def _emissions(x_flat: np.ndarray, terms) -> np.ndarray:
    """(frames, n_words*n_states) log-likelihoods; float32 throughout."""
    a, b, c = terms
    x = np.ascontiguousarray(x_flat, dtype=np.float32)
    return (x * x) @ a + x @ b + c


def _sentence_state_columns(sentence: Sentence, n_states: int) -> np.ndarray:
    gids = np.asarray(sentence.global_ids())
    return (gids[:, None] * n_states + np.arange(n_states)[None, :]).ravel()


def _chain_align_batch(emissions: np.ndarray) -> np.ndarray:
    """Forced alignment of each item to its 30-state chain.

    emissions: (n_items, T, n_chain). Paths start in state 0, end in the
    last state, no skips. Returns the per-frame state index (n_items, T).
    """
    n_items, T, n_chain = emissions.shape
    v = np.full((n_items, n_chain), NEG_INF, dtype=np.float32)
    v[:, 0] = emissions[:, 0, 0]
    moved = np.zeros((T, n_items, n_chain), dtype=bool)
    adv = np.empty_like(v)
    for t in range(1, T):
        adv[:, 0] = NEG_INF
        adv[:, 1:] = v[:, :-1]
        take_adv = adv > v
        moved[t] = take_adv
        np.maximum(v, adv, out=v)
        v += emissions[:, t, :]
    states = np.empty((n_items, T), dtype=np.int16)
    cur = np.full(n_items, n_chain - 1, dtype=np.int64)
    rows = np.arange(n_items)
    for t in range(T - 1, -1, -1):
        states[:, t] = cur
        if t > 0:
            cur = cur - moved[t, rows, cur]
    return states


STABLE_FRAME_FRACTION = 1e-3   # alignment treated as stable below this


def train_models(items: Sequence, n_states: int = N_STATES,
                 max_iter: int = MAX_TRAIN_ITER,
                 var_floor: float = VAR_FLOOR) -> list:
    """Segmental k-means training of the 50 whole-word models.

    ``items`` is a sequence of (features, sentence) pairs, features being
    a (T, dim) array. States start from a uniform time split per word and
    are re-estimated until the Viterbi alignment is stable (fewer than
    0.1% of frames moving) or max_iter passes ran. Returns the models as
    a list of :class:`WordModel`.
    """
    if not items:
        raise TrainingError("no training items")
    feats = [np.asarray(f, dtype=np.float32) for f, _ in items]
    sentences = [s for _, s in items]
    dim = feats[0].shape[1]

    token_counts = np.zeros(N_WORDS, dtype=int)
    for s in sentences:
        for gid in s.global_ids():
            token_counts[gid] += 1
    if np.any(token_counts == 0):
        from .corpus import default_grammar
        grammar = default_grammar()
        missing = [grammar.words[w].label
                   for w in np.nonzero(token_counts == 0)[0]]
        raise TrainingError(f"no training frames for words: {missing}")

    n_chain = len(SLOTS) * n_states

    # group items by frame count so each group aligns as one batch
    by_len = {}
    for idx, f in enumerate(feats):
        by_len.setdefault(f.shape[0], []).append(idx)

    groups = {}
    alignments = {}
    total_frames = 0
    for T, idxs in by_len.items():
        x = np.stack([feats[i] for i in idxs])          # (n, T, dim)
        groups[T] = {
            "x": x,
            "x2": x * x,
            "cols": np.stack([_sentence_state_columns(sentences[i], n_states)
                              for i in idxs]),
        }
        base = np.minimum((np.arange(T) * n_chain) // T, n_chain - 1)
        alignments[T] = np.tile(base.astype(np.int16), (len(idxs), 1))
        total_frames += x.shape[0] * T

    means = np.zeros((N_WORDS, n_states, dim), dtype=np.float64)
    variances = np.ones((N_WORDS, n_states, dim), dtype=np.float64)
    n_flat = N_WORDS * n_states

    for _ in range(max_iter):
        sums = np.zeros((n_flat, dim))
        sqsums = np.zeros((n_flat, dim))
        counts = np.zeros(n_flat)
        for T, g in groups.items():
            global_states = np.take_along_axis(
                g["cols"], alignments[T].astype(np.int64), axis=1).ravel()
            x = g["x"].reshape(-1, dim)
            counts += np.bincount(global_states, minlength=n_flat)
            for d in range(dim):
                sums[:, d] += np.bincount(global_states, weights=x[:, d],
                                          minlength=n_flat)
                sqsums[:, d] += np.bincount(global_states,
                                            weights=x[:, d].astype(np.float64) ** 2,
                                            minlength=n_flat)
        occupied = counts > 0
        means_flat = means.reshape(-1, dim)
        var_flat = variances.reshape(-1, dim)
        means_flat[occupied] = sums[occupied] / counts[occupied, None]
        var_flat[occupied] = np.maximum(
            sqsums[occupied] / counts[occupied, None]
            - means_flat[occupied] ** 2, var_floor)

        # per-item chain emissions via batched matmuls
        a_flat = (-0.5 / var_flat).astype(np.float32)
        b_flat = (means_flat / var_flat).astype(np.float32)
        c_flat = (-0.5 * (dim * np.log(2 * np.pi)
                          + np.sum(np.log(var_flat), axis=1)
                          + np.sum(means_flat ** 2 / var_flat, axis=1))
                  ).astype(np.float32)
        changed = 0
        for T, g in groups.items():
            cols = g["cols"]
            a_t = a_flat[cols].transpose(0, 2, 1)       # (n, dim, chain)
            b_t = b_flat[cols].transpose(0, 2, 1)
            ll = np.matmul(g["x2"], a_t)
            ll += np.matmul(g["x"], b_t)
            ll += c_flat[cols][:, None, :]
            new_align = _chain_align_batch(ll)
            changed += int(np.count_nonzero(new_align != alignments[T]))
            alignments[T] = new_align
        if changed <= STABLE_FRAME_FRACTION * total_frames:
            break

    model_set = ModelSet(means=means.astype(np.float32),
                         variances=variances.astype(np.float32))
    return model_set.word_models()


def _lattice_decode_batch(emissions: np.ndarray, n_states: int) -> list:
    """Viterbi over the 5-slot matrix lattice, batched over items.

    emissions: (n_items, T, n_words*n_states) ordered slot-major, which
    matches the global word-id state layout. Returns one Sentence per
    item; ties break toward the lowest state index for determinism.
    """
    n_items, T, n_total = emissions.shape
    n_slots = len(SLOTS)
    per_slot = WORDS_PER_SLOT * n_states
    word_initial = (np.arange(n_total) % n_states) == 0

    v = np.full((n_items, n_total), NEG_INF, dtype=np.float32)
    first = emissions[:, 0].reshape(n_items, n_slots, WORDS_PER_SLOT, n_states)
    v.reshape(n_items, n_slots, WORDS_PER_SLOT, n_states)[:, 0, :, 0] = \
        first[:, 0, :, 0]
    pred = np.empty((T, n_items, n_total), dtype=np.int16)
    pred[0] = -1
    idx = np.arange(n_total, dtype=np.int16)
    slot_offsets = (np.arange(1, n_slots) * per_slot).astype(np.int16)

    shifted = np.empty_like(v)
    take = np.empty(v.shape, dtype=bool)
    for t in range(1, T):
        v4 = v.reshape(n_items, n_slots, WORDS_PER_SLOT, n_states)
        # cross-word candidates from the previous frame's final states
        finals = v4[:, :-1, :, -1]                    # (n, slots-1, words)
        best_w = np.argmax(finals, axis=2)
        best_v = np.take_along_axis(finals, best_w[:, :, None],
                                    axis=2)[:, :, 0]

        # within-word advance (invalid into word-initial states)
        shifted[:, 0] = NEG_INF
        shifted[:, 1:] = v[:, :-1]
        shifted[:, word_initial] = NEG_INF
        np.greater(shifted, v, out=take)
        p = np.where(take, idx - np.int16(1), idx)
        np.maximum(v, shifted, out=v)

        # cross-word transition into word-initial states of slots 1..4
        p4 = p.reshape(n_items, n_slots, WORDS_PER_SLOT, n_states)
        entry_v = v4[:, 1:, :, 0]
        use_cross = best_v[:, :, None] > entry_v
        cross_pred = (slot_offsets - per_slot)[None, :] \
            + best_w.astype(np.int16) * np.int16(n_states) \
            + np.int16(n_states - 1)
        p4[:, 1:, :, 0] = np.where(use_cross, cross_pred[:, :, None],
                                   p4[:, 1:, :, 0])
        np.maximum(entry_v, np.broadcast_to(best_v[:, :, None], entry_v.shape),
                   out=entry_v)

        pred[t] = p
        v += emissions[:, t]

    final_scores = v.reshape(
        n_items, n_slots, WORDS_PER_SLOT, n_states)[:, -1, :, -1]
    end_word = np.argmax(final_scores, axis=1)
    sentences = []
    for i in range(n_items):
        state = int((n_slots - 1) * per_slot + end_word[i] * n_states
                    + (n_states - 1))
        words = [-1] * n_slots
        for t in range(T - 1, -1, -1):
            words[state // per_slot] = (state // n_states) % WORDS_PER_SLOT
            if t > 0:
                state = int(pred[t, i, state])
        sentences.append(Sentence(word_ids=tuple(words)))
    return sentences


def decode(features: np.ndarray, models, grammar=None) -> Sentence:
    """Decode one item; always returns a valid matrix sentence."""
    return decode_batch(np.asarray(features)[None, :, :], models)[0]


def decode_batch(features: np.ndarray, models) -> list:
    if isinstance(models, list):
        models = ModelSet.from_models(models)
    x = np.asarray(features, dtype=np.float32)
    n_items, T, dim = x.shape
    terms = _emission_terms(models)
    ll = _emissions(x.reshape(-1, dim), terms).reshape(n_items, T, -1)
    return _lattice_decode_batch(ll, models.n_states)


def score(hyp: Sequence[Sentence], ref: Sequence[Sentence]) -> float:
    """Position-wise word-correct percentage over 5*N words."""
    if len(hyp) != len(ref):
        raise ValueError(f"length mismatch: {len(hyp)} vs {len(ref)}")
    if not hyp:
        raise ValueError("empty score input")
    correct = sum(
        int(h == r)
        for hs, rs in zip(hyp, ref)
        for h, r in zip(hs.word_ids, rs.word_ids)
    )
    return 100.0 * correct / (len(SLOTS) * len(hyp))


@dataclass
class RecognitionResultMap:
    """Word-correct percentage over the (train level x test level) grid."""

    train_levels: np.ndarray
    test_levels: np.ndarray
    pct_correct: np.ndarray   # (n_train_levels, n_test_levels)

    def __post_init__(self):
        self.train_levels = np.asarray(self.train_levels, dtype=float)
        self.test_levels = np.asarray(self.test_levels, dtype=float)
        self.pct_correct = np.asarray(self.pct_correct, dtype=float)
        expected = (len(self.train_levels), len(self.test_levels))
        if self.pct_correct.shape != expected:
            raise ValueError(
                f"map shape {self.pct_correct.shape}, expected {expected}"
            )

    def to_tsv(self) -> str:
        lines = ["train_level\ttest_level\tpct_correct"]
        for i, ltr in enumerate(self.train_levels):
            for j, lte in enumerate(self.test_levels):
                lines.append(f"{ltr:.1f}\t{lte:.1f}\t{self.pct_correct[i, j]:.4f}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_tsv(text: str) -> "RecognitionResultMap":
        rows = [l.split("\t") for l in text.strip().splitlines()[1:]]
        ltr = sorted({float(r[0]) for r in rows})
        lte = sorted({float(r[1]) for r in rows})
        pct = np.full((len(ltr), len(lte)), np.nan)
        for r in rows:
            pct[ltr.index(float(r[0])), lte.index(float(r[1]))] = float(r[2])
        if np.any(np.isnan(pct)):
            raise ValueError("result map grid has holes")
        return RecognitionResultMap(ltr, lte, pct)


@dataclass
class SrtResult:
    condition_id: str
    srt_db_spl: float
    target_pct: float = 50.0
    achieved_at_train_level: float = np.nan
    flag: str = FLAG_OK
    diagnostics: dict = field(default_factory=dict)


@dataclass
class SimBudget:
    n_train: int = 120
    n_test: int = 40
    n_levels: int = 11
    level_step_db: float = 3.0
    n_states: int = N_STATES
    max_train_iter: int = MAX_TRAIN_ITER
    ir_repeats: int = 5


def build_result_map(item_source: Callable, levels, budget: SimBudget,
                     seed: int = 0) -> RecognitionResultMap:
    """Matched-training map: one model set per training level.

    ``item_source(role, level, count)`` returns (features, sentences) with
    features shaped (count, T, dim); "train" and "test" draws are disjoint
    and internally cached by level so shifting windows stays cheap.
    """
    levels = np.asarray(levels, dtype=float)
    if len(levels) > 1:
        steps = np.diff(levels)
        if not np.allclose(steps, budget.level_step_db, atol=1e-6):
            raise ValueError(
                f"levels must be evenly spaced {budget.level_step_db} dB"
            )
    test_sets = [item_source("test", lv, budget.n_test) for lv in levels]
    x_test_all = np.concatenate([x for x, _ in test_sets])
    pct = np.zeros((len(levels), len(levels)))
    for i, train_level in enumerate(levels):
        x_train, train_refs = item_source("train", train_level, budget.n_train)
        items = [(x_train[k], train_refs[k]) for k in range(len(train_refs))]
        models = ModelSet.from_models(train_models(
            items, n_states=budget.n_states,
            max_iter=budget.max_train_iter))
        hyps_all = decode_batch(x_test_all, models)
        for j, (_, test_refs) in enumerate(test_sets):
            hyps = hyps_all[j * budget.n_test:(j + 1) * budget.n_test]
            pct[i, j] = score(hyps, test_refs)
    return RecognitionResultMap(train_levels=levels, test_levels=levels,
                                pct_correct=pct)


def extract_srt(result_map: RecognitionResultMap, target: float = 50.0,
                condition_id: str = "") -> SrtResult:
    """Lowest interpolated test level reaching the target rate.

    Scans each training row for the first upward crossing of the target;
    the SRT is the minimum crossing over rows. Rows already at/above
    target at the lowest test level pin the crossing there and flag the
    result unbounded-below; if no row ever crosses, the result is flagged
    unbounded-above.
    """
    pct = result_map.pct_correct
    levels = result_map.test_levels
    if pct.size == 0:
        raise ValueError("empty result map")
    crossings = []
    for i in range(pct.shape[0]):
        row = pct[i]
        if row[0] >= target:
            crossings.append((float(levels[0]), i, FLAG_UNBOUNDED_LOW))
            continue
        for j in range(1, len(levels)):
            if row[j] >= target and row[j - 1] < target:
                lo, hi = levels[j - 1], levels[j]
                frac = (target - row[j - 1]) / (row[j] - row[j - 1])
                crossings.append((float(lo + frac * (hi - lo)), i, FLAG_OK))
                break
    diagnostics = {"map_min": float(pct.min()), "map_max": float(pct.max())}
    if not crossings:
        return SrtResult(
            condition_id=condition_id,
            srt_db_spl=float(levels[-1] + result_map_step(result_map)),
            target_pct=target, flag=FLAG_UNBOUNDED_HIGH,
            diagnostics=diagnostics)
    srt, row_idx, flag = min(crossings, key=lambda c: (c[0], c[1]))
    return SrtResult(
        condition_id=condition_id, srt_db_spl=srt, target_pct=target,
        achieved_at_train_level=float(result_map.train_levels[row_idx]),
        flag=flag, diagnostics=diagnostics)


def result_map_step(result_map: RecognitionResultMap) -> float:
    levels = result_map.test_levels
    if len(levels) > 1:
        return float(levels[1] - levels[0])
    return 3.0
