"""Per-condition SRT simulation: render, mix, degrade, recognize.

One condition is (head azimuth, talker cell, TV state, door state,
listener profile). The pipeline renders the environment masker and the
talker impulse responses, assembles noisy speech items over a grid of
presentation levels, optionally applies the hearing device, extracts
listener features and runs the matched-training recognition experiment.

Acoustic material is a pure function of the acoustic sub-condition
(azimuth, cell, tv, door, level) and is cached across the profiles and
window shifts that share it; profile-dependent randomness is seeded from
the full condition seed. The speech level is swept adaptively: if the
50% point falls outside the current level window the window is shifted
and the missing levels are computed, deterministically.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from . import corpus, device, listener, recognizer, renderer, scene
from .audio import BinauralSignal, db_to_lin
from .corpus import Sentence
from .recognizer import FLAG_OK, FLAG_UNBOUNDED_LOW, FLAG_UNBOUNDED_HIGH, SimBudget
from .seeds import fnv1a64, rng_for

CI_BUDGET = SimBudget(n_train=60, n_test=20, n_levels=7)
PAPER_BUDGET = SimBudget(n_train=120, n_test=40, n_levels=11)

TAIL_PAD_S = 0.2
MAX_WINDOW_SHIFTS = 5


@dataclass(frozen=True)
class WindowHeuristics:
    """Initial level-window centers (dB SPL or dB rel. masker level)."""

    normal_snr_db: float = -8.0
    normal_quiet_db_spl: float = 6.0
    impaired_db_spl: float = 66.0        # absolute also in noise
    aided_snr_db: float = -3.0
    aided_quiet_db_spl: float = 21.0
    step_db: float = 3.0

    def center(self, profile: str, masker_db_spl) -> float:
        if profile == "impaired_unaided":
            c = self.impaired_db_spl
        elif profile == "impaired_aided":
            c = (self.aided_quiet_db_spl if masker_db_spl is None
                 else masker_db_spl + self.aided_snr_db)
        else:
            c = (self.normal_quiet_db_spl if masker_db_spl is None
                 else masker_db_spl + self.normal_snr_db)
        return round(c / self.step_db) * self.step_db


def level_window(center: float, n_levels: int, step: float) -> np.ndarray:
    lo = center - step * (n_levels // 2)
    return lo + step * np.arange(n_levels)


class ConditionGroup:
    """Shared acoustic material for one (azimuth, cell, tv, door) group."""

    def __init__(self, sim: "Simulator", azimuth_deg: float, ix: int, iy: int,
                 mesh_m: float, tv: int, door: int):
        self.sim = sim
        self.azimuth_deg = azimuth_deg
        self.cell = (ix, iy)
        self.tv = tv
        self.door = door
        walk = sim.walkable
        self.talker_xyz = walk.cell_position(ix, iy, mesh_m)
        self.key = (azimuth_deg, ix, iy, round(mesh_m, 6), tv, door)

        self.irs = sim.impulse_responses(azimuth_deg, self.talker_xyz)
        self.masker = sim.masker(azimuth_deg, tv, door)
        lvl = self.masker.level_db_spl()
        self.masker_db_spl = None if lvl < -50.0 else lvl

        self._speech = {}     # sentence word_ids -> (2, n_item) float32
        self._grams = {}      # (level_key, role, aided) -> (gl, gr) arrays
        self.n_item = sim.n_sentence_samples + int(
            round(TAIL_PAD_S * sim.sample_rate))

    def _speech_at_ear(self, sentence: Sentence, index: int) -> np.ndarray:
        key = (sentence.word_ids, index % len(self.irs))
        cached = self._speech.get(key)
        if cached is None:
            dry = self.sim.dry_sentence(sentence)
            ir = self.irs[index % len(self.irs)]
            cached = np.stack([
                sps.fftconvolve(dry, ir.ir[0])[:self.n_item],
                sps.fftconvolve(dry, ir.ir[1])[:self.n_item],
            ]).astype(np.float32)
            self._speech[key] = cached
        return cached

    def _mix_items(self, role: str, level_db_spl: float):
        """Time-domain noisy items for one (role, level)."""
        sim = self.sim
        sentences = sim.train_sentences if role == "train" else sim.test_sentences
        # dry sentences are synthesized at the word reference RMS
        scale = db_to_lin(level_db_spl - 130.0 - corpus.WORD_RMS_DBFS)
        out = np.empty((len(sentences), 2, self.n_item), dtype=np.float32)
        for i, sentence in enumerate(sentences):
            rng = rng_for("mask", sim.scene_key, *self.key,
                          f"{level_db_spl:.1f}", role, i)
            fragment = corpus._masker_fragment(self.masker, self.n_item, rng)
            out[i] = self._speech_at_ear(sentence, i) * scale + fragment
        return out, sentences

    def grams(self, role: str, level_db_spl: float, aided: bool):
        """Cached per-ear log-Mel grams for all items of (role, level)."""
        key = (f"{level_db_spl:.1f}", role, aided)
        cached = self._grams.get(key)
        if cached is not None:
            return cached
        mixes, sentences = self._mix_items(role, level_db_spl)
        if aided:
            mixes = device.compress_batch(mixes, self.sim.device_config,
                                          self.sim.sample_rate)
        gl, gr = listener.log_mel_batch(mixes, self.sim.sample_rate)
        result = (gl, gr, sentences)
        self._grams[key] = result
        return result


class Simulator:
    """Binds a scene template to budgets and caches across conditions."""

    def __init__(self, template: scene.SceneTemplate = None,
                 budget: SimBudget = None,
                 heuristics: WindowHeuristics = None,
                 device_config: device.DeviceConfig = None,
                 grammar: corpus.MatrixGrammar = None,
                 ir_seed: int = 0, max_groups: int = 2,
                 noise_before_floor: bool = False):
        self.template = template or scene.bundled_template()
        self.budget = budget or CI_BUDGET
        self.heuristics = heuristics or WindowHeuristics()
        self.device_config = device_config or device.default_device_config()
        self.grammar = grammar or corpus.default_grammar()
        self.ir_seed = ir_seed
        self.noise_before_floor = noise_before_floor
        self.scene_hash = scene.scene_hash(self.template)
        self.scene_key = f"{self.scene_hash:016x}"
        self.max_groups = max_groups

        probe = scene.SceneParams(mode=scene.MODE_ENVIRONMENT)
        inst = scene.instantiate(self.template, probe)
        self.walkable = inst.walkable
        self.sample_rate = inst.sample_rate
        self.n_sentence_samples = int(
            round(len(corpus.SLOTS) * corpus.WORD_DURATION_S
                  * self.sample_rate))

        self.train_sentences = corpus.balanced_sentences(
            self.grammar, self.budget.n_train,
            seed=fnv1a64(f"train|{self.scene_key}"))
        self.test_sentences = corpus.balanced_sentences(
            self.grammar, self.budget.n_test,
            seed=fnv1a64(f"test|{self.scene_key}"),
            exclude=self.train_sentences)

        self.profiles = {
            name: listener.make_profile(name)
            for name in listener.PROFILE_NAMES
        }
        self._dry = {}
        self._irs = {}
        self._maskers = {}
        self._groups = {}

    # ---- cached primitives -------------------------------------------
    def dry_sentence(self, sentence: Sentence) -> np.ndarray:
        cached = self._dry.get(sentence.word_ids)
        if cached is None:
            cached = corpus.sentence_audio(self.grammar, sentence,
                                           fs=self.sample_rate)
            self._dry[sentence.word_ids] = cached
        return cached

    def impulse_responses(self, azimuth_deg: float, talker_xyz):
        key = (azimuth_deg, tuple(round(c, 6) for c in talker_xyz))
        cached = self._irs.get(key)
        if cached is None:
            params = scene.SceneParams(
                mode=scene.MODE_HRIR, probe_xyz=tuple(talker_xyz),
                receiver_azimuth_deg=azimuth_deg, duration_s=1.0,
                tv_on=False, connected_room_on=False)
            inst = scene.instantiate(self.template, params)
            cached = renderer.render_hrir(
                inst, repeats=self.budget.ir_repeats, seed=self.ir_seed)
            self._irs[key] = cached
        return cached

    def masker(self, azimuth_deg: float, tv: int, door: int) -> BinauralSignal:
        key = (azimuth_deg, tv, door)
        cached = self._maskers.get(key)
        if cached is None:
            params = scene.SceneParams(
                mode=scene.MODE_ENVIRONMENT, receiver_azimuth_deg=azimuth_deg,
                tv_on=bool(tv), connected_room_on=bool(door))
            inst = scene.instantiate(self.template, params)
            cached = renderer.render_environment(inst, seed=self.ir_seed)
            self._maskers[key] = cached
        return cached

    def group(self, azimuth_deg, ix, iy, mesh_m, tv, door) -> ConditionGroup:
        key = (azimuth_deg, ix, iy, round(mesh_m, 6), tv, door)
        grp = self._groups.get(key)
        if grp is None:
            grp = ConditionGroup(self, azimuth_deg, ix, iy, mesh_m, tv, door)
            self._groups[key] = grp
            while len(self._groups) > self.max_groups:
                oldest = next(iter(self._groups))
                del self._groups[oldest]
        return grp

    # ---- feature assembly --------------------------------------------
    def features(self, group: ConditionGroup, profile_name: str,
                 cond_seed: int, role: str, level_db_spl: float):
        profile = self.profiles[profile_name]
        gl, gr, sentences = group.grams(role, level_db_spl, profile.aided)
        rng = rng_for("eps", cond_seed, f"{level_db_spl:.1f}", role)
        n, t, b = gl.shape
        sigma = np.float32(profile.level_uncertainty_db)
        noise = rng.standard_normal(size=(2, n, t, b), dtype=np.float32)
        noise *= sigma
        floor = profile.thresholds_db_spl.astype(np.float32)[None, None, :]
        if self.noise_before_floor:
            left = np.maximum(gl + noise[0], floor)
            right = np.maximum(gr + noise[1], floor)
        else:
            left = np.maximum(gl, floor) + noise[0]
            right = np.maximum(gr, floor) + noise[1]
        feats = np.concatenate([left, right, left - right], axis=2)
        return feats, sentences

    # ---- the experiment ----------------------------------------------
    def simulate_condition(self, cond, budget: SimBudget = None,
                           target_pct: float = 50.0):
        """Full adaptive SRT measurement for one condition.

        Returns (SrtResult, RecognitionResultMap, info dict).
        """
        budget = budget or self.budget
        if (budget.n_train > len(self.train_sentences)
                or budget.n_test > len(self.test_sentences)):
            raise ValueError(
                "budget exceeds the simulator's sentence lists; construct "
                "Simulator(budget=...) with the grid's budget"
            )
        t0 = time.perf_counter()
        cond_seed = self.condition_seed(cond)
        group = self.group(cond.azimuth_deg, cond.ix, cond.iy, cond.mesh_m,
                           cond.tv, cond.door)

        feature_cache = {}

        def item_source(role, level, count):
            key = (role, f"{level:.1f}")
            if key not in feature_cache:
                feature_cache[key] = self.features(group, cond.profile,
                                                   cond_seed, role, level)
            feats, sentences = feature_cache[key]
            return feats[:count], sentences[:count]

        center = self.heuristics.center(cond.profile, group.masker_db_spl)
        levels = level_window(center, budget.n_levels, budget.level_step_db)
        span = budget.level_step_db * (budget.n_levels - 1)
        result = None
        rmap = None
        attempts = 0
        for attempt in range(MAX_WINDOW_SHIFTS + 1):
            attempts = attempt + 1
            rmap = recognizer.build_result_map(item_source, levels, budget,
                                               seed=cond_seed)
            result = recognizer.extract_srt(rmap, target=target_pct,
                                            condition_id=cond.condition_id())
            if result.flag == FLAG_OK:
                break
            if result.flag == FLAG_UNBOUNDED_LOW:
                levels = levels - (span - budget.level_step_db)
            elif result.flag == FLAG_UNBOUNDED_HIGH:
                levels = levels + (span - budget.level_step_db)
        info = {
            "attempts": attempts,
            "wall_s": time.perf_counter() - t0,
            "masker_db_spl": group.masker_db_spl,
            "window_lo": float(levels[0]),
            "window_hi": float(levels[-1]),
        }
        return result, rmap, info

    def condition_seed(self, cond) -> int:
        return fnv1a64(f"{self.scene_key}|{cond.canonical()}")
