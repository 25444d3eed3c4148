"""Spatial speech recognition maps from simulated recognition experiments.

An end-to-end simulator predicting spatial speech reception thresholds
(SRT-50) for a virtual listener in a two-room scene: acoustic rendering,
matrix-sentence speech material, an optional hearing-device model, a
hearing-loss listener front end and a whole-word HMM recognizer, plus an
HTTP server for the interactive quantized-color map.
"""

__version__ = "0.1.0"

from .audio import BinauralSignal, ImpulseResponsePair, read_wav, write_wav
from .corpus import (MatrixGrammar, Sentence, balanced_sentences,
                     build_noisy_item, default_grammar, enumerate_sentences,
                     synthesize_word)
from .device import (Audiogram, DeviceConfig, batch_process, compress,
                     default_device_config, prescribe_gains,
                     standard_audiogram)
from .listener import (ListenerProfile, LogMelGram, apply_hearing_loss,
                       binaural_features, extract_features, log_mel,
                       make_profile)
from .mapserver import (ColorScale, create_app, default_scale, effort_label,
                        quantize_level)
from .orchestrator import (ConditionSpec, GridConfig, SrtAtlas, ci_grid,
                           enumerate_conditions, paper_grid, read_atlas,
                           refine_mesh, run_shard, simulate_grid, write_atlas)
from .recognizer import (RecognitionResultMap, SimBudget, SrtResult,
                         WordModel, build_result_map, decode, decode_batch,
                         extract_srt, score, train_models)
from .renderer import (OrtfReceiver, cardioid_gain, fast_convolve,
                       image_sources, render_environment, render_hrir)
from .scene import (SceneInstance, SceneParams, SceneTemplate,
                    bundled_template, instantiate, parse_template, serialize)
from .simulate import CI_BUDGET, PAPER_BUDGET, Simulator, WindowHeuristics
