"""End-to-end detection: segment, preprocess, score, aggregate, vote.

Three named configurations cover the evaluation settings: `baseline` makes
one decision over the whole clip, `vad1` adds per-segment decisions with
sliding-window voting, and `vad2` additionally runs the noise-removal
preprocessing on every segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .audio_io import AudioBuffer
from .aggregate import SegmentScore, decide_segment
from .postprocess import VadDecision, VoteConfig, final_decision, vote_with_fallback
from .preprocess import PreprocessConfig, clip_noise_profile, preprocess_segment
from .scorer import FrameScoreMatrix, ReferenceScorer, slice_scores

MODES = ("baseline", "vad1", "vad2")
SCORER_BACKENDS = ("reference", "score-file")


@dataclass(frozen=True)
class PipelineConfig:
    mode: str = "baseline"
    segment_ms: float = 200.0
    thresh: float = 50.0
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    vote: VoteConfig = field(default_factory=VoteConfig)
    scorer_backend: str = "reference"
    bands: int = 32
    frame_ms: float = 25.0
    hop_ms: float = 10.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scorer_backend not in SCORER_BACKENDS:
            raise ValueError(f"unknown scorer backend {self.scorer_backend!r}")
        if self.segment_ms <= 0:
            raise ValueError(f"segment_ms must be positive, got {self.segment_ms}")

    @property
    def preprocess_enabled(self) -> bool:
        return self.mode == "vad2"

    @property
    def vote_enabled(self) -> bool:
        return self.mode != "baseline"

    def with_mode(self, mode: str) -> "PipelineConfig":
        return replace(self, mode=mode)

    def make_scorer(self) -> ReferenceScorer:
        return ReferenceScorer(bands=self.bands, frame_ms=self.frame_ms,
                               hop_ms=self.hop_ms)


@dataclass(frozen=True)
class PipelineResult:
    decision: VadDecision
    segment_scores: tuple[SegmentScore, ...]

    @property
    def segment_values(self) -> list[float]:
        return [s.value for s in self.segment_scores]


def segment(buf: AudioBuffer, segment_ms: float) -> list[AudioBuffer]:
    """Split into non-overlapping segments, zero-padding the last one."""
    if len(buf) == 0:
        raise ValueError("cannot segment an empty buffer")
    seg_len = int(round(buf.sample_rate_hz * segment_ms / 1000.0))
    count = math.ceil(len(buf) / seg_len)
    padded = np.zeros(count * seg_len)
    padded[: len(buf)] = buf.samples
    return [AudioBuffer(padded[i * seg_len:(i + 1) * seg_len], buf.sample_rate_hz)
            for i in range(count)]


def _decide(labels: list[int], scores: list[SegmentScore],
            cfg: PipelineConfig) -> PipelineResult:
    windows = vote_with_fallback(labels, cfg.vote)
    decision = VadDecision(tuple(labels), tuple(windows), final_decision(windows))
    return PipelineResult(decision, tuple(scores))


def run_pipeline(buf: AudioBuffer, cfg: PipelineConfig,
                 scorer: ReferenceScorer | None = None) -> PipelineResult:
    """Detect speech in one clip (expected to be at the pipeline rate)."""
    scorer = scorer or cfg.make_scorer()
    if not cfg.vote_enabled:
        ss = decide_segment(scorer.score(buf), cfg.thresh)
        decision = VadDecision((ss.label,), (ss.label,), ss.label)
        return PipelineResult(decision, (ss,))

    segments = segment(buf, cfg.segment_ms)
    if cfg.preprocess_enabled:
        noise = clip_noise_profile(buf, cfg.preprocess)
        segments = [preprocess_segment(s, cfg.preprocess, noise=noise)
                    for s in segments]
    scores = [decide_segment(scorer.score(s), cfg.thresh) for s in segments]
    return _decide([s.label for s in scores], scores, cfg)


def run_pipeline_on_scores(matrix: FrameScoreMatrix,
                           cfg: PipelineConfig) -> PipelineResult:
    """Detect speech from an externally computed score matrix.

    Preprocessing does not apply here; the scores are already fixed. Segments
    map onto row spans of the matrix using its frame duration.
    """
    if not cfg.vote_enabled:
        ss = decide_segment(matrix, cfg.thresh)
        decision = VadDecision((ss.label,), (ss.label,), ss.label)
        return PipelineResult(decision, (ss,))

    total_ms = matrix.num_frames * matrix.frame_duration_ms
    count = max(1, math.ceil(total_ms / cfg.segment_ms))
    scores = []
    for t in range(count):
        part = slice_scores(matrix, t * cfg.segment_ms, (t + 1) * cfg.segment_ms)
        scores.append(decide_segment(part, cfg.thresh))
    return _decide([s.label for s in scores], scores, cfg)
