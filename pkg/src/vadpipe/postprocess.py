"""Sliding-window majority voting over per-segment labels.

A window of W consecutive segment labels is speech when the vote count
reaches the quorum; the clip is speech when any window is. The default
quorum requires strictly more than half the votes (3 of 4 for W=4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


def default_quorum(window_w: int) -> int:
    """Votes needed for 'more than half': ceil(W/2) + 1, capped at W."""
    return min(math.ceil(window_w / 2) + 1, window_w)


@dataclass(frozen=True)
class VoteConfig:
    window_w: int = 4
    quorum: int | None = None  # None selects default_quorum(window_w)

    def __post_init__(self):
        if self.window_w < 1:
            raise ValueError(f"window_w must be >= 1, got {self.window_w}")
        q = self.effective_quorum
        if not 1 <= q <= self.window_w:
            raise ValueError(f"quorum must be in [1, {self.window_w}], got {q}")

    @property
    def effective_quorum(self) -> int:
        return self.quorum if self.quorum is not None else default_quorum(self.window_w)


@dataclass(frozen=True)
class VadDecision:
    """Per-segment labels, per-window vote results, and the final clip label."""

    per_segment: tuple[int, ...]
    per_window: tuple[int, ...]
    final: int


def vote_windows(labels: Sequence[int], cfg: VoteConfig) -> list[int]:
    """Vote over every length-W window (stride 1). Requires T >= W.

    Inputs shorter than one window are the caller's problem; see
    vote_with_fallback for the short-clip policy.
    """
    t = len(labels)
    w = cfg.window_w
    if t < w:
        raise ValueError(f"need at least {w} labels, got {t}")
    quorum = cfg.effective_quorum
    running = sum(labels[:w])
    out = [int(running >= quorum)]
    for i in range(t - w):
        running += labels[i + w] - labels[i]
        out.append(int(running >= quorum))
    return out


def vote_with_fallback(labels: Sequence[int], cfg: VoteConfig) -> list[int]:
    """vote_windows, degrading to one whole-input window when T < W.

    The short-input quorum is scaled proportionally (never below one vote).
    """
    t = len(labels)
    if t >= cfg.window_w:
        return vote_windows(labels, cfg)
    scaled = max(1, math.ceil(cfg.effective_quorum * t / cfg.window_w))
    return [int(sum(labels) >= scaled)]


def final_decision(window_labels: Sequence[int]) -> int:
    """Speech if any window voted speech."""
    if len(window_labels) == 0:
        raise ValueError("no window labels to decide over")
    return int(max(window_labels))
