"""Corpus-level statistics: event rates, duration shares and speech rates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .errors import InputValidationError
from .labeler import BackchannelSequence, TranscriptToken
from .timeline import EDGE, GAP, PAUSE, SPEAKERS, EventTimeline, _runs

MS_PER_MIN = 60_000.0


@dataclass
class CorpusStats:
    """Aggregate statistics of one conversation (or a merged corpus)."""

    total_ms: float
    event_rates_per_min: Dict[str, float]
    duration_shares_pct: Dict[str, float]
    speaking_rate_wpm: Dict[int, float] = field(default_factory=dict)
    backchannel_rate_wpm: Dict[int, float] = field(default_factory=dict)


def event_rates(timeline: EventTimeline, total_ms: float) -> Dict[str, float]:
    """Events per minute for IPUs (both speakers, plus per speaker), pauses,
    gaps and maximal overlap runs. Edge silences are not events."""
    if total_ms <= 0:
        raise InputValidationError(f"total_ms must be positive, got {total_ms}")
    scale = MS_PER_MIN / total_ms
    counts = {
        "ipu": sum(len(timeline.ipus[k]) for k in SPEAKERS),
        "ipu_speaker1": len(timeline.ipus[1]),
        "ipu_speaker2": len(timeline.ipus[2]),
        "pause": sum(1 for run in timeline.silence_runs if run.kind == PAUSE),
        "gap": sum(1 for run in timeline.silence_runs if run.kind == GAP),
        "overlap": len(_runs(timeline.overlap)),
    }
    return {name: count * scale for name, count in counts.items()}


def duration_shares(timeline: EventTimeline, total_ms: float) -> Dict[str, float]:
    """Cumulated duration per category as a percentage of total_ms.

    Categories partition the chunk grid: overlap chunks are counted once and
    excluded from single-speech. The five categories sum to 100 whenever
    total_ms equals the grid duration.
    """
    if total_ms <= 0:
        raise InputValidationError(f"total_ms must be positive, got {total_ms}")
    act1, act2 = timeline.activity[1], timeline.activity[2]
    chunk_counts = {
        "single_speech": int(np.count_nonzero(act1 ^ act2)),
        "overlap": int(np.count_nonzero(timeline.overlap)),
        "pause": 0,
        "gap": 0,
        "edge_silence": 0,
    }
    kind_key = {PAUSE: "pause", GAP: "gap", EDGE: "edge_silence"}
    for run in timeline.silence_runs:
        chunk_counts[kind_key[run.kind]] += run.end - run.start + 1
    factor = timeline.chunk_ms / total_ms * 100.0
    return {name: count * factor for name, count in chunk_counts.items()}


def speech_rates(
    tokens: Sequence[TranscriptToken],
    bc_sequences: Optional[Dict[int, BackchannelSequence]],
    total_ms: float,
    chunk_ms: int = 40,
) -> tuple[Dict[int, float], Dict[int, float]]:
    """Words per minute and backchannel words per minute, per speaker.

    A token counts as a backchannel word when its span touches a chunk
    marked in that speaker's backchannel sequence.
    """
    if total_ms <= 0:
        raise InputValidationError(f"total_ms must be positive, got {total_ms}")
    words = {k: 0 for k in SPEAKERS}
    bc_words = {k: 0 for k in SPEAKERS}
    for token in tokens:
        words[token.speaker_id] += 1
        if bc_sequences is None:
            continue
        flags = bc_sequences[token.speaker_id].bc
        first = int(token.start_ms // chunk_ms)
        last = min(flags.size - 1, int(np.ceil(token.end_ms / chunk_ms)) - 1)
        if first < flags.size and flags[first : last + 1].any():
            bc_words[token.speaker_id] += 1
    scale = MS_PER_MIN / total_ms
    return (
        {k: words[k] * scale for k in SPEAKERS},
        {k: bc_words[k] * scale for k in SPEAKERS},
    )


def corpus_stats(
    timeline: EventTimeline,
    total_ms: Optional[float] = None,
    tokens: Sequence[TranscriptToken] = (),
    bc_sequences: Optional[Dict[int, BackchannelSequence]] = None,
) -> CorpusStats:
    """Convenience bundle of all statistics for one conversation."""
    if total_ms is None:
        total_ms = float(timeline.n_chunks * timeline.chunk_ms)
    speaking, backchannel = speech_rates(tokens, bc_sequences, total_ms, timeline.chunk_ms)
    return CorpusStats(
        total_ms=total_ms,
        event_rates_per_min=event_rates(timeline, total_ms),
        duration_shares_pct=duration_shares(timeline, total_ms),
        speaking_rate_wpm=speaking,
        backchannel_rate_wpm=backchannel,
    )
