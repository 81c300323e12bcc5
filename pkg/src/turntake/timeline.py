"""Voice activity on a fixed chunk grid and its segmentation into turn-taking events.

A two-speaker conversation is discretised into 40 ms chunks (configurable).
From the two per-chunk boolean activity sequences this module derives:

* inter-pausal units (IPUs): maximal speech stretches delimited by >= 200 ms
  of that speaker's silence,
* silence runs where nobody speaks, classified as pause (within one
  speaker's turn), gap (between turns of different speakers) or edge
  (touching a conversation boundary),
* turns: successive same-speaker IPUs grouped whenever the whole interval
  between them is silent on both channels,
* the overlap chunk set (both speakers active), and
* interruptions: one speaker starting inside the other's IPU, split into
  floor-taking (interrupter outlasts the interrupted IPU) and butting-in.

All operations are pure functions over immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, InputValidationError

SPEAKERS = (1, 2)
DEFAULT_CHUNK_MS = 40
DEFAULT_MIN_SIL_MS = 200

PAUSE = "pause"
GAP = "gap"
EDGE = "edge"

FLOOR_TAKING = "floor_taking"
BUTTING_IN = "butting_in"


def other_speaker(speaker_id: int) -> int:
    return 3 - speaker_id


@dataclass
class VoiceActivitySequence:
    """Per-chunk boolean activity of one speaker on the shared grid."""

    speaker_id: int
    chunk_ms: int
    active: np.ndarray

    def __post_init__(self) -> None:
        if self.speaker_id not in SPEAKERS:
            raise InputValidationError(f"speaker_id must be 1 or 2, got {self.speaker_id!r}")
        if int(self.chunk_ms) <= 0:
            raise InputValidationError(f"chunk_ms must be positive, got {self.chunk_ms!r}")
        self.chunk_ms = int(self.chunk_ms)
        self.active = np.asarray(self.active, dtype=bool)
        if self.active.ndim != 1:
            raise InputValidationError("active must be a 1-d boolean sequence")

    @property
    def n_chunks(self) -> int:
        return int(self.active.size)


@dataclass(frozen=True)
class Ipu:
    """Inter-pausal unit, inclusive chunk range [start, end]."""

    speaker_id: int
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise InputValidationError(f"IPU start {self.start} > end {self.end}")

    @property
    def n_chunks(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class SilenceRun:
    """Maximal run of chunks where both speakers are inactive."""

    start: int
    end: int
    kind: str  # PAUSE | GAP | EDGE


@dataclass(frozen=True)
class Turn:
    """Successive same-speaker IPUs separated only by joint silence."""

    speaker_id: int
    ipus: Tuple[Ipu, ...]

    @property
    def hull_start(self) -> int:
        return self.ipus[0].start

    @property
    def hull_end(self) -> int:
        return self.ipus[-1].end


@dataclass(frozen=True)
class Interruption:
    """One speaker starting inside the other speaker's IPU."""

    interrupter: int
    interrupted: int
    ipu_interrupted: Ipu
    ipu_interrupter: Ipu
    subtype: str  # FLOOR_TAKING | BUTTING_IN


@dataclass
class EventTimeline:
    """Full event segmentation of one conversation."""

    n_chunks: int
    chunk_ms: int
    min_sil_ms: int
    ipus: Dict[int, Tuple[Ipu, ...]]
    silence_runs: Tuple[SilenceRun, ...]
    turns: Tuple[Turn, ...]  # ordered by (hull_start, speaker_id)
    overlap: np.ndarray  # boolean mask over the chunk grid
    interruptions: Tuple[Interruption, ...]
    activity: Dict[int, np.ndarray] = field(default_factory=dict)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventTimeline):
            return NotImplemented
        return (
            self.n_chunks == other.n_chunks
            and self.chunk_ms == other.chunk_ms
            and self.min_sil_ms == other.min_sil_ms
            and self.ipus == other.ipus
            and self.silence_runs == other.silence_runs
            and self.turns == other.turns
            and bool(np.array_equal(self.overlap, other.overlap))
            and self.interruptions == other.interruptions
            and all(
                np.array_equal(self.activity[k], other.activity[k]) for k in SPEAKERS
            )
        )

    @property
    def overlap_chunks(self) -> np.ndarray:
        return np.flatnonzero(self.overlap)

    def hull_mask(self, speaker_id: int) -> np.ndarray:
        mask = np.zeros(self.n_chunks, dtype=bool)
        for turn in self.turns:
            if turn.speaker_id == speaker_id:
                mask[turn.hull_start : turn.hull_end + 1] = True
        return mask


def _runs(mask: np.ndarray) -> List[Tuple[int, int]]:
    """Maximal inclusive [start, end] runs of True in a boolean mask."""
    padded = np.concatenate(([False], np.asarray(mask, dtype=bool), [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(s), int(e - 1)) for s, e in zip(edges[::2], edges[1::2])]


def silence_threshold_chunks(min_sil_ms: int, chunk_ms: int) -> int:
    if min_sil_ms <= 0:
        raise ConfigurationError(f"min_sil_ms must be positive, got {min_sil_ms}")
    if min_sil_ms % chunk_ms != 0:
        raise ConfigurationError(
            f"min_sil_ms ({min_sil_ms}) must be a multiple of chunk_ms ({chunk_ms})"
        )
    return min_sil_ms // chunk_ms


def chunkize(
    intervals: Sequence[Tuple[int, float, float]],
    total_ms: float,
    chunk_ms: int = DEFAULT_CHUNK_MS,
) -> Dict[int, VoiceActivitySequence]:
    """Rasterise (speaker, start_ms, end_ms) speech intervals onto the chunk grid.

    A chunk is active for a speaker iff the union of that speaker's intervals
    covers at least 50% of the chunk span. Overlapping intervals of one
    speaker are unioned first. Returns one sequence per speaker, both of
    length ceil(total_ms / chunk_ms).
    """
    if chunk_ms <= 0:
        raise ConfigurationError(f"chunk_ms must be positive, got {chunk_ms}")
    if total_ms < 0:
        raise InputValidationError(f"total_ms must be >= 0, got {total_ms}")
    n_chunks = int(np.ceil(total_ms / chunk_ms)) if total_ms > 0 else 0

    by_speaker: Dict[int, List[Tuple[float, float]]] = {k: [] for k in SPEAKERS}
    for speaker, start, end in intervals:
        if speaker not in SPEAKERS:
            raise InputValidationError(f"speaker must be 1 or 2, got {speaker!r}")
        if start < 0 or end < 0:
            raise InputValidationError(f"negative interval time: ({start}, {end})")
        if end <= start:
            raise InputValidationError(f"interval end must exceed start: ({start}, {end})")
        if end > total_ms:
            raise InputValidationError(
                f"interval ({start}, {end}) exceeds total_ms={total_ms}"
            )
        by_speaker[speaker].append((float(start), float(end)))

    out: Dict[int, VoiceActivitySequence] = {}
    for speaker in SPEAKERS:
        covered = np.zeros(n_chunks, dtype=float)
        for start, end in _union_intervals(by_speaker[speaker]):
            first = int(start // chunk_ms)
            last = min(n_chunks - 1, int(np.ceil(end / chunk_ms)) - 1)
            for i in range(first, last + 1):
                lo = max(start, i * chunk_ms)
                hi = min(end, (i + 1) * chunk_ms)
                covered[i] += max(0.0, hi - lo)
        active = covered >= 0.5 * chunk_ms - 1e-9
        out[speaker] = VoiceActivitySequence(speaker, chunk_ms, active)
    return out


def _union_intervals(intervals: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    merged: List[Tuple[float, float]] = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def segment_ipus(
    va: VoiceActivitySequence, min_sil_ms: int = DEFAULT_MIN_SIL_MS
) -> List[Ipu]:
    """Segment one speaker's activity into IPUs.

    Internal silence runs strictly shorter than the threshold are absorbed;
    silence of at least min_sil_ms splits. Output is sorted by start chunk.
    """
    threshold = silence_threshold_chunks(min_sil_ms, va.chunk_ms)
    spans: List[List[int]] = []
    for start, end in _runs(va.active):
        if spans and start - spans[-1][1] - 1 < threshold:
            spans[-1][1] = end
        else:
            spans.append([start, end])
    return [Ipu(va.speaker_id, s, e) for s, e in spans]


def build_timeline(
    va1: VoiceActivitySequence,
    va2: VoiceActivitySequence,
    min_sil_ms: int = DEFAULT_MIN_SIL_MS,
) -> EventTimeline:
    """Segment a two-speaker conversation into its full event timeline."""
    if va1.n_chunks != va2.n_chunks:
        raise InputValidationError(
            f"length mismatch: {va1.n_chunks} vs {va2.n_chunks} chunks"
        )
    if va1.chunk_ms != va2.chunk_ms:
        raise InputValidationError(
            f"chunk_ms mismatch: {va1.chunk_ms} vs {va2.chunk_ms}"
        )
    if {va1.speaker_id, va2.speaker_id} != set(SPEAKERS):
        raise InputValidationError("need one sequence for speaker 1 and one for speaker 2")

    activity = {va1.speaker_id: va1.active, va2.speaker_id: va2.active}
    n_chunks = va1.n_chunks
    ipus = {
        k: tuple(segment_ipus(VoiceActivitySequence(k, va1.chunk_ms, activity[k]), min_sil_ms))
        for k in SPEAKERS
    }

    any_active = activity[1] | activity[2]
    silence_runs = []
    for start, end in _runs(~any_active):
        if start == 0 or end == n_chunks - 1:
            kind = EDGE
        else:
            before = {k for k in SPEAKERS if activity[k][start - 1]}
            after = {k for k in SPEAKERS if activity[k][end + 1]}
            # A speaker active on both sides keeps their turn across the run.
            kind = PAUSE if before & after else GAP
        silence_runs.append(SilenceRun(start, end, kind))

    cumulative = np.concatenate(([0], np.cumsum(any_active)))

    def jointly_silent(lo: int, hi: int) -> bool:
        return lo > hi or cumulative[hi + 1] - cumulative[lo] == 0

    turns: List[Turn] = []
    for k in SPEAKERS:
        group: List[Ipu] = []
        for ipu in ipus[k]:
            if group and jointly_silent(group[-1].end + 1, ipu.start - 1):
                group.append(ipu)
            else:
                if group:
                    turns.append(Turn(k, tuple(group)))
                group = [ipu]
        if group:
            turns.append(Turn(k, tuple(group)))
    turns.sort(key=lambda t: (t.hull_start, t.speaker_id))

    interruptions: List[Interruption] = []
    for k in SPEAKERS:
        for host in ipus[k]:
            for intruder in ipus[other_speaker(k)]:
                if host.start < intruder.start < host.end:
                    # Simultaneous stop counts as floor-taking (tie-break).
                    subtype = FLOOR_TAKING if intruder.end >= host.end else BUTTING_IN
                    interruptions.append(
                        Interruption(
                            interrupter=intruder.speaker_id,
                            interrupted=host.speaker_id,
                            ipu_interrupted=host,
                            ipu_interrupter=intruder,
                            subtype=subtype,
                        )
                    )
    interruptions.sort(key=lambda r: (r.ipu_interrupter.start, r.interrupter, r.ipu_interrupted.start))

    return EventTimeline(
        n_chunks=n_chunks,
        chunk_ms=va1.chunk_ms,
        min_sil_ms=min_sil_ms,
        ipus=ipus,
        silence_runs=tuple(silence_runs),
        turns=tuple(turns),
        overlap=activity[1] & activity[2],
        interruptions=tuple(interruptions),
        activity=activity,
    )
