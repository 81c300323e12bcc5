"""Synthetic two-speaker conversations with construction-known ground truth.

The generator lays out alternating turns (IPUs separated by pauses, turns
separated by gaps), then injects interruptions and backchannels by rejection
sampling so that no insertion can perturb the surrounding event structure:
inserted speech sits strictly inside a host IPU and keeps at least the IPU
silence threshold away from the inserter's own speech. The emitted ground
truth (timeline, labels, ownership) is therefore exactly what the
segmentation and labeling pipeline recomputes from the emitted activity and
token streams, which makes generated corpora usable as end-to-end oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError
from .judge import LikelihoodStream
from .labeler import (
    BC,
    C,
    CLASSES,
    I,
    NA,
    T,
    BackchannelSequence,
    TranscriptToken,
    TurnLabelSequence,
)
from .timeline import (
    BUTTING_IN,
    EDGE,
    FLOOR_TAKING,
    GAP,
    PAUSE,
    SPEAKERS,
    EventTimeline,
    Interruption,
    Ipu,
    SilenceRun,
    Turn,
    VoiceActivitySequence,
    other_speaker,
    silence_threshold_chunks,
)

#: neutral vocabulary for non-backchannel tokens; must stay disjoint from fillers
CONTENT_VOCAB = (
    "time", "people", "thing", "about", "going",
    "story", "little", "never", "other", "place",
)

TOKEN_MS_PER_WORD = 300.0


@dataclass
class SynthParams:
    """Generator configuration; durations in milliseconds, rates per minute."""

    duration_ms: float = 60_000.0
    ipu_ms: Dict[int, Tuple[float, float]] = field(
        default_factory=lambda: {1: (7000.0, 400.0), 2: (7000.0, 400.0)}
    )
    pause_ms: Tuple[float, float] = (1200.0, 150.0)
    gap_ms: Tuple[float, float] = (600.0, 100.0)
    turn_ipus_mean: float = 3.0
    turn_ipus_fixed: bool = False  # use exactly round(turn_ipus_mean) IPUs per turn
    backchannel_rate_per_min: float = 0.0
    backchannel_phrases: Tuple[str, ...] = ("i see",)
    backchannel_duration_chunks: int = 1
    interruption_rate_per_min: float = 0.0
    floor_taking_prob: float = 0.5
    floor_overlap_chunks: int = 2
    butting_chunks: int = 2
    chunk_ms: int = 40
    min_sil_ms: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.duration_ms <= 0:
            raise ConfigurationError("duration_ms must be positive")
        for rate in (self.backchannel_rate_per_min, self.interruption_rate_per_min):
            if rate < 0:
                raise ConfigurationError("rates must be >= 0")
        if not 0.0 <= self.floor_taking_prob <= 1.0:
            raise ConfigurationError("floor_taking_prob must lie in [0, 1]")
        if self.turn_ipus_mean < 1.0:
            raise ConfigurationError("turn_ipus_mean must be >= 1")
        for k in SPEAKERS:
            mean, sd = self.ipu_ms[k]
            if mean <= 0 or sd < 0:
                raise ConfigurationError(f"invalid IPU distribution for speaker {k}")
        if self.pause_ms[0] < self.min_sil_ms:
            raise ConfigurationError(
                f"pause mean {self.pause_ms[0]} ms is below the IPU silence "
                f"threshold {self.min_sil_ms} ms; such pauses would not split IPUs"
            )
        if self.gap_ms[0] <= 0:
            raise ConfigurationError("gap mean must be positive")
        if self.floor_overlap_chunks < 2:
            raise ConfigurationError("floor_overlap_chunks must be >= 2")
        if self.butting_chunks < 1 or self.backchannel_duration_chunks < 1:
            raise ConfigurationError("insertion durations must be >= 1 chunk")
        for phrase in self.backchannel_phrases:
            if not 1 <= len(phrase.split()) <= 2:
                raise ConfigurationError(
                    f"backchannel phrases must have one or two words, got {phrase!r}"
                )


@dataclass
class SynthResult:
    """Generated conversation plus its construction-known ground truth."""

    params: SynthParams
    va: Dict[int, VoiceActivitySequence]
    bc: Dict[int, BackchannelSequence]
    tokens: List[TranscriptToken]
    timeline: EventTimeline
    labels: TurnLabelSequence

    @property
    def n_chunks(self) -> int:
        return self.va[1].n_chunks


@dataclass
class _Span:
    speaker: int
    start: int
    end: int  # inclusive

    @property
    def n_chunks(self) -> int:
        return self.end - self.start + 1


class _Builder:
    def __init__(self, params: SynthParams):
        self.params = params
        self.chunk_ms = params.chunk_ms
        self.min_sil = silence_threshold_chunks(params.min_sil_ms, params.chunk_ms)
        self.n_chunks = int(np.ceil(params.duration_ms / params.chunk_ms))
        self.rng = np.random.default_rng(params.seed)
        self.spans: List[_Span] = []  # all speech spans, base and inserted
        self.base_turns: List[Tuple[int, List[_Span]]] = []
        self.pauses: List[Tuple[int, int]] = []
        self.gaps: List[Tuple[int, int]] = []
        self.floor_events: List[Tuple[_Span, _Span]] = []  # (interrupted, interrupter)
        self.nested_events: List[Tuple[_Span, _Span, bool]] = []  # (host, insert, is_bc)
        self.bc_tokens: List[TranscriptToken] = []

    # -- duration sampling -------------------------------------------------

    def _chunks(self, mean_ms: float, sd_ms: float, minimum: int) -> int:
        value = self.rng.normal(mean_ms, sd_ms)
        return max(minimum, int(round(value / self.chunk_ms)))

    # -- base skeleton -----------------------------------------------------

    def build(self) -> SynthResult:
        p = self.params
        minutes = p.duration_ms / 60_000.0
        n_interruptions = int(round(p.interruption_rate_per_min * minutes))
        is_floor = self.rng.random(n_interruptions) < p.floor_taking_prob
        n_floor = int(np.count_nonzero(is_floor))
        n_butting = n_interruptions - n_floor
        n_backchannels = int(round(p.backchannel_rate_per_min * minutes))

        self._build_skeleton(n_floor)
        self._insert_nested(n_butting, is_bc=False)
        self._insert_nested(n_backchannels, is_bc=True)
        return self._materialize()

    def _build_skeleton(self, n_floor: int) -> None:
        p = self.params
        floor_targets = list(self._targets(n_floor))
        speaker = 1
        lead = self._chunks(*p.gap_ms, minimum=1)
        cursor = lead  # first chunk of the next turn
        prev_last: Optional[_Span] = None

        while True:
            pending_floor = (
                prev_last is not None
                and floor_targets
                and floor_targets[0] <= prev_last.end
                and prev_last.n_chunks >= p.floor_overlap_chunks + 1
            )
            if p.turn_ipus_fixed:
                n_ipus = max(1, int(round(p.turn_ipus_mean)))
            else:
                n_ipus = 1 + int(self.rng.poisson(p.turn_ipus_mean - 1.0))
            ipu_lengths = [
                self._chunks(*p.ipu_ms[speaker], minimum=1) for _ in range(n_ipus)
            ]
            if pending_floor:
                ipu_lengths[0] = max(ipu_lengths[0], p.floor_overlap_chunks + 1)
                start = prev_last.end - p.floor_overlap_chunks + 1
                gap_span = None
            elif prev_last is None:
                start = cursor
                gap_span = None
            else:
                gap_len = self._chunks(*p.gap_ms, minimum=1)
                start = prev_last.end + 1 + gap_len
                gap_span = (prev_last.end + 1, start - 1)

            spans: List[_Span] = []
            pause_spans: List[Tuple[int, int]] = []
            at = start
            for j, length in enumerate(ipu_lengths):
                if j > 0:
                    pause_len = self._chunks(*p.pause_ms, minimum=self.min_sil)
                    pause_spans.append((at, at + pause_len - 1))
                    at += pause_len
                spans.append(_Span(speaker, at, at + length - 1))
                at += length

            if spans[-1].end >= self.n_chunks:
                break  # turn does not fit; finish with trailing edge silence

            if pending_floor:
                floor_targets.pop(0)
                self.floor_events.append((prev_last, spans[0]))
            elif gap_span is not None:
                self.gaps.append(gap_span)
            self.pauses.extend(pause_spans)
            self.spans.extend(spans)
            self.base_turns.append((speaker, spans))
            prev_last = spans[-1]
            speaker = other_speaker(speaker)

        if not self.base_turns:
            raise ConfigurationError(
                "duration_ms too short to fit a single turn with these parameters"
            )

    def _targets(self, n_events: int) -> np.ndarray:
        if n_events == 0:
            return np.array([], dtype=int)
        jitter = self.rng.uniform(0.15, 0.85, size=n_events)
        return np.sort(((np.arange(n_events) + jitter) * self.n_chunks / n_events).astype(int))

    # -- nested insertions (butting-in interruptions and backchannels) ------

    def _insert_nested(self, n_events: int, is_bc: bool) -> None:
        p = self.params
        length = p.backchannel_duration_chunks if is_bc else p.butting_chunks
        for target in self._targets(n_events):
            placed = self._try_insert(target, length, is_bc)
            if not placed:
                raise ConfigurationError(
                    "could not place all requested insertions; the configured "
                    "rates are infeasible for these turn parameters"
                )

    def _try_insert(self, target: int, length: int, is_bc: bool) -> bool:
        hosts = sorted(
            (s for s in self.spans if s.n_chunks >= length + 2),
            key=lambda s: min(abs(s.start - target), abs(s.end - target))
            if not s.start <= target <= s.end
            else 0,
        )
        for host in hosts[:40]:
            lo = host.start + 1
            hi = host.end - length  # start so that insert ends at host.end - 1
            if hi < lo:
                continue
            preferred = int(np.clip(target, lo, hi))
            candidates = [preferred] + [
                int(self.rng.integers(lo, hi + 1)) for _ in range(24)
            ]
            for start in candidates:
                insert = _Span(other_speaker(host.speaker), start, start + length - 1)
                if self._clear_of_own_speech(insert):
                    self.spans.append(insert)
                    self.nested_events.append((host, insert, is_bc))
                    return True
        return False

    def _clear_of_own_speech(self, insert: _Span) -> bool:
        margin = self.min_sil
        for span in self.spans:
            if span.speaker != insert.speaker:
                continue
            if span.start <= insert.end + margin and insert.start - margin <= span.end:
                return False
        return True

    # -- materialisation -----------------------------------------------------

    def _materialize(self) -> SynthResult:
        p = self.params
        n = self.n_chunks
        activity = {k: np.zeros(n, dtype=bool) for k in SPEAKERS}
        bc_flags = {k: np.zeros(n, dtype=bool) for k in SPEAKERS}
        for span in self.spans:
            activity[span.speaker][span.start : span.end + 1] = True
        for _, insert, is_bc in self.nested_events:
            if is_bc:
                bc_flags[insert.speaker][insert.start : insert.end + 1] = True

        self._check_channel_separation(activity)

        ipus = {
            k: tuple(
                Ipu(k, s.start, s.end)
                for s in sorted(self.spans, key=lambda s: s.start)
                if s.speaker == k
            )
            for k in SPEAKERS
        }

        turns: List[Turn] = [
            Turn(speaker, tuple(Ipu(speaker, s.start, s.end) for s in spans))
            for speaker, spans in self.base_turns
        ]
        for _, insert, _ in self.nested_events:
            turns.append(Turn(insert.speaker, (Ipu(insert.speaker, insert.start, insert.end),)))
        turns.sort(key=lambda t: (t.hull_start, t.speaker_id))

        silence_runs = self._silence_runs(n)

        interruptions: List[Interruption] = []
        for host, winner in self.floor_events:
            interruptions.append(
                Interruption(
                    interrupter=winner.speaker,
                    interrupted=host.speaker,
                    ipu_interrupted=Ipu(host.speaker, host.start, host.end),
                    ipu_interrupter=Ipu(winner.speaker, winner.start, winner.end),
                    subtype=FLOOR_TAKING,
                )
            )
        for host, insert, _ in self.nested_events:
            interruptions.append(
                Interruption(
                    interrupter=insert.speaker,
                    interrupted=host.speaker,
                    ipu_interrupted=Ipu(host.speaker, host.start, host.end),
                    ipu_interrupter=Ipu(insert.speaker, insert.start, insert.end),
                    subtype=BUTTING_IN,
                )
            )
        interruptions.sort(
            key=lambda r: (r.ipu_interrupter.start, r.interrupter, r.ipu_interrupted.start)
        )

        timeline = EventTimeline(
            n_chunks=n,
            chunk_ms=p.chunk_ms,
            min_sil_ms=p.min_sil_ms,
            ipus=ipus,
            silence_runs=tuple(silence_runs),
            turns=tuple(turns),
            overlap=activity[1] & activity[2],
            interruptions=tuple(interruptions),
            activity=activity,
        )
        labels = self._ground_truth_labels(timeline, bc_flags)
        tokens = self._tokens()

        va = {k: VoiceActivitySequence(k, p.chunk_ms, activity[k]) for k in SPEAKERS}
        bc = {k: BackchannelSequence(k, bc_flags[k]) for k in SPEAKERS}
        return SynthResult(
            params=p, va=va, bc=bc, tokens=tokens, timeline=timeline, labels=labels
        )

    def _check_channel_separation(self, activity: Dict[int, np.ndarray]) -> None:
        for k in SPEAKERS:
            own = sorted((s for s in self.spans if s.speaker == k), key=lambda s: s.start)
            for prev, nxt in zip(own, own[1:]):
                if nxt.start - prev.end - 1 < self.min_sil:
                    raise ConfigurationError(
                        "generated spans of one speaker fall closer than the IPU "
                        "silence threshold; lengthen turns or lower event rates"
                    )

    def _silence_runs(self, n: int) -> List[SilenceRun]:
        runs: List[SilenceRun] = []
        first_speech = min(s.start for s in self.spans)
        last_speech = max(s.end for s in self.spans)
        if first_speech > 0:
            runs.append(SilenceRun(0, first_speech - 1, EDGE))
        runs.extend(SilenceRun(s, e, PAUSE) for s, e in self.pauses)
        runs.extend(SilenceRun(s, e, GAP) for s, e in self.gaps)
        if last_speech < n - 1:
            runs.append(SilenceRun(last_speech + 1, n - 1, EDGE))
        runs.sort(key=lambda r: r.start)
        return runs

    def _ground_truth_labels(
        self, timeline: EventTimeline, bc_flags: Dict[int, np.ndarray]
    ) -> TurnLabelSequence:
        n = timeline.n_chunks
        labels = np.full(n, C, dtype=np.int8)

        # turn changes: every non-first turn onset plus floor-transfer chunks;
        # onsets that fall inside overlap or backchannel spans are masked below
        t_chunks = {turn.hull_start for turn in timeline.turns[1:]}
        for host, _ in self.floor_events:
            t_chunks.add(host.end + 1)

        labels[list(t_chunks)] = T
        labels[timeline.overlap] = I
        labels[bc_flags[1] | bc_flags[2]] = BC
        labels[~timeline.activity[1] & ~timeline.activity[2]] = NA

        owner = np.zeros(n, dtype=np.int8)
        last_end = -1
        for turn in timeline.turns:
            if turn.hull_end <= last_end:
                continue  # nested insertion never owns the floor
            begin = max(turn.hull_start, last_end + 1)
            owner[begin:] = turn.speaker_id
            last_end = turn.hull_end
        return TurnLabelSequence(labels=labels, owner=owner)

    def _tokens(self) -> List[TranscriptToken]:
        p = self.params
        tokens: List[TranscriptToken] = []
        nested_bc = {(s.speaker, s.start, s.end) for _, s, is_bc in self.nested_events if is_bc}
        vocab_index = 0
        for span in sorted(self.spans, key=lambda s: (s.start, s.speaker)):
            start_ms = span.start * p.chunk_ms
            span_ms = span.n_chunks * p.chunk_ms
            if (span.speaker, span.start, span.end) in nested_bc:
                phrase = str(self.rng.choice(p.backchannel_phrases))
                words = phrase.split()
            else:
                n_words = max(1, int(span_ms / TOKEN_MS_PER_WORD))
                words = []
                for _ in range(n_words):
                    words.append(CONTENT_VOCAB[vocab_index % len(CONTENT_VOCAB)])
                    vocab_index += 1
            step = span_ms / len(words)
            for j, word in enumerate(words):
                tokens.append(
                    TranscriptToken(
                        speaker_id=span.speaker,
                        word=word,
                        start_ms=start_ms + j * step,
                        end_ms=start_ms + (j + 1) * step,
                    )
                )
        tokens.sort(key=lambda t: (t.start_ms, t.speaker_id))
        return tokens


def generate(params: SynthParams) -> SynthResult:
    """Generate one conversation; deterministic given params.seed."""
    return _Builder(params).build()


def ideal_stream(
    label_codes: Sequence[int], p_true: float = 0.9, start_chunk: int = 0
) -> LikelihoodStream:
    """Likelihood stream putting p_true on the true class, uniform elsewhere."""
    if not 0.2 < p_true <= 1.0:
        raise ConfigurationError("p_true must lie in (0.2, 1.0]")
    label_codes = np.asarray(label_codes)
    rest = (1.0 - p_true) / (len(CLASSES) - 1)
    probs = np.full((label_codes.size, len(CLASSES)), rest)
    probs[np.arange(label_codes.size), label_codes] = p_true
    return LikelihoodStream(start_chunk=start_chunk, probs=probs)
