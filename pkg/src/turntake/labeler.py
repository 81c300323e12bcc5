"""Per-chunk turn-taking labels, ownership attribution and decision instances.

Builds on the event timeline to produce the five-way label sequence used by
the judge model (NA, BC, I, T, C), attributes every chunk to the speaker who
currently holds the floor, and extracts the per-metric decision instances
whose timing the judge model scores.

Label precedence per chunk is fixed: NA -> BC -> I -> T -> C, first match
wins. T marks the onset chunk of each new turn plus the transfer chunk of a
floor-taking interruption (the first chunk where only the interrupter is
still speaking).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Set, Tuple

import numpy as np

from .errors import ConfigurationError, InputValidationError
from .timeline import (
    FLOOR_TAKING,
    SPEAKERS,
    EventTimeline,
    VoiceActivitySequence,
    other_speaker,
)

CLASSES = ("NA", "BC", "I", "T", "C")
NA, BC, I, T, C = range(5)

METRICS = ("a", "b", "c", "d", "e")
ACTOR_AI = "AI"
ACTOR_HUMAN = "human"
NOT_BC = "not-BC"

#: positive / negative decision value per metric
METRIC_DECISIONS = {
    "a": ("T", "C"),
    "b": ("BC", NOT_BC),
    "c": ("I", "C"),
    "d": ("T", "C"),
    "e": ("T", "C"),
}

DEFAULT_W_CHUNKS = 750  # 30 s context at 40 ms chunks


@dataclass(frozen=True)
class TranscriptToken:
    """One time-aligned word of the ASR transcript."""

    speaker_id: int
    word: str
    start_ms: float
    end_ms: float

    def __post_init__(self) -> None:
        if self.speaker_id not in SPEAKERS:
            raise InputValidationError(f"speaker_id must be 1 or 2, got {self.speaker_id!r}")
        if not self.word:
            raise InputValidationError("token word must be non-empty")
        if self.start_ms >= self.end_ms:
            raise InputValidationError(
                f"token start must precede end: ({self.start_ms}, {self.end_ms})"
            )


@dataclass
class BackchannelSequence:
    """Per-chunk backchannel flags of one speaker (subset of their activity)."""

    speaker_id: int
    bc: np.ndarray

    def __post_init__(self) -> None:
        if self.speaker_id not in SPEAKERS:
            raise InputValidationError(f"speaker_id must be 1 or 2, got {self.speaker_id!r}")
        self.bc = np.asarray(self.bc, dtype=bool)


@dataclass
class TurnLabelSequence:
    """Per-chunk label codes (indexes into CLASSES) and floor ownership (0 = none)."""

    labels: np.ndarray
    owner: np.ndarray

    def label_names(self) -> List[str]:
        return [CLASSES[code] for code in self.labels]


@dataclass(frozen=True)
class DecisionInstance:
    """One turn-taking decision to be scored by the judge model."""

    metric_id: str
    chunk: int
    actor: str  # ACTOR_AI | ACTOR_HUMAN
    actual: str  # metric-specific decision value
    context_window: Tuple[int, int]  # [chunk - W, chunk - 1], clipped at 0


def default_filler_set() -> Set[str]:
    """Filler phrases shipped with the package (user-overridable)."""
    from .io import read_fillers, packaged_filler_path

    return read_fillers(packaged_filler_path())


def validate_filler_set(filler_set: Iterable[str]) -> Set[str]:
    fillers = set()
    for phrase in filler_set:
        norm = " ".join(phrase.lower().split())
        if not norm:
            continue
        if len(norm.split()) > 2:
            raise ConfigurationError(
                f"filler phrases must have one or two words, got {phrase!r}"
            )
        fillers.add(norm)
    return fillers


def _token_span(token: TranscriptToken, chunk_ms: int, n_chunks: int) -> Tuple[int, int]:
    first = int(token.start_ms // chunk_ms)
    last = int(np.ceil(token.end_ms / chunk_ms)) - 1
    if token.start_ms < 0 or first >= n_chunks or last >= n_chunks:
        raise InputValidationError(
            f"token {token.word!r} at ({token.start_ms}, {token.end_ms}) ms "
            f"falls outside the {n_chunks}-chunk grid"
        )
    return first, last


def label_backchannels(
    tokens: Sequence[TranscriptToken],
    timeline: EventTimeline,
    filler_set: Iterable[str],
) -> Dict[int, BackchannelSequence]:
    """Mark filler phrases uttered inside the other speaker's turn as backchannels.

    A candidate is a maximal run of one speaker's consecutive tokens with no
    chunk of that speaker's inactivity inside it. It becomes a backchannel
    iff the joined words form a phrase of the filler set, the run is isolated
    (bounded by the speaker's inactivity or a conversation edge) and its
    whole chunk span lies within one of the other speaker's turn hulls.
    """
    fillers = validate_filler_set(filler_set)
    n_chunks = timeline.n_chunks
    activity = timeline.activity
    hulls = {k: timeline.hull_mask(k) for k in SPEAKERS}
    bc = {k: np.zeros(n_chunks, dtype=bool) for k in SPEAKERS}

    for k in SPEAKERS:
        mine = sorted(
            (t for t in tokens if t.speaker_id == k), key=lambda t: (t.start_ms, t.end_ms)
        )
        utterances: List[List[Tuple[TranscriptToken, int, int]]] = []
        for token in mine:
            first, last = _token_span(token, timeline.chunk_ms, n_chunks)
            if utterances:
                prev_last = utterances[-1][-1][2]
                gap = activity[k][prev_last + 1 : first]
                if gap.size == 0 or gap.all():
                    utterances[-1].append((token, first, last))
                    continue
            utterances.append([(token, first, last)])

        for utterance in utterances:
            phrase = " ".join(token.word.lower() for token, _, _ in utterance)
            if phrase not in fillers:
                continue
            first = utterance[0][1]
            last = utterance[-1][2]
            isolated = (first == 0 or not activity[k][first - 1]) and (
                last == n_chunks - 1 or not activity[k][last + 1]
            )
            if not isolated:
                continue
            if not hulls[other_speaker(k)][first : last + 1].all():
                continue
            bc[k][first : last + 1] |= activity[k][first : last + 1]

    return {k: BackchannelSequence(k, bc[k]) for k in SPEAKERS}


def attribute_ownership(timeline: EventTimeline) -> np.ndarray:
    """Floor owner per chunk: hull membership first, then carried through silence.

    Where hulls overlap (interruptions) the turn with the earlier hull start
    keeps the floor. Silence after a turn belongs to that turn's speaker
    until the next turn onset; chunks before the first turn get owner 0.
    """
    owner = np.zeros(timeline.n_chunks, dtype=np.int8)
    ordered = sorted(timeline.turns, key=lambda t: (t.hull_start, t.speaker_id))
    for turn in reversed(ordered):
        owner[turn.hull_start : turn.hull_end + 1] = turn.speaker_id
    if owner.size:
        assigned = np.where(owner > 0, np.arange(owner.size), -1)
        np.maximum.accumulate(assigned, out=assigned)
        owner = np.where(assigned >= 0, owner[np.maximum(assigned, 0)], 0).astype(np.int8)
    return owner


def turn_change_chunks(timeline: EventTimeline) -> Set[int]:
    """Chunks at which the floor changes hands.

    The onset of every turn except the conversation's first, plus the
    transfer chunk of each floor-taking interruption: the first chunk after
    the interrupted IPU ends where only the interrupter is speaking.
    """
    changes = {turn.hull_start for turn in timeline.turns[1:]}
    for event in timeline.interruptions:
        if event.subtype != FLOOR_TAKING:
            continue
        winner = timeline.activity[event.interrupter]
        loser = timeline.activity[event.interrupted]
        for j in range(event.ipu_interrupted.end + 1, event.ipu_interrupter.end + 1):
            if winner[j] and not loser[j]:
                changes.add(j)
                break
    return changes


def derive_labels(
    va1: VoiceActivitySequence,
    va2: VoiceActivitySequence,
    bc1: BackchannelSequence,
    bc2: BackchannelSequence,
    timeline: EventTimeline,
) -> TurnLabelSequence:
    """Apply the five-way labeling rules chunk by chunk."""
    n_chunks = timeline.n_chunks
    seqs = {va1.speaker_id: va1, va2.speaker_id: va2}
    flags = {bc1.speaker_id: bc1.bc, bc2.speaker_id: bc2.bc}
    for k in SPEAKERS:
        if seqs[k].n_chunks != n_chunks or flags[k].size != n_chunks:
            raise InputValidationError("all sequences must share the timeline grid")
        if np.any(flags[k] & ~seqs[k].active):
            bad = np.flatnonzero(flags[k] & ~seqs[k].active)[:5]
            raise InputValidationError(
                f"backchannel set on inactive chunks of speaker {k}: {bad.tolist()}"
            )

    act1, act2 = seqs[1].active, seqs[2].active
    hull1, hull2 = timeline.hull_mask(1), timeline.hull_mask(2)

    na_mask = ~act1 & ~act2
    bc_mask = (flags[1] & hull2) | (flags[2] & hull1)
    i_mask = act1 & act2 & ~flags[1] & ~flags[2]
    t_mask = np.zeros(n_chunks, dtype=bool)
    t_mask[list(turn_change_chunks(timeline))] = True

    # Later assignments win, so write in reverse precedence order.
    labels = np.full(n_chunks, C, dtype=np.int8)
    labels[t_mask] = T
    labels[i_mask] = I
    labels[bc_mask] = BC
    labels[na_mask] = NA

    return TurnLabelSequence(labels=labels, owner=attribute_ownership(timeline))


def extract_instances(
    labels: np.ndarray,
    ownership: np.ndarray,
    metric_id: str,
    ai_speaker: int,
    w_chunks: int = DEFAULT_W_CHUNKS,
) -> List[DecisionInstance]:
    """Extract the decision instances of one metric.

    a: after every silence run owned by the partner, does the AI speak up
       (T) or let them continue (C)?
    b: at every chunk of the partner's turn where the AI is not already
       vocal, does it start a backchannel?
    c: while the partner speaks alone (previous label C), does the AI
       interrupt (next label I) or not (C)?
    d: mirror of (a) for silence runs owned by the AI - the partner decides.
    e: once an interruption is under way (previous label I), does the floor
       transfer (T) or stay (C) when the overlap resolves?

    Decision chunks whose outcome label falls outside the metric's decision
    pair (e.g. a backchannel right after a pause, for metric a) are not
    instances of that metric. Swapping ai_speaker yields the human-side
    instances used for judging-consistency checks and benchmark extraction.
    """
    if metric_id not in METRICS:
        raise ConfigurationError(f"unknown metric {metric_id!r}, expected one of {METRICS}")
    if ai_speaker not in SPEAKERS:
        raise InputValidationError(f"ai_speaker must be 1 or 2, got {ai_speaker!r}")
    labels = np.asarray(labels)
    ownership = np.asarray(ownership)
    if labels.shape != ownership.shape:
        raise InputValidationError("labels and ownership must share the grid")

    n_chunks = labels.size
    human = other_speaker(ai_speaker)

    def make(chunk: int, actual: str) -> DecisionInstance:
        actor = ACTOR_AI if ownership[chunk - 1] == human else ACTOR_HUMAN
        return DecisionInstance(
            metric_id=metric_id,
            chunk=chunk,
            actor=actor,
            actual=actual,
            context_window=(max(0, chunk - w_chunks), chunk - 1),
        )

    instances: List[DecisionInstance] = []
    if metric_id in ("a", "d"):
        run_owner = human if metric_id == "a" else ai_speaker
        start = None
        for i in range(n_chunks + 1):
            silent = i < n_chunks and labels[i] == NA
            if silent and start is None:
                start = i
            elif not silent and start is not None:
                if i < n_chunks and ownership[start] == run_owner and labels[i] in (T, C):
                    instances.append(make(i, CLASSES[labels[i]]))
                start = None
    elif metric_id == "b":
        for i in range(1, n_chunks):
            if ownership[i - 1] == human and labels[i - 1] not in (BC, I):
                actual = "BC" if labels[i] == BC else NOT_BC
                instances.append(make(i, actual))
    elif metric_id == "c":
        for i in range(1, n_chunks):
            if ownership[i - 1] == human and labels[i - 1] == C and labels[i] in (I, C):
                instances.append(make(i, CLASSES[labels[i]]))
    else:  # metric e
        for i in range(1, n_chunks):
            if ownership[i - 1] == ai_speaker and labels[i - 1] == I and labels[i] in (T, C):
                instances.append(make(i, CLASSES[labels[i]]))
    return instances


def extract_all_instances(
    label_seq: TurnLabelSequence, ai_speaker: int, w_chunks: int = DEFAULT_W_CHUNKS
) -> Dict[str, List[DecisionInstance]]:
    return {
        metric: extract_instances(
            label_seq.labels, label_seq.owner, metric, ai_speaker, w_chunks
        )
        for metric in METRICS
    }


def sample_balanced(
    instances: Sequence[DecisionInstance],
    n_per_side: int,
    seed: int = 0,
) -> List[DecisionInstance]:
    """Balanced positive/negative subsample for benchmark construction."""
    rng = np.random.default_rng(seed)
    out: List[DecisionInstance] = []
    for side in (0, 1):
        pool = [
            inst
            for inst in instances
            if (inst.actual == METRIC_DECISIONS[inst.metric_id][side])
        ]
        if len(pool) < n_per_side:
            raise InputValidationError(
                f"need {n_per_side} instances per side, have {len(pool)}"
            )
        picks = rng.choice(len(pool), size=n_per_side, replace=False)
        out.extend(pool[j] for j in sorted(picks))
    return out
