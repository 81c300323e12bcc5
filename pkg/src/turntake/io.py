"""Readers and writers for every wire format the toolkit speaks.

All writers emit a normalized form: reading a written file and writing it
again reproduces the bytes. Writes are atomic (temp file + rename).

Formats:
  voice activity   speaker,start_ms,end_ms       (or RTTM SPEAKER lines)
  transcript       speaker,start_ms,end_ms,word
  filler list      one lowercase phrase per line
  label sequence   chunk,label,owner
  likelihoods      chunk,p_na,p_bc,p_i,p_t,p_c
  reports, thresholds, baseline models, generator params: JSON
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .baseline import FEATURE_VERSION, BaselineModel
from .errors import InputValidationError
from .judge import CLASSES, LikelihoodStream, Thresholds
from .labeler import TranscriptToken, TurnLabelSequence
from .synthgen import SynthParams
from .timeline import SPEAKERS, EventTimeline

PathLike = Union[str, Path]

STREAM_HEADER = "chunk,p_na,p_bc,p_i,p_t,p_c"
LABEL_HEADER = "chunk,label,owner"
_OWNER_NAMES = {0: "none", 1: "1", 2: "2"}
_OWNER_CODES = {name: code for code, name in _OWNER_NAMES.items()}


def atomic_write_text(path: PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def packaged_filler_path() -> Path:
    return Path(__file__).parent / "data" / "fillers.txt"


def packaged_schema_path() -> Path:
    return Path(__file__).parent / "data" / "report.schema.json"


# -- voice activity intervals -------------------------------------------------


def read_va_intervals(
    path: PathLike, rttm_speakers: Optional[Tuple[str, str]] = None
) -> List[Tuple[int, float, float]]:
    """Parse a voice-activity file; RTTM SPEAKER lines are detected per line.

    rttm_speakers maps the two RTTM speaker names to speakers 1 and 2.
    """
    intervals: List[Tuple[int, float, float]] = []
    name_map: Dict[str, int] = {}
    if rttm_speakers is not None:
        name_map = {rttm_speakers[0]: 1, rttm_speakers[1]: 2}
    for lineno, raw in enumerate(_read_lines(path), start=1):
        if raw.upper().startswith(("SPEAKER ", "SPEAKER\t")):
            fields = raw.split()
            if len(fields) < 8:
                raise InputValidationError(f"{path}:{lineno}: malformed RTTM line")
            name = fields[7]
            if name not in name_map:
                if rttm_speakers is not None:
                    raise InputValidationError(
                        f"{path}:{lineno}: RTTM speaker {name!r} not in {rttm_speakers}"
                    )
                if len(name_map) >= 2:
                    raise InputValidationError(
                        f"{path}:{lineno}: more than two RTTM speakers; "
                        "pass an explicit speaker mapping"
                    )
                name_map[name] = len(name_map) + 1
            start_ms = _parse_float(fields[3], path, lineno) * 1000.0
            dur_ms = _parse_float(fields[4], path, lineno) * 1000.0
            intervals.append((name_map[name], start_ms, start_ms + dur_ms))
            continue
        fields = [f.strip() for f in raw.split(",")]
        if lineno == 1 and fields and not _is_number(fields[0]):
            continue  # optional header
        if len(fields) != 3:
            raise InputValidationError(
                f"{path}:{lineno}: expected 'speaker,start_ms,end_ms', got {raw!r}"
            )
        intervals.append(
            (
                _parse_speaker(fields[0], path, lineno),
                _parse_float(fields[1], path, lineno),
                _parse_float(fields[2], path, lineno),
            )
        )
    return intervals


def write_va_intervals(path: PathLike, intervals: Sequence[Tuple[int, float, float]]) -> None:
    lines = ["speaker,start_ms,end_ms"]
    lines += [f"{spk},{_fmt(start)},{_fmt(end)}" for spk, start, end in intervals]
    atomic_write_text(path, "\n".join(lines) + "\n")


# -- transcripts ----------------------------------------------------------------


def read_transcript(path: PathLike) -> List[TranscriptToken]:
    tokens: List[TranscriptToken] = []
    for lineno, raw in enumerate(_read_lines(path), start=1):
        fields = [f.strip() for f in raw.split(",")]
        if lineno == 1 and fields and not _is_number(fields[0]):
            continue
        if len(fields) != 4:
            raise InputValidationError(
                f"{path}:{lineno}: expected 'speaker,start_ms,end_ms,word', got {raw!r}"
            )
        tokens.append(
            TranscriptToken(
                speaker_id=_parse_speaker(fields[0], path, lineno),
                start_ms=_parse_float(fields[1], path, lineno),
                end_ms=_parse_float(fields[2], path, lineno),
                word=fields[3].lower(),
            )
        )
    return tokens


def write_transcript(path: PathLike, tokens: Sequence[TranscriptToken]) -> None:
    lines = ["speaker,start_ms,end_ms,word"]
    lines += [
        f"{t.speaker_id},{_fmt(t.start_ms)},{_fmt(t.end_ms)},{t.word}" for t in tokens
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")


# -- filler phrases --------------------------------------------------------------


def read_fillers(path: PathLike) -> Set[str]:
    from .labeler import validate_filler_set

    phrases = [line for line in _read_lines(path)]
    return validate_filler_set(phrases)


def write_fillers(path: PathLike, phrases: Iterable[str]) -> None:
    atomic_write_text(path, "\n".join(sorted(set(phrases))) + "\n")


# -- label sequences --------------------------------------------------------------


def read_labels(path: PathLike) -> TurnLabelSequence:
    chunks: List[int] = []
    codes: List[int] = []
    owners: List[int] = []
    class_index = {name: code for code, name in enumerate(CLASSES)}
    for lineno, raw in enumerate(_read_lines(path), start=1):
        fields = [f.strip() for f in raw.split(",")]
        if lineno == 1 and fields and fields[0] == "chunk":
            continue
        if len(fields) != 3 or fields[1] not in class_index or fields[2] not in _OWNER_CODES:
            raise InputValidationError(
                f"{path}:{lineno}: expected 'chunk,label,owner', got {raw!r}"
            )
        chunks.append(int(_parse_float(fields[0], path, lineno)))
        codes.append(class_index[fields[1]])
        owners.append(_OWNER_CODES[fields[2]])
    if chunks != list(range(len(chunks))):
        raise InputValidationError(f"{path}: chunk indexes must run 0..N-1 without gaps")
    return TurnLabelSequence(
        labels=np.array(codes, dtype=np.int8), owner=np.array(owners, dtype=np.int8)
    )


def write_labels(path: PathLike, labels: TurnLabelSequence) -> None:
    lines = [LABEL_HEADER]
    lines += [
        f"{i},{CLASSES[code]},{_OWNER_NAMES[int(owner)]}"
        for i, (code, owner) in enumerate(zip(labels.labels, labels.owner))
    ]
    atomic_write_text(path, "\n".join(lines) + "\n")


# -- likelihood streams ------------------------------------------------------------


def read_stream(path: PathLike) -> LikelihoodStream:
    rows: List[List[float]] = []
    chunks: List[int] = []
    for lineno, raw in enumerate(_read_lines(path), start=1):
        fields = [f.strip() for f in raw.split(",")]
        if lineno == 1 and fields and fields[0] == "chunk":
            continue
        if len(fields) != 6:
            raise InputValidationError(
                f"{path}:{lineno}: expected '{STREAM_HEADER}', got {raw!r}"
            )
        chunks.append(int(_parse_float(fields[0], path, lineno)))
        rows.append([_parse_float(f, path, lineno) for f in fields[1:]])
    if not rows:
        raise InputValidationError(f"{path}: empty likelihood stream")
    start = chunks[0]
    if chunks != list(range(start, start + len(chunks))):
        raise InputValidationError(f"{path}: chunk indexes must be consecutive")
    return LikelihoodStream(start_chunk=start, probs=np.array(rows))


def write_stream(path: PathLike, stream: LikelihoodStream) -> None:
    lines = [STREAM_HEADER]
    for offset, row in enumerate(stream.probs):
        values = ",".join(_fmt_prob(p) for p in row)
        lines.append(f"{stream.start_chunk + offset},{values}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def validate_stream_file(path: PathLike) -> LikelihoodStream:
    """Parse and fully validate a stream file (used for conformance checks)."""
    return read_stream(path)


# -- JSON artifacts ------------------------------------------------------------------


def _dump_json(payload: object) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path: PathLike, payload: object) -> None:
    atomic_write_text(path, _dump_json(payload))


def read_json(path: PathLike) -> object:
    try:
        with open(path) as handle:
            return json.load(handle)
    except json.JSONDecodeError as err:
        raise InputValidationError(f"{path}: invalid JSON ({err})") from err


def write_thresholds(path: PathLike, thresholds: Thresholds) -> None:
    write_json(
        path,
        {
            "t1": thresholds.t1,
            "t2": thresholds.t2,
            "t3": thresholds.t3,
            "t4": thresholds.t4,
            "operating_points": thresholds.operating_points,
        },
    )


def read_thresholds(path: PathLike) -> Thresholds:
    data = read_json(path)
    if not isinstance(data, dict):
        raise InputValidationError(f"{path}: thresholds file must hold a JSON object")
    defaults = Thresholds()
    return Thresholds(
        t1=float(data.get("t1", defaults.t1)),
        t2=float(data.get("t2", defaults.t2)),
        t3=float(data.get("t3", defaults.t3)),
        t4=float(data.get("t4", defaults.t4)),
        operating_points=dict(data.get("operating_points", defaults.operating_points)),
    )


def write_model(path: PathLike, model: BaselineModel) -> None:
    write_json(
        path,
        {
            "feature_version": model.feature_version,
            "w_chunks": model.w_chunks,
            "seed": model.seed,
            "weights": model.weights.tolist(),
            "bias": model.bias.tolist(),
            "metadata": model.metadata,
        },
    )


def read_model(path: PathLike) -> BaselineModel:
    data = read_json(path)
    if not isinstance(data, dict) or "weights" not in data or "bias" not in data:
        raise InputValidationError(f"{path}: not a baseline model file")
    if data.get("feature_version") != FEATURE_VERSION:
        raise InputValidationError(
            f"{path}: feature version {data.get('feature_version')} is not "
            f"supported (expected {FEATURE_VERSION})"
        )
    return BaselineModel(
        weights=np.array(data["weights"], dtype=float),
        bias=np.array(data["bias"], dtype=float),
        w_chunks=int(data.get("w_chunks", 750)),
        seed=int(data.get("seed", 0)),
        metadata=data.get("metadata", {}),
    )


def write_synth_params(path: PathLike, params: SynthParams) -> None:
    payload = asdict(params)
    payload["ipu_ms"] = {str(k): list(v) for k, v in params.ipu_ms.items()}
    payload["pause_ms"] = list(params.pause_ms)
    payload["gap_ms"] = list(params.gap_ms)
    payload["backchannel_phrases"] = list(params.backchannel_phrases)
    write_json(path, payload)


def read_synth_params(path: PathLike) -> SynthParams:
    data = read_json(path)
    if not isinstance(data, dict):
        raise InputValidationError(f"{path}: params file must hold a JSON object")
    kwargs = dict(data)
    if "ipu_ms" in kwargs:
        kwargs["ipu_ms"] = {int(k): tuple(v) for k, v in kwargs["ipu_ms"].items()}
    for key in ("pause_ms", "gap_ms"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if "backchannel_phrases" in kwargs:
        kwargs["backchannel_phrases"] = tuple(kwargs["backchannel_phrases"])
    try:
        return SynthParams(**kwargs)
    except TypeError as err:
        raise InputValidationError(f"{path}: {err}") from err


def timeline_payload(timeline: EventTimeline) -> Dict[str, object]:
    """JSON-ready view of an event timeline."""
    return {
        "n_chunks": timeline.n_chunks,
        "chunk_ms": timeline.chunk_ms,
        "min_sil_ms": timeline.min_sil_ms,
        "ipus": {
            str(k): [[ipu.start, ipu.end] for ipu in timeline.ipus[k]] for k in SPEAKERS
        },
        "silence_runs": [
            {"start": run.start, "end": run.end, "kind": run.kind}
            for run in timeline.silence_runs
        ],
        "turns": [
            {
                "speaker": turn.speaker_id,
                "ipus": [[ipu.start, ipu.end] for ipu in turn.ipus],
            }
            for turn in timeline.turns
        ],
        "overlap_chunks": timeline.overlap_chunks.tolist(),
        "interruptions": [
            {
                "interrupter": event.interrupter,
                "interrupted": event.interrupted,
                "ipu_interrupted": [event.ipu_interrupted.start, event.ipu_interrupted.end],
                "ipu_interrupter": [event.ipu_interrupter.start, event.ipu_interrupter.end],
                "subtype": event.subtype,
            }
            for event in timeline.interruptions
        ],
    }


# -- helpers ---------------------------------------------------------------------


def _read_lines(path: PathLike) -> List[str]:
    try:
        with open(path) as handle:
            return [line.strip() for line in handle if line.strip()]
    except OSError as err:
        raise InputValidationError(f"cannot read {path}: {err}") from err


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _parse_float(text: str, path: PathLike, lineno: int) -> float:
    try:
        return float(text)
    except ValueError as err:
        raise InputValidationError(f"{path}:{lineno}: not a number: {text!r}") from err


def _parse_speaker(text: str, path: PathLike, lineno: int) -> int:
    value = _parse_float(text, path, lineno)
    if value not in (1, 2):
        raise InputValidationError(f"{path}:{lineno}: speaker must be 1 or 2, got {text!r}")
    return int(value)


def _fmt(value: float) -> str:
    return f"{value:.10g}"


def _fmt_prob(value: float) -> str:
    return f"{value:.8g}"
