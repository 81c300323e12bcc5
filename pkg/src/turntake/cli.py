"""Command-line front end wiring ingestion, segmentation, labeling, statistics,
judging, tuning, training, generation and reporting.

Exit codes: 0 success, 1 validation/configuration failure, 2 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import io
from .baseline import featurize_conversation, predict_stream, train
from .errors import ConfigurationError, InputValidationError, TurntakeError
from .judge import CLASSES, LikelihoodStream, Thresholds, tune_thresholds
from .labeler import (
    BackchannelSequence,
    derive_labels,
    extract_all_instances,
    label_backchannels,
)
from .report import build_report, merge_reports
from .stats import corpus_stats
from .synthgen import generate, ideal_stream
from .timeline import (
    DEFAULT_CHUNK_MS,
    DEFAULT_MIN_SIL_MS,
    SPEAKERS,
    build_timeline,
    chunkize,
)

FILLER_ENV_VAR = "TURNTAKE_FILLERS"


@dataclass
class RunConfig:
    """Resolved run configuration; defaults follow the judge-model setup."""

    chunk_ms: int = DEFAULT_CHUNK_MS
    min_sil_ms: int = DEFAULT_MIN_SIL_MS
    w_ms: int = 30_000
    thresholds: Thresholds = field(default_factory=Thresholds)
    fillers_path: Optional[str] = None
    ai_speaker: int = 2
    seed: int = 0
    total_ms: Optional[float] = None
    rttm_speakers: Optional[Tuple[str, str]] = None

    @property
    def w_chunks(self) -> int:
        return max(1, self.w_ms // self.chunk_ms)

    def filler_set(self):
        path = self.fillers_path or os.environ.get(FILLER_ENV_VAR)
        return io.read_fillers(path) if path else io.read_fillers(io.packaged_filler_path())


def _parse_floats(text: str, n: int, flag: str) -> List[float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != n:
        raise ConfigurationError(f"{flag} expects {n} comma-separated values, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError as err:
        raise ConfigurationError(f"{flag}: {err}") from err


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        data = io.read_json(args.config)
        if not isinstance(data, dict):
            raise ConfigurationError(f"{args.config}: config must be a JSON object")
        config.chunk_ms = int(data.get("chunk_ms", config.chunk_ms))
        config.min_sil_ms = int(data.get("min_sil_ms", config.min_sil_ms))
        config.w_ms = int(data.get("w_ms", config.w_ms))
        config.ai_speaker = int(data.get("ai_speaker", config.ai_speaker))
        config.seed = int(data.get("seed", config.seed))
        config.fillers_path = data.get("fillers", config.fillers_path)
        if "thresholds" in data or "operating_points" in data:
            t = data.get("thresholds", {})
            config.thresholds = Thresholds(
                t1=float(t.get("t1", config.thresholds.t1)),
                t2=float(t.get("t2", config.thresholds.t2)),
                t3=float(t.get("t3", config.thresholds.t3)),
                t4=float(t.get("t4", config.thresholds.t4)),
                operating_points=dict(
                    data.get("operating_points", config.thresholds.operating_points)
                ),
            )
    if getattr(args, "chunk_ms", None) is not None:
        config.chunk_ms = args.chunk_ms
    if getattr(args, "min_sil_ms", None) is not None:
        config.min_sil_ms = args.min_sil_ms
    if getattr(args, "ai_speaker", None) is not None:
        if args.ai_speaker not in SPEAKERS:
            raise ConfigurationError(f"--ai-speaker must be 1 or 2, got {args.ai_speaker}")
        config.ai_speaker = args.ai_speaker
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "total_ms", None) is not None:
        config.total_ms = args.total_ms
    if getattr(args, "fillers", None):
        config.fillers_path = args.fillers
    if getattr(args, "rttm_speakers", None):
        names = [p.strip() for p in args.rttm_speakers.split(",")]
        if len(names) != 2:
            raise ConfigurationError("--rttm-speakers expects two comma-separated names")
        config.rttm_speakers = (names[0], names[1])
    if getattr(args, "thresholds_file", None):
        config.thresholds = io.read_thresholds(args.thresholds_file)
    if getattr(args, "thresholds", None):
        t1, t2, t3, t4 = _parse_floats(args.thresholds, 4, "--thresholds")
        config.thresholds = Thresholds(
            t1=t1, t2=t2, t3=t3, t4=t4, operating_points=config.thresholds.operating_points
        )
    if getattr(args, "operating_points", None):
        values = _parse_floats(args.operating_points, 5, "--operating-points")
        config.thresholds = Thresholds(
            t1=config.thresholds.t1,
            t2=config.thresholds.t2,
            t3=config.thresholds.t3,
            t4=config.thresholds.t4,
            operating_points=dict(zip(CLASSES, values)),
        )
    return config


def _load_grid(config: RunConfig, va_path: str):
    intervals = io.read_va_intervals(va_path, config.rttm_speakers)
    total_ms = config.total_ms
    if total_ms is None:
        last = max((end for _, _, end in intervals), default=0.0)
        total_ms = float(np.ceil(last / config.chunk_ms) * config.chunk_ms)
    if total_ms <= 0:
        raise InputValidationError(
            f"{va_path}: empty voice activity and no --total-ms given"
        )
    return chunkize(intervals, total_ms, config.chunk_ms)


def _load_conversation(config: RunConfig, va_path: str, transcript_path: Optional[str]):
    va = _load_grid(config, va_path)
    timeline = build_timeline(va[1], va[2], config.min_sil_ms)
    tokens = io.read_transcript(transcript_path) if transcript_path else []
    if tokens:
        bc = label_backchannels(tokens, timeline, config.filler_set())
    else:
        bc = {
            k: BackchannelSequence(k, np.zeros(timeline.n_chunks, dtype=bool))
            for k in SPEAKERS
        }
    labels = derive_labels(va[1], va[2], bc[1], bc[2], timeline)
    return va, timeline, tokens, bc, labels


def _stream_for(args: argparse.Namespace, config: RunConfig, va, bc) -> LikelihoodStream:
    if getattr(args, "stream", None):
        return io.read_stream(args.stream)
    if getattr(args, "model", None):
        model = io.read_model(args.model)
        return predict_stream(model, va[1], va[2], bc[1], bc[2])
    raise ConfigurationError("provide --stream FILE or --model FILE")


# -- commands -----------------------------------------------------------------


def cmd_segment(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    va = _load_grid(config, args.va)
    timeline = build_timeline(va[1], va[2], config.min_sil_ms)
    io.write_json(args.out, io.timeline_payload(timeline))
    print(f"wrote {args.out}")
    return 0


def cmd_label(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    _, _, _, _, labels = _load_conversation(config, args.va, args.transcript)
    io.write_labels(args.out, labels)
    print(f"wrote {args.out}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    intervals = io.read_va_intervals(args.va, config.rttm_speakers)
    if not intervals and config.total_ms is None:
        io.write_json(args.out, _empty_stats_payload())
        print(f"wrote {args.out}")
        return 0
    va, timeline, tokens, bc, _ = _load_conversation(config, args.va, args.transcript)
    stats = corpus_stats(timeline, tokens=tokens, bc_sequences=bc)
    from .report import corpus_stats_payload

    io.write_json(args.out, corpus_stats_payload(stats))
    print(f"wrote {args.out}")
    return 0


def _empty_stats_payload() -> Dict[str, object]:
    zero = {k: 0.0 for k in ("ipu", "ipu_speaker1", "ipu_speaker2", "pause", "gap", "overlap")}
    shares = {
        k: 0.0 for k in ("single_speech", "overlap", "pause", "gap", "edge_silence")
    }
    return {
        "total_ms": 0.0,
        "event_rates_per_min": zero,
        "duration_shares_pct": shares,
        "speaking_rate_wpm": {"1": 0.0, "2": 0.0},
        "backchannel_rate_wpm": {"1": 0.0, "2": 0.0},
    }


def cmd_judge(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    va, timeline, tokens, bc, labels = _load_conversation(config, args.va, args.transcript)
    stream = _stream_for(args, config, va, bc)
    report = build_report(
        labels,
        stream,
        config.thresholds,
        config.ai_speaker,
        corpus_stats=None,
        config=_config_payload(config),
    )
    io.write_json(args.out, report)
    print(f"wrote {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    va, timeline, tokens, bc, labels = _load_conversation(config, args.va, args.transcript)
    stream = _stream_for(args, config, va, bc)
    stats = corpus_stats(timeline, tokens=tokens, bc_sequences=bc)
    report = build_report(
        labels,
        stream,
        config.thresholds,
        config.ai_speaker,
        corpus_stats=stats,
        config=_config_payload(config),
    )
    io.write_json(args.out, report)
    print(f"wrote {args.out}")
    return 0


def cmd_tune(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    va, timeline, tokens, bc, labels = _load_conversation(config, args.va, args.transcript)
    stream = _stream_for(args, config, va, bc)
    instances = extract_all_instances(labels, config.ai_speaker, config.w_chunks)
    tuned = tune_thresholds(instances, stream, config.thresholds)
    io.write_thresholds(args.out, tuned)
    print(f"wrote {args.out}")
    return 0


def cmd_train_baseline(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    corpus = Path(args.corpus)
    conversations = sorted(p for p in corpus.iterdir() if (p / "va.csv").exists())
    if not conversations:
        raise InputValidationError(f"{corpus}: no conversation directories with va.csv")
    features: List[np.ndarray] = []
    codes: List[np.ndarray] = []
    for conv in conversations:
        transcript = conv / "transcript.csv"
        va, timeline, tokens, bc, labels = _load_conversation(
            config, str(conv / "va.csv"), str(transcript) if transcript.exists() else None
        )
        features.append(
            featurize_conversation(va[1], va[2], bc[1], bc[2], config.w_chunks)
        )
        codes.append(labels.labels[1:])
    model = train(
        np.concatenate(features),
        np.concatenate(codes),
        downsample=not args.no_downsample,
        seed=config.seed,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        w_chunks=config.w_chunks,
    )
    io.write_model(args.out, model)
    print(f"wrote {args.out} (final loss {model.metadata['final_loss']:.4f})")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    va, timeline, tokens, bc, _ = _load_conversation(config, args.va, args.transcript)
    model = io.read_model(args.model)
    stream = predict_stream(model, va[1], va[2], bc[1], bc[2])
    io.write_stream(args.out, stream)
    print(f"wrote {args.out}")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    params = io.read_synth_params(args.params)
    if getattr(args, "seed", None) is not None:
        params.seed = args.seed
    result = generate(params)
    out = Path(args.out)
    intervals = []
    for k in SPEAKERS:
        for ipu in result.timeline.ipus[k]:
            intervals.append(
                (k, ipu.start * params.chunk_ms, (ipu.end + 1) * params.chunk_ms)
            )
    intervals.sort(key=lambda r: (r[1], r[0]))
    io.write_va_intervals(out / "va.csv", intervals)
    io.write_transcript(out / "transcript.csv", result.tokens)
    io.write_labels(out / "labels.csv", result.labels)
    io.write_json(out / "timeline.json", io.timeline_payload(result.timeline))
    io.write_synth_params(out / "params.json", result.params)
    if args.ideal_stream is not None:
        stream = ideal_stream(result.labels.labels, args.ideal_stream)
        io.write_stream(out / "stream.csv", stream)
    print(f"wrote conversation to {out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    reports = [io.read_json(path) for path in args.reports]
    for path, report in zip(args.reports, reports):
        if not isinstance(report, dict) or "metrics" not in report:
            raise InputValidationError(f"{path}: not an evaluation report")
    io.write_json(args.out, merge_reports(reports))
    print(f"wrote {args.out}")
    return 0


def _config_payload(config: RunConfig) -> Dict[str, object]:
    return {
        "chunk_ms": config.chunk_ms,
        "min_sil_ms": config.min_sil_ms,
        "w_ms": config.w_ms,
        "ai_speaker": config.ai_speaker,
        "seed": config.seed,
    }


# -- parser -------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--chunk-ms", type=int, help="chunk size in ms (default 40)")
    parser.add_argument("--min-sil-ms", type=int, help="IPU silence threshold in ms (default 200)")
    parser.add_argument("--thresholds", help="judge thresholds t1,t2,t3,t4")
    parser.add_argument("--thresholds-file", help="JSON thresholds file (from `tune`)")
    parser.add_argument(
        "--operating-points", help="single-label operating points na,bc,i,t,c"
    )
    parser.add_argument("--ai-speaker", type=int, help="which speaker is the AI (1 or 2)")
    parser.add_argument("--seed", type=int, help="run seed")
    parser.add_argument("--total-ms", type=float, help="conversation duration override")
    parser.add_argument("--fillers", help="filler phrase list (overrides packaged list)")
    parser.add_argument(
        "--rttm-speakers", help="two RTTM speaker names mapped to speakers 1,2"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="turntake",
        description="Turn-taking event segmentation, labeling and judge-based evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment voice activity into the event timeline")
    p.add_argument("--va", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("label", help="derive per-chunk turn-taking labels")
    p.add_argument("--va", required=True)
    p.add_argument("--transcript")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("stats", help="corpus-level statistics")
    p.add_argument("--va", required=True)
    p.add_argument("--transcript")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("judge", help="agreement of a likelihood stream with the dialogue")
    p.add_argument("--va", required=True)
    p.add_argument("--transcript")
    p.add_argument("--stream")
    p.add_argument("--model")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("tune", help="grid-search judge thresholds on validation data")
    p.add_argument("--va", required=True)
    p.add_argument("--transcript")
    p.add_argument("--stream")
    p.add_argument("--model")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("train-baseline", help="train the feature-based baseline judge")
    p.add_argument("--corpus", required=True, help="directory of conversation subdirs")
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--no-downsample", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_train_baseline)

    p = sub.add_parser("predict", help="emit a likelihood stream from a baseline model")
    p.add_argument("--model", required=True)
    p.add_argument("--va", required=True)
    p.add_argument("--transcript")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("generate", help="generate a synthetic conversation")
    p.add_argument("--params", required=True, help="SynthParams JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument(
        "--ideal-stream",
        type=float,
        default=None,
        metavar="P",
        help="also write stream.csv with probability P on the true class",
    )
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="segment, label, judge and report in one step")
    p.add_argument("--va", required=True)
    p.add_argument("--transcript")
    p.add_argument("--stream")
    p.add_argument("--model")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="merge evaluation reports (count-weighted)")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputValidationError, ConfigurationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except TurntakeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # pragma: no cover - defensive
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
