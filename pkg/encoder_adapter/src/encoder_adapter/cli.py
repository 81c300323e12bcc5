"""Command line: train the encoder judge and emit likelihood streams."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .corpus import CorpusError, read_audio
from .model import load_model, save_model
from .streams import emit_stream
from .training import train_encoder_judge


def cmd_train(args: argparse.Namespace) -> int:
    result = train_encoder_judge(
        args.corpus,
        split=tuple(int(x) for x in args.split.split(":")),
        downsample=not args.no_downsample,
        seed=args.seed,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        metrics_path=args.metrics,
    )
    save_model(result.model, args.out)
    print(
        f"wrote {args.out} (final train loss "
        f"{result.metrics['final_train_loss']:.4f})"
    )
    return 0


def cmd_emit(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    audio, rate = read_audio(Path(args.audio))
    if rate != 16_000:
        print(f"error: expected 16 kHz audio, got {rate} Hz", file=sys.stderr)
        return 1
    emit_stream(model, audio, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="encoder-adapter",
        description="Speech-encoder turn-taking judge emitting turntake likelihood streams",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train pooling weights and head on a corpus")
    p.add_argument("--corpus", required=True, help="directory of conversation subdirs")
    p.add_argument("--out", required=True, help="model checkpoint path")
    p.add_argument("--metrics", help="JSON training-metrics log path")
    p.add_argument("--split", default="2000:300:138", help="train:valid:test conversations")
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--learning-rate", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-downsample", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("emit", help="emit a likelihood stream for one conversation")
    p.add_argument("--model", required=True)
    p.add_argument("--audio", required=True, help="16 kHz WAV file")
    p.add_argument("--out", required=True, help="stream CSV path")
    p.set_defaults(func=cmd_emit)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # pragma: no cover - defensive
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
