"""Corpus layout: one directory per conversation.

    corpus/
      conv-0001/
        audio.wav        16 kHz mono (or stereo, mixed down)
        transcript.csv   speaker,start_ms,end_ms,word
        va.csv           speaker,start_ms,end_ms        (optional)
        labels.csv       chunk,label,owner              (optional)

Missing va.csv is derived from the transcript's word timestamps; missing
labels.csv is produced by invoking the `turntake label` command line, which
is the labeling pipeline's public interface.
"""

from __future__ import annotations

import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.io import wavfile

from .model import CLASSES

LABEL_CODES = {name: code for code, name in enumerate(CLASSES)}


class CorpusError(ValueError):
    pass


@dataclass
class Conversation:
    path: Path
    audio: np.ndarray  # float32 mono at 16 kHz
    sample_rate: int
    labels: np.ndarray  # int8 label codes per chunk


def read_audio(path: Path) -> Tuple[np.ndarray, int]:
    rate, data = wavfile.read(path)
    data = np.asarray(data)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if np.issubdtype(data.dtype, np.integer):
        data = data.astype(np.float32) / float(np.iinfo(data.dtype).max)
    else:
        data = data.astype(np.float32)
    return data, int(rate)


def write_audio(path: Path, audio: np.ndarray, sample_rate: int = 16_000) -> None:
    scaled = np.clip(audio, -1.0, 1.0)
    wavfile.write(path, sample_rate, (scaled * 32767).astype(np.int16))


def derive_va_from_transcript(transcript_path: Path, va_path: Path) -> None:
    """Voice activity = the union of word spans, per speaker."""
    lines = ["speaker,start_ms,end_ms"]
    with open(transcript_path) as handle:
        for raw in handle:
            raw = raw.strip()
            if not raw or raw.startswith("speaker"):
                continue
            speaker, start, end, _word = raw.split(",", 3)
            lines.append(f"{speaker},{start},{end}")
    va_path.write_text("\n".join(lines) + "\n")


def ensure_labels(conv_dir: Path, total_ms: Optional[float] = None) -> Path:
    """Produce labels.csv through the turntake CLI when it is missing."""
    labels_path = conv_dir / "labels.csv"
    if labels_path.exists():
        return labels_path
    transcript = conv_dir / "transcript.csv"
    if not transcript.exists():
        raise CorpusError(
            f"{conv_dir}: expected transcript.csv (speaker,start_ms,end_ms,word) "
            "next to audio.wav"
        )
    va_path = conv_dir / "va.csv"
    if not va_path.exists():
        derive_va_from_transcript(transcript, va_path)
    if shutil.which("turntake") is None:
        raise CorpusError(
            "the `turntake` command line is required to derive labels.csv; "
            "install the turntake package"
        )
    command = [
        "turntake", "label",
        "--va", str(va_path),
        "--transcript", str(transcript),
        "--out", str(labels_path),
    ]
    if total_ms is not None:
        command += ["--total-ms", str(total_ms)]
    proc = subprocess.run(command, capture_output=True, text=True)
    if proc.returncode != 0:
        raise CorpusError(f"turntake label failed for {conv_dir}: {proc.stderr.strip()}")
    return labels_path


def read_labels(path: Path) -> np.ndarray:
    codes: List[int] = []
    with open(path) as handle:
        for raw in handle:
            raw = raw.strip()
            if not raw or raw.startswith("chunk"):
                continue
            _chunk, label, _owner = raw.split(",")
            codes.append(LABEL_CODES[label])
    return np.array(codes, dtype=np.int8)


def load_conversation(conv_dir: Path) -> Conversation:
    audio_path = conv_dir / "audio.wav"
    if not audio_path.exists():
        raise CorpusError(f"{conv_dir}: expected audio.wav")
    audio, rate = read_audio(audio_path)
    total_ms = 1000.0 * audio.size / rate
    labels = read_labels(ensure_labels(conv_dir, total_ms=total_ms))
    return Conversation(path=conv_dir, audio=audio, sample_rate=rate, labels=labels)


def list_conversations(corpus_dir: Path) -> List[Path]:
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise CorpusError(
            f"{corpus_dir}: corpus directory not found; expected one subdirectory "
            "per conversation containing audio.wav and transcript.csv"
        )
    conversations = sorted(p for p in corpus_dir.iterdir() if p.is_dir())
    if not conversations:
        raise CorpusError(
            f"{corpus_dir}: no conversation subdirectories (audio.wav + transcript.csv)"
        )
    return conversations


def split_conversations(
    conversations: Sequence[Path], split: Tuple[int, int, int] = (2000, 300, 138)
) -> Dict[str, List[Path]]:
    """Deterministic train/validation/test split by conversation.

    When the corpus is smaller than the nominal split, the counts are scaled
    proportionally (each non-empty part keeps at least one conversation).
    """
    n = len(conversations)
    total = sum(split)
    if n >= total:
        counts = list(split)
    else:
        counts = [max(1, round(n * part / total)) for part in split]
        while sum(counts) > n:
            counts[int(np.argmax(counts))] -= 1
    train_end = counts[0]
    valid_end = counts[0] + counts[1]
    return {
        "train": list(conversations[:train_end]),
        "validation": list(conversations[train_end:valid_end]),
        "test": list(conversations[valid_end : valid_end + counts[2]]),
    }
