import subprocess
import sys

import numpy as np
import pytest

from encoder_adapter.corpus import write_audio
from encoder_adapter.features import SAMPLE_RATE

CHUNK_MS = 40

#: per-speaker carrier tones for synthesised conversation audio
TONES = {1: 220.0, 2: 600.0}


def synthesize_audio(va_path, duration_ms):
    """Mixed mono audio from a voice-activity file: one tone per speaker."""
    n_samples = int(SAMPLE_RATE * duration_ms / 1000)
    time = np.arange(n_samples) / SAMPLE_RATE
    audio = np.zeros(n_samples, dtype=np.float64)
    with open(va_path) as handle:
        for raw in handle:
            raw = raw.strip()
            if not raw or raw.startswith("speaker"):
                continue
            speaker, start, end = raw.split(",")
            lo = int(float(start) * SAMPLE_RATE / 1000)
            hi = min(n_samples, int(float(end) * SAMPLE_RATE / 1000))
            segment = time[lo:hi]
            audio[lo:hi] += 0.4 * np.sin(2 * np.pi * TONES[int(speaker)] * segment)
    return audio.astype(np.float32)


def generate_conversation(conv_dir, duration_ms, seed):
    """One synthetic conversation laid out as the adapter's corpus expects."""
    conv_dir.mkdir(parents=True, exist_ok=True)
    params = {
        "duration_ms": duration_ms,
        "ipu_ms": {"1": [2200.0, 250.0], "2": [2000.0, 220.0]},
        "pause_ms": [900.0, 100.0],
        "gap_ms": [520.0, 60.0],
        "turn_ipus_mean": 2.0,
        "backchannel_rate_per_min": 2.0,
        "backchannel_phrases": ["i see"],
        "interruption_rate_per_min": 1.5,
        "floor_taking_prob": 0.5,
        "seed": seed,
    }
    import json

    (conv_dir / "params.json").write_text(json.dumps(params))
    proc = subprocess.run(
        [
            sys.executable, "-m", "turntake", "generate",
            "--params", str(conv_dir / "params.json"),
            "--out", str(conv_dir),
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    (conv_dir / "params.json").unlink()
    write_audio(conv_dir / "audio.wav", synthesize_audio(conv_dir / "va.csv", duration_ms))
    return conv_dir


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    for k in range(4):
        generate_conversation(root / f"conv-{k:04d}", duration_ms=60_000, seed=300 + k)
    return root
