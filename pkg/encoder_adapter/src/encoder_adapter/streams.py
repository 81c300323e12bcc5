"""Emit likelihood streams in the turntake wire format.

One row per chunk i >= 1, computed causally from the trailing context
window. Causal encoders run in a single pass (their frame receptive fields
only look back); non-causal encoders are re-run per chunk on the windowed
audio, which is slow but faithful.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .features import SAMPLES_PER_CHUNK, n_chunks_for_samples
from .model import EncoderJudgeModel

STREAM_HEADER = "chunk,p_na,p_bc,p_i,p_t,p_c"


def stream_rows(model: EncoderJudgeModel, audio: np.ndarray) -> np.ndarray:
    """Probability rows for chunks 1..N-1, shape (N-1, 5)."""
    audio = np.asarray(audio, dtype=np.float32)
    if audio.size < SAMPLES_PER_CHUNK:
        raise ValueError("audio shorter than one 40 ms chunk")
    n_chunks = n_chunks_for_samples(audio.size)
    chunks = np.arange(1, n_chunks)
    with torch.no_grad():
        if getattr(model.encoder, "causal", False):
            states = model.encoder.hidden_states(audio)
            probs = model.chunk_probabilities(states, chunks)
        else:  # pragma: no cover - exercised only with pretrained encoders
            window_samples = model.w_ms * 16  # 16 samples per ms at 16 kHz
            rows = []
            for i in chunks:
                end = i * SAMPLES_PER_CHUNK
                window = audio[max(0, end - window_samples) : end]
                states = model.encoder.hidden_states(window)
                last = states[0].shape[0] - 1
                rows.append(
                    torch.softmax(
                        model.logits_at_frames(states, torch.tensor([last])), dim=-1
                    )[0]
                )
            probs = torch.stack(rows)
    return probs.numpy().astype(np.float64)


def emit_stream(model: EncoderJudgeModel, audio: np.ndarray, out_path) -> Path:
    """Write the stream CSV; the file parses with the turntake reader."""
    probs = stream_rows(model, audio)
    # exact renormalisation guards the sum-to-one contract after float32 math
    probs = probs / probs.sum(axis=1, keepdims=True)
    lines = [STREAM_HEADER]
    for offset, row in enumerate(probs):
        values = ",".join(f"{p:.8g}" for p in row)
        lines.append(f"{offset + 1},{values}")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(lines) + "\n")
    return out_path
