"""Judge model: encoder hidden states, layer-weighted pooling, linear head."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import torch
from torch import nn

from .encoders import SpectrogramEncoder, build_encoder
from .features import frame_for_chunk

CLASSES = ("NA", "BC", "I", "T", "C")
W_MS = 30_000
CHUNK_MS = 40


class EncoderJudgeModel(nn.Module):
    """Softmax head over a convex layer combination of encoder hidden states.

    Per chunk i the model reads the trailing context window ending at the
    chunk boundary, pools the encoder's per-layer hidden states with
    softmax-normalised layer weights (a convex combination by construction),
    takes the last frame's vector and maps it to five class logits.
    """

    def __init__(self, encoder: Optional[nn.Module] = None, w_ms: int = W_MS):
        super().__init__()
        self.encoder = encoder if encoder is not None else SpectrogramEncoder()
        self.w_ms = w_ms
        self.chunk_ms = CHUNK_MS
        self.layer_logits = nn.Parameter(torch.zeros(self.encoder.n_pooling_layers))
        self.head = nn.Linear(self.encoder.hidden_dim, len(CLASSES))

    @property
    def pooling_weights(self) -> torch.Tensor:
        return torch.softmax(self.layer_logits, dim=0)

    def pool(self, hidden_states: List[torch.Tensor]) -> torch.Tensor:
        """Convex combination of per-layer states, shape (n_frames, hidden)."""
        weights = self.pooling_weights
        return sum(w * state for w, state in zip(weights, hidden_states))

    def logits_at_frames(
        self, hidden_states: List[torch.Tensor], frame_indexes: torch.Tensor
    ) -> torch.Tensor:
        pooled = self.pool(hidden_states)
        return self.head(pooled[frame_indexes])

    def chunk_probabilities(
        self, hidden_states: List[torch.Tensor], chunks: np.ndarray
    ) -> torch.Tensor:
        """Probability rows for the given chunk indexes (full-pass encoders)."""
        n_frames = hidden_states[0].shape[0]
        frames = torch.tensor(
            [min(frame_for_chunk(int(i)), n_frames - 1) for i in chunks], dtype=torch.long
        )
        return torch.softmax(self.logits_at_frames(hidden_states, frames), dim=-1)

    def config(self) -> Dict[str, object]:
        return {
            "encoder": getattr(self.encoder, "name", "unknown"),
            "encoder_init_seed": getattr(self.encoder, "init_seed", None),
            "w_ms": self.w_ms,
            "chunk_ms": self.chunk_ms,
            "classes": list(CLASSES),
        }


def save_model(model: EncoderJudgeModel, path) -> None:
    payload = {
        "config": model.config(),
        "layer_logits": model.layer_logits.detach(),
        "head": model.head.state_dict(),
    }
    if not isinstance(model.encoder, SpectrogramEncoder):
        payload["encoder_state"] = model.encoder.state_dict()  # pragma: no cover
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_model(path) -> EncoderJudgeModel:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    config = payload["config"]
    encoder = build_encoder(
        config["encoder"], init_seed=config.get("encoder_init_seed") or 12345
    )
    model = EncoderJudgeModel(encoder, w_ms=int(config["w_ms"]))
    with torch.no_grad():
        model.layer_logits.copy_(payload["layer_logits"])
    model.head.load_state_dict(payload["head"])
    if "encoder_state" in payload:  # pragma: no cover
        model.encoder.load_state_dict(payload["encoder_state"])
    model.eval()
    return model
