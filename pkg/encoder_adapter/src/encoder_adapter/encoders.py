"""Speech encoders producing per-frame hidden states at several depths.

Two backbones:

* SpectrogramEncoder - self-contained causal convolutional stack over
  log-mel frames, deterministically initialised and frozen by default. Keeps
  the package runnable without any pretrained weights.
* PretrainedSpeechEncoder - thin hook around a transformers encoder (e.g.
  Whisper medium). Needs downloaded weights and is windowed per chunk at
  inference since such encoders are not causal.

Both expose hidden_states(audio) -> list of (n_frames, hidden_dim) tensors,
one per pooling layer, plus `causal` and `hidden_dim` attributes.
"""

from __future__ import annotations

from typing import List

import numpy as np
import torch
from torch import nn

from .features import N_MELS, log_mel_frames


class SpectrogramEncoder(nn.Module):
    """Frozen random causal conv features over log-mel frames."""

    name = "spectrogram-v1"
    causal = True

    def __init__(self, hidden_dim: int = 96, n_layers: int = 3, init_seed: int = 12345):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.n_layers = n_layers
        self.init_seed = init_seed
        generator = torch.Generator().manual_seed(init_seed)

        self.input_proj = nn.Linear(N_MELS, hidden_dim)
        layers = []
        for _ in range(n_layers):
            layers.append(nn.Conv1d(hidden_dim, hidden_dim, kernel_size=5))
        self.convs = nn.ModuleList(layers)
        for module in [self.input_proj, *self.convs]:
            for param in module.parameters():
                if param.dim() > 1:
                    nn.init.orthogonal_(param, generator=generator)
                else:
                    nn.init.zeros_(param)
        for param in self.parameters():
            param.requires_grad_(False)

    @property
    def n_pooling_layers(self) -> int:
        return self.n_layers + 1  # the projected input counts as layer 0

    def hidden_states(self, audio: np.ndarray) -> List[torch.Tensor]:
        frames = log_mel_frames(audio)
        if frames.shape[0] == 0:
            return [torch.zeros((0, self.hidden_dim)) for _ in range(self.n_pooling_layers)]
        states = [self.input_proj(frames)]
        current = states[0].T.unsqueeze(0)  # (1, H, T)
        for conv in self.convs:
            current = nn.functional.pad(current, (conv.kernel_size[0] - 1, 0))  # left pad: causal
            current = torch.tanh(conv(current))
            states.append(current.squeeze(0).T)
        return states


class PretrainedSpeechEncoder(nn.Module):
    """Hook for a transformers speech encoder (weights must be available locally).

    Example: PretrainedSpeechEncoder("openai/whisper-medium"). Hidden states
    are the encoder's layer outputs; the model is not causal, so emit_stream
    recomputes it per chunk over the trailing context window.
    """

    causal = False

    def __init__(self, model_id: str, freeze: bool = True):
        super().__init__()
        try:
            from transformers import AutoFeatureExtractor, AutoModel
        except ImportError as err:  # pragma: no cover - optional dependency
            raise RuntimeError(
                "PretrainedSpeechEncoder needs the 'transformers' package; "
                "install encoder-adapter[pretrained]"
            ) from err
        self.name = model_id
        self.extractor = AutoFeatureExtractor.from_pretrained(model_id)
        model = AutoModel.from_pretrained(model_id)
        self.encoder = model.get_encoder() if hasattr(model, "get_encoder") else model
        self.hidden_dim = self.encoder.config.d_model
        self.n_pooling_layers = self.encoder.config.num_hidden_layers + 1
        if freeze:
            for param in self.encoder.parameters():
                param.requires_grad_(False)

    def hidden_states(self, audio: np.ndarray) -> List[torch.Tensor]:  # pragma: no cover
        inputs = self.extractor(
            audio, sampling_rate=16_000, return_tensors="pt", padding="max_length"
        )
        out = self.encoder(inputs.input_features, output_hidden_states=True)
        return [state.squeeze(0) for state in out.hidden_states]


def build_encoder(name: str, init_seed: int = 12345) -> nn.Module:
    if name == SpectrogramEncoder.name:
        return SpectrogramEncoder(init_seed=init_seed)
    return PretrainedSpeechEncoder(name)
