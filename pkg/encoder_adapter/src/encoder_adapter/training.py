"""Cross-entropy training of the pooling weights and head (encoder frozen)."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from .corpus import Conversation, CorpusError, list_conversations, load_conversation, split_conversations
from .features import frame_for_chunk
from .model import CLASSES, EncoderJudgeModel


@dataclass
class TrainResult:
    model: EncoderJudgeModel
    metrics: Dict[str, object]


def collect_examples(
    model: EncoderJudgeModel, conversations: Sequence[Conversation]
) -> Tuple[List[torch.Tensor], torch.Tensor, torch.Tensor, torch.Tensor]:
    """Precompute hidden states once per conversation (frozen encoder).

    Returns per-conversation state lists plus flat (conversation, frame,
    label) index tensors for every predictable chunk i >= 1.
    """
    states_per_conv: List[List[torch.Tensor]] = []
    conv_ids: List[int] = []
    frames: List[int] = []
    labels: List[int] = []
    with torch.no_grad():
        for conv_id, conv in enumerate(conversations):
            states = model.encoder.hidden_states(conv.audio)
            states_per_conv.append(states)
            n_frames = states[0].shape[0]
            if n_frames == 0:
                continue
            for i in range(1, conv.labels.size):
                conv_ids.append(conv_id)
                frames.append(min(frame_for_chunk(i), n_frames - 1))
                labels.append(int(conv.labels[i]))
    return (
        states_per_conv,
        torch.tensor(conv_ids, dtype=torch.long),
        torch.tensor(frames, dtype=torch.long),
        torch.tensor(labels, dtype=torch.long),
    )


def downsample_indexes(labels: torch.Tensor, seed: int) -> torch.Tensor:
    """Equal per-class counts by uniform subsampling (classes present only)."""
    rng = np.random.default_rng(seed)
    label_array = labels.numpy()
    counts = {code: int((label_array == code).sum()) for code in range(len(CLASSES))}
    present = {code: count for code, count in counts.items() if count > 0}
    if not present:
        raise CorpusError("no training examples found")
    target = min(present.values())
    keep: List[np.ndarray] = []
    for code in present:
        pool = np.flatnonzero(label_array == code)
        keep.append(np.sort(rng.choice(pool, size=target, replace=False)))
    return torch.tensor(np.sort(np.concatenate(keep)), dtype=torch.long)


def train_encoder_judge(
    corpus_dir,
    split: Tuple[int, int, int] = (2000, 300, 138),
    downsample: bool = True,
    seed: int = 0,
    epochs: int = 300,
    learning_rate: float = 0.02,
    encoder: Optional[nn.Module] = None,
    metrics_path=None,
) -> TrainResult:
    """Train pooling weights + head on a corpus directory; encoder stays frozen.

    The metrics log records the split, per-epoch training loss and the final
    validation loss, and is also written to metrics_path when given.
    """
    torch.manual_seed(seed)
    conversations = list_conversations(Path(corpus_dir))
    parts = split_conversations(conversations, split)
    if not parts["train"]:
        raise CorpusError(f"{corpus_dir}: empty training split")

    model = EncoderJudgeModel(encoder)
    train_convs = [load_conversation(p) for p in parts["train"]]
    states, conv_ids, frames, labels = collect_examples(model, train_convs)
    if labels.numel() == 0:
        raise CorpusError(f"{corpus_dir}: no usable chunks in the training split")
    if downsample:
        picked = downsample_indexes(labels, seed)
        conv_ids, frames, labels = conv_ids[picked], frames[picked], labels[picked]

    pooled_inputs = _gather_inputs(model, states, conv_ids, frames)
    # full-batch gradient descent: the loss trajectory is monotone at this
    # step size, which keeps the training-sanity contract checkable
    optimizer = torch.optim.SGD(
        [model.layer_logits, *model.head.parameters()], lr=learning_rate
    )
    loss_fn = nn.CrossEntropyLoss()
    losses: List[float] = []
    for _ in range(epochs):
        optimizer.zero_grad()
        logits = model.head(_pool_gathered(model, pooled_inputs))
        loss = loss_fn(logits, labels)
        loss.backward()
        optimizer.step()
        losses.append(float(loss.detach()))

    validation_loss = None
    if parts["validation"]:
        valid_convs = [load_conversation(p) for p in parts["validation"]]
        v_states, v_conv, v_frames, v_labels = collect_examples(model, valid_convs)
        if v_labels.numel():
            with torch.no_grad():
                v_inputs = _gather_inputs(model, v_states, v_conv, v_frames)
                v_logits = model.head(_pool_gathered(model, v_inputs))
                validation_loss = float(loss_fn(v_logits, v_labels))

    class_counts = {
        CLASSES[code]: int((labels == code).sum()) for code in range(len(CLASSES))
    }
    metrics = {
        "split": {name: [str(p) for p in paths] for name, paths in parts.items()},
        "seed": seed,
        "epochs": epochs,
        "learning_rate": learning_rate,
        "downsample": downsample,
        "class_counts": class_counts,
        "train_losses": losses,
        "final_train_loss": losses[-1] if losses else None,
        "validation_loss": validation_loss,
        "pooling_weights": model.pooling_weights.detach().tolist(),
        "encoder": model.config()["encoder"],
    }
    if metrics_path is not None:
        Path(metrics_path).parent.mkdir(parents=True, exist_ok=True)
        Path(metrics_path).write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    model.eval()
    return TrainResult(model=model, metrics=metrics)


def _gather_inputs(
    model: EncoderJudgeModel,
    states: List[List[torch.Tensor]],
    conv_ids: torch.Tensor,
    frames: torch.Tensor,
) -> List[torch.Tensor]:
    """Per pooling layer, the frame vectors of every example, stacked."""
    gathered: List[torch.Tensor] = []
    for layer in range(model.encoder.n_pooling_layers):
        rows = [
            states[int(conv)][layer][int(frame)]
            for conv, frame in zip(conv_ids, frames)
        ]
        gathered.append(torch.stack(rows))
    return gathered


def _pool_gathered(model: EncoderJudgeModel, gathered: List[torch.Tensor]) -> torch.Tensor:
    weights = model.pooling_weights
    return sum(w * layer for w, layer in zip(weights, gathered))
