"""Lightweight causal turn-taking predictor over hand-crafted history features.

Stands in for a pretrained speech encoder: a fixed feature map summarises the
trailing context window of voice activity and backchannel flags, and a
multinomial logistic head (linear map + softmax) turns it into the five-way
likelihood vector consumed by the judge machinery. Everything is
deterministic given the seed and strictly causal: the features for chunk i
read nothing at or after chunk i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import InputValidationError
from .judge import LikelihoodStream
from .labeler import CLASSES, BackchannelSequence, DEFAULT_W_CHUNKS
from .timeline import VoiceActivitySequence

FEATURE_VERSION = 1
HORIZONS = (5, 25, 125, 750)
N_FEATURES = 2 * len(HORIZONS) + 6

# run-length and recency features saturate on short scales so they keep a
# usable dynamic range; the context window only caps how far back they look
SILENCE_NORM_CHUNKS = 25
OVERLAP_NORM_CHUNKS = 5
RECENCY_NORM_CHUNKS = 5
CHANGE_NORM_CHUNKS = 250

DEFAULT_LEARNING_RATE = 0.1
DEFAULT_EPOCHS = 200


def featurize(
    act1: np.ndarray,
    act2: np.ndarray,
    bc1: np.ndarray,
    bc2: np.ndarray,
    i: int,
    w_chunks: int = DEFAULT_W_CHUNKS,
) -> np.ndarray:
    """Feature vector for predicting chunk i from chunks < i.

    Components: per-speaker activity fractions over the last 5/25/125/750
    chunks (zero-padded at the conversation start), current joint-silence and
    overlap run lengths, time since the last change of sole speaker, which
    speaker last held the floor alone, and per-speaker backchannel recency.
    Run lengths and recencies saturate at RUN_NORM_CHUNKS (the switch timer at
    CHANGE_NORM_CHUNKS) and are scaled to [0, 1]; all look back at most
    w_chunks.
    """
    n = act1.size
    if not 1 <= i <= n:
        raise InputValidationError(f"chunk index {i} outside [1, {n}]")
    lo = max(0, i - w_chunks)

    features = np.empty(N_FEATURES, dtype=float)
    pos = 0
    for act in (act1, act2):
        for horizon in HORIZONS:
            start = max(0, i - horizon)
            features[pos] = act[start:i].sum() / horizon
            pos += 1

    both_silent = ~act1[lo:i] & ~act2[lo:i]
    features[pos] = min(_trailing_run(both_silent), SILENCE_NORM_CHUNKS) / SILENCE_NORM_CHUNKS
    pos += 1
    overlap = act1[lo:i] & act2[lo:i]
    features[pos] = min(_trailing_run(overlap), OVERLAP_NORM_CHUNKS) / OVERLAP_NORM_CHUNKS
    pos += 1

    sole = np.where(act1[lo:i] & ~act2[lo:i], 1, np.where(act2[lo:i] & ~act1[lo:i], 2, 0))
    last_owner = 0
    time_since_change = w_chunks
    speakers_seen = sole[sole > 0]
    if speakers_seen.size:
        last_owner = int(speakers_seen[-1])
        changes = np.flatnonzero(np.diff(speakers_seen) != 0)
        if changes.size:
            # chunks since the first sole-active chunk of the current streak
            sole_positions = np.flatnonzero(sole > 0)
            switch_pos = sole_positions[changes[-1] + 1]
            time_since_change = (i - lo) - switch_pos
    features[pos] = min(time_since_change, CHANGE_NORM_CHUNKS) / CHANGE_NORM_CHUNKS
    pos += 1
    features[pos] = {0: 0.0, 1: 1.0, 2: -1.0}[last_owner]
    pos += 1

    for flags in (bc1, bc2):
        window = flags[lo:i]
        hits = np.flatnonzero(window)
        recency = (window.size - 1 - hits[-1] + 1) if hits.size else w_chunks
        features[pos] = min(recency, RECENCY_NORM_CHUNKS) / RECENCY_NORM_CHUNKS
        pos += 1
    return features


def _trailing_run(mask: np.ndarray) -> int:
    """Length of the True run ending at the last element (0 if empty/False)."""
    if mask.size == 0 or not mask[-1]:
        return 0
    flipped = mask[::-1]
    stop = np.flatnonzero(~flipped)
    return int(stop[0]) if stop.size else int(mask.size)


def featurize_conversation(
    va1: VoiceActivitySequence,
    va2: VoiceActivitySequence,
    bc1: Optional[BackchannelSequence] = None,
    bc2: Optional[BackchannelSequence] = None,
    w_chunks: int = DEFAULT_W_CHUNKS,
) -> np.ndarray:
    """Feature rows for every predictable chunk i = 1 .. N-1."""
    n = va1.n_chunks
    flags1 = bc1.bc if bc1 is not None else np.zeros(n, dtype=bool)
    flags2 = bc2.bc if bc2 is not None else np.zeros(n, dtype=bool)
    return np.stack(
        [
            featurize(va1.active, va2.active, flags1, flags2, i, w_chunks)
            for i in range(1, n)
        ]
    )


@dataclass
class BaselineModel:
    """Multinomial logistic head over the history features."""

    weights: np.ndarray  # (5, N_FEATURES)
    bias: np.ndarray  # (5,)
    w_chunks: int = DEFAULT_W_CHUNKS
    feature_version: int = FEATURE_VERSION
    seed: int = 0
    metadata: Dict[str, object] = field(default_factory=dict)

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=float))
        logits = features @ self.weights.T + self.bias
        return softmax(logits)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def cross_entropy_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    features: np.ndarray,
    label_codes: np.ndarray,
) -> Tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy loss and its analytic gradient."""
    n = features.shape[0]
    probs = softmax(features @ weights.T + bias)
    picked = probs[np.arange(n), label_codes]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    delta = probs
    delta[np.arange(n), label_codes] -= 1.0
    grad_weights = delta.T @ features / n
    grad_bias = delta.mean(axis=0)
    return loss, grad_weights, grad_bias


def downsample_balanced(
    features: np.ndarray, label_codes: np.ndarray, seed: int
) -> Tuple[np.ndarray, np.ndarray, Dict[str, int]]:
    """Uniform random subsample to equal per-class counts (the minimum count)."""
    label_codes = np.asarray(label_codes)
    counts = {cls: int(np.sum(label_codes == code)) for code, cls in enumerate(CLASSES)}
    missing = [cls for cls, count in counts.items() if count == 0]
    if missing:
        raise InputValidationError(f"classes without training examples: {missing}")
    target = min(counts.values())
    rng = np.random.default_rng(seed)
    keep: List[np.ndarray] = []
    for code in range(len(CLASSES)):
        pool = np.flatnonzero(label_codes == code)
        keep.append(np.sort(rng.choice(pool, size=target, replace=False)))
    index = np.sort(np.concatenate(keep))
    kept_counts = {cls: target for cls in CLASSES}
    return features[index], label_codes[index], kept_counts


def train(
    features: np.ndarray,
    label_codes: np.ndarray,
    downsample: bool = True,
    seed: int = 0,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    epochs: int = DEFAULT_EPOCHS,
    w_chunks: int = DEFAULT_W_CHUNKS,
) -> BaselineModel:
    """Fit the head by full-batch gradient descent; deterministic given the seed."""
    features = np.asarray(features, dtype=float)
    label_codes = np.asarray(label_codes)
    if features.ndim != 2 or features.shape[0] != label_codes.size:
        raise InputValidationError("features and labels must align")

    if downsample:
        features, label_codes, class_counts = downsample_balanced(
            features, label_codes, seed
        )
    else:
        class_counts = {
            cls: int(np.sum(label_codes == code)) for code, cls in enumerate(CLASSES)
        }
        if min(class_counts.values()) == 0:
            raise InputValidationError(
                f"classes without training examples: "
                f"{[c for c, n in class_counts.items() if n == 0]}"
            )

    weights = np.zeros((len(CLASSES), features.shape[1]))
    bias = np.zeros(len(CLASSES))
    losses: List[float] = []
    for _ in range(epochs):
        loss, grad_weights, grad_bias = cross_entropy_and_grad(
            weights, bias, features, label_codes
        )
        losses.append(loss)
        weights -= learning_rate * grad_weights
        bias -= learning_rate * grad_bias

    return BaselineModel(
        weights=weights,
        bias=bias,
        w_chunks=w_chunks,
        seed=seed,
        metadata={
            "learning_rate": learning_rate,
            "epochs": epochs,
            "downsample": downsample,
            "class_counts": class_counts,
            "initial_loss": losses[0] if losses else None,
            "final_loss": losses[-1] if losses else None,
        },
    )


def predict_stream(
    model: BaselineModel,
    va1: VoiceActivitySequence,
    va2: VoiceActivitySequence,
    bc1: Optional[BackchannelSequence] = None,
    bc2: Optional[BackchannelSequence] = None,
) -> LikelihoodStream:
    """One probability row per chunk i >= 1, computed only from chunks < i."""
    features = featurize_conversation(va1, va2, bc1, bc2, model.w_chunks)
    return LikelihoodStream(start_chunk=1, probs=model.predict_proba(features))
