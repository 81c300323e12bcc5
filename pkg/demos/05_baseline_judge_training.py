"""Training the feature-based baseline judge and scoring held-out dialogue.

The baseline replaces a pretrained speech encoder with hand-crafted causal
features of the activity history plus a softmax head. Trains on strongly
cued synthetic conversations and reports held-out per-class ROC-AUC.
"""

import numpy as np

from turntake import SynthParams, generate, predict_stream, roc_auc, train
from turntake.baseline import featurize_conversation
from turntake.labeler import CLASSES


def make_corpus(seeds):
    features, codes, conversations = [], [], []
    for seed in seeds:
        result = generate(
            SynthParams(
                duration_ms=240_000,
                ipu_ms={1: (2500.0, 300.0), 2: (2500.0, 300.0)},
                gap_ms=(200.0, 0.0),
                turn_ipus_mean=1.0,
                backchannel_rate_per_min=4.0,
                backchannel_duration_chunks=5,
                interruption_rate_per_min=4.0,
                floor_overlap_chunks=4,
                butting_chunks=5,
                seed=seed,
            )
        )
        features.append(
            featurize_conversation(result.va[1], result.va[2], result.bc[1], result.bc[2])
        )
        codes.append(result.labels.labels[1:])
        conversations.append(result)
    return np.concatenate(features), np.concatenate(codes), conversations


train_x, train_y, _ = make_corpus(seeds=(100, 101, 102))
test_x, test_y, heldout = make_corpus(seeds=(200,))

model = train(train_x, train_y, downsample=True, seed=0, epochs=1000)
print("training meta:", {k: model.metadata[k] for k in ("epochs", "final_loss", "class_counts")})

probs = model.predict_proba(test_x)
print("\nheld-out per-class ROC-AUC:")
for code, cls in enumerate(CLASSES):
    print(f"  {cls:>3}: {roc_auc(probs[:, code], test_y == code):.3f}")

conv = heldout[0]
stream = predict_stream(model, conv.va[1], conv.va[2], conv.bc[1], conv.bc[2])
print(f"\nemitted stream: rows for chunks {stream.start_chunk}..",
      f"{stream.start_chunk + stream.probs.shape[0] - 1}, each a 5-way distribution")
print("first row:", np.round(stream.probs[0], 3))
