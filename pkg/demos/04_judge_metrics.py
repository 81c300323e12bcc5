"""Judging a dialogue's turn-taking decisions against a likelihood stream.

Generates a conversation, builds an idealized judge stream from its ground
truth, then walks the full evaluation: per-metric agreement with confidence
intervals, threshold tuning, sensitivity, the single-label confusion matrix
and per-class ROC-AUC.
"""

import numpy as np

from turntake import (
    SynthParams,
    Thresholds,
    agreement_curve,
    build_report,
    generate,
    ideal_stream,
    sensitivity_me,
    tune_thresholds,
)
from turntake.labeler import CLASSES, extract_all_instances

params = SynthParams(
    duration_ms=8 * 60_000,
    ipu_ms={1: (3200.0, 400.0), 2: (2800.0, 380.0)},
    turn_ipus_mean=2.0,
    backchannel_rate_per_min=3.0,
    interruption_rate_per_min=2.0,
    floor_taking_prob=0.5,
    seed=11,
)
result = generate(params)

# a judge that is 90% confident in the true label at every chunk
stream = ideal_stream(result.labels.labels, p_true=0.9)

report = build_report(
    result.labels, stream, Thresholds(), ai_speaker=2,
)

print("agreement with the judge (per metric and branch):")
for metric_id, row in report["metrics"].items():
    for branch, stats in row["branches"].items():
        if stats["n"]:
            lo, hi = stats["ci95"]
            print(f"  {metric_id}/{branch:<16} n={stats['n']:5d}  "
                  f"agreement {stats['agreement']:.3f}  CI [{lo:.3f}, {hi:.3f}]")
    print(f"    decision share: {row['decision_share_pct']:.2f}%  "
          f"margin of error: {row['margin_of_error']:.4f}")

print("\nconfusion matrix (rows = judge single labels, cols = dialogue):")
matrix = np.array(report["confusion"]["matrix_pct"])
print("      " + "  ".join(f"{c:>6}" for c in CLASSES))
for cls, row in zip(CLASSES, matrix):
    print(f"  {cls:>3} " + "  ".join(f"{v:6.2f}" for v in row))

print("\nper-class ROC-AUC:", {k: (round(v, 3) if v is not None else None)
                               for k, v in report["roc_auc"].items()})

# threshold tuning on the same instances, with a sensitivity read-out
instances = extract_all_instances(result.labels, ai_speaker=2)
tuned = tune_thresholds(instances, stream)
print(f"\ntuned thresholds: t1={tuned.t1} t2={tuned.t2} t3={tuned.t3} t4={tuned.t4}")
_, curve = agreement_curve(instances["a"], stream, "a")
print(f"metric-a threshold sensitivity (margin of error): {sensitivity_me(curve):.4f}")
