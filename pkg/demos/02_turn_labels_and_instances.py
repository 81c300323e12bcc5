"""From events to per-chunk labels and per-metric decision instances.

Derives the five-way label sequence (NA, BC, I, T, C) with floor ownership
for a conversation containing a backchannel, then extracts the decision
instances behind each evaluation metric.
"""

from turntake import (
    TranscriptToken,
    build_timeline,
    chunkize,
    derive_labels,
    extract_all_instances,
    label_backchannels,
)
from turntake.labeler import default_filler_set

intervals = [
    (1, 0, 4000),
    (2, 1600, 1800),      # speaker 2 says "right" inside speaker 1's turn
    (1, 4700, 7000),      # speaker 1 continues after a pause
    (2, 7800, 10_000),    # then speaker 2 takes the turn
]
tokens = [
    TranscriptToken(1, w, 200 + 350 * k, 550 + 350 * k)
    for k, w in enumerate("so i was hiking up the ridge yesterday".split())
] + [TranscriptToken(2, "right", 1600, 1800)]

va = chunkize(intervals, total_ms=10_000, chunk_ms=40)
timeline = build_timeline(va[1], va[2])
bc = label_backchannels(tokens, timeline, default_filler_set())
labels = derive_labels(va[1], va[2], bc[1], bc[2], timeline)

print("chunk  label  owner")
names = labels.label_names()
for i in range(0, timeline.n_chunks, 10):
    print(f"{i:5d}  {names[i]:>5}  {labels.owner[i]}")

print("\nbackchannel chunks of speaker 2:", list(map(int, bc[2].bc.nonzero()[0])))

instances = extract_all_instances(labels, ai_speaker=2)
print("\ndecision instances (speaker 2 plays the AI):")
for metric_id, pool in instances.items():
    summary = ", ".join(f"chunk {inst.chunk}={inst.actual}" for inst in pool[:4])
    more = " ..." if len(pool) > 4 else ""
    print(f"  metric {metric_id}: {len(pool):4d} instances  {summary}{more}")
