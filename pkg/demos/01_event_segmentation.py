"""Segmenting a toy two-speaker conversation into turn-taking events.

Builds a 12-second conversation from raw speech intervals, rasterises it
onto the 40 ms chunk grid and prints the resulting IPUs, silences, turns,
overlap and interruptions.
"""


from turntake import build_timeline, chunkize

# speaker 1 tells a story with a mid-turn pause; speaker 2 answers,
# then speaker 1 barges in before speaker 2 finishes (floor-taking)
intervals = [
    (1, 0, 2400),
    (1, 3000, 4800),       # same turn: the 600 ms silence is a pause
    (2, 5600, 8800),       # turn change after an 800 ms gap
    (1, 8000, 11600),      # starts inside speaker 2's IPU and outlasts it
]

va = chunkize(intervals, total_ms=12_000, chunk_ms=40)
timeline = build_timeline(va[1], va[2], min_sil_ms=200)

print(f"grid: {timeline.n_chunks} chunks of {timeline.chunk_ms} ms")
for speaker in (1, 2):
    spans = ", ".join(f"[{p.start * 40}..{(p.end + 1) * 40} ms)" for p in timeline.ipus[speaker])
    print(f"speaker {speaker} IPUs: {spans}")

print("\nsilences:")
for run in timeline.silence_runs:
    print(f"  {run.kind:>5}: chunks {run.start}..{run.end} "
          f"({(run.end - run.start + 1) * 40} ms)")

print("\nturns (ordered by hull start):")
for turn in timeline.turns:
    print(f"  speaker {turn.speaker_id}: chunks {turn.hull_start}..{turn.hull_end}, "
          f"{len(turn.ipus)} IPU(s)")

print(f"\noverlap chunks: {timeline.overlap_chunks.tolist()}")
for event in timeline.interruptions:
    print(f"interruption: speaker {event.interrupter} interrupts "
          f"speaker {event.interrupted} at chunk {event.ipu_interrupter.start} "
          f"-> {event.subtype}")
