#!/usr/bin/env python3
"""Optional transcript timestamp repair from diarization output.

Some corpora carry loose word timestamps. Given a diarization RTTM for the
same recording, this script snaps each token span into the closest diarized
interval of its speaker: spans already inside an interval are clipped to it,
stray spans are moved to the nearest interval edge while keeping (at most)
their duration.

Usage:
    repair_timestamps.py transcript.csv diarization.rttm name1,name2 out.csv

where name1,name2 maps the two RTTM speaker names to speakers 1 and 2.
"""

from __future__ import annotations

import sys
from typing import Dict, List, Tuple


def read_rttm(path: str, names: Tuple[str, str]) -> Dict[int, List[Tuple[float, float]]]:
    mapping = {names[0]: 1, names[1]: 2}
    intervals: Dict[int, List[Tuple[float, float]]] = {1: [], 2: []}
    with open(path) as handle:
        for raw in handle:
            fields = raw.split()
            if not fields or fields[0].upper() != "SPEAKER":
                continue
            name = fields[7]
            if name not in mapping:
                raise SystemExit(f"RTTM speaker {name!r} not in mapping {names}")
            start = float(fields[3]) * 1000.0
            intervals[mapping[name]].append((start, start + float(fields[4]) * 1000.0))
    for spans in intervals.values():
        spans.sort()
    return intervals


def snap(span: Tuple[float, float], intervals: List[Tuple[float, float]]) -> Tuple[float, float]:
    start, end = span
    if not intervals:
        return span
    best = min(
        intervals,
        key=lambda iv: max(0.0, iv[0] - end) + max(0.0, start - iv[1]),
    )
    lo, hi = best
    if start >= hi:  # token after the interval: pull it back to the tail
        start, end = max(lo, hi - (end - span[0])), hi
    elif end <= lo:  # token before the interval: push it to the head
        start, end = lo, min(hi, lo + (span[1] - span[0]))
    else:
        start, end = max(start, lo), min(end, hi)
    if end <= start:
        end = min(hi, start + 1.0)
    return start, end


def main() -> int:
    if len(sys.argv) != 5:
        print(__doc__, file=sys.stderr)
        return 1
    transcript, rttm, names, out = sys.argv[1:]
    name1, name2 = names.split(",")
    intervals = read_rttm(rttm, (name1, name2))

    lines = ["speaker,start_ms,end_ms,word"]
    with open(transcript) as handle:
        for raw in handle:
            raw = raw.strip()
            if not raw or raw.startswith("speaker"):
                continue
            speaker, start, end, word = raw.split(",", 3)
            new_start, new_end = snap((float(start), float(end)), intervals[int(speaker)])
            lines.append(f"{speaker},{new_start:.10g},{new_end:.10g},{word}")
    with open(out, "w") as handle:
        handle.write("\n".join(lines) + "\n")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
