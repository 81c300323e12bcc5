"""Corpus-level statistics on a generated 10-minute conversation.

Event rates per minute, cumulated duration shares, and speaking /
backchannel word rates, computed from a synthetic corpus whose behaviour
is fully configured.
"""

from turntake import SynthParams, corpus_stats, generate

params = SynthParams(
    duration_ms=10 * 60_000,
    ipu_ms={1: (4000.0, 500.0), 2: (3400.0, 450.0)},
    pause_ms=(1100.0, 150.0),
    gap_ms=(650.0, 120.0),
    turn_ipus_mean=2.5,
    backchannel_rate_per_min=3.0,
    backchannel_phrases=("i see", "right"),
    interruption_rate_per_min=1.5,
    floor_taking_prob=0.6,
    seed=7,
)
result = generate(params)
stats = corpus_stats(result.timeline, tokens=result.tokens, bc_sequences=result.bc)

print("events per minute:")
for name, value in stats.event_rates_per_min.items():
    print(f"  {name:>14}: {value:6.2f}")

print("\ncumulated duration shares (% of total):")
for name, value in stats.duration_shares_pct.items():
    print(f"  {name:>14}: {value:6.2f}")

print("\nspeaking rate (words/min):", {k: round(v, 1) for k, v in stats.speaking_rate_wpm.items()})
print("backchannel rate (words/min):", {k: round(v, 2) for k, v in stats.backchannel_rate_wpm.items()})
