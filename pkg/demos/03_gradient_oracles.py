#!/usr/bin/env python3
"""Pin the streaming rule against its independent reference paths.

Four comparisons:
  1. streaming vs a per-scalar brute-force restatement (hard spikes),
  2. soft mode at a single time-step vs central finite differences,
  3. the output layer vs a detached-reset unrolled reverse sweep (any
     window length; these agree analytically),
  4. the fully unrolled temporal-backprop oracle vs finite differences.
"""
from stopsnn.checks import (
    check_output_layer_detached,
    check_stbp_vs_finite_diff,
    check_streaming_vs_naive,
    check_t1_finite_diff,
)

print("running the oracle battery (a few seconds)...\n")
for result in (
    check_streaming_vs_naive(trials=30, seed=0),
    check_t1_finite_diff(trials=8, seed=1),
    check_output_layer_detached(trials=12, seed=2),
    check_stbp_vs_finite_diff(trials=6, seed=3),
):
    print(result.line())
    if result.worst_case:
        print(f"    worst case: {result.worst_case}")

print(
    "\nThe same battery is exposed as `python -m stopsnn gradcheck`, which"
    "\nexits nonzero on any tolerance breach."
)
