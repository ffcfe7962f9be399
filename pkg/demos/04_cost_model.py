#!/usr/bin/env python3
"""Learning-pass cost model and measured memory behavior.

Temporally backward training must keep two state tensors per neuron per
time-step; the streaming rule carries a fixed three (weights-only) or five
(full synergy) per neuron no matter how long the window is. The measured
counts below come from instrumenting a real learning pass.
"""
import numpy as np

from stopsnn.learning import SynergyMode, complexity_estimate, learn_sample
from stopsnn.oracle import record_tape
from stopsnn.topology import init_params, parse_architecture

print("analytic model (depth 4, width 100):")
print(f"  {'window':>6} {'rule':<10} {'memory units':>13} {'multiplies':>13}")
for steps in (6, 10, 20):
    for rule in ("STBP", "STOP-W", "STOP-WTL"):
        mem, mul = complexity_estimate(4, 100, steps, rule)
        print(f"  {steps:>6} {rule:<10} {mem:>13} {mul:>13}")

mem_stbp, _ = complexity_estimate(4, 100, 6, "STBP")
mem_stop, _ = complexity_estimate(4, 100, 6, "STOP-W")
print(f"\nmemory ratio at a 6-step window: {mem_stbp / mem_stop:.1f}x (grows as 2T/3)")

print("\nmeasured on a 8-8-2 probe network:")
rng = np.random.default_rng(0)
target = np.zeros(2)
target[0] = 1.0
for steps in (2, 20):
    spec = parse_architecture("8-8-2", (8,), 2, time_steps=steps)
    params = init_params(spec, seed=0)
    frames = [rng.uniform(size=(8,)) for _ in range(steps)]
    counts = {}
    for mode in (SynergyMode.W, SynergyMode.WTL):
        audit = {}
        learn_sample(spec, params, frames, target, mode=mode, audit=audit)
        counts[mode.value] = audit["retained_time_indexed_tensors"]
    tape = record_tape(spec, params, frames)
    print(
        f"  window {steps:>2}: streaming retains W={counts['W']}, WTL={counts['WTL']} tensors "
        f"(constant); unrolled tape length {tape.length}, {tape.retained_tensor_count()} tensors"
    )
