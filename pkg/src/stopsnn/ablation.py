"""Desk-scale synergy ablation: streaming rule variants against a
temporally-backward baseline.

Trains the same task under the weights-only and fully synergistic modes of
the streaming rule, plus a weights-only baseline whose gradients come from
the fully unrolled temporal backpropagation sweep (reset feedback
included). Reports final training accuracies per seed; the baseline is
reported for direction, not gated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import datasets as ds
from .config import TrainConfig
from .learning import SynergyMode
from .lif import SpikeMode
from .oracle import unrolled_stbp_gradients
from .topology import InitMode, init_params
from .trainer import _epoch_shuffle_seed, build_network, cosine_lr, evaluate, load_dataset, train


@dataclass
class AblationOutcome:
    per_seed: dict  # seed -> {"W": acc, "WTL": acc, "STBP": acc}

    @property
    def mean_w(self) -> float:
        return float(np.mean([row["W"] for row in self.per_seed.values()]))

    @property
    def mean_wtl(self) -> float:
        return float(np.mean([row["WTL"] for row in self.per_seed.values()]))

    @property
    def mean_stbp(self) -> float:
        return float(np.mean([row["STBP"] for row in self.per_seed.values()]))

    def summary(self) -> str:
        lines = [f"seed {seed}: " + ", ".join(f"{k}={v:.3f}" for k, v in row.items())
                 for seed, row in sorted(self.per_seed.items())]
        lines.append(
            f"means: W={self.mean_w:.3f}, WTL={self.mean_wtl:.3f}, STBP baseline={self.mean_stbp:.3f}"
        )
        return "\n".join(lines)


def train_stbp_baseline(config: TrainConfig) -> float:
    """Weights-only training driven by unrolled temporal backprop gradients.

    Same data, batching, momentum, and cosine schedule as the streaming
    runs; only the gradient engine differs. Returns final train accuracy.
    """
    spec = build_network(config)
    params = init_params(spec, seed=config.seed, init_mode=InitMode(config.init_mode))
    train_set, _ = load_dataset(config)
    velocities = [None if p is None else np.zeros_like(p.weights) for p in params]
    final_acc = 0.0
    for epoch in range(config.epochs):
        lr = cosine_lr(config.eta_w, epoch, config.epochs)
        for batch in ds.batch_iter(train_set, config.batch_size, _epoch_shuffle_seed(config.seed, epoch)):
            grads = [None if p is None else np.zeros_like(p.weights) for p in params]
            for sample in batch:
                ref = unrolled_stbp_gradients(
                    spec, params, sample.frames, sample.target,
                    mode=SynergyMode.W, loss=config.loss,
                    include_illusory=True, spike_mode=SpikeMode.HARD,
                )
                for i, g in enumerate(ref.dw):
                    if g is not None:
                        grads[i] += g
            for i, p in enumerate(params):
                if p is None:
                    continue
                step = grads[i] / len(batch) + config.weight_decay * p.weights
                velocities[i] = config.momentum * velocities[i] + step
                p.weights = p.weights - lr * velocities[i]
        final_acc, _ = evaluate(spec, params, train_set)
    return final_acc


def run_ablation(base_config: TrainConfig, seeds=(0, 1, 2), include_baseline: bool = True) -> AblationOutcome:
    per_seed = {}
    for seed in seeds:
        row = {}
        for mode in ("W", "WTL"):
            config = base_config.with_overrides(seed=seed, mode=mode)
            result = train(config)
            row[mode] = result.metrics[-1]["train_acc"]
        if include_baseline:
            row["STBP"] = train_stbp_baseline(base_config.with_overrides(seed=seed, mode="W"))
        per_seed[seed] = row
    return AblationOutcome(per_seed=per_seed)
