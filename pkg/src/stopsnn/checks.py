"""Randomized gradient-check suites over the reference oracles.

Each check builds small random networks, runs the streaming rule against
an independent reference path, and reports the worst hybrid relative
deviation. The command-line `gradcheck` subcommand and the acceptance
tests both drive these routines.

Finite-difference checks use the cross-entropy loss and inputs bounded
away from zero so every gradient coordinate stays well above the numeric
noise floor of a central difference at step 1e-5.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .learning import GradAccumulator, LossKind, SynergyMode, learn_sample
from .lif import SpikeMode, SurrogateKind
from .oracle import (
    compare_gradients,
    finite_diff_all,
    naive_stop_gradients,
    unrolled_stbp_gradients,
)
from .topology import (
    LayerKind,
    NetworkSpec,
    avgpool_layer,
    conv_layer,
    dense_layer,
    flatten_layer,
    init_params,
)

STREAMING_VS_NAIVE_TOL = 1e-9
OUTPUT_LAYER_TOL = 1e-9
FINITE_DIFF_TOL = 1e-4


@dataclass
class CheckResult:
    name: str
    trials: int
    worst_rel: float
    tolerance: float
    worst_case: str = ""

    @property
    def ok(self) -> bool:
        return self.worst_rel <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return (
            f"[{status}] {self.name}: worst rel {self.worst_rel:.3e} "
            f"(tolerance {self.tolerance:.0e}, {self.trials} trials)"
        )


def random_network(rng: np.random.Generator, max_width: int = 16, time_steps: int | None = None,
                   allow_conv: bool = True) -> tuple[NetworkSpec, list]:
    """A small random mixed dense/conv architecture with lively dynamics."""
    spatial = allow_conv and rng.random() < 0.5
    layers = []
    if spatial:
        cin = int(rng.integers(1, 3))
        side = int(rng.choice([4, 6]))
        input_shape = (cin, side, side)
        shape = input_shape
        for _ in range(int(rng.integers(1, 3))):
            layers.append(conv_layer(shape, int(rng.integers(2, 4)), 3, stride=1, padding=1))
            shape = layers[-1].out_shape
            if shape[1] % 2 == 0 and rng.random() < 0.5:
                layers.append(avgpool_layer(shape, 2))
                shape = layers[-1].out_shape
        layers.append(flatten_layer(shape))
        shape = layers[-1].out_shape
    else:
        width = int(rng.integers(2, max_width + 1))
        input_shape = (width,)
        shape = input_shape
        for _ in range(int(rng.integers(1, 4))):
            layers.append(dense_layer(shape[0], int(rng.integers(2, max_width + 1))))
            shape = layers[-1].out_shape
    classes = int(rng.integers(2, 5))
    layers.append(dense_layer(shape[0], classes))
    spec = NetworkSpec(
        input_shape=input_shape,
        layers=tuple(layers),
        num_classes=classes,
        time_steps=time_steps or int(rng.integers(1, 7)),
        surrogate=rng.choice(list(SurrogateKind)),
    )
    params = init_params(spec, seed=int(rng.integers(0, 2**31)))
    for p in params:
        if p is not None:
            p.weights *= float(rng.uniform(1.0, 2.5))
            p.leak = float(rng.uniform(0.2, 0.9))
    return spec, params


def random_sample(rng: np.random.Generator, spec: NetworkSpec, low: float = 0.1):
    frames = [rng.uniform(low, 1.0, size=spec.input_shape) for _ in range(spec.time_steps)]
    target = np.zeros(spec.num_classes)
    target[int(rng.integers(spec.num_classes))] = 1.0
    return frames, target


def _accumulator_leaves(acc: GradAccumulator):
    return {"dw": acc.dw, "dtheta": acc.dtheta, "dalpha": acc.dalpha}


def check_streaming_vs_naive(trials: int = 100, seed: int = 0) -> CheckResult:
    """Streaming rule against the per-scalar brute-force restatement, hard spikes."""
    rng = np.random.default_rng(seed)
    modes = list(SynergyMode)
    worst, worst_case = 0.0, ""
    for trial in range(trials):
        spec, params = random_network(rng)
        frames, target = random_sample(rng, spec, low=0.0)
        mode = modes[trial % len(modes)]
        loss = LossKind.CE if trial % 2 == 0 else LossKind.MSE
        acc = learn_sample(spec, params, frames, target, mode=mode, loss=loss)
        ref = naive_stop_gradients(spec, params, frames, target, mode, loss=loss.value)
        report = compare_gradients(
            _accumulator_leaves(acc),
            {"dw": ref.dw, "dtheta": ref.dtheta, "dalpha": ref.dalpha},
        )
        if report.max_rel > worst:
            worst, worst_case = report.max_rel, f"trial {trial} ({mode.value}, {loss.value}): {report}"
    return CheckResult("streaming vs naive", trials, worst, STREAMING_VS_NAIVE_TOL, worst_case)


def _fold_to_parameter_shapes(spec: NetworkSpec, acc: GradAccumulator):
    """Sum per-neuron accumulations onto the shared parameter tensors."""
    dtheta, dleak = [], []
    for i, layer in enumerate(spec.layers):
        if not layer.is_lif:
            dtheta.append(None)
            dleak.append(None)
            continue
        if layer.kind is LayerKind.CONV:
            dtheta.append(acc.dtheta[i].sum(axis=(1, 2)))
        else:
            dtheta.append(acc.dtheta[i].copy())
        dleak.append(float(acc.dalpha[i].sum()))
    return dtheta, dleak


def check_t1_finite_diff(trials: int = 20, seed: int = 1) -> CheckResult:
    """Soft mode, single time-step: streaming gradients against central differences."""
    rng = np.random.default_rng(seed)
    worst, worst_case = 0.0, ""
    for trial in range(trials):
        spec, params = random_network(rng, max_width=8, time_steps=1)
        frames, target = random_sample(rng, spec)
        acc = learn_sample(
            spec, params, frames, target, mode=SynergyMode.WTL, loss=LossKind.CE, spike_mode=SpikeMode.SOFT
        )
        dtheta, dleak = _fold_to_parameter_shapes(spec, acc)
        numeric = finite_diff_all(spec, params, frames, target, loss="ce")
        report = compare_gradients(
            {"dw": acc.dw, "dtheta": dtheta, "dleak": dleak},
            {"dw": numeric.dw, "dtheta": numeric.dtheta, "dleak": numeric.dleak},
        )
        if report.max_rel > worst:
            worst, worst_case = report.max_rel, f"trial {trial}: {report}"
    return CheckResult("soft T=1 vs finite differences", trials, worst, FINITE_DIFF_TOL, worst_case)


def check_output_layer_detached(trials: int = 20, seed: int = 2, max_steps: int = 6) -> CheckResult:
    """Soft mode, any window: output-layer weight/threshold gradients against
    the detached-reset unrolled reverse sweep."""
    rng = np.random.default_rng(seed)
    worst, worst_case = 0.0, ""
    for trial in range(trials):
        steps = int(rng.integers(1, max_steps + 1))
        spec, params = random_network(rng, max_width=8, time_steps=steps)
        frames, target = random_sample(rng, spec)
        acc = learn_sample(
            spec, params, frames, target, mode=SynergyMode.WTL, loss=LossKind.CE, spike_mode=SpikeMode.SOFT
        )
        ref = unrolled_stbp_gradients(
            spec, params, frames, target, loss="ce", include_illusory=False, spike_mode=SpikeMode.SOFT
        )
        top = spec.lif_indices[-1]
        report = compare_gradients(
            {"dw": acc.dw[top], "dtheta": acc.dtheta[top]},
            {"dw": ref.dw[top], "dtheta": ref.dtheta[top]},
        )
        if report.max_rel > worst:
            worst, worst_case = report.max_rel, f"trial {trial} (T={steps}): {report}"
    return CheckResult("output layer vs detached-reset reverse mode", trials, worst, OUTPUT_LAYER_TOL, worst_case)


def check_stbp_vs_finite_diff(trials: int = 10, seed: int = 3, max_steps: int = 5) -> CheckResult:
    """Unrolled sweep with reset feedback, soft mode, against central differences."""
    rng = np.random.default_rng(seed)
    worst, worst_case = 0.0, ""
    for trial in range(trials):
        steps = int(rng.integers(1, max_steps + 1))
        spec, params = random_network(rng, max_width=8, time_steps=steps)
        frames, target = random_sample(rng, spec)
        ref = unrolled_stbp_gradients(
            spec, params, frames, target, loss="ce", include_illusory=True, spike_mode=SpikeMode.SOFT
        )
        numeric = finite_diff_all(spec, params, frames, target, loss="ce")
        report = compare_gradients(
            {"dw": ref.dw, "dtheta": ref.dtheta, "dleak": ref.dleak},
            {"dw": numeric.dw, "dtheta": numeric.dtheta, "dleak": numeric.dleak},
        )
        if report.max_rel > worst:
            worst, worst_case = report.max_rel, f"trial {trial} (T={steps}): {report}"
    return CheckResult("unrolled temporal backprop vs finite differences", trials, worst, FINITE_DIFF_TOL, worst_case)


def run_all(trials: int | None = None, seed: int = 0) -> list[CheckResult]:
    """The full check battery; trials scales every suite proportionally."""
    if trials == 0:
        return []
    scale = trials if trials is not None else None
    return [
        check_streaming_vs_naive(trials=scale or 100, seed=seed),
        check_t1_finite_diff(trials=scale or 20, seed=seed + 1),
        check_output_layer_detached(trials=scale or 20, seed=seed + 2),
        check_stbp_vs_finite_diff(trials=scale or 10, seed=seed + 3),
    ]
