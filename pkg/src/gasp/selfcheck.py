"""Finite-difference gradient checks over every operator and every network variant."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import (
    GradCheckReport,
    Tensor,
    batchnorm_temporal,
    concat,
    conv2d,
    conv_transpose2d,
    grad_check,
    linear,
    log_softmax_spatial,
    maxpool2d,
    pointwise,
    softmax_spatial,
    split,
    stack,
    standardize,
)
from .model import SEQUENTIAL_VARIANTS, STATIC_VARIANTS, Widths, build_model
from .objectives import fixation_counts, loss_dam, loss_total

CHECK_WIDTHS = Widths(encoder=0.125, hidden=5, gmu=3, fusion=4)
LINEAR_TOL = 1e-6
TOL = 1e-4
# Full networks: the O(10) loss leaves ~1e-8 of cancellation noise at h=1e-5,
# while larger steps can cross ReLU and max-pool kinks, so try a short ladder.
MODEL_STEPS = (1e-5, 1e-4, 1e-3)


@dataclass
class Check:
    name: str
    run: Callable[[], GradCheckReport]


def _t(rng, *shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


def op_checks(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    x4 = _t(rng, 2, 3, 6, 6)
    w = _t(rng, 4, 3, 3, 3)
    b = _t(rng, 4)
    wt = _t(rng, 3, 2, 2, 2)
    bt = _t(rng, 2)
    xl, wl, bl = _t(rng, 3, 5), _t(rng, 4, 5), _t(rng, 4)
    xb = _t(rng, 2, 3, 4, 5, 5)
    gamma, beta = _t(rng, 4), _t(rng, 4)
    checks = [
        Check("conv2d", lambda: grad_check(lambda: conv2d(x4, w, b, padding=1), [x4, w, b], LINEAR_TOL)),
        Check("conv2d_stride2", lambda: grad_check(lambda: conv2d(x4, w, b, padding=1, stride=2), [x4, w, b], LINEAR_TOL)),
        Check("conv_transpose2d", lambda: grad_check(lambda: conv_transpose2d(x4, wt, bt, stride=2), [x4, wt, bt], LINEAR_TOL)),
        Check("linear", lambda: grad_check(lambda: linear(xl, wl, bl), [xl, wl, bl], LINEAR_TOL)),
        Check("maxpool2d", lambda: grad_check(lambda: maxpool2d(x4)[0], [x4], LINEAR_TOL)),
        Check("softmax_spatial", lambda: grad_check(lambda: softmax_spatial(x4), [x4], TOL)),
        Check("log_softmax_spatial", lambda: grad_check(lambda: log_softmax_spatial(x4), [x4], TOL)),
        Check("standardize", lambda: grad_check(lambda: standardize(x4, axes=(2, 3)), [x4], TOL, h=1e-3, stencil=4)),
    ]
    a, c = _t(rng, 3, 4), _t(rng, 4)
    pos = Tensor(rng.uniform(0.5, 2.0, size=(3, 4)), requires_grad=True)
    primitives = {
        "add_broadcast": (lambda: a + c, [a, c]),
        "sub_broadcast": (lambda: a - c, [a, c]),
        "mul_broadcast": (lambda: a * c, [a, c]),
        "div_broadcast": (lambda: a / pos, [a, pos]),
        "rdiv": (lambda: 2.0 / pos, [pos]),
        "pow": (lambda: pos**1.5, [pos]),
        "sqrt": (lambda: pos.sqrt(), [pos]),
        "exp": (lambda: a.exp(), [a]),
        "log": (lambda: pos.log(), [pos]),
        "sum_axis": (lambda: a.sum(axis=1, keepdims=True), [a]),
        "mean": (lambda: a.mean(axis=0), [a]),
        "reshape_transpose": (lambda: a.reshape(2, 6).transpose(1, 0), [a]),
        "getitem": (lambda: a[1:, ::2], [a]),
        "concat": (lambda: concat([a, pos], axis=1), [a, pos]),
        "stack": (lambda: stack([a, pos], axis=0), [a, pos]),
        "split": (lambda: split(a, [1, 3], axis=1)[1] * 2.0, [a]),
    }
    checks += [Check(n, lambda fn=fn, ins=ins: grad_check(fn, ins, TOL)) for n, (fn, ins) in primitives.items()]
    fdm = rng.uniform(0.05, 1.0, size=(2, 6, 6))
    counts = fixation_counts([[(1, 2), (4, 4)], [(0, 5)]], (6, 6))
    logits = _t(rng, 2, 1, 6, 6)
    preds = [_t(rng, 2, 1, 3, 3), _t(rng, 2, 1, 3, 3)]
    checks.append(Check("loss_total", lambda: grad_check(lambda: loss_total(logits, fdm, counts)[0], [logits], TOL)))
    checks.append(Check("loss_dam", lambda: grad_check(lambda: loss_dam(preds, [fdm, fdm[::-1]]), preds, TOL)))
    for kind in ("tanh", "sigmoid", "relu"):
        checks.append(Check(f"pointwise_{kind}", lambda kind=kind: grad_check(lambda: pointwise(kind, x4), [x4], TOL)))
    for training in (True, False):
        rm, rv = np.zeros(4), np.ones(4)
        checks.append(
            Check(
                f"batchnorm_temporal_{'train' if training else 'eval'}",
                lambda training=training, rm=rm, rv=rv: grad_check(
                    lambda: batchnorm_temporal(xb, gamma, beta, rm.copy(), rv.copy(), training), [xb, gamma, beta], TOL
                ),
            )
        )
    return checks


def variant_cases(context: int = 4) -> list[tuple[str, int, bool]]:
    cases = [(v, 1) for v in STATIC_VARIANTS] + [(v, context) for v in SEQUENTIAL_VARIANTS]
    return [(v, c, dam) for v, c in cases for dam in (False, True)]


def variant_check(variant: str, context: int, dam: bool, size: int = 8, seed: int = 0, max_entries: int = 3) -> GradCheckReport:
    """Check the full training objective against every trainable tensor and the input."""
    rng = np.random.default_rng(seed)
    model = build_model(variant, context, dam, CHECK_WIDTHS, seed)
    x = Tensor(rng.normal(size=(2, context, 15, size, size)), requires_grad=True)
    fdm = rng.uniform(0.05, 1.0, size=(2, size, size))
    counts = fixation_counts([[(1, 2), (5, 5)], [(0, 7)]], (size, size))
    fdm_seq = [rng.uniform(0.05, 1.0, size=(2, size, size)) for _ in range(context)]

    def objective():
        out = model(x)
        total = loss_total(out.logits, fdm, counts)[0]
        if dam:
            total = total + loss_dam(out.dam_preds, fdm_seq)
        return total

    params = model.trainable_parameters()
    return grad_check(
        objective, [x] + params, TOL, max_entries=max_entries, seed=seed, steps=MODEL_STEPS, names=["input"] + [p.name for p in params]
    )


def model_checks(context: int = 4, size: int = 8) -> list[Check]:
    return [
        Check(f"{'DAM+' if dam else ''}{v.upper()}@{c}", lambda v=v, c=c, dam=dam: variant_check(v, c, dam, size))
        for v, c, dam in variant_cases(context)
    ]


def run_all(context: int = 4, size: int = 8) -> list[tuple[str, GradCheckReport]]:
    return [(c.name, c.run()) for c in op_checks() + model_checks(context, size)]
