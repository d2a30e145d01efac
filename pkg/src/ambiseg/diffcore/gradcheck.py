"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import DiffTensor, backward


def grad_check(
    build: Callable[[], DiffTensor],
    params: Sequence[DiffTensor],
    step: float = 1e-5,
    denom_floor: float = 1e-6,
) -> float:
    """Compare analytic gradients against central finite differences.

    `build` re-evaluates the scalar computation from the current parameter
    values.  Every element of every parameter is perturbed by +-step; the
    worst relative error |analytic - numeric| / (|numeric| + denom_floor)
    over all elements is returned.
    """
    for p in params:
        p.requires_grad = True
        p.zero_grad()
    loss = build()
    backward(loss)
    analytic = [p.grad.copy() for p in params]
    for p in params:
        p.zero_grad()

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.values.reshape(-1)
        a_flat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = build().item()
            flat[i] = orig - step
            down = build().item()
            flat[i] = orig
            numeric = (up - down) / (2.0 * step)
            err = abs(a_flat[i] - numeric) / (abs(numeric) + denom_floor)
            if err > worst:
                worst = err
    return worst
