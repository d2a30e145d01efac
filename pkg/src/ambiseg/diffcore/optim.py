"""Named parameter registry with Adam state, plus the update step."""

from __future__ import annotations

import numpy as np

from .tensor import DiffTensor


class ParamStore:
    """Registry of trainable tensors, keyed by unique dotted names.

    Prefixes group parameters by owner network (e.g. ``unet.enc0.c1.kernel``,
    ``prior.block2.c0.bias``).  Each parameter carries first/second moment
    accumulators and a step counter for Adam.
    """

    def __init__(self):
        self._params: dict[str, DiffTensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self._t: dict[str, int] = {}

    def register(self, name: str, tensor: DiffTensor) -> DiffTensor:
        if name in self._params:
            raise ValueError(f"parameter {name!r} registered twice")
        tensor.requires_grad = True
        self._params[name] = tensor
        self._m[name] = np.zeros_like(tensor.values)
        self._v[name] = np.zeros_like(tensor.values)
        self._t[name] = 0
        return tensor

    def __getitem__(self, name: str) -> DiffTensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def tensors(self) -> list[DiffTensor]:
        return list(self._params.values())

    def items(self):
        return self._params.items()

    def group(self, prefix: str) -> list[str]:
        dotted = prefix if prefix.endswith(".") else prefix + "."
        return [n for n in self._params if n.startswith(dotted)]

    def num_values(self, prefix: str | None = None) -> int:
        names = self.group(prefix) if prefix else self.names()
        return sum(self._params[n].size for n in names)

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def optimizer_state(self) -> dict:
        """Moments and step counters, for checkpoint/resume."""
        return {
            name: (self._m[name].copy(), self._v[name].copy(), self._t[name])
            for name in self._params
        }

    def load_optimizer_state(self, state: dict) -> None:
        for name, (m, v, t) in state.items():
            self._m[name][...] = m
            self._v[name][...] = v
            self._t[name] = int(t)


def adam_step(
    store: ParamStore,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> None:
    """Bias-corrected Adam with decoupled weight decay; resets grads."""
    for name, p in store.items():
        g = p.grad
        t = store._t[name] + 1
        store._t[name] = t
        m = store._m[name]
        v = store._v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p.values -= lr * m_hat / (np.sqrt(v_hat) + eps)
        if weight_decay:
            p.values -= lr * weight_decay * p.values
        p.zero_grad()
