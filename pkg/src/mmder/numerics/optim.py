"""AdamW with decoupled weight decay."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError


@dataclass
class AdamWState:
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)


def adamw_step(params, grads, state, lr, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
    """One AdamW update over lists of arrays.

    The decay term ``lr * weight_decay * theta`` is applied to the parameter
    directly, never folded into the gradient. Returns ``(new_params,
    new_state)``; inputs are left untouched.
    """
    if len(params) != len(grads):
        raise ContractError(f"adamw_step: {len(params)} params but {len(grads)} grads")
    if state.step_count == 0 and not state.first_moment:
        first = [np.zeros_like(p) for p in params]
        second = [np.zeros_like(p) for p in params]
    else:
        first, second = state.first_moment, state.second_moment
    if len(first) != len(params):
        raise ContractError(f"adamw_step: state tracks {len(first)} params, got {len(params)}")

    step = state.step_count + 1
    bias1 = 1.0 - beta1**step
    bias2 = 1.0 - beta2**step
    new_params, new_first, new_second = [], [], []
    for i, (p, g, m, v) in enumerate(zip(params, grads, first, second)):
        if not (p.shape == g.shape == m.shape == v.shape):
            raise ContractError(
                f"adamw_step: shape mismatch at index {i}: param {p.shape}, grad {g.shape}, "
                f"moments {m.shape}/{v.shape}"
            )
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        update = (m / bias1) / (np.sqrt(v / bias2) + eps)
        new_params.append((p - lr * (update + weight_decay * p)).astype(p.dtype, copy=False))
        new_first.append(m.astype(p.dtype, copy=False))
        new_second.append(v.astype(p.dtype, copy=False))
    return new_params, AdamWState(step, new_first, new_second)


class AdamW:
    """Stateful wrapper applying :func:`adamw_step` to a list of tensors."""

    def __init__(self, params, lr=1e-2, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.05):
        if lr < 0:
            raise ContractError(f"learning rate must be non-negative, got {lr}")
        self.params = list(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.state = AdamWState()

    def step(self, grads):
        """``grads`` is a list aligned with ``params`` (None means zero)."""
        grads = [np.zeros_like(p.data) if g is None else g for p, g in zip(self.params, grads)]
        new, self.state = adamw_step(
            [p.data for p in self.params],
            grads,
            self.state,
            self.lr,
            beta1=self.betas[0],
            beta2=self.betas[1],
            eps=self.eps,
            weight_decay=self.weight_decay,
        )
        for p, data in zip(self.params, new):
            p.data = data

    def zero_grad(self):
        for p in self.params:
            p.grad = None
