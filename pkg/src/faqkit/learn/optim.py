"""AdamW with decoupled weight decay and a linear warmup/decay schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Schedule:
    total_steps: int
    warmup_fraction: float = 0.02
    peak_lr: float = 5e-5

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError(f"warmup_fraction must lie in [0, 1), got {self.warmup_fraction}")

    @property
    def warmup_steps(self) -> int:
        return math.ceil(self.warmup_fraction * self.total_steps)


def lr_at(schedule: Schedule, step: int) -> float:
    """Linear ramp 0 -> peak over the warmup steps, then linear decay to 0 at ``total_steps``."""
    if not 0 <= step <= schedule.total_steps:
        raise ValueError(f"step {step} outside [0, {schedule.total_steps}]")
    warmup = schedule.warmup_steps
    if step < warmup:
        return schedule.peak_lr * step / warmup
    if schedule.total_steps == warmup:
        return schedule.peak_lr
    return schedule.peak_lr * (schedule.total_steps - step) / (schedule.total_steps - warmup)


@dataclass
class OptimizerState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adamw_step(params: dict, grads: dict, state: OptimizerState, schedule: Schedule) -> float:
    """Apply one AdamW update in place at learning rate ``lr_at(schedule, state.step)``.

    Returns the learning rate used.
    """
    if state.step >= schedule.total_steps:
        raise ValueError(f"step {state.step} is past the schedule ({schedule.total_steps} steps)")
    if set(grads) != set(params):
        raise ValueError("gradient keys do not match parameter keys")
    lr = lr_at(schedule, state.step)
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p *= 1.0 - lr * state.weight_decay
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return lr
