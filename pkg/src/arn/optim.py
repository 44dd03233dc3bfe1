"""Adadelta updates over named parameter arrays."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np


@dataclass
class AdadeltaState:
    rho: float = 0.95
    eps: float = 1e-6
    sq_grad: dict[str, np.ndarray] = field(default_factory=dict)
    sq_delta: dict[str, np.ndarray] = field(default_factory=dict)


def adadelta_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray], state: AdadeltaState,
                  frozen: Iterable[str] = ()) -> Mapping[str, np.ndarray]:
    """One in-place Adadelta update of every parameter that has a gradient.

    E[g^2] <- rho E[g^2] + (1 - rho) g^2
    delta  <- -sqrt(E[delta^2] + eps) / sqrt(E[g^2] + eps) * g
    E[delta^2] <- rho E[delta^2] + (1 - rho) delta^2
    """
    rho, eps = state.rho, state.eps
    frozen = set(frozen)
    for name, g in grads.items():
        if name in frozen:
            continue
        p = params[name]
        eg = state.sq_grad.get(name)
        if eg is None:
            eg = state.sq_grad[name] = np.zeros_like(p)
            state.sq_delta[name] = np.zeros_like(p)
        ed = state.sq_delta[name]
        eg *= rho
        eg += (1.0 - rho) * g * g
        delta = -np.sqrt(ed + eps) / np.sqrt(eg + eps) * g
        ed *= rho
        ed += (1.0 - rho) * delta * delta
        p += delta
    return params


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: Optional[float]) -> float:
    """Rescale ``grads`` in place so their joint norm is at most ``max_norm``; returns the original norm."""
    norm = global_norm(grads)
    if max_norm is not None and norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm
