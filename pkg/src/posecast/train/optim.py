"""
First-order optimizers updating parameter dictionaries in place.
"""

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Optional

import numpy as np

from ..utils.config import reject_unknown_keys, require

Params = Dict[str, np.ndarray]

OPTIMIZERS = ("sgd", "adam")


@dataclass(frozen=True)
class OptimizerConfig:
    """Optimizer choice and hyperparameters; the lr drop is off unless lr_drop_step is set."""

    name: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.0
    lr_drop_step: Optional[int] = None
    lr_drop_factor: float = 0.01

    def __post_init__(self) -> None:
        require(self.name in OPTIMIZERS, f"train.optimizer.name must be one of {OPTIMIZERS}, got {self.name!r}")
        require(self.lr >= 0, f"train.optimizer.lr must be >= 0, got {self.lr}")
        require(0.0 <= self.beta1 < 1.0, f"train.optimizer.beta1 must be in [0, 1), got {self.beta1}")
        require(0.0 <= self.beta2 < 1.0, f"train.optimizer.beta2 must be in [0, 1), got {self.beta2}")
        require(self.eps > 0, f"train.optimizer.eps must be > 0, got {self.eps}")
        require(0.0 <= self.momentum < 1.0, f"train.optimizer.momentum must be in [0, 1), got {self.momentum}")
        require(self.lr_drop_step is None or (isinstance(self.lr_drop_step, int) and self.lr_drop_step >= 1),
                f"train.optimizer.lr_drop_step must be a positive integer, got {self.lr_drop_step!r}")
        require(self.lr_drop_factor > 0, f"train.optimizer.lr_drop_factor must be > 0, got {self.lr_drop_factor}")

    def lr_at(self, step: int) -> float:
        if self.lr_drop_step is not None and step >= self.lr_drop_step:
            return self.lr * self.lr_drop_factor
        return self.lr

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], section: str = "train.optimizer") -> "OptimizerConfig":
        reject_unknown_keys(data, [f.name for f in fields(cls)], section)
        return cls(**data)


class SGD:
    """Stochastic gradient descent with optional heavy-ball momentum."""

    def __init__(self, config: OptimizerConfig):
        self.config = config
        self.velocity: Params = {}

    def step(self, params: Params, grads: Params, step: int) -> None:
        lr = self.config.lr_at(step)
        for name, grad in grads.items():
            if self.config.momentum:
                v = self.velocity.get(name)
                v = grad.copy() if v is None else self.config.momentum * v + grad
                self.velocity[name] = v
                params[name] -= lr * v
            else:
                params[name] -= lr * grad


class Adam:
    """Adam with bias-corrected moments."""

    def __init__(self, config: OptimizerConfig):
        self.config = config
        self.m: Params = {}
        self.v: Params = {}
        self.t = 0

    def step(self, params: Params, grads: Params, step: int) -> None:
        c = self.config
        lr = c.lr_at(step)
        self.t += 1
        for name, grad in grads.items():
            m = c.beta1 * self.m.get(name, 0.0) + (1.0 - c.beta1) * grad
            v = c.beta2 * self.v.get(name, 0.0) + (1.0 - c.beta2) * grad ** 2
            self.m[name], self.v[name] = m, v
            m_hat = m / (1.0 - c.beta1 ** self.t)
            v_hat = v / (1.0 - c.beta2 ** self.t)
            params[name] -= lr * m_hat / (np.sqrt(v_hat) + c.eps)


def create_optimizer(config: OptimizerConfig):
    """
    Factory function to create the configured optimizer.

    Args:
        config: Optimizer configuration

    Returns:
        SGD or Adam instance
    """
    if config.name == "sgd":
        return SGD(config)
    return Adam(config)
