# forecaster/params.py
# Named registry of every learnable tensor in a model.
# Names are stable, so checkpoints and the optimizer address
# parameters by name rather than by position.

from __future__ import annotations

from typing import Iterator

import numpy as np

from forecaster.errors import ConfigError
from forecaster.tensor import Node, parameter


class ParamStore:
    def __init__(self):
        self._params: dict[str, Node] = {}

    def add(self, name: str, value) -> Node:
        if name in self._params:
            raise ConfigError(f"parameter {name!r} registered twice")
        node = parameter(value, name=name)
        self._params[name] = node
        return node

    def uniform(self, name: str, shape: tuple[int, ...], fan_in: int, rng: np.random.Generator) -> Node:
        """Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
        bound = 1.0 / np.sqrt(max(fan_in, 1))
        return self.add(name, rng.uniform(-bound, bound, size=shape))

    def __getitem__(self, name: str) -> Node:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def values(self):
        return self._params.values()

    def names(self) -> list[str]:
        return list(self._params)

    def size(self) -> int:
        return sum(p.value.size for p in self._params.values())

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def snapshot(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self._params.items()}

    def restore(self, snapshot: dict[str, np.ndarray]) -> None:
        for name, value in snapshot.items():
            self._params[name].value[...] = value
