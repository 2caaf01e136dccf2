"""A dense float64 tensor with a gradient buffer and a reverse-mode tape.

Every op in :mod:`stormloc.nn.ops` returns a new Tensor that remembers its
parents and a closure propagating the output gradient to them. Calling
``backward()`` on a scalar walks the tape once in reverse topological order.
Tensors are treated as immutable once an op has produced them.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import NumericError


class Tensor:
    __slots__ = ("data", "_grad", "parents", "backward_fn")

    def __init__(
        self,
        data: np.ndarray,
        parents: Sequence["Tensor"] = (),
        backward_fn: Callable[[np.ndarray], None] | None = None,
    ) -> None:
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self._grad: np.ndarray | None = None
        self.parents = tuple(parents)
        self.backward_fn = backward_fn

    @property
    def grad(self) -> np.ndarray:
        """Zero-initialized gradient buffer, allocated on first touch."""
        if self._grad is None:
            self._grad = np.zeros_like(self.data)
        return self._grad

    @grad.setter
    def grad(self, value: np.ndarray) -> None:
        self._grad = value

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self._grad = None

    def backward(self) -> None:
        """Backpropagate from a scalar through every reachable parent."""
        if self.size != 1:
            raise NumericError("backward() requires a scalar tensor")
        order = _toposort(self)
        self.grad[...] = 1.0
        for node in order:
            if node.backward_fn is not None:
                node.backward_fn(node.grad)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, leaf={self.backward_fn is None})"


def _toposort(root: Tensor) -> list[Tensor]:
    """Nodes in reverse-topological (output first) order, iteratively."""
    seen: set[int] = set()
    post: list[Tensor] = []
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            post.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    post.reverse()
    return post
