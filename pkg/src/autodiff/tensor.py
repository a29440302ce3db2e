"""Tensors and the differentiation tape."""

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.utils.config import config
from src.utils.exceptions import GradientError, ValidationError

_DEFAULT_DTYPE = np.dtype(config.precision)


def set_default_dtype(dtype) -> None:
    """Select 64-bit (oracle mode) or 32-bit storage for new tensors."""
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float64), np.dtype(np.float32)):
        raise ValidationError(f"Unsupported tensor dtype: {dtype}")
    _DEFAULT_DTYPE = dtype


def get_default_dtype() -> np.dtype:
    return _DEFAULT_DTYPE


class Tensor:
    """N-dimensional float array that can take part in a tape.

    Attributes:
        data: Values, stored in the default dtype
        requires_grad: Whether backward populates ``grad`` for this tensor
        grad: Gradient of the last backward pass, same shape as ``data``
        name: Optional label used in checkpoints and error messages
    """

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=_DEFAULT_DTYPE)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @classmethod
    def wrap(cls, array: np.ndarray, requires_grad: bool = False) -> "Tensor":
        """Wrap an op result without copying it."""
        tensor = cls.__new__(cls)
        tensor.data = array
        tensor.requires_grad = requires_grad
        tensor.grad = None
        tensor.name = None
        return tensor

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        """Copy of the values that does not require gradients."""
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"


@dataclass
class Node:
    """One recorded op: how to map the output gradient to input gradients."""

    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward_fn: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]
    footprint: int


class Tape:
    """Ordered record of ops with live-element accounting.

    A recording tape keeps every node (and with it the activations backward
    needs); its live count grows by each node's footprint. A non-recording
    tape keeps nothing: each op is seen only transiently, which is how a
    forward pass that discards its intermediate outputs is measured.
    """

    def __init__(self, record: bool = True):
        self.record = record
        self.nodes: List[Node] = []
        self.live_elements = 0
        self.peak_live_elements = 0
        self._producers: Dict[int, int] = {}

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _TAPE_STACK.pop()

    def add(self, node: Node) -> None:
        self._producers[id(node.output)] = len(self.nodes)
        self.nodes.append(node)
        self.live_elements += node.footprint
        self.peak_live_elements = max(self.peak_live_elements, self.live_elements)

    def observe(self, transient_elements: int) -> None:
        """Account for buffers that exist only while one op runs."""
        self.peak_live_elements = max(
            self.peak_live_elements, self.live_elements + transient_elements
        )

    def retain(self, elements: int) -> None:
        """Account for buffers held outside the tape, e.g. boundary features."""
        self.live_elements += elements
        self.peak_live_elements = max(self.peak_live_elements, self.live_elements)

    def produced(self, tensor: Tensor) -> bool:
        return id(tensor) in self._producers

    def clear(self) -> None:
        """Drop all nodes and reset the accounting."""
        self.nodes.clear()
        self._producers.clear()
        self.live_elements = 0
        self.peak_live_elements = 0


_TAPE_STACK: List[Tape] = []


def current_tape() -> Optional[Tape]:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def record(
    op: str,
    inputs: Sequence[Tensor],
    out: np.ndarray,
    backward_fn: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]],
    saved_elements: int = 0,
) -> Tensor:
    """Wrap an op result and record it on the active tape.

    Args:
        op: Op name
        inputs: Tensors the op consumed, in backward_fn's output order
        out: Result values
        backward_fn: Maps the output gradient to one gradient per input
        saved_elements: Extra buffers the backward keeps (e.g. argmax indices)

    Returns:
        Output tensor
    """
    if config.debug_checks and not np.all(np.isfinite(out)):
        raise ValidationError(f"{op} produced non-finite values")

    requires_grad = any(t.requires_grad for t in inputs)
    output = Tensor.wrap(out, requires_grad=requires_grad)

    tape = current_tape()
    if tape is None:
        return output
    if tape.record and requires_grad:
        tape.add(Node(op, tuple(inputs), output, backward_fn, out.size + saved_elements))
    else:
        tape.observe(sum(t.size for t in inputs) + out.size)
    return output


def backward(tape: Tape, loss: Tensor) -> None:
    """Populate ``grad`` of every requires_grad tensor reachable from ``loss``.

    Gradients overwrite whatever a previous backward left behind; use
    ``accumulate_grad`` to sum across passes.

    Raises:
        GradientError: If the loss is not a scalar or was not recorded on ``tape``
    """
    if loss.size != 1:
        raise GradientError(f"loss must be scalar, got shape {loss.shape}")
    if not tape.produced(loss):
        raise GradientError("loss was not recorded on this tape")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    reached: Dict[int, Tensor] = {id(loss): loss}

    for node in reversed(tape.nodes[: tape._producers[id(loss)] + 1]):
        grad_out = grads.get(id(node.output))
        if grad_out is None:
            continue
        for tensor, grad_in in zip(node.inputs, node.backward_fn(grad_out)):
            if grad_in is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + grad_in
            else:
                grads[key] = grad_in
                reached[key] = tensor

    for key, tensor in reached.items():
        tensor.grad = grads[key]


def accumulate_grad(tensor: Tensor, grad: np.ndarray) -> None:
    """Add ``grad`` into ``tensor.grad`` (micro-batch summation)."""
    if grad.shape != tensor.shape:
        raise GradientError(f"gradient shape {grad.shape} does not match {tensor.shape}")
    tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad
