"""Dense tensors with reverse-mode differentiation.

Only the handful of layers and losses needed by the teacher/student networks
are provided: affine, 2-D convolution, ReLU, max pooling, flatten, softmax,
softmax cross-entropy, feature MSE and their weighted sum.

Forward reductions accumulate sequentially in a fixed, documented order
(for ``linear``: over the inner index ``k``; for ``conv2d``: over input
channel, then kernel row, then kernel column; bias added last).  That makes
the forward pass bitwise equal to a plain nested-loop evaluation and keeps
every run reproducible.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

LOG_FLOOR = 1e-12


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class ConfigurationError(ValueError):
    """Layer or loss hyperparameters are invalid."""


class UsageError(RuntimeError):
    """An operation was invoked in a state that does not permit it."""


_grad_enabled = True


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def is_grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """An ndarray plus an optional gradient buffer and graph links."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_consumed", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = "", dtype=None):
        arr = np.asarray(data, dtype=dtype if dtype is not None else None)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        self.data: np.ndarray = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self._consumed = False
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"


def _result(data: np.ndarray, parents: Sequence[Tensor], backward: Callable[[np.ndarray], None]) -> Tensor:
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype, copy=True)
    else:
        t.grad = t.grad + g


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------------------
# layers


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map ``x @ weight + bias`` with ``weight`` laid out (in, out)."""
    x, weight, bias = _as_tensor(x), _as_tensor(weight), _as_tensor(bias)
    if x.data.ndim != 2 or weight.data.ndim != 2 or bias.data.ndim != 1:
        raise DimensionError(
            f"linear expects input (m, k), weight (k, n), bias (n,); got {x.shape}, {weight.shape}, {bias.shape}"
        )
    m, k = x.shape
    if weight.shape[0] != k or weight.shape[1] != bias.shape[0]:
        raise DimensionError(
            f"linear shape mismatch: input {x.shape} vs weight {weight.shape} vs bias {bias.shape}"
        )
    xd, wd = x.data, weight.data
    acc = np.zeros((m, weight.shape[1]), dtype=np.result_type(xd, wd))
    for j in range(k):
        acc += xd[:, j : j + 1] * wd[j]
    acc += bias.data

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            _accumulate(x, g @ wd.T)
        if weight.requires_grad:
            _accumulate(weight, xd.T @ g)
        if bias.requires_grad:
            _accumulate(bias, g.sum(axis=0))

    return _result(acc, (x, weight, bias), backward)


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    """Output extent of a strided window scan; raises if it is not integral."""
    span = size + 2 * padding - kernel
    if stride <= 0 or span < 0 or span % stride:
        raise ConfigurationError(
            f"window {kernel} with stride {stride}, padding {padding} does not tile extent {size}"
        )
    return span // stride + 1


def conv2d(x: Tensor, kernel: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Direct 2-D cross-correlation, NCHW input, (out, in, kh, kw) kernel."""
    x, kernel, bias = _as_tensor(x), _as_tensor(kernel), _as_tensor(bias)
    if x.data.ndim != 4 or kernel.data.ndim != 4 or bias.data.ndim != 1:
        raise DimensionError(
            f"conv2d expects input (m, ci, h, w), kernel (co, ci, kh, kw), bias (co,); "
            f"got {x.shape}, {kernel.shape}, {bias.shape}"
        )
    m, ci, h, w = x.shape
    co, kci, kh, kw = kernel.shape
    if kci != ci or bias.shape[0] != co:
        raise DimensionError(f"conv2d shape mismatch: input {x.shape} vs kernel {kernel.shape} vs bias {bias.shape}")
    if padding < 0:
        raise ConfigurationError(f"padding must be non-negative, got {padding}")
    oh = conv_output_size(h, kh, stride, padding)
    ow = conv_output_size(w, kw, stride, padding)

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    kd = kernel.data
    dtype = np.result_type(xp, kd)
    hs, ws = (oh - 1) * stride + 1, (ow - 1) * stride + 1
    nk = ci * kh * kw
    # cols[(c, i, j), n, y, x] = xp[n, c, y*stride + i, x*stride + j]
    cols = np.empty((ci, kh, kw, m, oh, ow), dtype=dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, i, j] = xp[:, :, i : i + hs : stride, j : j + ws : stride].transpose(1, 0, 2, 3)
    cols = cols.reshape(nk, m * oh * ow)
    wmat = kd.reshape(co, nk)
    acc = np.zeros((co, m * oh * ow), dtype=dtype)
    tmp = np.empty_like(acc)
    for k in range(nk):
        np.multiply(wmat[:, k : k + 1], cols[k], out=tmp)
        acc += tmp
    acc += bias.data[:, None]
    out = np.ascontiguousarray(acc.reshape(co, m, oh, ow).transpose(1, 0, 2, 3))

    def backward(g: np.ndarray) -> None:
        g2 = g.transpose(1, 0, 2, 3).reshape(co, -1)
        if bias.requires_grad:
            _accumulate(bias, g.sum(axis=(0, 2, 3)))
        if kernel.requires_grad:
            _accumulate(kernel, (g2 @ cols.T).reshape(kd.shape))
        if x.requires_grad:
            gcols = (wmat.T @ g2).reshape(ci, kh, kw, m, oh, ow)
            gxp = np.zeros(xp.shape, dtype=dtype)
            for i in range(kh):
                for j in range(kw):
                    gxp[:, :, i : i + hs : stride, j : j + ws : stride] += gcols[:, i, j].transpose(1, 0, 2, 3)
            if padding:
                gxp = gxp[:, :, padding:-padding, padding:-padding]
            _accumulate(x, gxp)

    return _result(out, (x, kernel, bias), backward)


def relu(x: Tensor) -> Tensor:
    """Elementwise ``max(0, x)``; the subgradient at 0 is taken as 0."""
    x = _as_tensor(x)
    mask = x.data > 0
    out = np.where(mask, x.data, 0).astype(x.data.dtype)

    def backward(g: np.ndarray) -> None:
        _accumulate(x, g * mask)

    return _result(out, (x,), backward)


def maxpool2d(x: Tensor, window: int, stride: Optional[int] = None) -> Tensor:
    """Max pooling over square windows; ties route gradient to the first
    cell in row-major order."""
    x = _as_tensor(x)
    stride = window if stride is None else stride
    if window <= 0 or stride <= 0:
        raise ConfigurationError(f"window and stride must be positive, got {window}, {stride}")
    if x.data.ndim != 4:
        raise DimensionError(f"maxpool2d expects (m, c, h, w) input, got {x.shape}")
    m, c, h, w = x.shape
    oh = conv_output_size(h, window, stride, 0)
    ow = conv_output_size(w, window, stride, 0)
    hs, ws = (oh - 1) * stride + 1, (ow - 1) * stride + 1

    best = None
    arg = np.zeros((m, c, oh, ow), dtype=np.intp)
    for i in range(window):
        for j in range(window):
            cand = x.data[:, :, i : i + hs : stride, j : j + ws : stride]
            if best is None:
                best = cand.copy()
                continue
            better = cand > best  # strict: earlier cell keeps ties
            best = np.where(better, cand, best)
            arg = np.where(better, i * window + j, arg)

    def backward(g: np.ndarray) -> None:
        gx = np.zeros_like(x.data)
        for i in range(window):
            for j in range(window):
                sel = arg == i * window + j
                gx[:, :, i : i + hs : stride, j : j + ws : stride] += np.where(sel, g, 0)
        _accumulate(x, gx)

    return _result(best, (x,), backward)


def flatten(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    shape = x.shape
    out = x.data.reshape(shape[0], -1)

    def backward(g: np.ndarray) -> None:
        _accumulate(x, g.reshape(shape))

    return _result(out, (x,), backward)


# ---------------------------------------------------------------------------
# losses


def softmax(logits) -> np.ndarray:
    """Row-wise softmax with the row maximum subtracted first."""
    a = logits.data if isinstance(logits, Tensor) else np.asarray(logits, dtype=np.float64)
    if a.ndim == 1:
        a = a[None, :]
    shifted = a - a.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _check_one_hot(targets: np.ndarray) -> None:
    ok = np.isin(targets, (0.0, 1.0)).all() and np.all(targets.sum(axis=1) == 1)
    if not ok:
        raise ValueError("cross-entropy targets must be one-hot rows")


def cross_entropy_loss(logits: Tensor, targets, reduction: str = "mean") -> Tensor:
    """Softmax cross-entropy against one-hot ``targets``.

    ``reduction="mean"`` divides the batch sum by the batch size;
    ``reduction="sum"`` keeps the plain sum over the batch.
    """
    logits = _as_tensor(logits)
    y = np.asarray(targets.data if isinstance(targets, Tensor) else targets, dtype=logits.dtype)
    if logits.data.ndim != 2 or y.shape != logits.shape:
        raise DimensionError(f"logits {logits.shape} and targets {y.shape} must both be (m, c)")
    _check_one_hot(y)
    if reduction not in ("mean", "sum"):
        raise ConfigurationError(f"unknown reduction {reduction!r}")
    m = logits.shape[0]
    scale = 1.0 / m if reduction == "mean" else 1.0
    p = softmax(logits)
    per_row = -(y * np.log(np.maximum(p, LOG_FLOOR))).sum(axis=1)
    value = np.asarray(per_row.sum() * scale, dtype=logits.dtype)

    def backward(g: np.ndarray) -> None:
        _accumulate(logits, (p - y) * (scale * g))

    return _result(value, (logits,), backward)


def mse_feature_loss(student_features: Tensor, teacher_features) -> Tensor:
    """Mean of squared differences over batch and feature axes.

    The teacher side is treated as a constant target.
    """
    g = _as_tensor(student_features)
    f = teacher_features.data if isinstance(teacher_features, Tensor) else np.asarray(teacher_features)
    if g.shape != f.shape:
        raise DimensionError(f"student features {g.shape} and teacher features {f.shape} differ")
    count = g.data.size
    diff = g.data - f
    value = np.asarray((diff * diff).sum() / count, dtype=g.dtype)

    def backward(up: np.ndarray) -> None:
        _accumulate(g, diff * (2.0 * up / count))

    return _result(value, (g,), backward)


def combined_loss(mse: Tensor, xent: Tensor, lambda_mse: float, lambda_xent: float) -> Tensor:
    """Weighted sum ``lambda_mse * mse + lambda_xent * xent``."""
    if lambda_mse < 0 or lambda_xent < 0:
        raise ConfigurationError(f"loss weights must be non-negative, got {lambda_mse}, {lambda_xent}")
    mse, xent = _as_tensor(mse), _as_tensor(xent)
    value = np.asarray(lambda_mse * mse.data + lambda_xent * xent.data, dtype=np.result_type(mse.data, xent.data))

    def backward(g: np.ndarray) -> None:
        _accumulate(mse, g * lambda_mse)
        _accumulate(xent, g * lambda_xent)

    return _result(value, (mse, xent), backward)


# ---------------------------------------------------------------------------
# reverse pass


def _topological(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Tensor, params: Optional[Iterable[Tensor]] = None) -> None:
    """Propagate d(loss)/d(.) into every reachable leaf's ``grad``.

    Interior gradients are freed afterwards and the graph is marked consumed;
    a second call on the same loss raises :class:`UsageError`.  Leaves in
    ``params`` that the loss does not depend on receive an all-zero gradient.
    """
    if loss.data.size != 1:
        raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._consumed:
        raise UsageError("backward called twice on the same graph")
    if not loss.requires_grad:
        raise UsageError("loss does not depend on any tensor that requires grad")

    order = _topological(loss)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)
    for node in order:
        if node._backward is not None:
            node.grad = None
            node._backward = None
            node._parents = ()
    loss._consumed = True

    if params is not None:
        for p in params:
            if p.requires_grad and p.grad is None:
                p.grad = np.zeros_like(p.data)
