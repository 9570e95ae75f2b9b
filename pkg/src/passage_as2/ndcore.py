"""Dense float64 tensors with tape-based reverse-mode autodiff and Adam.

Every op builds a node that remembers its parents and a closure that pushes
the output gradient back to them.  ``Tensor.backward`` walks the graph in
reverse topological order, so a fresh graph is recorded on every forward.
"""
from __future__ import annotations

import json
import math
import zlib
from typing import Callable, Iterable, Sequence

import numpy as np

CHECKPOINT_VERSION = "ndcore-ckpt/1"


class ShapeMismatch(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self.name = name

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def backward(self, grad: np.ndarray | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.data)

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
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

        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                if node.requires_grad:
                    node._accumulate(g)
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not _tracks(parent):
                    continue
                if id(parent) in grads:
                    grads[id(parent)] = grads[id(parent)] + pg
                else:
                    grads[id(parent)] = pg

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, scale(as_tensor(other), -1.0))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __getitem__(self, index):
        return take(self, index)


class Parameter(Tensor):
    """A trainable leaf tensor carrying its own Adam moments."""

    __slots__ = ("m", "v", "step", "frozen")

    def __init__(self, data, name: str | None = None):
        super().__init__(np.array(data, dtype=np.float64, copy=True), requires_grad=True, name=name)
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)
        self.step = 0
        self.frozen = False


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _tracks(t: Tensor) -> bool:
    return t.requires_grad or t._backward is not None


def _node(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    if any(_tracks(p) for p in parents):
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatch(f"{op}: cannot broadcast shapes {a.shape} and {b.shape}") from None


# ---------------------------------------------------------------------------
# elementwise and structural ops
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _node(a.data + b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "mul")

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _node(a.data * b.data, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    return _node(a.data * c, (a,), lambda g: (g * c,))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)
    return _node(y, (a,), lambda g: (g * (1.0 - y * y),))


_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(a: Tensor) -> Tensor:
    """tanh-approximated GELU."""
    x = a.data
    inner = _GELU_C * (x + 0.044715 * x * x * x)
    t = np.tanh(inner)
    y = 0.5 * x * (1.0 + t)

    def backward(g):
        d_inner = _GELU_C * (1.0 + 3 * 0.044715 * x * x)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner),)

    return _node(y, (a,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 1 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeMismatch(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    try:
        y = np.matmul(a.data, b.data)
    except ValueError:
        raise ShapeMismatch(f"matmul: incompatible shapes {a.shape} and {b.shape}") from None

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _node(y, (a, b), backward)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    try:
        y = a.data.reshape(shape)
    except ValueError:
        raise ShapeMismatch(f"reshape: cannot view {a.shape} as {shape}") from None
    return _node(y, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes: tuple[int, ...]) -> Tensor:
    inverse = tuple(np.argsort(axes))
    return _node(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inverse),))


def take(a: Tensor, index) -> Tensor:
    """Basic/advanced indexing; gradient scatters back with ``np.add.at``."""

    def backward(g):
        out = np.zeros_like(a.data)
        np.add.at(out, index, g)
        return (out,)

    return _node(a.data[index], (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    ax = axis % tensors[0].ndim
    for t in tensors[1:]:
        if t.ndim != tensors[0].ndim or any(
            t.shape[i] != tensors[0].shape[i] for i in range(t.ndim) if i != ax
        ):
            raise ShapeMismatch(f"concat: shapes {tensors[0].shape} and {t.shape} differ off axis {axis}")
    sizes = np.cumsum([t.shape[ax] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, sizes, axis=ax))

    return _node(np.concatenate([t.data for t in tensors], axis=ax), tensors, backward)


def sum_all(a: Tensor) -> Tensor:
    return _node(np.asarray(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, a.shape).copy(),))


def mean_all(a: Tensor) -> Tensor:
    n = a.data.size
    return _node(np.asarray(a.data.mean()), (a,), lambda g: (np.full(a.shape, float(g) / n),))


def embedding_lookup(table: Tensor, ids) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeMismatch(f"embedding_lookup: table must be 2-D, got {table.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexError(f"embedding_lookup: id out of range for table of {table.shape[0]} rows")

    def backward(g):
        out = np.zeros_like(table.data)
        np.add.at(out, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        return (out,)

    return _node(table.data[ids], (table,), backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-12) -> Tensor:
    if gamma.shape != x.shape[-1:] or beta.shape != x.shape[-1:]:
        raise ShapeMismatch(f"layer_norm: affine shapes {gamma.shape}/{beta.shape} vs input {x.shape}")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    y = xhat * gamma.data + beta.data

    def backward(g):
        n = x.shape[-1]
        gx_hat = g * gamma.data
        gx = inv / n * (n * gx_hat - gx_hat.sum(-1, keepdims=True) - xhat * (gx_hat * xhat).sum(-1, keepdims=True))
        lead = tuple(range(g.ndim - 1))
        return gx, (g * xhat).sum(axis=lead), g.sum(axis=lead)

    return _node(y, (x, gamma, beta), backward)


def _masked_softmax(z: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    if mask is None:
        z = z - z.max(axis=-1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=-1, keepdims=True)
    masked = np.where(mask, z, -np.inf)
    top = masked.max(axis=-1, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    e = np.where(mask, np.exp(masked - top), 0.0)
    total = e.sum(axis=-1, keepdims=True)
    return np.divide(e, total, out=np.zeros_like(e), where=total > 0)


def _check_mask(x: Tensor, mask) -> np.ndarray | None:
    if mask is None:
        return None
    mask = np.asarray(mask, dtype=bool)
    try:
        np.broadcast_shapes(mask.shape, x.shape)
    except ValueError:
        raise ShapeMismatch(f"softmax: mask shape {mask.shape} does not match logits {x.shape}") from None
    return mask


def softmax(x: Tensor, mask=None) -> Tensor:
    """Softmax over the last axis; masked-out entries get exactly zero."""
    mask = _check_mask(x, mask)
    p = _masked_softmax(x.data, mask)

    def backward(g):
        return (p * (g - (g * p).sum(axis=-1, keepdims=True)),)

    return _node(p, (x,), backward)


def cross_entropy(logits: Tensor, targets, mask=None) -> Tensor:
    """Mean negative log-likelihood of integer ``targets`` over the batch.

    ``logits`` is (batch, classes); ``mask`` restricts the softmax support per row.
    """
    if logits.ndim != 2:
        raise ShapeMismatch(f"cross_entropy: expected (batch, classes) logits, got {logits.shape}")
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    if targets.shape[0] != logits.shape[0]:
        raise ShapeMismatch(f"cross_entropy: {targets.shape[0]} targets for logits {logits.shape}")
    mask = _check_mask(logits, mask)
    p = _masked_softmax(logits.data, mask)
    rows = np.arange(targets.shape[0])
    if mask is not None and not np.all(np.broadcast_to(mask, logits.shape)[rows, targets]):
        raise ValueError("cross_entropy: a target falls outside its mask")
    # log-sum-exp form stays accurate when the picked probability underflows
    z = logits.data if mask is None else np.where(mask, logits.data, -np.inf)
    top = z.max(axis=-1)
    lse = top + np.log(np.exp(z - top[:, None]).sum(axis=-1))
    loss = float(np.mean(lse - logits.data[rows, targets]))
    n = targets.shape[0]

    def backward(g):
        d = p.copy()
        d[rows, targets] -= 1.0
        return (d * (float(g) / n),)

    return _node(np.asarray(loss), (logits,), backward)


# ---------------------------------------------------------------------------
# parameters, initialisation, optimisation
# ---------------------------------------------------------------------------

def init_parameter(name: str, shape: tuple[int, ...], seed: int, std: float = 0.02,
                   kind: str = "normal") -> Parameter:
    """Seeded per-name init, so a parameter's start value never depends on
    which other parameters a model happens to own."""
    if kind == "zeros":
        return Parameter(np.zeros(shape), name=name)
    if kind == "ones":
        return Parameter(np.ones(shape), name=name)
    rng = np.random.default_rng([seed, zlib.crc32(name.encode())])
    values = rng.normal(0.0, std, size=shape)
    # truncate at two standard deviations by resampling
    bad = np.abs(values) > 2 * std
    while bad.any():
        values[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(values) > 2 * std
    return Parameter(values, name=name)


def adam_step(params: Iterable[Parameter], lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """One bias-corrected Adam update; gradients are cleared afterwards.

    Frozen parameters are skipped entirely, including their step counter.
    """
    for p in params:
        if p.frozen:
            p.grad = None
            continue
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        p.step += 1
        p.m = beta1 * p.m + (1 - beta1) * g
        p.v = beta2 * p.v + (1 - beta2) * g * g
        m_hat = p.m / (1 - beta1**p.step)
        v_hat = p.v / (1 - beta2**p.step)
        p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)
        p.grad = None


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def dumps_checkpoint(params: dict[str, Tensor], meta: dict | None = None) -> str:
    """Serialize name -> (shape, values).  Same parameters give the same bytes."""
    body = {
        "version": CHECKPOINT_VERSION,
        "meta": meta or {},
        "params": {
            name: {"shape": list(t.shape), "values": [float(v) for v in t.data.reshape(-1)]}
            for name, t in sorted(params.items())
        },
    }
    return json.dumps(body, sort_keys=True, separators=(",", ":"))


def loads_checkpoint(text: str) -> tuple[dict[str, np.ndarray], dict]:
    body = json.loads(text)
    if body.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {body.get('version')!r}")
    arrays = {
        name: np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in body["params"].items()
    }
    return arrays, body.get("meta", {})


def numerical_gradient(f: Callable[[], float], p: np.ndarray, index, h: float = 1e-5) -> float:
    """Central difference of ``f`` w.r.t. one entry of the array ``p`` (mutated in place)."""
    old = p[index]
    p[index] = old + h
    up = f()
    p[index] = old - h
    down = f()
    p[index] = old
    return (up - down) / (2 * h)
