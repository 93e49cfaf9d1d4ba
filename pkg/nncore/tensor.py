"""
Tensor com diferenciação automática em modo reverso sobre numpy.

Cada primitiva cria o nó de saída e fecha sobre um _backward que acumula
gradientes nos pais; backward() percorre a ordem topológica ao contrário.
float32 por omissão; precision(np.float64) para verificações de gradiente.
"""
import contextlib
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from errors import ShapeError

_DEFAULT_DTYPE = [np.float32]
_GRAD_ENABLED = [True]

GELU_C = float(np.sqrt(2.0 / np.pi))


def default_dtype():
    return _DEFAULT_DTYPE[0]


def set_default_dtype(dtype) -> None:
    _DEFAULT_DTYPE[0] = np.dtype(dtype).type


@contextlib.contextmanager
def precision(dtype):
    old = _DEFAULT_DTYPE[0]
    set_default_dtype(dtype)
    try:
        yield
    finally:
        _DEFAULT_DTYPE[0] = old


@contextlib.contextmanager
def no_grad():
    """Sem fita: as operações dentro do bloco não guardam pais nem _backward."""
    old = _GRAD_ENABLED[0]
    _GRAD_ENABLED[0] = False
    try:
        yield
    finally:
        _GRAD_ENABLED[0] = old


def _as_array(data) -> np.ndarray:
    arr = np.asarray(data)
    if arr.dtype == default_dtype():
        return arr
    return arr.astype(default_dtype())


class Tensor:
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, _parents: Tuple["Tensor", ...] = (), _op: str = ""):
        self.data = data if isinstance(data, np.ndarray) and data.dtype.kind == "f" and _parents else _as_array(data)
        if _parents:
            requires_grad = _GRAD_ENABLED[0] and any(p.requires_grad for p in _parents)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._parents = _parents if self.requires_grad else ()
        self._backward: Callable[[], None] = lambda: None
        self._op = _op

    # ------------------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op or 'leaf'}, requires_grad={self.requires_grad})"

    def _accum(self, g: np.ndarray) -> None:
        if not self.requires_grad:
            return
        g = _unbroadcast(g, self.data.shape)
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        if not self.requires_grad:
            return
        if grad is None:
            if self.data.size != 1:
                raise ShapeError(f"backward() without a seed gradient needs a scalar, got shape {self.shape}")
            grad = np.ones_like(self.data)
        topo, seen = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._accum(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(topo):
            if node.grad is not None:
                node._backward()

    # operadores -------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_lift(other, self)))

    def __rsub__(self, other):
        return add(_lift(other, self), neg(self))

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("division by a Tensor is not a supported primitive")
        return mul(self, 1.0 / other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return slice_(self, key)

    @property
    def T(self) -> "Tensor":
        return transpose(self)


def _lift(x, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.dtype if like is not None else default_dtype()
    return Tensor(np.asarray(x, dtype=dtype))


def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# ====================== Primitivas ================================
def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b, a if isinstance(a, Tensor) else None)
    _check_broadcast(a, b, "add")
    out = Tensor(a.data + b.data, _parents=(a, b), _op="add")

    def _backward():
        a._accum(out.grad)
        b._accum(out.grad)
    out._backward = _backward
    return out


def neg(a: Tensor) -> Tensor:
    out = Tensor(-a.data, _parents=(a,), _op="neg")

    def _backward():
        a._accum(-out.grad)
    out._backward = _backward
    return out


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b, a if isinstance(a, Tensor) else None)
    _check_broadcast(a, b, "mul")
    out = Tensor(a.data * b.data, _parents=(a, b), _op="mul")

    def _backward():
        a._accum(out.grad * b.data)
        b._accum(out.grad * a.data)
    out._backward = _backward
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = Tensor(a.data @ b.data, _parents=(a, b), _op="matmul")

    def _backward():
        a._accum(out.grad @ b.data.T)
        b._accum(a.data.T @ out.grad)
    out._backward = _backward
    return out


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {a.shape}")
    out = Tensor(a.data.T, _parents=(a,), _op="transpose")

    def _backward():
        a._accum(out.grad.T)
    out._backward = _backward
    return out


def concat(xs: Sequence[Tensor], axis: int = -1) -> Tensor:
    xs = [_lift(x) for x in xs]
    try:
        data = np.concatenate([x.data for x in xs], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: incompatible shapes {[x.shape for x in xs]} along axis {axis}") from None
    out = Tensor(data, _parents=tuple(xs), _op="concat")
    bounds = np.cumsum([0] + [x.shape[axis] for x in xs])

    def _backward():
        for x, lo, hi in zip(xs, bounds[:-1], bounds[1:]):
            x._accum(np.take(out.grad, np.arange(lo, hi), axis=axis))
    out._backward = _backward
    return out


def _basic_key(key) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return all(k is None or k is Ellipsis or isinstance(k, (int, np.integer, slice)) for k in parts)


def slice_(a: Tensor, key) -> Tensor:
    out = Tensor(np.array(a.data[key]), _parents=(a,), _op="slice")
    basic = _basic_key(key)

    def _backward():
        g = np.zeros_like(a.data)
        if basic:
            g[key] += out.grad
        else:
            np.add.at(g, key, out.grad)
        a._accum(g)
    out._backward = _backward
    return out


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = Tensor(np.asarray(a.data.sum(axis=axis, keepdims=keepdims)), _parents=(a,), _op="sum")

    def _backward():
        g = out.grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accum(np.broadcast_to(g, a.shape))
    out._backward = _backward
    return out


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    n = a.data.size if axis is None else a.shape[axis]
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / n)


def softmax(a: Tensor) -> Tensor:
    """Softmax ao longo do último eixo."""
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(y, _parents=(a,), _op="softmax")

    def _backward():
        g = out.grad
        a._accum(y * (g - (g * y).sum(axis=-1, keepdims=True)))
    out._backward = _backward
    return out


def log_softmax(a: Tensor) -> Tensor:
    z = a.data - a.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    y = z - lse
    out = Tensor(y, _parents=(a,), _op="log_softmax")

    def _backward():
        g = out.grad
        a._accum(g - np.exp(y) * g.sum(axis=-1, keepdims=True))
    out._backward = _backward
    return out


def layer_norm(x: Tensor, gain: Optional[Tensor] = None, bias: Optional[Tensor] = None, eps: float = 1e-5) -> Tensor:
    """Normalização por linha (último eixo), com ganho/viés opcionais."""
    d = x.shape[-1]
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    y = xhat
    if gain is not None:
        y = y * gain.data
    if bias is not None:
        y = y + bias.data
    parents = tuple(t for t in (x, gain, bias) if t is not None)
    out = Tensor(y, _parents=parents, _op="layer_norm")

    def _backward():
        g = out.grad
        dxhat = g * gain.data if gain is not None else g
        x._accum(inv / d * (d * dxhat - dxhat.sum(axis=-1, keepdims=True)
                            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)))
        if gain is not None:
            gain._accum((g * xhat).reshape(-1, d).sum(axis=0).reshape(gain.shape))
        if bias is not None:
            bias._accum(g.reshape(-1, d).sum(axis=0).reshape(bias.shape))
    out._backward = _backward
    return out


def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0), _parents=(a,), _op="relu")

    def _backward():
        a._accum(out.grad * (a.data > 0))
    out._backward = _backward
    return out


def gelu(a: Tensor) -> Tensor:
    """Aproximação tanh da GELU."""
    x = a.data
    t = np.tanh(GELU_C * (x + 0.044715 * x ** 3))
    out = Tensor(0.5 * x * (1.0 + t), _parents=(a,), _op="gelu")

    def _backward():
        dt = (1.0 - t * t) * GELU_C * (1.0 + 3 * 0.044715 * x * x)
        a._accum(out.grad * (0.5 * (1.0 + t) + 0.5 * x * dt))
    out._backward = _backward
    return out


def sigmoid(a: Tensor) -> Tensor:
    y = 0.5 * (1.0 + np.tanh(0.5 * a.data))
    out = Tensor(y, _parents=(a,), _op="sigmoid")

    def _backward():
        a._accum(out.grad * y * (1.0 - y))
    out._backward = _backward
    return out


def abs_(a: Tensor) -> Tensor:
    out = Tensor(np.abs(a.data), _parents=(a,), _op="abs")

    def _backward():
        a._accum(out.grad * np.sign(a.data))
    out._backward = _backward
    return out


def embedding_lookup(table: Tensor, idx) -> Tensor:
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeError(f"embedding index out of range for table shape {table.shape}: {idx.tolist()}")
    out = Tensor(table.data[idx], _parents=(table,), _op="embedding")

    def _backward():
        g = np.zeros_like(table.data)
        np.add.at(g, idx, out.grad)
        table._accum(g)
    out._backward = _backward
    return out


def cumsum(a: Tensor, axis: int = 0) -> Tensor:
    """Soma cumulativa ao longo do tempo; o backward é a soma cumulativa invertida."""
    out = Tensor(np.cumsum(a.data, axis=axis), _parents=(a,), _op="cumsum")

    def _backward():
        a._accum(np.flip(np.cumsum(np.flip(out.grad, axis=axis), axis=axis), axis=axis))
    out._backward = _backward
    return out


def masked_fill(a: Tensor, deny: np.ndarray, value: float = -np.inf) -> Tensor:
    """Substitui as posições deny por value (constante, sem gradiente)."""
    deny = np.asarray(deny, dtype=bool)
    try:
        np.broadcast_shapes(deny.shape, a.shape)
    except ValueError:
        raise ShapeError(f"masked_fill: mask shape {deny.shape} does not match {a.shape}") from None
    out = Tensor(np.where(deny, a.data.dtype.type(value), a.data), _parents=(a,), _op="masked_fill")

    def _backward():
        a._accum(np.where(deny, 0.0, out.grad).astype(a.data.dtype))
    out._backward = _backward
    return out


def repeat_rows(a: Tensor, n: int) -> Tensor:
    """(1 x d) -> (n x d) via produto com uma coluna de uns."""
    if a.data.ndim != 2 or a.shape[0] != 1:
        raise ShapeError(f"repeat_rows expects a (1, d) row, got {a.shape}")
    return matmul(Tensor(np.ones((n, 1), dtype=a.dtype)), a)
