"""
Verificação de gradientes por diferenças finitas centrais, em float64.
"""
import logging
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from errors import ShapeError
from nncore import tensor as nt
from nncore.tensor import Tensor, precision

logger = logging.getLogger(__name__)

PRIMITIVE_TOL = 1e-6


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    a, n = np.abs(analytic), np.abs(numeric)
    denom = np.maximum(np.maximum(a, n), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def grad_check(fn: Callable[[], Tensor], inputs: Sequence[Tensor], eps: float = 1e-5,
               max_coords: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> float:
    """
    fn() reconstrói o grafo a partir dos dados atuais de inputs e devolve um escalar.
    Compara o gradiente analítico com (f(x+eps) - f(x-eps)) / (2 eps) por coordenada;
    max_coords limita (por amostragem) as coordenadas verificadas por input.
    """
    for x in inputs:
        x.grad = None
    out = fn()
    if out.data.size != 1:
        raise ShapeError(f"grad_check needs a scalar output, got shape {out.shape}")
    out.backward()
    analytic = [np.zeros_like(x.data) if x.grad is None else x.grad.copy() for x in inputs]

    worst = 0.0
    for x, g in zip(inputs, analytic):
        flat = x.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = (rng or np.random.default_rng(0)).choice(flat.size, size=max_coords, replace=False)
        num = np.empty(len(coords))
        for j, i in enumerate(coords):
            keep = flat[i]
            flat[i] = keep + eps
            f_plus = fn().item()
            flat[i] = keep - eps
            f_minus = fn().item()
            flat[i] = keep
            num[j] = (f_plus - f_minus) / (2 * eps)
        worst = max(worst, relative_error(g.reshape(-1)[coords], num))
    return worst


# ====================== Suite de primitivas ========================
def _away_from_zero(rng, shape):
    return rng.uniform(0.2, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def _cases(rng: np.random.Generator) -> Dict[str, Callable[[], tuple]]:
    """Cada caso devolve (função do grafo, inputs) para uma forma aleatória."""

    def dims(k):
        return tuple(int(v) for v in rng.integers(2, 6, size=k))

    def weighted(out: Tensor, R: np.ndarray) -> Tensor:
        return nt.sum_(nt.mul(out, Tensor(R)))

    def unary(op, positive=False, **kw):
        def build():
            shape = dims(2)
            x = Tensor(np.abs(_away_from_zero(rng, shape)) if positive else _away_from_zero(rng, shape),
                       requires_grad=True)
            R = rng.normal(size=op(Tensor(x.data), **kw).shape)
            return (lambda: weighted(op(x, **kw), R)), [x]
        return build

    def binary(op):
        def build():
            n, m = dims(2)
            a = Tensor(rng.normal(size=(n, m)), requires_grad=True)
            b = Tensor(rng.normal(size=(m,)), requires_grad=True)
            R = rng.normal(size=(n, m))
            return (lambda: weighted(op(a, b), R)), [a, b]
        return build

    def matmul_case():
        n, k, m = dims(3)
        a = Tensor(rng.normal(size=(n, k)), requires_grad=True)
        b = Tensor(rng.normal(size=(k, m)), requires_grad=True)
        R = rng.normal(size=(n, m))
        return (lambda: weighted(nt.matmul(a, b), R)), [a, b]

    def concat_case():
        n, m1, m2 = dims(3)
        a = Tensor(rng.normal(size=(n, m1)), requires_grad=True)
        b = Tensor(rng.normal(size=(n, m2)), requires_grad=True)
        R = rng.normal(size=(n, m1 + m2))
        return (lambda: weighted(nt.concat([a, b], axis=1), R)), [a, b]

    def slice_case():
        n, m = dims(2)
        x = Tensor(rng.normal(size=(n + 2, m)), requires_grad=True)
        R = rng.normal(size=(n, m))
        return (lambda: weighted(x[1:n + 1], R)), [x]

    def layer_norm_case():
        n, m = dims(2)
        x = Tensor(rng.normal(size=(n, m)), requires_grad=True)
        g = Tensor(rng.normal(size=(m,)), requires_grad=True)
        b = Tensor(rng.normal(size=(m,)), requires_grad=True)
        R = rng.normal(size=(n, m))
        return (lambda: weighted(nt.layer_norm(x, g, b), R)), [x, g, b]

    def embedding_case():
        v, d = dims(2)
        table = Tensor(rng.normal(size=(v, d)), requires_grad=True)
        idx = rng.integers(0, v, size=v + 2)
        R = rng.normal(size=(len(idx), d))
        return (lambda: weighted(nt.embedding_lookup(table, idx), R)), [table]

    def masked_case():
        n, m = dims(2)
        x = Tensor(rng.normal(size=(n, m)), requires_grad=True)
        deny = rng.random((n, m)) < 0.3
        R = rng.normal(size=(n, m))
        return (lambda: weighted(nt.masked_fill(x, deny, 0.5), R)), [x]

    def mean_case():
        n, m = dims(2)
        x = Tensor(rng.normal(size=(n, m)), requires_grad=True)
        R = rng.normal(size=(m,))
        return (lambda: weighted(nt.mean(x, axis=0), R)), [x]

    return {
        "matmul": matmul_case,
        "add": binary(nt.add),
        "mul": binary(nt.mul),
        "concat": concat_case,
        "slice": slice_case,
        "mean": mean_case,
        "softmax": unary(nt.softmax),
        "log_softmax": unary(nt.log_softmax),
        "layer_norm": layer_norm_case,
        "relu": unary(nt.relu),
        "gelu": unary(nt.gelu),
        "sigmoid": unary(nt.sigmoid),
        "abs": unary(nt.abs_),
        "transpose": unary(nt.transpose),
        "embedding_lookup": embedding_case,
        "cumulative_sum": unary(nt.cumsum, axis=0),
        "masked_fill": masked_case,
    }


def primitive_suite(seed: int = 0, shapes_per_primitive: int = 5) -> Dict[str, float]:
    """Erro relativo máximo por primitiva, sobre formas aleatórias, em float64."""
    rng = np.random.default_rng(seed)
    results = {}
    with precision(np.float64):
        for name, build in _cases(rng).items():
            worst = 0.0
            for _ in range(shapes_per_primitive):
                fn, inputs = build()
                worst = max(worst, grad_check(fn, inputs))
            results[name] = worst
            logger.debug("gradcheck %-16s %.3e", name, worst)
    return results
