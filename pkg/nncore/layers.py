"""
Parâmetros, módulos e camadas sobre nncore.tensor.

Inicialização: pesos uniformes em ±1/sqrt(fan_in), vieses a zero,
embeddings e tokens de consulta N(0, 0.02²).
"""
import logging
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from errors import ConfigError, ShapeError
from nncore.tensor import (
    Tensor, concat, default_dtype, embedding_lookup, gelu, layer_norm, masked_fill, matmul, softmax,
)

logger = logging.getLogger(__name__)

EMBED_STD = 0.02


class Parameter(Tensor):
    """Tensor treinável com nome, inicializador e estado Adam (m, v)."""

    def __init__(self, data, init: str = "", name: str = ""):
        super().__init__(np.array(data, dtype=default_dtype()), requires_grad=True)
        self.init = init
        self.name = name
        self.m = np.zeros_like(self.data)
        self.v = np.zeros_like(self.data)

    def __repr__(self) -> str:
        return f"Parameter({self.name or '?'}, shape={self.shape}, init={self.init})"


def uniform_fan_in(rng: np.random.Generator, fan_in: int, shape) -> Parameter:
    bound = 1.0 / np.sqrt(fan_in)
    return Parameter(rng.uniform(-bound, bound, size=shape), init="uniform_fan_in")


def zeros(shape) -> Parameter:
    return Parameter(np.zeros(shape), init="zeros")


def ones(shape) -> Parameter:
    return Parameter(np.ones(shape), init="ones")


def normal_embed(rng: np.random.Generator, shape) -> Parameter:
    return Parameter(rng.normal(0.0, EMBED_STD, size=shape), init="normal_0.02")


class Module:
    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Parameter):
                yield name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(name + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> List[Parameter]:
        out = []
        for name, p in self.named_parameters():
            p.name = name
            out.append(p)
        return out

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        extra = sorted(set(state) - set(own))
        if missing or extra:
            raise ShapeError(f"parameter names differ: missing={missing[:5]} unexpected={extra[:5]}")
        for name, p in own.items():
            arr = np.asarray(state[name])
            if arr.shape != p.shape:
                raise ShapeError(f"{name}: checkpoint shape {arr.shape} vs model shape {p.shape}")
            p.data = arr.astype(p.dtype)
            p.m = np.zeros_like(p.data)
            p.v = np.zeros_like(p.data)

    def parameter_count(self) -> int:
        return int(sum(p.data.size for p in self.parameters()))


# ====================== Camadas ===================================
class Linear(Module):
    """y = x @ W + b, com W de forma (n_in, n_out)."""

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = uniform_fan_in(rng, n_in, (n_in, n_out))
        self.bias = zeros((n_out,)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.weight.shape[0]:
            raise ShapeError(f"linear: input shape {x.shape} vs weight shape {self.weight.shape}")
        y = matmul(x, self.weight)
        return y + self.bias if self.bias is not None else y


class LayerNorm(Module):
    def __init__(self, d: int, eps: float = 1e-5):
        self.gain = ones((d,))
        self.bias = zeros((d,))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias, self.eps)


class Embedding(Module):
    def __init__(self, n: int, d: int, rng: np.random.Generator):
        self.table = normal_embed(rng, (n, d))

    def __call__(self, idx) -> Tensor:
        return embedding_lookup(self.table, idx)


class MLP(Module):
    """Perceptrão de duas camadas com GELU."""

    def __init__(self, n_in: int, hidden: int, n_out: int, rng: np.random.Generator):
        self.fc1 = Linear(n_in, hidden, rng)
        self.fc2 = Linear(hidden, n_out, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(gelu(self.fc1(x)))


def causal_deny(n: int) -> np.ndarray:
    """True acima da diagonal: a posição i não vê j > i."""
    return np.triu(np.ones((n, n), dtype=bool), k=1)


def attention(q: Tensor, k: Tensor, v: Tensor, deny: Optional[np.ndarray] = None) -> Tuple[Tensor, Tensor]:
    """Atenção de produto escalar escalado de uma cabeça; devolve (saída, pesos)."""
    if q.shape[-1] != k.shape[-1] or k.shape[0] != v.shape[0]:
        raise ShapeError(f"attention: q {q.shape}, k {k.shape}, v {v.shape}")
    scores = matmul(q, k.T) * (1.0 / float(np.sqrt(q.shape[-1])))
    if deny is not None:
        scores = masked_fill(scores, deny)
    w = softmax(scores)
    return matmul(w, v), w


class MultiHeadAttention(Module):
    """
    Projeções q/k/v por cabeça e projeção de saída. keep (bool, True = visível)
    e causal combinam-se; nenhuma linha pode ficar totalmente mascarada.
    Chaves sem viés.
    """

    def __init__(self, d: int, heads: int, rng: np.random.Generator):
        if heads < 1 or d % heads:
            raise ConfigError(f"model width {d} is not divisible by heads={heads}")
        self.heads = heads
        self.q_proj = Linear(d, d, rng)
        self.k_proj = Linear(d, d, rng, bias=False)
        self.v_proj = Linear(d, d, rng)
        self.o_proj = Linear(d, d, rng)
        self.last_weights: List[np.ndarray] = []

    def __call__(self, query: Tensor, key: Tensor, value: Tensor,
                 keep: Optional[np.ndarray] = None, causal: bool = False) -> Tensor:
        deny = None
        if keep is not None:
            deny = ~np.asarray(keep, dtype=bool)
        if causal:
            c = causal_deny(query.shape[0])
            if key.shape[0] != query.shape[0]:
                raise ShapeError(f"causal attention needs equal lengths, got {query.shape} and {key.shape}")
            deny = c if deny is None else (deny | c)
        Q, K, V = self.q_proj(query), self.k_proj(key), self.v_proj(value)
        dh = Q.shape[1] // self.heads
        outs, self.last_weights = [], []
        for h in range(self.heads):
            cols = (slice(None), slice(h * dh, (h + 1) * dh))
            o, w = attention(Q[cols], K[cols], V[cols], deny)
            outs.append(o)
            self.last_weights.append(w.data)
        return self.o_proj(concat(outs, axis=1) if self.heads > 1 else outs[0])


def multi_head_attention(Q: Tensor, K: Tensor, V: Tensor, heads: int, mha: MultiHeadAttention,
                         keep: Optional[np.ndarray] = None, causal: bool = False) -> Tensor:
    if mha.heads != heads:
        raise ConfigError(f"attention block has {mha.heads} heads, asked for {heads}")
    return mha(Q, K, V, keep=keep, causal=causal)


class TransformerBlock(Module):
    """Bloco pre-LN: x + MHA(LN(x)); x + FFN(LN(x))."""

    def __init__(self, d: int, heads: int, rng: np.random.Generator, ffn_mult: int = 4):
        self.ln1 = LayerNorm(d)
        self.attn = MultiHeadAttention(d, heads, rng)
        self.ln2 = LayerNorm(d)
        self.ffn = MLP(d, ffn_mult * d, d, rng)

    def __call__(self, x: Tensor, causal: bool = True) -> Tensor:
        h = self.ln1(x)
        x = x + self.attn(h, h, h, causal=causal)
        return x + self.ffn(self.ln2(x))
