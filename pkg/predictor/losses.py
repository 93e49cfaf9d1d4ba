"""
Perdas do preditor.

loss_traj soma a norma L1 sobre os três eixos (média em lote e passos), por
isso vale 3x o trajectory_mae das métricas, que faz média também nos eixos.
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from errors import DomainError, ShapeError
from nncore.tensor import Tensor, abs_, log_softmax, mul, sum_


@dataclass
class LossBreakdown:
    total: Tensor
    traj: float
    theta: float
    phi: float
    r: float
    lambda_loss: float

    @property
    def beam(self) -> float:
        return self.theta + self.phi + self.r


def loss_traj(pred: Tensor, true) -> Tensor:
    """(1/T) Σ_t ||p̂_t - p_t||₁ para uma sequência (T x 3)."""
    true = np.asarray(true)
    if pred.shape != true.shape:
        raise ShapeError(f"trajectory loss: prediction shape {pred.shape} vs target shape {true.shape}")
    return sum_(abs_(pred - Tensor(true.astype(pred.dtype)))) * (1.0 / pred.shape[0])


def kl_rows(logits: Tensor, target) -> Tensor:
    """(1/T) Σ_t KL(p_t ‖ softmax(l_t)), com 0·log 0 = 0."""
    p = np.asarray(target, dtype=logits.dtype)
    if p.shape != logits.shape:
        raise ShapeError(f"beam loss: logits shape {logits.shape} vs target shape {p.shape}")
    pos = p > 0
    neg_entropy = float(np.sum(p[pos] * np.log(p[pos])))
    cross = sum_(mul(log_softmax(logits), Tensor(p)))
    return (Tensor(np.asarray(neg_entropy, dtype=logits.dtype)) - cross) * (1.0 / logits.shape[0])


def loss_beam(logits: Sequence[Tensor], targets: Sequence) -> Sequence[Tensor]:
    """Perdas por dimensão (θ, φ, r)."""
    return [kl_rows(l, p) for l, p in zip(logits, targets)]


def loss_total(l_traj: Tensor, l_beam: Tensor, lambda_loss: float = 10.0) -> Tensor:
    if lambda_loss < 0:
        raise DomainError(f"lambda must be >= 0, got {lambda_loss}")
    return l_traj + l_beam * lambda_loss


def batch_loss(model, samples: Sequence, lambda_loss: float) -> LossBreakdown:
    """Média em lote de L_traj + λ (L^θ + L^φ + L^r), um grafo para todo o lote."""
    if not samples:
        raise ShapeError("empty batch")
    total = None
    acc = np.zeros(4)
    for s in samples:
        out = model(s.gps_prev, s.cloud, s.mode)
        lt = loss_traj(out.trajectory, s.future)
        lb = loss_beam((out.logits_theta, out.logits_phi, out.logits_r), s.soft)
        beam = lb[0] + lb[1] + lb[2]
        term = loss_total(lt, beam, lambda_loss)
        total = term if total is None else total + term
        acc += [lt.item(), lb[0].item(), lb[1].item(), lb[2].item()]
    B = len(samples)
    acc /= B
    return LossBreakdown(total * (1.0 / B), *acc.tolist(), lambda_loss=lambda_loss)
