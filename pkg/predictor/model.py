"""
Preditor em cascata trajetória -> feixe.

Por sequência: tokens de contexto (nuvem de pontos, posição, tarefa),
alinhamento por modalidade, fusão com porta, backbone causal com tokens de
consulta futuros e as duas cabeças. Todas as posições entram normalizadas
como (p - bs) / coverage_radius e a trajetória sai de volta em metros.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from errors import ShapeError
from nncore.layers import (
    MLP, Embedding, LayerNorm, Linear, Module, MultiHeadAttention, TransformerBlock, normal_embed,
)
from nncore.tensor import Tensor, concat, cumsum, mean, repeat_rows, sigmoid
from prompts import TASK_MODE_COUNT, task_mode_label

logger = logging.getLogger(__name__)


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    d_model: int = 64
    heads: int = 4
    backbone_layers: int = 2
    T_prev: int = 10
    T_pred: int = 10
    K: int = 3
    gamma: float = 0.5
    lambda_loss: float = 10.0
    N: int = 20
    S: int = 10
    point_feature_dim: int = 32
    task_mode_count: int = TASK_MODE_COUNT
    lr: float = 1e-3
    batch_size: int = 16
    epochs: int = 50
    seed: int = 0
    # modalidades de contexto (ablação); a posição está sempre presente
    use_points: bool = True
    use_task: bool = True
    # True: a perda de feixe não retropropaga através de p̂
    detach_trajectory: bool = False
    bs_position: Tuple[float, float, float] = (0.0, 0.0, 25.0)
    coverage_radius: float = 170.0

    @field_validator("d_model", "heads", "T_prev", "T_pred", "K", "N", "S",
                     "point_feature_dim", "task_mode_count", "batch_size", "epochs")
    @classmethod
    def positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be >= 1, got {v}")
        return v

    @field_validator("backbone_layers")
    @classmethod
    def non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"must be >= 0, got {v}")
        return v

    @model_validator(mode="after")
    def consistent(self):
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} must be divisible by heads={self.heads}")
        if self.lambda_loss < 0:
            raise ValueError(f"lambda_loss must be >= 0, got {self.lambda_loss}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.coverage_radius <= 0 or self.lr <= 0:
            raise ValueError("coverage_radius and lr must be > 0")
        return self

    @property
    def context_modalities(self) -> List[str]:
        mods = ["points"] if self.use_points else []
        mods.append("pos")
        if self.use_task:
            mods.append("task")
        return mods


@dataclass
class TokenSet:
    context: Tensor          # (n_ctx * T_prev) x d, bloco por modalidade
    traj: Tensor             # T_prev x d
    fused: Tensor            # T_prev x d
    env_mean: Tensor         # 1 x d


@dataclass
class PredictionOutput:
    trajectory: Tensor       # T_pred x 3 (m)
    logits_theta: Tensor     # T_pred x N
    logits_phi: Tensor       # T_pred x N
    logits_r: Tensor         # T_pred x S
    hidden: Tensor           # (T_prev + T_pred) x d
    tokens: Optional[TokenSet] = None

    def beam_logits(self, t: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.logits_theta.data[t], self.logits_phi.data[t], self.logits_r.data[t]


def sort_points(cloud: np.ndarray) -> np.ndarray:
    """Ordem lexicográfica (x, y, z): saída independente da ordem de entrada, bit a bit."""
    cloud = np.asarray(cloud)
    return cloud[np.lexsort((cloud[:, 2], cloud[:, 1], cloud[:, 0]))]


class ContextFusion(Module):
    """c = h + FFN(LN(h)), h = c_traj + g ⊙ CrossAttn(c_traj, ctx), g = σ(W_g [c_traj ‖ attn])."""

    def __init__(self, d: int, heads: int, rng: np.random.Generator):
        self.cross = MultiHeadAttention(d, heads, rng)
        self.gate = Linear(2 * d, d, rng)
        self.ln = LayerNorm(d)
        self.ffn = MLP(d, 4 * d, d, rng)
        self.gate_override: Optional[float] = None

    def __call__(self, c_traj: Tensor, context: Tensor, keep: Optional[np.ndarray] = None) -> Tensor:
        attn = self.cross(c_traj, context, context, keep=keep)
        if self.gate_override is not None:
            g = Tensor(np.full(attn.shape, self.gate_override, dtype=attn.dtype))
        else:
            g = sigmoid(self.gate(concat([c_traj, attn], axis=1)))
        h = c_traj + g * attn
        return h + self.ffn(self.ln(h))


def slot_keep_mask(T: int, n_ctx: int) -> np.ndarray:
    """Cada slot t vê apenas os seus n_ctx tokens (linhas j*T + t do contexto empilhado)."""
    keep = np.zeros((T, n_ctx * T), dtype=bool)
    for j in range(n_ctx):
        keep[np.arange(T), j * T + np.arange(T)] = True
    return keep


class TrackingModel(Module):
    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed)
        d = cfg.d_model
        # codificadores
        self.pos_encoder = MLP(3, d, d, rng)                    # E_pos (consulta da atenção e cabeça de feixe)
        self.pos_proj = Linear(3, d, rng, bias=False)           # W_pos (token bruto de posição)
        self.point_encoder = MLP(3, cfg.point_feature_dim, d, rng)
        self.point_attn = MultiHeadAttention(d, 1, rng)
        self.task_table = Embedding(cfg.task_mode_count, d, rng)
        # alinhamento por modalidade: LN(W_u z)
        self.align_points = Linear(d, d, rng)
        self.align_points_ln = LayerNorm(d)
        self.align_pos = Linear(d, d, rng)
        self.align_pos_ln = LayerNorm(d)
        self.align_task = Linear(d, d, rng)
        self.align_task_ln = LayerNorm(d)
        self.traj_proj = Linear(d, d, rng)
        self.fusion = ContextFusion(d, cfg.heads, rng)
        # backbone
        self.future_queries = normal_embed(rng, (cfg.T_pred, d))
        self.temporal = normal_embed(rng, (cfg.T_prev + cfg.T_pred, d))
        self.blocks = [TransformerBlock(d, cfg.heads, rng) for _ in range(cfg.backbone_layers)]
        # cabeças
        self.traj_head = MLP(d, d, 3, rng)
        self.beam_mlp = MLP(3 * d, d, d, rng)
        self.head_theta = Linear(d, cfg.N, rng)
        self.head_phi = Linear(d, cfg.N, rng)
        self.head_r = Linear(d, cfg.S, rng)
        self.parameters()  # fixa os nomes pontuados

    # ---------------------------------------------------------------
    def normalize(self, p) -> np.ndarray:
        return (np.asarray(p, float) - np.asarray(self.cfg.bs_position)) / self.cfg.coverage_radius

    def denormalize(self, p: Tensor) -> Tensor:
        bs = Tensor(np.asarray(self.cfg.bs_position, dtype=p.dtype))
        return p * self.cfg.coverage_radius + bs

    def encode_position(self, p_norm: Tensor) -> Tensor:
        """Token bruto z_pos = W_pos p (sem viés)."""
        return self.pos_proj(p_norm)

    def encode_points(self, cloud_norm: np.ndarray, p_norm: Tensor) -> Tensor:
        if len(cloud_norm) == 0:
            raise ShapeError("point cloud is empty")
        feats = self.point_encoder(Tensor(sort_points(cloud_norm)))
        query = self.pos_encoder(p_norm)
        return self.point_attn(query, feats, feats)

    def align(self, z_raw: Tensor, modality: str) -> Tensor:
        proj, ln = {
            "points": (self.align_points, self.align_points_ln),
            "pos": (self.align_pos, self.align_pos_ln),
            "task": (self.align_task, self.align_task_ln),
        }[modality]
        return ln(proj(z_raw))

    def fuse_context(self, c_traj: Tensor, context: Tensor, n_ctx: int) -> Tensor:
        return self.fusion(c_traj, context, keep=slot_keep_mask(c_traj.shape[0], n_ctx))

    def backbone_forward(self, fused: Tensor) -> Tuple[Tensor, Tensor]:
        T_prev, T_pred = self.cfg.T_prev, self.cfg.T_pred
        if fused.shape[0] != T_prev:
            raise ShapeError(f"backbone expects {T_prev} context slots, got {fused.shape[0]}")
        x = concat([fused, self.future_queries], axis=0) + self.temporal
        for block in self.blocks:
            x = block(x, causal=True)
        return x, x[T_prev:]

    def trajectory_head(self, s_pred: Tensor, anchor_norm: np.ndarray) -> Tuple[Tensor, Tensor]:
        """(p̂ normalizada, p̂ em metros); p̂_t = âncora + Σ_{τ<=t} Δ_τ."""
        delta = self.traj_head(s_pred)
        p_norm = cumsum(delta, axis=0) + Tensor(np.asarray(anchor_norm).reshape(1, 3))
        return p_norm, self.denormalize(p_norm)

    def beam_head(self, s_pred: Tensor, p_hat_norm: Tensor, env_mean: Tensor) -> Tuple[Tensor, Tensor, Tensor]:
        if self.cfg.detach_trajectory:
            p_hat_norm = p_hat_norm.detach()
        env = repeat_rows(env_mean, s_pred.shape[0])
        u = self.beam_mlp(concat([s_pred, self.pos_encoder(p_hat_norm), env], axis=1))
        return self.head_theta(u), self.head_phi(u), self.head_r(u)

    # ---------------------------------------------------------------
    def tokens(self, gps_prev, cloud, mode: int) -> TokenSet:
        cfg = self.cfg
        gps_norm = self.normalize(gps_prev)
        if gps_norm.shape != (cfg.T_prev, 3):
            raise ShapeError(f"GPS window shape {gps_norm.shape}, expected ({cfg.T_prev}, 3)")
        p = Tensor(gps_norm)
        aligned = {}
        if cfg.use_points:
            aligned["points"] = self.align(self.encode_points(self.normalize(cloud), p), "points")
        aligned["pos"] = self.align(self.encode_position(p), "pos")
        if cfg.use_task:
            task = self.task_table([task_mode_label(mode)])
            aligned["task"] = self.align(repeat_rows(task, cfg.T_prev), "task")
        mods = cfg.context_modalities
        context = concat([aligned[m] for m in mods], axis=0) if len(mods) > 1 else aligned["pos"]
        c_traj = self.traj_proj(aligned["pos"])
        fused = self.fuse_context(c_traj, context, len(mods))
        return TokenSet(context=context, traj=c_traj, fused=fused, env_mean=mean(context, axis=0, keepdims=True))

    def forward(self, gps_prev, cloud, mode: int, keep_tokens: bool = False) -> PredictionOutput:
        tok = self.tokens(gps_prev, cloud, mode)
        hidden, s_pred = self.backbone_forward(tok.fused)
        anchor = self.normalize(np.asarray(gps_prev)[-1])
        p_norm, p_m = self.trajectory_head(s_pred, anchor)
        lt, lp, lr = self.beam_head(s_pred, p_norm, tok.env_mean)
        return PredictionOutput(p_m, lt, lp, lr, hidden, tok if keep_tokens else None)

    __call__ = forward


def build_model(cfg: ModelConfig) -> TrackingModel:
    model = TrackingModel(cfg)
    logger.info("model: d=%d heads=%d layers=%d modalities=%s params=%d",
                cfg.d_model, cfg.heads, cfg.backbone_layers, "+".join(cfg.context_modalities),
                model.parameter_count())
    return model
