"""
Verdade de referência por varrimento exaustivo do codebook, alvos suaves
Top-K por dimensão e métricas de avaliação (MAE e Top-K por dimensão/conjunta).
"""
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

import config
from errors import DomainError, NoSignalError, ShapeError
from radio.array import steering_matrix
from radio.channel import LinkParams, beamformed_snr_many, spectral_efficiency
from radio.codebook import BeamIndex3D, Codebook3D, flat_index, unflatten

logger = logging.getLogger(__name__)

DIMENSIONS = ("theta", "phi", "r")
METRIC_COLUMNS = [
    "step", "mae_m",
    "top1_theta", "top1_phi", "top1_r", "top1_joint",
    "top5_theta", "top5_phi", "top5_r", "top5_joint",
]


@dataclass(frozen=True)
class BeamLabel:
    optimal: BeamIndex3D
    topk: List[BeamIndex3D]
    se: List[float]            # bits/s/Hz, não crescente


@dataclass(frozen=True)
class SoftTarget:
    theta: np.ndarray
    phi: np.ndarray
    r: np.ndarray

    def as_tuple(self):
        return self.theta, self.phi, self.r


# ====================== Sweep ======================================
def codebook_se(h: np.ndarray, codebook: Codebook3D, link: LinkParams, on_the_fly: bool = False) -> np.ndarray:
    """SE de todos os codewords, na ordem plana."""
    h = np.asarray(h, np.complex128)
    if h.shape != (codebook.cfg.M,):
        raise ShapeError(f"channel shape {h.shape} does not match array size ({codebook.cfg.M},)")
    if not np.any(h):
        raise NoSignalError("zero channel: no beam carries signal")
    if not on_the_fly and codebook.cacheable:
        snr = beamformed_snr_many(codebook.matrix(), h, link)
    else:
        snr = np.empty(codebook.size)
        for start, block in codebook.iter_chunks():
            snr[start:start + len(block)] = beamformed_snr_many(block, h, link)
    return spectral_efficiency(snr)


def codebook_se_batch(H: np.ndarray, codebook: Codebook3D, link: LinkParams) -> np.ndarray:
    """T canais (T x M) -> T x size. Canais nulos ficam com SE 0 em todos os feixes."""
    H = np.atleast_2d(np.asarray(H, np.complex128))
    if codebook.cacheable:
        g = np.abs(np.conj(H) @ codebook.matrix().T) ** 2
    else:
        g = np.empty((len(H), codebook.size))
        for start, block in codebook.iter_chunks():
            g[:, start:start + len(block)] = np.abs(np.conj(H) @ block.T) ** 2
    return np.log2(1.0 + link.p_r * g / link.sigma2)


def _ranked(se: np.ndarray) -> np.ndarray:
    # ordenação estável sobre -SE: empates ficam pelo menor índice plano
    return np.argsort(-se, kind="stable")


def sweep_optimal_beam(h: np.ndarray, codebook: Codebook3D, link: LinkParams, on_the_fly: bool = False) -> BeamIndex3D:
    se = codebook_se(h, codebook, link, on_the_fly=on_the_fly)
    return unflatten(int(np.argmax(se)), codebook.N, codebook.S)


def label_from_se(se: np.ndarray, codebook: Codebook3D, K: int) -> BeamLabel:
    if not 1 <= K <= codebook.size:
        raise DomainError(f"K must be in [1, {codebook.size}], got {K}")
    if not np.any(se > 0):
        raise NoSignalError("zero channel: no beam carries signal")
    order = _ranked(se)[:K]
    topk = [unflatten(int(f), codebook.N, codebook.S) for f in order]
    return BeamLabel(optimal=topk[0], topk=topk, se=[float(se[f]) for f in order])


def top_k_beams(h: np.ndarray, codebook: Codebook3D, link: LinkParams, K: int) -> BeamLabel:
    return label_from_se(codebook_se(h, codebook, link), codebook, K)


def bench_sweep(h: np.ndarray, codebook: Codebook3D, link: LinkParams, workers: int = 1) -> Dict[str, float]:
    """Varrimento com geração dos codewords na hora; devolve tempo e feixe."""
    h = np.asarray(h, np.complex128)
    points = codebook.cartesian()
    starts = list(range(0, codebook.size, config.SWEEP_CHUNK))
    snr = np.empty(codebook.size)

    def run(start: int) -> None:
        stop = min(start + config.SWEEP_CHUNK, codebook.size)
        block = steering_matrix(codebook.cfg, points[start:stop], codebook.antennas)
        snr[start:stop] = beamformed_snr_many(block, h, link)

    t0 = time.perf_counter()
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))
    else:
        for s in starts:
            run(s)
    best = int(np.argmax(spectral_efficiency(snr)))
    elapsed = time.perf_counter() - t0
    return {"elapsed_s": elapsed, "best_flat": best, "codewords": codebook.size, "antennas": codebook.cfg.M}


# ====================== Alvos suaves ===============================
def soft_targets(label: BeamLabel, gamma: float, N: int, S: int) -> SoftTarget:
    """Peso gamma^k para o feixe de posto k, acumulado por dimensão e normalizado."""
    if not 0 < gamma <= 1:
        raise DomainError(f"gamma must be in (0, 1], got {gamma}")
    t, p, r = np.zeros(N), np.zeros(N), np.zeros(S)
    for k, b in enumerate(label.topk):
        w = gamma ** k
        t[b.i_theta] += w
        p[b.i_phi] += w
        r[b.i_r] += w
    return SoftTarget(t / t.sum(), p / p.sum(), r / r.sum())


# ====================== Métricas ===================================
def _topk_contains(logits: np.ndarray, true_idx: int, K: int) -> bool:
    return bool(true_idx in _ranked(np.asarray(logits, float))[:K])


def _log_softmax(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, float)
    z = x - x.max()
    return z - np.log(np.exp(z).sum())


def joint_ranking(logits_theta, logits_phi, logits_r) -> np.ndarray:
    """Candidatos planos ordenados pelo produto das probabilidades por dimensão."""
    lp = (_log_softmax(logits_theta)[:, None, None]
          + _log_softmax(logits_phi)[None, :, None]
          + _log_softmax(logits_r)[None, None, :])
    return _ranked(lp.ravel())


def topk_accuracy(logits_theta, logits_phi, logits_r, true: BeamIndex3D, K: int) -> Dict[str, bool]:
    N, S = len(logits_theta), len(logits_r)
    if len(logits_phi) != N:
        raise ShapeError(f"theta/phi logits must share length, got {N} and {len(logits_phi)}")
    out = {
        "theta": _topk_contains(logits_theta, true.i_theta, K),
        "phi": _topk_contains(logits_phi, true.i_phi, K),
        "r": _topk_contains(logits_r, true.i_r, K),
    }
    out["joint"] = bool(flat_index(true, N, S) in joint_ranking(logits_theta, logits_phi, logits_r)[:K])
    return out


def trajectory_mae(pred, true, per_step: bool = False):
    """Média de |p̂ - p| sobre passos e eixos (L1 por eixo); per_step=True média só nos eixos."""
    pred = np.asarray(pred, float)
    true = np.asarray(true, float)
    if pred.shape != true.shape:
        raise ShapeError(f"prediction shape {pred.shape} does not match target shape {true.shape}")
    err = np.abs(pred - true)
    if per_step:
        # (..., T, 3) -> T, média também sobre o lote se existir
        return err.mean(axis=-1).reshape(-1, err.shape[-2]).mean(axis=0)
    return float(err.mean())


def metric_rows(pred_traj: np.ndarray, true_traj: np.ndarray, logits: Sequence, labels: Sequence) -> List[dict]:
    """
    Linhas por passo de previsão no esquema METRIC_COLUMNS.

    pred_traj/true_traj: B x T x 3; logits[b][t] = (lθ, lφ, lr); labels[b][t] = BeamIndex3D.
    """
    mae = trajectory_mae(pred_traj, true_traj, per_step=True)
    B, T = pred_traj.shape[:2]
    rows = []
    for t in range(T):
        acc = {f"top{k}_{d}": 0.0 for k in (1, 5) for d in DIMENSIONS + ("joint",)}
        for b in range(B):
            lt, lp, lr = logits[b][t]
            for k in (1, 5):
                flags = topk_accuracy(lt, lp, lr, labels[b][t], k)
                for d, ok in flags.items():
                    acc[f"top{k}_{d}"] += ok
        row = {"step": t + 1, "mae_m": float(mae[t])}
        row.update({c: acc[c] / B for c in METRIC_COLUMNS[2:]})
        rows.append(row)
    return rows


def write_metrics_csv(rows: List[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(rows, columns=METRIC_COLUMNS)
    df["step"] = df["step"].astype(int)
    df.to_csv(path, index=False)
    return path


def read_metrics_csv(path) -> List[dict]:
    df = pd.read_csv(path, float_precision="round_trip")
    if list(df.columns) != METRIC_COLUMNS:
        raise ShapeError(f"unexpected metrics columns {list(df.columns)}")
    return [{c: (int(r[c]) if c == "step" else float(r[c])) for c in METRIC_COLUMNS}
            for r in df.to_dict("records")]


def summarize(rows: List[dict]) -> Dict[str, float]:
    return {c: float(np.mean([r[c] for r in rows])) for c in METRIC_COLUMNS[1:]} if rows else {}
