"""
Suite de verificação de gradientes: primitivas + perda total do preditor
num micro-lote de duas sequências, tudo em float64.
"""
import logging
from typing import Dict, List

import numpy as np

from nncore.gradcheck import PRIMITIVE_TOL, grad_check, primitive_suite
from nncore.tensor import precision
from predictor.data import Sample
from predictor.losses import batch_loss
from predictor.model import ModelConfig, TrackingModel

logger = logging.getLogger(__name__)

END_TO_END_TOL = 1e-4

MICRO_CONFIG = dict(d_model=8, heads=2, backbone_layers=1, T_prev=3, T_pred=2, N=3, S=2,
                    point_feature_dim=4, bs_position=(0.0, 0.0, 25.0), coverage_radius=170.0)


def _distribution(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    w = rng.random((rows, cols)) + 0.1
    return w / w.sum(axis=1, keepdims=True)


def micro_batch(cfg: ModelConfig, rng: np.random.Generator, P: int = 5) -> List[Sample]:
    out = []
    for i in range(2):
        start = np.array([60.0, 10.0 * (i - 0.5), 40.0]) + rng.normal(0, 2.0, 3)
        step = rng.normal(0, 1.5, 3)
        track = start + np.arange(cfg.T_prev + cfg.T_pred)[:, None] * step
        out.append(Sample(
            seq_id=i, mode=int(rng.integers(0, cfg.task_mode_count)),
            gps_prev=track[:cfg.T_prev] + rng.normal(0, 0.5, (cfg.T_prev, 3)),
            cloud=rng.uniform([30, -40, 0], [120, 40, 35], size=(P, 3)),
            future=track[cfg.T_prev:],
            soft=(_distribution(rng, cfg.T_pred, cfg.N), _distribution(rng, cfg.T_pred, cfg.N),
                  _distribution(rng, cfg.T_pred, cfg.S)),
            optimal=np.zeros(cfg.T_pred, dtype=np.int64),
        ))
    return out


def end_to_end_check(seed: int = 0, max_coords: int = 6, **overrides) -> float:
    """Erro relativo máximo da perda total vs diferenças finitas (amostra de coordenadas por parâmetro)."""
    rng = np.random.default_rng(seed)
    with precision(np.float64):
        cfg = ModelConfig(seed=seed, **{**MICRO_CONFIG, **overrides})
        model = TrackingModel(cfg)
        samples = micro_batch(cfg, rng)
        return grad_check(lambda: batch_loss(model, samples, cfg.lambda_loss).total,
                          model.parameters(), max_coords=max_coords, rng=rng)


def run_suite(seed: int = 0) -> Dict[str, float]:
    results = primitive_suite(seed)
    results["end_to_end"] = end_to_end_check(seed)
    return results


def suite_passed(results: Dict[str, float]) -> bool:
    prim = all(v < PRIMITIVE_TOL for k, v in results.items() if k != "end_to_end")
    return prim and results.get("end_to_end", 0.0) < END_TO_END_TOL
