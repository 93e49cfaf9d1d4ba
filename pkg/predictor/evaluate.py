"""
Avaliação por passo de previsão no esquema de métricas congelado.
"""
import logging
from typing import Dict, List, Sequence

import numpy as np

from errors import ShapeError
from nncore.tensor import no_grad
from predictor.baseline import baseline_cv_geometric
from predictor.data import Sample
from predictor.model import TrackingModel
from radio.codebook import Codebook3D, unflatten
from radio.oracle import metric_rows, summarize

logger = logging.getLogger(__name__)


def _labels(samples: Sequence[Sample], N: int, S: int):
    return [[unflatten(int(f), N, S) for f in s.optimal] for s in samples]


def evaluate_predictions(pred_traj: np.ndarray, logits: Sequence, samples: Sequence[Sample],
                         N: int, S: int) -> List[dict]:
    if not samples:
        raise ShapeError("nothing to evaluate: sample list is empty")
    true = np.stack([s.future for s in samples])
    return metric_rows(np.asarray(pred_traj, float), true, logits, _labels(samples, N, S))


def evaluate_model(model: TrackingModel, samples: Sequence[Sample]) -> List[dict]:
    cfg = model.cfg
    preds, logits = [], []
    for s in samples:
        with no_grad():
            out = model(s.gps_prev, s.cloud, s.mode)
        preds.append(out.trajectory.data.astype(float))
        logits.append([out.beam_logits(t) for t in range(cfg.T_pred)])
    return evaluate_predictions(np.stack(preds), logits, samples, cfg.N, cfg.S)


def evaluate_baseline(samples: Sequence[Sample], codebook: Codebook3D, bs_position) -> List[dict]:
    preds, logits = [], []
    for s in samples:
        out = baseline_cv_geometric(s.gps_prev, codebook, bs_position, len(s.future))
        preds.append(out.trajectory)
        logits.append(out.logits)
    return evaluate_predictions(np.stack(preds), logits, samples, codebook.N, codebook.S)


def headline(rows: List[dict]) -> Dict[str, float]:
    s = summarize(rows)
    return {"mae_m": s["mae_m"], "top1_joint": s["top1_joint"], "top5_joint": s["top5_joint"]}
