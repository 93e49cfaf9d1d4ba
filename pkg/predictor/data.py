import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class Sample:
    """Janela de uma sequência: T_prev slots observados, T_pred slots a prever."""
    seq_id: int
    mode: int
    gps_prev: np.ndarray                  # T_prev x 3
    cloud: np.ndarray                     # P x 3
    future: np.ndarray                    # T_pred x 3 (posições verdadeiras)
    soft: Tuple[np.ndarray, np.ndarray, np.ndarray]   # (T_pred x N, T_pred x N, T_pred x S)
    optimal: np.ndarray                   # T_pred índices planos


def horizon(T: int, T_prev: int, T_pred: int) -> int:
    """Passos de previsão que cabem numa sequência de T slots; janelas longas encurtam T_pred."""
    if T_prev < 2 or T_prev >= T:
        raise ConfigError(f"T_prev must be in [2, {T - 1}] for sequences of {T} slots, got {T_prev}")
    return min(T_pred, T - T_prev)


def samples_from_records(records: Sequence, T_prev: int, T_pred: int) -> List[Sample]:
    out = []
    for rec in records:
        n = horizon(rec.T, T_prev, T_pred)
        if n != T_pred:
            raise ConfigError(f"sequence {rec.seq_id}: T={rec.T} cannot hold T_prev={T_prev} + T_pred={T_pred}")
        fut = slice(T_prev, T_prev + T_pred)
        out.append(Sample(
            seq_id=rec.seq_id,
            mode=rec.mode,
            gps_prev=rec.gps[:T_prev].astype(np.float64),
            cloud=rec.cloud.astype(np.float64),
            future=rec.positions[fut].astype(np.float64),
            soft=(rec.soft_theta[fut], rec.soft_phi[fut], rec.soft_r[fut]),
            optimal=rec.optimal[fut].astype(np.int64),
        ))
    return out


def batches(samples: Sequence[Sample], batch_size: int, rng: np.random.Generator) -> List[List[Sample]]:
    order = rng.permutation(len(samples))
    return [[samples[i] for i in order[k:k + batch_size]] for k in range(0, len(order), batch_size)]
