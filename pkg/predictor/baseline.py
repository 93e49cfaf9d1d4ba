"""
Referência determinística: extrapolação a velocidade constante + feixe
geométrico (ponto de grelha mais próximo por dimensão).
"""
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from errors import DomainError
from radio.array import cartesian_to_focal
from radio.codebook import BeamIndex3D, Codebook3D, nearest_grid_index


@dataclass
class BaselinePrediction:
    trajectory: np.ndarray                      # T_pred x 3
    beams: List[BeamIndex3D]
    logits: List[Tuple[np.ndarray, np.ndarray, np.ndarray]]


def constant_velocity(gps_prev, T_pred: int) -> np.ndarray:
    gps_prev = np.asarray(gps_prev, float)
    if len(gps_prev) < 2:
        raise DomainError(f"constant-velocity extrapolation needs >= 2 GPS fixes, got {len(gps_prev)}")
    v = gps_prev[-1] - gps_prev[-2]
    steps = np.arange(1, T_pred + 1, dtype=float)[:, None]
    return gps_prev[-1] + steps * v


def _grid_step(grid: np.ndarray) -> float:
    return float(grid[1] - grid[0]) if len(grid) > 1 else 1.0


def grid_logits(grid: np.ndarray, value: float) -> np.ndarray:
    """Menos a distância em passos de grelha; o máximo é o ponto mais próximo."""
    return -np.abs(grid - value) / _grid_step(grid)


def baseline_cv_geometric(gps_prev, codebook: Codebook3D, bs_position, T_pred: int) -> BaselinePrediction:
    traj = constant_velocity(gps_prev, T_pred)
    fp = cartesian_to_focal(traj - np.asarray(bs_position, float))
    it = nearest_grid_index(codebook.theta_grid, fp[:, 0])
    ip = nearest_grid_index(codebook.phi_grid, fp[:, 1])
    ir = nearest_grid_index(codebook.r_grid, fp[:, 2])
    beams = [BeamIndex3D(int(a), int(b), int(c)) for a, b, c in zip(it, ip, ir)]
    logits = [(grid_logits(codebook.theta_grid, t), grid_logits(codebook.phi_grid, p), grid_logits(codebook.r_grid, r))
              for t, p, r in fp]
    return BaselinePrediction(traj, beams, logits)
