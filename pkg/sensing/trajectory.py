"""
Trajetórias sintéticas de UAV, ruído GPS e derivação de seeds por sequência.

Dez modos de voo parametrizados (ver prompts.MODE_DESCRIPTIONS). As posições
são relativas ao referencial do cenário; a cobertura é verificada no
referencial do array (posição - bs_position).
"""
import logging
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

import config
from errors import DomainError, GenerationError
from prompts import task_mode_label
from radio.array import cartesian_to_focal, focal_to_cartesian
from radio.codebook import CodebookRanges
from radio.geometry import points_inside_boxes, segment_blocked
from radio.scene import Scene

logger = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


class MotionParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    speed: float = 6.0             # velocidade horizontal inicial (m/s)
    yaw_rate: float = 0.0          # rad/s
    vertical_rate: float = 0.0     # m/s
    accel: float = 0.0             # m/s², ao longo da direção de voo
    speed_min: float = 0.0
    speed_cap: float = 15.0
    jitter: float = 0.0            # amplitude uniforme por eixo (m)


MOTION_MODES: Tuple[MotionParams, ...] = (
    MotionParams(speed=6.0),
    MotionParams(speed=12.0),
    MotionParams(speed=6.0, yaw_rate=0.3),
    MotionParams(speed=6.0, yaw_rate=-0.3),
    MotionParams(speed=3.0, vertical_rate=2.0),
    MotionParams(speed=3.0, vertical_rate=-2.0),
    MotionParams(speed=0.0, jitter=0.05),
    MotionParams(speed=2.0, accel=3.0, speed_cap=14.0),
    MotionParams(speed=12.0, accel=-3.0, speed_min=1.0),
    MotionParams(speed=5.0, yaw_rate=0.25, vertical_rate=1.5),
)


def mix64(x: int) -> int:
    """Finalizador splitmix64."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed da sequência: mix64(master_seed XOR index)."""
    return mix64((int(master_seed) ^ int(index)) & _MASK64)


def simulate_motion(params: MotionParams, start, heading: float, T: int, dt: float,
                    rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Cinemática pura: T posições a partir de start, rumo inicial heading (rad)."""
    if T < 1 or dt <= 0:
        raise DomainError(f"need T >= 1 and dt > 0, got T={T}, dt={dt}")
    base = np.array(start, float)
    out = np.empty((T, 3))
    out[0] = base
    for t in range(1, T):
        heading += params.yaw_rate * dt
        v_h = params.speed + params.accel * t * dt
        if params.accel:
            v_h = float(np.clip(v_h, params.speed_min, params.speed_cap))
        base = base + dt * np.array([v_h * np.cos(heading), v_h * np.sin(heading), params.vertical_rate])
        out[t] = base
    if params.jitter > 0:
        rng = rng or np.random.default_rng(0)
        out = out + rng.uniform(-params.jitter, params.jitter, size=out.shape)
    return out


def in_coverage(scene: Scene, positions: np.ndarray, ranges: CodebookRanges) -> bool:
    fp = cartesian_to_focal(np.asarray(positions) - scene.bs_position)
    return bool(np.all(ranges.contains(fp[:, 0], fp[:, 1], fp[:, 2])))


def collision_free(scene: Scene, positions: np.ndarray) -> bool:
    if points_inside_boxes(positions, scene.box_min, scene.box_max).any():
        return False
    return not any(segment_blocked(a, b, scene.box_min, scene.box_max) for a, b in zip(positions[:-1], positions[1:]))


def generate_trajectory(scene: Scene, mode: int, T: int, dt: float, seed: int,
                        ranges: Optional[CodebookRanges] = None, min_altitude: float = 5.0,
                        motion: Optional[MotionParams] = None) -> np.ndarray:
    """Trajetória determinística por seed, dentro da cobertura e fora dos edifícios."""
    mode = task_mode_label(mode)
    if T < 2:
        raise DomainError(f"trajectory needs T >= 2, got {T}")
    ranges = ranges or CodebookRanges()
    motion = motion or MOTION_MODES[mode]
    rng = np.random.default_rng(seed)
    margin = np.deg2rad(5.0)
    span_r = 0.1 * (ranges.r_max - ranges.r_min)
    for _ in range(config.MAX_RETRIES):
        theta = rng.uniform(ranges.theta_min + margin, ranges.theta_max - margin)
        phi = rng.uniform(ranges.phi_min + margin, ranges.phi_max - margin)
        r = rng.uniform(ranges.r_min + span_r, ranges.r_max - span_r)
        start = scene.bs_position + focal_to_cartesian(theta, phi, r)
        heading = rng.uniform(0.0, 2 * np.pi)
        pos = simulate_motion(motion, start, heading, T, dt, rng)
        if pos[:, 2].min() < min_altitude:
            continue
        if not in_coverage(scene, pos, ranges):
            continue
        if not collision_free(scene, pos):
            continue
        return pos
    raise GenerationError(f"mode={mode} seed={seed}: no collision-free trajectory after {config.MAX_RETRIES} retries")


def add_gps_noise(positions, sigma_gps: float, seed: int) -> np.ndarray:
    if sigma_gps < 0:
        raise DomainError(f"sigma_gps must be >= 0, got {sigma_gps}")
    positions = np.asarray(positions, float)
    if sigma_gps == 0:
        return positions.copy()
    rng = np.random.default_rng(seed)
    return positions + rng.normal(0.0, sigma_gps, size=positions.shape)
