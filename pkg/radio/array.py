"""
Geometria do UPA e vetores de direção em campo próximo.

Convenções fixas:
- antenas no plano y–z, centroide na origem, broadside segundo +x;
- índice da antena m = iy * m_z + iz (row-major em y);
- ponto focal (theta, phi, r) -> x = r cosφ cosθ, y = r cosφ sinθ, z = r sinφ.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0


class ArrayConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    m_y: int = 64
    m_z: int = 64
    f_c: float = 7e9
    d_y: Optional[float] = None   # metros; None -> λ/2
    d_z: Optional[float] = None

    @model_validator(mode="before")
    @classmethod
    def half_wavelength_default(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            f_c = float(data.get("f_c", 7e9))
            if f_c <= 0:
                raise ValueError("f_c must be > 0")
            half = 0.5 * SPEED_OF_LIGHT / f_c
            for key in ("d_y", "d_z"):
                if data.get(key) is None:
                    data[key] = half
        return data

    @field_validator("m_y", "m_z")
    @classmethod
    def positive_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("antenna counts must be >= 1")
        return v

    @field_validator("d_y", "d_z")
    @classmethod
    def positive_spacing(cls, v: float) -> float:
        if v is None or v <= 0:
            raise ValueError("antenna spacing must be > 0")
        return v

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength

    @property
    def M(self) -> int:
        return self.m_y * self.m_z


@dataclass(frozen=True)
class FocalPoint:
    theta: float   # azimute (rad)
    phi: float     # elevação (rad)
    r: float       # distância ao centroide (m)

    def cartesian(self) -> np.ndarray:
        return focal_to_cartesian(self.theta, self.phi, self.r)


def focal_to_cartesian(theta, phi, r) -> np.ndarray:
    """(θ, φ, r) -> xyz; aceita escalares ou arrays com a mesma forma."""
    theta, phi, r = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float), np.asarray(r, float))
    cphi = np.cos(phi)
    return np.stack([r * cphi * np.cos(theta), r * cphi * np.sin(theta), r * np.sin(phi)], axis=-1)


def cartesian_to_focal(xyz) -> np.ndarray:
    """Inversa de focal_to_cartesian: devolve [..., (θ, φ, r)]."""
    xyz = np.asarray(xyz, float)
    r = np.linalg.norm(xyz, axis=-1)
    theta = np.arctan2(xyz[..., 1], xyz[..., 0])
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = np.where(r > 0, np.arcsin(np.clip(xyz[..., 2] / np.where(r > 0, r, 1.0), -1.0, 1.0)), 0.0)
    return np.stack([theta, phi, r], axis=-1)


def antenna_positions(cfg: ArrayConfig) -> np.ndarray:
    """M x 3, ordem m = iy * m_z + iz, centroide na origem."""
    iy, iz = np.meshgrid(np.arange(cfg.m_y), np.arange(cfg.m_z), indexing="ij")
    y = (iy.ravel() - (cfg.m_y - 1) / 2.0) * cfg.d_y
    z = (iz.ravel() - (cfg.m_z - 1) / 2.0) * cfg.d_z
    return np.stack([np.zeros_like(y), y, z], axis=1)


def focal_distances(antennas: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distâncias exatas K x M entre pontos (K x 3) e antenas (M x 3)."""
    points = np.atleast_2d(points)
    dx = points[:, 0:1] - antennas[None, :, 0]
    dy = points[:, 1:2] - antennas[None, :, 1]
    dz = points[:, 2:3] - antennas[None, :, 2]
    return np.sqrt(dx * dx + dy * dy + dz * dz)


def steering_matrix(cfg: ArrayConfig, points: np.ndarray, antennas: Optional[np.ndarray] = None) -> np.ndarray:
    """Uma linha exp(-j k r_m) por ponto cartesiano (relativo ao centroide)."""
    if antennas is None:
        antennas = antenna_positions(cfg)
    return np.exp(-1j * cfg.wavenumber * focal_distances(antennas, points))


def steering_vector(cfg: ArrayConfig, fp: FocalPoint) -> np.ndarray:
    if not fp.r > 0:
        raise DomainError(f"focal distance must be > 0, got r={fp.r}")
    return steering_matrix(cfg, fp.cartesian()[None, :])[0]


def far_field_vector(cfg: ArrayConfig, theta: float, phi: float, r: float) -> np.ndarray:
    """Onda plana com a mesma referência de fase do centroide: exp(-j k (r - u·p_m))."""
    u = focal_to_cartesian(theta, phi, 1.0)
    return np.exp(-1j * cfg.wavenumber * (r - antenna_positions(cfg) @ u))


def rayleigh_distance(cfg: ArrayConfig) -> float:
    """2 D² / λ com D a diagonal da abertura retangular."""
    d2 = ((cfg.m_y - 1) * cfg.d_y) ** 2 + ((cfg.m_z - 1) * cfg.d_z) ** 2
    return 2.0 * d2 / cfg.wavelength
