"""
Canal uplink em campo próximo: caminhos LoS + reflexão simples e SNR após beamforming.

Amplitude pela distância de referência (centroide), fase pela distância exata
a cada antena. Visibilidade comum a todo o array.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from errors import DomainError, ShapeError
from radio.array import ArrayConfig, antenna_positions, focal_distances
from radio.geometry import segment_blocked
from radio.scene import Scene, check_outside

logger = logging.getLogger(__name__)

LOS = "los"
BOUNCE = "bounce"


class LinkParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    p_r: float = 1.0
    sigma2: float = 1.0

    @field_validator("p_r", "sigma2")
    @classmethod
    def positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("link powers must be > 0")
        return v


@dataclass(frozen=True)
class PropagationPath:
    kind: str                 # LOS | BOUNCE
    r_ref: float              # distância total centroide-a-centroide (m)
    amplitude: complex
    scatterer: int = -1
    r2: float = 0.0           # difusor -> UAV (só reflexões)


@dataclass
class PathSet:
    paths: List[PropagationPath] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    @property
    def has_los(self) -> bool:
        return any(p.kind == LOS for p in self.paths)


def enumerate_paths(scene: Scene, uav_pos, wavelength: float = ArrayConfig().wavelength) -> PathSet:
    uav = np.asarray(uav_pos, float)
    check_outside(scene, uav)
    bs = scene.bs_position
    out: List[PropagationPath] = []

    if not segment_blocked(bs, uav, scene.box_min, scene.box_max):
        r = float(np.linalg.norm(uav - bs))
        if r <= 0:
            raise DomainError("UAV coincides with the array centroid")
        out.append(PropagationPath(LOS, r, complex(wavelength / (4 * np.pi * r))))

    for q, (s, gamma) in enumerate(zip(scene.scatterer_pos, scene.reflection)):
        # a face hospedeira não bloqueia: o teste de slabs é estrito
        if segment_blocked(bs, s, scene.box_min, scene.box_max):
            continue
        if segment_blocked(s, uav, scene.box_min, scene.box_max):
            continue
        r1 = float(np.linalg.norm(s - bs))
        r2 = float(np.linalg.norm(uav - s))
        out.append(PropagationPath(BOUNCE, r1 + r2, complex(gamma * wavelength / (4 * np.pi * (r1 + r2))), q, r2))
    return PathSet(out)


def channel_vector(cfg: ArrayConfig, paths: PathSet, scene: Scene, uav_pos,
                   antennas: Optional[np.ndarray] = None) -> np.ndarray:
    """h_m = Σ_l a_l exp(-j k r_{l,m}); vetor nulo se não houver caminhos."""
    if antennas is None:
        antennas = antenna_positions(cfg)
    k = cfg.wavenumber
    uav_rel = np.asarray(uav_pos, float) - scene.bs_position
    h = np.zeros(cfg.M, dtype=np.complex128)
    for p in paths:
        if p.kind == LOS:
            r_m = focal_distances(antennas, uav_rel[None])[0]
        else:
            s_rel = scene.scatterer_pos[p.scatterer] - scene.bs_position
            r_m = focal_distances(antennas, s_rel[None])[0] + p.r2
        h += p.amplitude * np.exp(-1j * k * r_m)
    return h


def slot_channel(cfg: ArrayConfig, scene: Scene, uav_pos, antennas: Optional[np.ndarray] = None) -> np.ndarray:
    return channel_vector(cfg, enumerate_paths(scene, uav_pos, cfg.wavelength), scene, uav_pos, antennas)


def beamformed_snr(w: np.ndarray, h: np.ndarray, link: LinkParams) -> float:
    """p_r |wᴴh|² / σ²."""
    w = np.asarray(w)
    h = np.asarray(h)
    if w.shape != h.shape or w.ndim != 1:
        raise ShapeError(f"codeword shape {w.shape} does not match channel shape {h.shape}")
    return float(link.p_r * abs(np.vdot(w, h)) ** 2 / link.sigma2)


def beamformed_snr_many(W: np.ndarray, h: np.ndarray, link: LinkParams) -> np.ndarray:
    """SNR para cada linha de W (codewords) contra h; |W conj(h)| = |Wᴴ h| linha a linha."""
    if W.shape[-1] != h.shape[0]:
        raise ShapeError(f"codeword length {W.shape[-1]} does not match channel length {h.shape[0]}")
    return link.p_r * np.abs(W @ np.conj(h)) ** 2 / link.sigma2


def spectral_efficiency(snr):
    snr_arr = np.asarray(snr, float)
    if np.any(snr_arr < 0):
        raise DomainError(f"SNR must be >= 0, got {snr}")
    se = np.log2(1.0 + snr_arr)
    return float(se) if se.ndim == 0 else se


def calibrate_power(cfg: ArrayConfig, sigma2: float = 1.0, r_ref: float = 100.0, target_db: float = 20.0) -> LinkParams:
    """
    p_r tal que a SNR LoS a r_ref com o codeword focado no UAV vale target_db.
    Com foco exato |bᴴh|² = (M a)², a = λ / (4π r_ref), igual em todas as direções,
    pelo que a mediana coincide com o valor fechado.
    """
    a = cfg.wavelength / (4 * np.pi * r_ref)
    p_r = 10 ** (target_db / 10) * sigma2 / (cfg.M * a) ** 2
    logger.debug("calibrated p_r=%.4g for %.1f dB at %.0f m", p_r, target_db, r_ref)
    return LinkParams(p_r=p_r, sigma2=sigma2)
