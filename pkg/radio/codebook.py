"""
Codebook 3D ângulo–distância.

Layout plano fixo: flat = (i_theta * N + i_phi) * S + i_r, ou seja a ordem C
de um array (N, N, S). Grelhas uniformes com extremos incluídos (linspace);
com um só ponto usa-se o ponto médio do intervalo. Codewords não
normalizados (norma √M).
"""
import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

import config
from errors import BeamIndexError, DomainError
from radio.array import ArrayConfig, FocalPoint, antenna_positions, focal_to_cartesian, steering_matrix

logger = logging.getLogger(__name__)


class CodebookRanges(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta_min: float = float(np.deg2rad(-60.0))
    theta_max: float = float(np.deg2rad(60.0))
    phi_min: float = float(np.deg2rad(-30.0))
    phi_max: float = float(np.deg2rad(60.0))
    r_min: float = 10.0
    r_max: float = 170.0

    @model_validator(mode="after")
    def ordered(self):
        for lo, hi in (("theta_min", "theta_max"), ("phi_min", "phi_max"), ("r_min", "r_max")):
            if not getattr(self, lo) < getattr(self, hi):
                raise ValueError(f"{lo} must be < {hi}")
        return self

    def contains(self, theta, phi, r) -> np.ndarray:
        return (
            (theta >= self.theta_min) & (theta <= self.theta_max)
            & (phi >= self.phi_min) & (phi <= self.phi_max)
            & (r >= self.r_min) & (r <= self.r_max)
        )


@dataclass(frozen=True)
class BeamIndex3D:
    i_theta: int
    i_phi: int
    i_r: int


def flat_index(b: BeamIndex3D, N: int, S: int) -> int:
    if not (0 <= b.i_theta < N and 0 <= b.i_phi < N and 0 <= b.i_r < S):
        raise BeamIndexError(f"beam index {b} out of range for N={N}, S={S}")
    return (b.i_theta * N + b.i_phi) * S + b.i_r


def unflatten(flat: int, N: int, S: int) -> BeamIndex3D:
    flat = int(flat)
    if not 0 <= flat < N * N * S:
        raise BeamIndexError(f"flat index {flat} out of range [0, {N * N * S})")
    i_theta, rest = divmod(flat, N * S)
    i_phi, i_r = divmod(rest, S)
    return BeamIndex3D(i_theta, i_phi, i_r)


def _grid(lo: float, hi: float, n: int) -> np.ndarray:
    if n == 1:
        return np.array([(lo + hi) / 2.0])
    return np.linspace(lo, hi, n)


@dataclass
class Codebook3D:
    cfg: ArrayConfig
    ranges: CodebookRanges
    theta_grid: np.ndarray
    phi_grid: np.ndarray
    r_grid: np.ndarray
    antennas: np.ndarray
    _matrix: Optional[np.ndarray] = field(default=None, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def N(self) -> int:
        return len(self.theta_grid)

    @property
    def S(self) -> int:
        return len(self.r_grid)

    @property
    def size(self) -> int:
        return self.N * self.N * self.S

    def focal_points(self) -> np.ndarray:
        """size x 3 com (θ, φ, r) na ordem plana."""
        th, ph, rr = np.meshgrid(self.theta_grid, self.phi_grid, self.r_grid, indexing="ij")
        return np.stack([th.ravel(), ph.ravel(), rr.ravel()], axis=1)

    def focal_point(self, flat: int) -> FocalPoint:
        b = unflatten(flat, self.N, self.S)
        return FocalPoint(float(self.theta_grid[b.i_theta]), float(self.phi_grid[b.i_phi]), float(self.r_grid[b.i_r]))

    def cartesian(self) -> np.ndarray:
        fps = self.focal_points()
        return focal_to_cartesian(fps[:, 0], fps[:, 1], fps[:, 2])

    def vectors(self, start: int = 0, stop: Optional[int] = None) -> np.ndarray:
        """Codewords [start, stop) gerados na hora (linhas, complex128)."""
        stop = self.size if stop is None else stop
        return steering_matrix(self.cfg, self.cartesian()[start:stop], self.antennas)

    def iter_chunks(self, chunk: Optional[int] = None) -> Iterator[Tuple[int, np.ndarray]]:
        chunk = chunk or config.SWEEP_CHUNK
        points = self.cartesian()
        for start in range(0, self.size, chunk):
            yield start, steering_matrix(self.cfg, points[start:start + chunk], self.antennas)

    def codeword(self, flat: int) -> np.ndarray:
        return self.vectors(flat, flat + 1)[0]

    @property
    def cacheable(self) -> bool:
        return self.size * self.cfg.M * 16 <= config.SWEEP_CACHE_MB * 2**20

    def matrix(self, workers: int = 1) -> np.ndarray:
        """Matriz completa size x M (cache). O resultado não depende de workers."""
        with self._lock:
            if self._matrix is None:
                self._matrix = self._build_matrix(workers)
                logger.debug("codebook matrix cached: %d x %d", self.size, self.cfg.M)
        return self._matrix

    def _build_matrix(self, workers: int) -> np.ndarray:
        out = np.empty((self.size, self.cfg.M), dtype=np.complex128)
        points = self.cartesian()
        starts = list(range(0, self.size, config.SWEEP_CHUNK))

        def fill(start: int) -> None:
            stop = min(start + config.SWEEP_CHUNK, self.size)
            out[start:stop] = steering_matrix(self.cfg, points[start:stop], self.antennas)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(fill, starts))
        else:
            for s in starts:
                fill(s)
        return out


def build_codebook(cfg: ArrayConfig, N: int = 20, S: int = 10, ranges: Optional[CodebookRanges] = None) -> Codebook3D:
    ranges = ranges or CodebookRanges()
    if N < 1 or S < 1:
        raise DomainError(f"codebook dims must be >= 1, got N={N}, S={S}")
    if ranges.r_min <= 0:
        raise DomainError(f"r_min must be > 0, got {ranges.r_min}")
    cb = Codebook3D(
        cfg=cfg,
        ranges=ranges,
        theta_grid=_grid(ranges.theta_min, ranges.theta_max, N),
        phi_grid=_grid(ranges.phi_min, ranges.phi_max, N),
        r_grid=_grid(ranges.r_min, ranges.r_max, S),
        antennas=antenna_positions(cfg),
    )
    logger.info("codebook: N=%d S=%d -> %d codewords, M=%d", N, S, cb.size, cfg.M)
    return cb


def nearest_grid_index(grid: np.ndarray, value) -> np.ndarray:
    """Índice da amostra mais próxima (empate -> índice menor)."""
    value = np.asarray(value, float)
    return np.argmin(np.abs(grid[None, :] - value.reshape(-1, 1)), axis=1).reshape(value.shape)


# ====================== Export =====================================
def codebook_header(cb: Codebook3D) -> dict:
    return {
        "schema_version": 1,
        "N": cb.N,
        "S": cb.S,
        "M": cb.cfg.M,
        "array": cb.cfg.model_dump(),
        "ranges": cb.ranges.model_dump(),
        "theta_grid": cb.theta_grid.tolist(),
        "phi_grid": cb.phi_grid.tolist(),
        "r_grid": cb.r_grid.tolist(),
        "layout": "flat=(i_theta*N+i_phi)*S+i_r; rows=codewords; cols=antennas m=iy*m_z+iz; float32 LE re,im interleaved",
    }


def export_codebook(cb: Codebook3D, path) -> Tuple[Path, Path]:
    """Escreve <path>.json (cabeçalho) e <path>.bin (float32 LE, re/im intercalados)."""
    path = Path(path)
    head, payload = path.with_suffix(".json"), path.with_suffix(".bin")
    head.write_text(json.dumps(codebook_header(cb), indent=2))
    with open(payload, "wb") as fh:
        for _, block in cb.iter_chunks():
            inter = np.empty(block.shape + (2,), dtype="<f4")
            inter[..., 0] = block.real
            inter[..., 1] = block.imag
            fh.write(inter.tobytes())
    return head, payload


def load_exported(path) -> Tuple[dict, np.ndarray]:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    raw = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f4")
    raw = raw.reshape(header["N"] ** 2 * header["S"], header["M"], 2)
    return header, raw[..., 0] + 1j * raw[..., 1]
