"""
Cenário urbano: edifícios como caixas alinhadas aos eixos sobre o chão (z=0)
e difusores pontuais nas faces visíveis a partir da BS.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

import config
from errors import DomainError, GenerationError
from radio.geometry import boxes_overlap, points_inside_boxes
from schema import BoxDocument, ScattererDocument, SceneDocument

logger = logging.getLogger(__name__)

# normais exteriores das faces candidatas, pela ordem fixa usada nos difusores
_FACES = ((0, -1), (0, +1), (1, -1), (1, +1), (2, +1))


class SceneParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    building_count: int = 5
    scatterers_per_building: int = 4
    region_bounds: Tuple[float, float, float, float] = (30.0, 140.0, -90.0, 90.0)   # x_min, x_max, y_min, y_max
    bs_position: Tuple[float, float, float] = (0.0, 0.0, 25.0)
    footprint: Tuple[float, float] = (8.0, 20.0)
    height: Tuple[float, float] = (10.0, 40.0)
    spacing: float = 4.0
    reflection: Tuple[float, float] = (0.3, 0.7)

    @model_validator(mode="after")
    def feasible_bounds(self):
        x0, x1, y0, y1 = self.region_bounds
        if self.building_count < 0 or self.scatterers_per_building < 0:
            raise ValueError("counts must be >= 0")
        if not (x0 < x1 and y0 < y1):
            raise ValueError("region bounds must satisfy min < max")
        if not (0 < self.footprint[0] <= self.footprint[1] and 0 < self.height[0] <= self.height[1]):
            raise ValueError("building sizes must be positive and ordered")
        return self


@dataclass
class Scene:
    bs_position: np.ndarray
    box_min: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    box_max: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    scatterer_pos: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    reflection: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scatterer_host: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    seed: int = 0

    @property
    def building_count(self) -> int:
        return len(self.box_min)

    @property
    def scatterer_count(self) -> int:
        return len(self.scatterer_pos)

    def without_building(self, idx: int) -> "Scene":
        """Cópia sem a caixa idx nem os seus difusores (hosts reindexados)."""
        keep = np.arange(self.building_count) != idx
        s_keep = self.scatterer_host != idx
        host = self.scatterer_host[s_keep]
        return Scene(
            bs_position=self.bs_position.copy(),
            box_min=self.box_min[keep].copy(),
            box_max=self.box_max[keep].copy(),
            scatterer_pos=self.scatterer_pos[s_keep].copy(),
            reflection=self.reflection[s_keep].copy(),
            scatterer_host=np.where(host > idx, host - 1, host),
            seed=self.seed,
        )

    def contains_point(self, p) -> bool:
        return bool(points_inside_boxes(p, self.box_min, self.box_max)[0])

    # ------------------------------------------------------------------
    def to_document(self) -> SceneDocument:
        return SceneDocument(
            seed=self.seed,
            bs_position=self.bs_position.tolist(),
            boxes=[BoxDocument(min=a.tolist(), max=b.tolist()) for a, b in zip(self.box_min, self.box_max)],
            scatterers=[
                ScattererDocument(position=p.tolist(), reflection=float(g), host=int(h))
                for p, g, h in zip(self.scatterer_pos, self.reflection, self.scatterer_host)
            ],
        )

    @classmethod
    def from_document(cls, doc: SceneDocument) -> "Scene":
        return cls(
            bs_position=np.array(doc.bs_position, float),
            box_min=np.array([b.min for b in doc.boxes], float).reshape(-1, 3),
            box_max=np.array([b.max for b in doc.boxes], float).reshape(-1, 3),
            scatterer_pos=np.array([s.position for s in doc.scatterers], float).reshape(-1, 3),
            reflection=np.array([s.reflection for s in doc.scatterers], float),
            scatterer_host=np.array([s.host for s in doc.scatterers], dtype=np.int64),
            seed=doc.seed,
        )


def save_scene(scene: Scene, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(scene.to_document().model_dump_json(indent=2))
    return path


def load_scene(path) -> Scene:
    return Scene.from_document(SceneDocument.model_validate_json(Path(path).read_text()))


def visible_faces(bs: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> List[Tuple[int, int]]:
    """Faces (eixo, sinal) cuja normal exterior aponta para a BS."""
    out = []
    for axis, sign in _FACES:
        if sign < 0 and bs[axis] < lo[axis]:
            out.append((axis, sign))
        elif sign > 0 and bs[axis] > hi[axis]:
            out.append((axis, sign))
    return out


def face_point(lo: np.ndarray, hi: np.ndarray, axis: int, sign: int, u: float, v: float) -> np.ndarray:
    """Ponto da face (u, v em [0,1] nos dois eixos livres)."""
    p = np.empty(3)
    p[axis] = lo[axis] if sign < 0 else hi[axis]
    free = [a for a in range(3) if a != axis]
    p[free[0]] = lo[free[0]] + u * (hi[free[0]] - lo[free[0]])
    p[free[1]] = lo[free[1]] + v * (hi[free[1]] - lo[free[1]])
    return p


def face_area(lo: np.ndarray, hi: np.ndarray, axis: int) -> float:
    free = [a for a in range(3) if a != axis]
    return float((hi[free[0]] - lo[free[0]]) * (hi[free[1]] - lo[free[1]]))


def _scatterers_for(bs, lo, hi, count: int, rng: np.random.Generator) -> List[np.ndarray]:
    faces = visible_faces(bs, lo, hi)
    if not faces:
        # BS sobre a projeção da caixa e abaixo do telhado: usa a face virada para x=0
        faces = [(0, -1)]
    pts = [face_point(lo, hi, a, s, 0.5, 0.5) for a, s in faces[:count]]
    if count > len(faces):
        areas = np.array([face_area(lo, hi, a) for a, _ in faces])
        for _ in range(count - len(faces)):
            a, s = faces[rng.choice(len(faces), p=areas / areas.sum())]
            u, v = rng.uniform(0.1, 0.9, size=2)
            pts.append(face_point(lo, hi, a, s, u, v))
    return pts


def generate_scene(seed: int, building_count: Optional[int] = None,
                   region_bounds: Optional[Tuple[float, float, float, float]] = None,
                   params: Optional[SceneParams] = None) -> Scene:
    """Cenário determinístico por seed; edifícios sem sobreposição entre si nem com a BS."""
    params = params or SceneParams()
    overrides = {k: v for k, v in (("building_count", building_count), ("region_bounds", region_bounds)) if v is not None}
    if overrides:
        params = SceneParams(**{**params.model_dump(), **overrides})
    rng = np.random.default_rng(seed)
    bs = np.array(params.bs_position, float)
    x0, x1, y0, y1 = params.region_bounds

    mins: List[np.ndarray] = []
    maxs: List[np.ndarray] = []
    for b in range(params.building_count):
        for _ in range(config.MAX_RETRIES):
            w, d = rng.uniform(*params.footprint, size=2)
            h = rng.uniform(*params.height)
            if w >= x1 - x0 or d >= y1 - y0:
                continue
            cx = rng.uniform(x0, x1 - w)
            cy = rng.uniform(y0, y1 - d)
            lo = np.array([cx, cy, 0.0])
            hi = np.array([cx + w, cy + d, h])
            if points_inside_boxes(bs, lo[None], hi[None])[0]:
                continue
            if any(boxes_overlap(lo, hi, m, M, params.spacing) for m, M in zip(mins, maxs)):
                continue
            mins.append(lo)
            maxs.append(hi)
            break
        else:
            raise GenerationError(f"scene seed={seed}: could not place building {b} after {config.MAX_RETRIES} retries")

    positions, gammas, hosts = [], [], []
    for b, (lo, hi) in enumerate(zip(mins, maxs)):
        for p in _scatterers_for(bs, lo, hi, params.scatterers_per_building, rng):
            positions.append(p)
            gammas.append(rng.uniform(*params.reflection))
            hosts.append(b)

    scene = Scene(
        bs_position=bs,
        box_min=np.array(mins, float).reshape(-1, 3),
        box_max=np.array(maxs, float).reshape(-1, 3),
        scatterer_pos=np.array(positions, float).reshape(-1, 3),
        reflection=np.array(gammas, float),
        scatterer_host=np.array(hosts, dtype=np.int64),
        seed=seed,
    )
    logger.info("scene seed=%d: %d buildings, %d scatterers", seed, scene.building_count, scene.scatterer_count)
    return scene


def check_outside(scene: Scene, uav_pos) -> None:
    if scene.contains_point(uav_pos):
        raise DomainError(f"UAV position {np.asarray(uav_pos).tolist()} lies inside a building")
