import logging
from typing import Optional, Tuple

import numpy as np

from errors import DomainError
from radio.scene import Scene, face_area, face_point, visible_faces

logger = logging.getLogger(__name__)

DEFAULT_GROUND = (0.0, 150.0, -90.0, 90.0)   # x_min, x_max, y_min, y_max


def sample_point_cloud(scene: Scene, P: int, seed: int,
                       ground_bounds: Optional[Tuple[float, float, float, float]] = None) -> np.ndarray:
    """
    P pontos uniformes (por área) sobre as faces dos edifícios visíveis da BS.
    Sem faces visíveis, todos os pontos caem no chão z=0 dentro de ground_bounds.
    """
    if P < 1:
        raise DomainError(f"point cloud needs P >= 1, got {P}")
    rng = np.random.default_rng(seed)
    faces = []
    for lo, hi in zip(scene.box_min, scene.box_max):
        for axis, sign in visible_faces(scene.bs_position, lo, hi):
            faces.append((lo, hi, axis, sign, face_area(lo, hi, axis)))
    areas = np.array([f[4] for f in faces], float)

    if len(faces) == 0 or areas.sum() <= 0:
        x0, x1, y0, y1 = ground_bounds or DEFAULT_GROUND
        pts = np.zeros((P, 3))
        pts[:, 0] = rng.uniform(x0, x1, P)
        pts[:, 1] = rng.uniform(y0, y1, P)
        return pts

    choice = rng.choice(len(faces), size=P, p=areas / areas.sum())
    uv = rng.uniform(0.0, 1.0, size=(P, 2))
    pts = np.empty((P, 3))
    for i, (f, (u, v)) in enumerate(zip(choice, uv)):
        lo, hi, axis, sign, _ = faces[f]
        pts[i] = face_point(lo, hi, axis, sign, u, v)
    return pts
