"""Testes segmento/caixa alinhada aos eixos (método dos slabs), vetorizados sobre caixas."""
import numpy as np


def segment_hits_boxes(p0, p1, box_min: np.ndarray, box_max: np.ndarray) -> np.ndarray:
    """
    True para cada caixa que o segmento p0->p1 atravessa.

    Desigualdades estritas: tocar numa face ou aresta não bloqueia, e um
    segmento que parte da superfície de uma caixa para fora dela também não
    (é assim que a face hospedeira de um difusor fica excluída).
    """
    box_min = np.atleast_2d(box_min)
    box_max = np.atleast_2d(box_max)
    if box_min.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    o = np.asarray(p0, float)
    d = np.asarray(p1, float) - o

    t_enter = np.zeros(box_min.shape[0])
    t_exit = np.ones(box_min.shape[0])
    inside_all = np.ones(box_min.shape[0], dtype=bool)
    for a in range(3):
        if d[a] == 0.0:
            # paralelo ao slab: só pode intersetar se a origem estiver estritamente dentro
            inside_all &= (o[a] > box_min[:, a]) & (o[a] < box_max[:, a])
            continue
        t0 = (box_min[:, a] - o[a]) / d[a]
        t1 = (box_max[:, a] - o[a]) / d[a]
        t_enter = np.maximum(t_enter, np.minimum(t0, t1))
        t_exit = np.minimum(t_exit, np.maximum(t0, t1))
    return inside_all & (t_enter < t_exit)


def segment_blocked(p0, p1, box_min: np.ndarray, box_max: np.ndarray) -> bool:
    return bool(segment_hits_boxes(p0, p1, box_min, box_max).any())


def points_inside_boxes(points, box_min: np.ndarray, box_max: np.ndarray) -> np.ndarray:
    """K pontos -> K booleanos: ponto estritamente dentro de alguma caixa."""
    points = np.atleast_2d(np.asarray(points, float))
    if len(box_min) == 0:
        return np.zeros(len(points), dtype=bool)
    inside = (points[:, None, :] > box_min[None]) & (points[:, None, :] < box_max[None])
    return inside.all(axis=2).any(axis=1)


def boxes_overlap(a_min, a_max, b_min, b_max, margin: float = 0.0) -> bool:
    return bool(np.all(a_min - margin < b_max) and np.all(b_min - margin < a_max))
