"""
Pipeline de geração: trajetória -> ruído GPS -> nuvem de pontos -> canal por
slot -> varrimento exaustivo -> alvos suaves. Determinístico por master_seed,
independente do número de workers (ordem de junção pelo id da sequência).
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from tqdm import tqdm

import config
from dataset.container import SPLITS, CodebookSpec, DatasetManifest, SequenceRecord, write_dataset
from errors import GenerationError, NoSignalError
from prompts import TASK_MODE_COUNT, describe_mode
from radio.array import ArrayConfig, antenna_positions
from radio.channel import LinkParams, calibrate_power, slot_channel
from radio.codebook import CodebookRanges, Codebook3D, build_codebook, flat_index
from radio.oracle import codebook_se_batch, label_from_se, soft_targets
from radio.scene import Scene, save_scene
from sensing.point_cloud import sample_point_cloud
from sensing.trajectory import add_gps_noise, derive_seed, generate_trajectory

logger = logging.getLogger(__name__)

DESK_COUNTS = (500, 100, 100)
FULL_COUNTS = (12000, 1500, 1500)


class GenerationConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    array: ArrayConfig = ArrayConfig()
    ranges: CodebookRanges = CodebookRanges()
    N: int = 20
    S: int = 10
    counts: Tuple[int, int, int] = DESK_COUNTS
    T: int = 20
    dt: float = 0.1
    P: int = 1024
    K: int = 3
    gamma: float = 0.5
    sigma_gps: float = 0.5
    T_prev: int = 10
    T_pred: int = 10
    sigma2: float = 1.0
    target_snr_db: float = 20.0
    workers: int = 1

    @model_validator(mode="after")
    def consistent(self):
        if min(self.counts) < 0:
            raise ValueError(f"split counts must be >= 0, got {self.counts}")
        if self.T < 2 or self.P < 1 or self.dt <= 0:
            raise ValueError("need T >= 2, P >= 1 and dt > 0")
        if self.T_prev + self.T_pred > self.T:
            raise ValueError(f"T_prev + T_pred = {self.T_prev + self.T_pred} exceeds T = {self.T}")
        if not 1 <= self.K <= self.N * self.N * self.S:
            raise ValueError(f"K must be in [1, {self.N * self.N * self.S}]")
        if self.sigma_gps < 0 or self.workers < 1:
            raise ValueError("sigma_gps must be >= 0 and workers >= 1")
        return self


def sequence_seeds(master_seed: int, idx: int) -> Dict[str, int]:
    """Sub-seeds por sequência; cada tentativa de trajetória usa a sua."""
    base = derive_seed(master_seed, idx)
    return {"base": base, "gps": derive_seed(base, 1), "cloud": derive_seed(base, 2)}


def label_sequence(positions: np.ndarray, scene: Scene, codebook: Codebook3D, link: LinkParams,
                   K: int, gamma: float, antennas: np.ndarray):
    H = np.stack([slot_channel(codebook.cfg, scene, p, antennas) for p in positions])
    se = codebook_se_batch(H, codebook, link)
    labels = [label_from_se(row, codebook, K) for row in se]
    soft = [soft_targets(lb, gamma, codebook.N, codebook.S) for lb in labels]
    return labels, soft


def generate_sequence(idx: int, scene: Scene, codebook: Codebook3D, link: LinkParams,
                      gen: GenerationConfig, master_seed: int, antennas: np.ndarray) -> SequenceRecord:
    seeds = sequence_seeds(master_seed, idx)
    mode = seeds["base"] % TASK_MODE_COUNT
    last_error = None
    for attempt in range(config.MAX_RETRIES):
        traj_seed = derive_seed(seeds["base"], 100 + attempt)
        try:
            positions = generate_trajectory(scene, mode, gen.T, gen.dt, traj_seed, ranges=gen.ranges)
            labels, soft = label_sequence(positions, scene, codebook, link, gen.K, gen.gamma, antennas)
        except (GenerationError, NoSignalError) as e:
            # slot sem sinal ou sem trajetória válida: nova tentativa com outra sub-seed
            last_error = e
            continue
        break
    else:
        raise GenerationError(f"sequence {idx}: {last_error}")

    N, S = codebook.N, codebook.S
    return SequenceRecord(
        seq_id=idx,
        mode=mode,
        positions=positions.astype(np.float32),
        gps=add_gps_noise(positions, gen.sigma_gps, seeds["gps"]).astype(np.float32),
        cloud=sample_point_cloud(scene, gen.P, seeds["cloud"]).astype(np.float32),
        optimal=np.array([flat_index(lb.optimal, N, S) for lb in labels], dtype=np.uint32),
        topk=np.array([[flat_index(b, N, S) for b in lb.topk] for lb in labels], dtype=np.uint32),
        topk_se=np.array([lb.se for lb in labels], dtype=np.float32),
        soft_theta=np.stack([s.theta for s in soft]).astype(np.float32),
        soft_phi=np.stack([s.phi for s in soft]).astype(np.float32),
        soft_r=np.stack([s.r for s in soft]).astype(np.float32),
    )


def generate_dataset(scene: Scene, gen: GenerationConfig, master_seed: int, out_dir, progress: bool = True) -> DatasetManifest:
    codebook = build_codebook(gen.array, gen.N, gen.S, gen.ranges)
    link = calibrate_power(gen.array, gen.sigma2, target_db=gen.target_snr_db)
    antennas = antenna_positions(gen.array)
    if codebook.cacheable:
        codebook.matrix(workers=gen.workers)

    total = sum(gen.counts)
    bounds = np.cumsum((0,) + tuple(gen.counts))

    def one(idx: int) -> SequenceRecord:
        return generate_sequence(idx, scene, codebook, link, gen, master_seed, antennas)

    bar = tqdm(total=total, desc="dataset", disable=not progress)
    records: List[SequenceRecord] = []
    if gen.workers > 1:
        with ThreadPoolExecutor(max_workers=gen.workers) as pool:
            for rec in pool.map(one, range(total)):
                records.append(rec)
                bar.update()
    else:
        for idx in range(total):
            records.append(one(idx))
            bar.update()
    bar.close()

    splits = {name: records[bounds[i]:bounds[i + 1]] for i, name in enumerate(SPLITS)}
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_scene(scene, out_dir / "scene.json")

    manifest = DatasetManifest(
        codebook=CodebookSpec(N=gen.N, S=gen.S, ranges=gen.ranges, array=gen.array),
        link=link,
        master_seed=master_seed,
        scene_seed=scene.seed,
        split_sizes=dict(zip(SPLITS, gen.counts)),
        sigma_gps=gen.sigma_gps,
        K=gen.K,
        gamma=gen.gamma,
        dt=gen.dt,
        T=gen.T,
        P=gen.P,
        T_prev=gen.T_prev,
        T_pred=gen.T_pred,
        mode_prompts=[describe_mode(m) for m in range(TASK_MODE_COUNT)],
    )
    write_dataset(splits, manifest, out_dir)
    return manifest
