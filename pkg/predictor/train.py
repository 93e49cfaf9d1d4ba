"""
Treino por mini-lotes com Adam, baralhamento com seed, log CSV por época e
checkpoint do melhor Top-1 conjunto em validação.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel
from tqdm import tqdm

from errors import ConfigError
from nncore.checkpoint import load_checkpoint, save_checkpoint
from nncore.optim import Adam
from predictor.data import Sample, batches
from predictor.evaluate import evaluate_model, headline
from predictor.losses import batch_loss
from predictor.model import ModelConfig, TrackingModel, build_model

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["epoch", "l_traj", "l_beam", "val_mae", "val_top1_joint", "val_top5_joint"]
CHECKPOINT_NAME = "model.ckpt"
SIDECAR_NAME = "model.json"
TRAIN_LOG_NAME = "train_log.csv"


class CheckpointSidecar(BaseModel):
    schema_version: int = 1
    config: ModelConfig
    best_epoch: int
    val_top1_joint: float


@dataclass
class TrainResult:
    model: TrackingModel
    history: List[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_top1: float = -1.0


def write_train_log(rows: List[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(rows, columns=LOG_COLUMNS)
    df["epoch"] = df["epoch"].astype(int)
    df.to_csv(path, index=False)
    return path


def save_trained(model: TrackingModel, out_dir, best_epoch: int, top1: float) -> Path:
    out_dir = Path(out_dir)
    ckpt = save_checkpoint(model, out_dir / CHECKPOINT_NAME)
    sidecar = CheckpointSidecar(config=model.cfg, best_epoch=best_epoch, val_top1_joint=top1)
    (out_dir / SIDECAR_NAME).write_text(sidecar.model_dump_json(indent=2))
    return ckpt


def load_trained(out_dir) -> TrackingModel:
    out_dir = Path(out_dir)
    sidecar = CheckpointSidecar.model_validate_json((out_dir / SIDECAR_NAME).read_text())
    return load_checkpoint(TrackingModel(sidecar.config), out_dir / CHECKPOINT_NAME)


def train(cfg: ModelConfig, train_set: Sequence[Sample], val_set: Sequence[Sample] = (),
          out_dir: Optional[str] = None, progress: bool = True) -> TrainResult:
    if not train_set:
        raise ConfigError("training set is empty")
    model = build_model(cfg)
    opt = Adam(model.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    result = TrainResult(model=model)
    # sem validação o critério de checkpoint usa o próprio conjunto de treino
    monitor = list(val_set) or list(train_set)

    for epoch in tqdm(range(1, cfg.epochs + 1), desc="train", disable=not progress):
        sums = np.zeros(2)
        for batch in batches(train_set, cfg.batch_size, rng):
            opt.zero_grad()
            loss = batch_loss(model, batch, cfg.lambda_loss)
            loss.total.backward()
            opt.step()
            sums += np.array([loss.traj, loss.beam]) * len(batch)
        sums /= len(train_set)
        metrics = headline(evaluate_model(model, monitor))
        row = {
            "epoch": epoch, "l_traj": sums[0], "l_beam": sums[1],
            "val_mae": metrics["mae_m"], "val_top1_joint": metrics["top1_joint"],
            "val_top5_joint": metrics["top5_joint"],
        }
        result.history.append(row)
        logger.debug("epoch %d: l_traj=%.4f l_beam=%.4f val_mae=%.3f top1=%.3f",
                     epoch, sums[0], sums[1], row["val_mae"], row["val_top1_joint"])
        if row["val_top1_joint"] > result.best_top1:
            result.best_top1, result.best_epoch = row["val_top1_joint"], epoch
            if out_dir is not None:
                save_trained(model, out_dir, epoch, row["val_top1_joint"])

    if out_dir is not None:
        write_train_log(result.history, Path(out_dir) / TRAIN_LOG_NAME)
    logger.info("best val joint top-1 %.3f at epoch %d", result.best_top1, result.best_epoch)
    return result
