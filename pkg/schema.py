"""
Esquemas persistidos do laboratório. Os nomes de campos aqui são fixos;
qualquer mudança incompatível sobe a versão correspondente.

Documentos de texto estruturado (JSON de modelos pydantic):
  scene.json       SceneDocument      bs_position, boxes[min,max], scatterers[position,reflection,host], seed
  manifest.json    DatasetManifest    ver dataset/container.py
  model.json       CheckpointSidecar  ModelConfig + melhor época (predictor/train.py)
  codebook.json    cabeçalho do export do codebook (radio/codebook.py)

Binários (little-endian):
  <split>.nftl     b"NFTL" | u32 version | u64 record_count | records...
                   cada registo: u64 byte_len | payload (layout em dataset/container.py)
  *.ckpt           b"NFCK" | u32 version | u32 param_count | por parâmetro:
                   u32 name_len | name utf-8 | u32 rank | u32 shape[rank] | float32 data
  codebook.bin     size x M x (re, im) float32
"""
from typing import List

from pydantic import BaseModel, ConfigDict, field_validator

SCENE_SCHEMA_VERSION = 1
DATASET_MAGIC = b"NFTL"
DATASET_VERSION = 1
CHECKPOINT_MAGIC = b"NFCK"
CHECKPOINT_VERSION = 1


def _xyz(v: List[float]) -> List[float]:
    if len(v) != 3:
        raise ValueError(f"expected 3 coordinates, got {len(v)}")
    return [float(x) for x in v]


class BoxDocument(BaseModel):
    model_config = ConfigDict(frozen=True)

    min: List[float]
    max: List[float]

    @field_validator("min", "max")
    @classmethod
    def three_coords(cls, v):
        return _xyz(v)


class ScattererDocument(BaseModel):
    model_config = ConfigDict(frozen=True)

    position: List[float]
    reflection: float
    host: int             # índice da caixa onde o difusor está pousado

    @field_validator("position")
    @classmethod
    def three_coords(cls, v):
        return _xyz(v)


class SceneDocument(BaseModel):
    schema_version: int = SCENE_SCHEMA_VERSION
    seed: int
    bs_position: List[float]
    boxes: List[BoxDocument] = []
    scatterers: List[ScattererDocument] = []

    @field_validator("bs_position")
    @classmethod
    def three_coords(cls, v):
        return _xyz(v)
