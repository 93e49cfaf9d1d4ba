"""
Contentor binário de sequências (.nftl) e manifesto JSON.

Ficheiro: b"NFTL" | u32 versão | u64 n_registos | registos, little-endian.
Registo:  u64 n_bytes | u32 seq_id, mode, T, P, K, N, S |
          positions f32[T,3] | gps f32[T,3] | cloud f32[P,3] |
          optimal u32[T] | topk u32[T,K] | topk_se f32[T,K] |
          soft_theta f32[T,N] | soft_phi f32[T,N] | soft_r f32[T,S]
"""
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from errors import (
    BadMagicError, BadVersionError, DatasetFormatError, ManifestMismatchError, TruncatedError,
)
from radio.array import ArrayConfig
from radio.channel import LinkParams
from radio.codebook import CodebookRanges
from schema import DATASET_MAGIC, DATASET_VERSION

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
MANIFEST_NAME = "manifest.json"
_HEAD = struct.Struct("<7I")


@dataclass
class SequenceRecord:
    seq_id: int
    mode: int
    positions: np.ndarray       # T x 3
    gps: np.ndarray             # T x 3
    cloud: np.ndarray           # P x 3
    optimal: np.ndarray         # T (índice plano)
    topk: np.ndarray            # T x K
    topk_se: np.ndarray         # T x K
    soft_theta: np.ndarray      # T x N
    soft_phi: np.ndarray        # T x N
    soft_r: np.ndarray          # T x S

    @property
    def T(self) -> int:
        return len(self.positions)

    @property
    def P(self) -> int:
        return len(self.cloud)

    @property
    def K(self) -> int:
        return self.topk.shape[1]

    @property
    def N(self) -> int:
        return self.soft_theta.shape[1]

    @property
    def S(self) -> int:
        return self.soft_r.shape[1]

    def arrays(self) -> List[Tuple[np.ndarray, str]]:
        return [
            (self.positions, "<f4"), (self.gps, "<f4"), (self.cloud, "<f4"),
            (self.optimal, "<u4"), (self.topk, "<u4"), (self.topk_se, "<f4"),
            (self.soft_theta, "<f4"), (self.soft_phi, "<f4"), (self.soft_r, "<f4"),
        ]


class CodebookSpec(BaseModel):
    N: int
    S: int
    ranges: CodebookRanges = CodebookRanges()
    array: ArrayConfig = ArrayConfig()


class DatasetManifest(BaseModel):
    version: int = DATASET_VERSION
    scene_file: str = "scene.json"
    codebook: CodebookSpec
    link: LinkParams
    master_seed: int
    scene_seed: int
    split_sizes: Dict[str, int]
    record_counts: Dict[str, int] = Field(default_factory=dict)
    split_ids: Dict[str, List[int]] = Field(default_factory=dict)   # [primeiro, último+1]
    sigma_gps: float
    K: int
    gamma: float
    dt: float
    T: int
    P: int
    T_prev: int
    T_pred: int
    mode_prompts: List[str] = Field(default_factory=list)


# ====================== Escrita ===================================
def encode_record(rec: SequenceRecord) -> bytes:
    parts = [_HEAD.pack(rec.seq_id, rec.mode, rec.T, rec.P, rec.K, rec.N, rec.S)]
    parts += [np.ascontiguousarray(a, dtype=dt).tobytes() for a, dt in rec.arrays()]
    return b"".join(parts)


def write_split(records: List[SequenceRecord], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<IQ", DATASET_VERSION, len(records)))
        for rec in records:
            payload = encode_record(rec)
            fh.write(struct.pack("<Q", len(payload)))
            fh.write(payload)
    return path


def write_dataset(splits: Dict[str, List[SequenceRecord]], manifest: DatasetManifest, out_dir) -> Path:
    """Escreve <split>.nftl por split e o manifesto com as contagens reais."""
    out_dir = Path(out_dir)
    counts, ids = {}, {}
    for name, records in splits.items():
        write_split(records, out_dir / f"{name}.nftl")
        counts[name] = len(records)
        seq = [r.seq_id for r in records]
        ids[name] = [min(seq), max(seq) + 1] if seq else [0, 0]
    manifest = manifest.model_copy(update={"record_counts": counts, "split_ids": ids})
    (out_dir / MANIFEST_NAME).write_text(manifest.model_dump_json(indent=2))
    logger.info("dataset written to %s: %s", out_dir, counts)
    return out_dir


# ====================== Leitura ===================================
class _Cursor:
    def __init__(self, buf: bytes, path):
        self.buf, self.pos, self.path = buf, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedError(f"{self.path}: truncated at byte {self.pos} (need {n}, have {len(self.buf) - self.pos})")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out


def decode_record(payload: bytes, path="<memory>") -> SequenceRecord:
    cur = _Cursor(payload, path)
    seq_id, mode, T, P, K, N, S = _HEAD.unpack(cur.take(_HEAD.size))

    def arr(dtype: str, *shape) -> np.ndarray:
        native = np.float32 if dtype.endswith("f4") else np.uint32
        n = int(np.prod(shape))
        return np.frombuffer(cur.take(4 * n), dtype=dtype).reshape(shape).astype(native)

    rec = SequenceRecord(
        seq_id=seq_id, mode=mode,
        positions=arr("<f4", T, 3), gps=arr("<f4", T, 3), cloud=arr("<f4", P, 3),
        optimal=arr("<u4", T), topk=arr("<u4", T, K), topk_se=arr("<f4", T, K),
        soft_theta=arr("<f4", T, N), soft_phi=arr("<f4", T, N), soft_r=arr("<f4", T, S),
    )
    if cur.pos != len(payload):
        raise DatasetFormatError(f"{path}: record {seq_id} has {len(payload) - cur.pos} trailing bytes")
    return rec


def read_split(path) -> List[SequenceRecord]:
    buf = Path(path).read_bytes()
    cur = _Cursor(buf, path)
    if cur.take(4) != DATASET_MAGIC:
        raise BadMagicError(f"{path}: not a sequence container (bad magic)")
    version, count = struct.unpack("<IQ", cur.take(12))
    if version != DATASET_VERSION:
        raise BadVersionError(f"{path}: container version {version}, expected {DATASET_VERSION}")
    records = []
    for _ in range(count):
        (n,) = struct.unpack("<Q", cur.take(8))
        records.append(decode_record(cur.take(n), path))
    if cur.pos != len(buf):
        raise DatasetFormatError(f"{path}: {len(buf) - cur.pos} trailing bytes after {count} records")
    return records


def read_manifest(data_dir) -> DatasetManifest:
    path = Path(data_dir) / MANIFEST_NAME
    if not path.exists():
        raise DatasetFormatError(f"{path}: manifest not found")
    return DatasetManifest.model_validate_json(path.read_text())


def check_consistency(records: List[SequenceRecord], manifest: DatasetManifest, split: str) -> None:
    expected = manifest.record_counts.get(split)
    if expected is not None and expected != len(records):
        raise ManifestMismatchError(f"{split}: manifest says {expected} records, file has {len(records)}")
    N, S = manifest.codebook.N, manifest.codebook.S
    want = {"T": manifest.T, "P": manifest.P, "K": manifest.K, "N": N, "S": S}
    for rec in records:
        got = {"T": rec.T, "P": rec.P, "K": rec.K, "N": rec.N, "S": rec.S}
        if got != want:
            raise ManifestMismatchError(f"{split} record {rec.seq_id}: dims {got} vs manifest {want}")
        if rec.optimal.size and int(rec.optimal.max()) >= N * N * S:
            raise ManifestMismatchError(f"{split} record {rec.seq_id}: flat index >= {N * N * S}")
    lo, hi = manifest.split_ids.get(split, [None, None])
    if lo is not None and any(not lo <= r.seq_id < hi for r in records):
        raise ManifestMismatchError(f"{split}: sequence ids outside [{lo}, {hi})")


def read_dataset(data_dir, splits: Optional[Tuple[str, ...]] = None) -> Tuple[Dict[str, List[SequenceRecord]], DatasetManifest]:
    data_dir = Path(data_dir)
    manifest = read_manifest(data_dir)
    out = {}
    for name in splits or tuple(manifest.record_counts):
        records = read_split(data_dir / f"{name}.nftl")
        check_consistency(records, manifest, name)
        out[name] = records
    return out, manifest
