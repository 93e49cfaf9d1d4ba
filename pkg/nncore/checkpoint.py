"""
Checkpoint binário de parâmetros (layout em schema.py):
b"NFCK", u32 versão, u32 n_params, e por parâmetro
u32 len(nome), nome utf-8, u32 rank, u32 shape[rank], float32 dados. Little-endian.
"""
import logging
import struct
from pathlib import Path

import numpy as np

from errors import BadMagicError, BadVersionError, TruncatedError
from nncore.layers import Module
from schema import CHECKPOINT_MAGIC, CHECKPOINT_VERSION

logger = logging.getLogger(__name__)


def save_checkpoint(model: Module, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    named = list(model.state_dict().items())
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(named)))
        for name, p in named:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", p.ndim))
            fh.write(struct.pack(f"<{p.ndim}I", *p.shape))
            fh.write(np.ascontiguousarray(p, dtype="<f4").tobytes())
    logger.info("checkpoint %s (%d parameters)", path, len(named))
    return path


class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf, self.pos, self.path = buf, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedError(f"{self.path}: truncated at byte {self.pos} (need {n} more)")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, n: int = 1):
        vals = struct.unpack(f"<{n}I", self.take(4 * n))
        return vals[0] if n == 1 else vals


def read_checkpoint(path) -> dict:
    buf = Path(path).read_bytes()
    r = _Reader(buf, path)
    if r.take(4) != CHECKPOINT_MAGIC:
        raise BadMagicError(f"{path}: not a parameter checkpoint")
    version = r.u32()
    if version != CHECKPOINT_VERSION:
        raise BadVersionError(f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    state = {}
    for _ in range(r.u32()):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        shape = tuple(r.u32(rank)) if rank > 1 else ((r.u32(),) if rank == 1 else ())
        count = int(np.prod(shape)) if shape else 1
        state[name] = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape).astype(np.float32)
    return state


def load_checkpoint(model: Module, path) -> Module:
    model.load_state_dict(read_checkpoint(path))
    return model
