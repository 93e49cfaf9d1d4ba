# config.py : parâmetros de processo do laboratório (env + .env)
# ----------------------------------------------------------------
import os

from dotenv import load_dotenv

load_dotenv()

# =========================== Config ================================
DATA_DIR        = os.getenv("LAB_DATA_DIR", "./data")
SEED            = int(os.getenv("LAB_SEED", "0"))
WORKERS         = int(os.getenv("LAB_WORKERS", "1"))             # 1 = single-thread
DETERMINISTIC   = os.getenv("LAB_DETERMINISTIC", "0") in ("1", "true", "yes")
LOG_LEVEL       = os.getenv("LAB_LOG_LEVEL", "INFO").upper()

# Sweep exaustivo: codewords por bloco e teto de memória para cache da matriz
SWEEP_CHUNK     = int(os.getenv("LAB_SWEEP_CHUNK", "256"))
SWEEP_CACHE_MB  = int(os.getenv("LAB_SWEEP_CACHE_MB", "512"))

# Geração de cenas / trajetórias
MAX_RETRIES     = int(os.getenv("LAB_MAX_RETRIES", "200"))


def defaults_line() -> str:
    return (
        "defaults → "
        f"data_dir={DATA_DIR}, seed={SEED}, workers={WORKERS}, "
        f"deterministic={DETERMINISTIC}, sweep_chunk={SWEEP_CHUNK}, "
        f"sweep_cache_mb={SWEEP_CACHE_MB}, max_retries={MAX_RETRIES}"
    )
