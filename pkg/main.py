"""
CLI do laboratório de gestão de feixes em campo próximo.

  python main.py scene gen --seed 3 --out data/scene.json
  python main.py dataset gen --scene data/scene.json --out data
  python main.py sweep --focal 10 5 40
  python main.py train --data data --out runs/base --deterministic
  python main.py eval --data data --model runs/base --out runs/base/metrics.csv
  python main.py eval --data data --baseline --out runs/baseline.csv
  python main.py gradcheck --seed 7
  python main.py bench-sweep --workers 8
"""
import argparse
import logging
import os
import sys
from typing import List, Optional

import config

logger = logging.getLogger("lab")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=config.SEED)
    p.add_argument("--deterministic", action="store_true", default=config.DETERMINISTIC,
                   help="single-thread mode (numeric threads and generation workers = 1)")
    p.add_argument("--workers", type=int, default=config.WORKERS)
    p.add_argument("--log-level", default=config.LOG_LEVEL, type=str.upper,
                   choices=("DEBUG", "INFO", "WARNING", "ERROR"))


def _array_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m-y", dest="m_y", type=int, default=64)
    p.add_argument("--m-z", dest="m_z", type=int, default=64)
    p.add_argument("--f-c", dest="f_c", type=float, default=7e9)
    p.add_argument("--N", type=int, default=20)
    p.add_argument("--S", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="main.py", description="Near-field XL-MIMO UAV beam-management lab")
    sub = parser.add_subparsers(dest="command", required=True)

    # scene gen
    scene = sub.add_parser("scene", help="urban scene tools")
    scene_sub = scene.add_subparsers(dest="action", required=True)
    sg = scene_sub.add_parser("gen", help="generate a seeded urban scene")
    _common(sg)
    sg.add_argument("--buildings", type=int, default=5)
    sg.add_argument("--scatterers", type=int, default=4, help="scatterers per building")
    sg.add_argument("--out")

    # dataset gen
    ds = sub.add_parser("dataset", help="dataset tools")
    ds_sub = ds.add_subparsers(dest="action", required=True)
    dg = ds_sub.add_parser("gen", help="generate labelled train/val/test sequences")
    _common(dg)
    _array_flags(dg)
    dg.add_argument("--scene", help="scene.json (default: generate from --seed)")
    dg.add_argument("--out")
    dg.add_argument("--counts", type=int, nargs=3, metavar=("TRAIN", "VAL", "TEST"))
    dg.add_argument("--full-scale", action="store_true", help="12000/1500/1500 sequences")
    dg.add_argument("--T", type=int, default=20)
    dg.add_argument("--dt", type=float, default=0.1)
    dg.add_argument("--P", type=int, default=1024)
    dg.add_argument("--K", type=int, default=3)
    dg.add_argument("--gamma", type=float, default=0.5)
    dg.add_argument("--sigma-gps", type=float, default=0.5)
    dg.add_argument("--t-prev", type=int, default=10)
    dg.add_argument("--t-pred", type=int, default=10)
    dg.add_argument("--export-codebook", action="store_true")

    # sweep
    sw = sub.add_parser("sweep", help="exhaustive sweep for one UAV position")
    _common(sw)
    _array_flags(sw)
    sw.add_argument("--scene")
    sw.add_argument("--position", type=float, nargs=3, metavar=("X", "Y", "Z"))
    sw.add_argument("--focal", type=float, nargs=3, metavar=("THETA_DEG", "PHI_DEG", "R"),
                    help="position relative to the array, spherical")
    sw.add_argument("--K", type=int, default=3)
    sw.add_argument("--on-the-fly", action="store_true", help="generate codewords chunk by chunk")

    # train
    tr = sub.add_parser("train", help="train the trajectory/beam predictor")
    _common(tr)
    tr.add_argument("--data", default=config.DATA_DIR)
    tr.add_argument("--out", required=True)
    tr.add_argument("--epochs", type=int, default=50)
    tr.add_argument("--d-model", type=int, default=64)
    tr.add_argument("--heads", type=int, default=4)
    tr.add_argument("--layers", type=int, default=2)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--batch-size", type=int, default=16)
    tr.add_argument("--lambda", dest="lambda_loss", type=float, default=10.0)
    tr.add_argument("--t-prev", type=int)
    tr.add_argument("--t-pred", type=int)
    tr.add_argument("--limit", type=int, help="use only the first N training sequences")
    tr.add_argument("--no-points", action="store_true")
    tr.add_argument("--no-task", action="store_true")
    tr.add_argument("--detach-trajectory", action="store_true")

    # eval
    ev = sub.add_parser("eval", help="per-step metrics CSV for a model or the baseline")
    _common(ev)
    ev.add_argument("--data", default=config.DATA_DIR)
    ev.add_argument("--model", help="directory with model.ckpt + model.json")
    ev.add_argument("--baseline", action="store_true", help="constant-velocity + geometric beams")
    ev.add_argument("--split", default="test", choices=("train", "val", "test"))
    ev.add_argument("--t-prev", type=int)
    ev.add_argument("--out", required=True)

    # gradcheck
    gc = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    _common(gc)

    # bench-sweep
    bs = sub.add_parser("bench-sweep", help="timed exhaustive sweep with on-the-fly codewords")
    _common(bs)
    _array_flags(bs)
    bs.add_argument("--scene")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="[%(name)s] %(message)s", force=True)
    if args.deterministic:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, "1")
    logger.info(config.defaults_line())

    # depois das variáveis de threads: o numpy só é carregado aqui
    from orchestrator import executar
    return executar(args)


if __name__ == "__main__":
    sys.exit(main())
