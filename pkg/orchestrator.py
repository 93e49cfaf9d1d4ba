"""
Encaminhamento dos subcomandos da CLI para os módulos do laboratório.

Cada comando recebe o Namespace do argparse e devolve o código de saída.
Os erros do domínio (LabError) e de validação (pydantic) são apanhados aqui e
convertidos numa linha de diagnóstico.
"""
import logging
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

import config
from dataset.container import read_dataset
from dataset.pipeline import DESK_COUNTS, FULL_COUNTS, GenerationConfig, generate_dataset
from errors import ConfigError, LabError
from predictor.data import horizon, samples_from_records
from predictor.evaluate import evaluate_baseline, evaluate_model, headline
from predictor.model import ModelConfig
from predictor.train import load_trained, train
from predictor.verify import END_TO_END_TOL, run_suite, suite_passed
from radio.array import ArrayConfig, cartesian_to_focal, focal_to_cartesian
from radio.channel import calibrate_power, slot_channel
from radio.codebook import build_codebook, export_codebook, flat_index
from radio.oracle import bench_sweep, codebook_se, label_from_se, write_metrics_csv
from radio.scene import SceneParams, generate_scene, load_scene, save_scene
from sensing.trajectory import derive_seed

logger = logging.getLogger(__name__)


def _progress() -> bool:
    return logging.getLogger().getEffectiveLevel() <= logging.INFO


def _array(args) -> ArrayConfig:
    return ArrayConfig(m_y=args.m_y, m_z=args.m_z, f_c=args.f_c)


def _scene(args):
    if getattr(args, "scene", None):
        return load_scene(args.scene)
    return generate_scene(args.seed, building_count=0)


# ====================== Comandos ==================================
def scene_gen(args) -> int:
    params = SceneParams(building_count=args.buildings, scatterers_per_building=args.scatterers)
    scene = generate_scene(args.seed, params=params)
    path = save_scene(scene, args.out or Path(config.DATA_DIR) / "scene.json")
    print(f"scene {path}: {scene.building_count} buildings, {scene.scatterer_count} scatterers")
    return 0


def dataset_gen(args) -> int:
    scene = load_scene(args.scene) if args.scene else generate_scene(args.seed)
    counts = FULL_COUNTS if args.full_scale else (tuple(args.counts) if args.counts else DESK_COUNTS)
    gen = GenerationConfig(
        array=_array(args), N=args.N, S=args.S, counts=counts, T=args.T, dt=args.dt, P=args.P,
        K=args.K, gamma=args.gamma, sigma_gps=args.sigma_gps, T_prev=args.t_prev, T_pred=args.t_pred,
        workers=1 if args.deterministic else args.workers,
    )
    out = args.out or config.DATA_DIR
    manifest = generate_dataset(scene, gen, args.seed, out, progress=_progress())
    if args.export_codebook:
        export_codebook(build_codebook(gen.array, gen.N, gen.S, gen.ranges), Path(out) / "codebook")
    print(f"dataset {out}: {manifest.record_counts}")
    return 0


def sweep(args) -> int:
    scene = _scene(args)
    cfg = _array(args)
    cb = build_codebook(cfg, args.N, args.S)
    link = calibrate_power(cfg)
    if args.focal:
        theta, phi, r = args.focal
        pos = scene.bs_position + focal_to_cartesian(np.deg2rad(theta), np.deg2rad(phi), r)
    elif args.position:
        pos = np.asarray(args.position, float)
    else:
        raise ConfigError("sweep needs --position x y z or --focal theta_deg phi_deg r")
    h = slot_channel(cfg, scene, pos)
    se = codebook_se(h, cb, link, on_the_fly=args.on_the_fly)
    label = label_from_se(se, cb, args.K)
    theta, phi, r = cartesian_to_focal(pos - scene.bs_position)
    print(f"position focal: theta={np.rad2deg(theta):.3f} deg, phi={np.rad2deg(phi):.3f} deg, r={r:.3f} m")
    for rank, (b, v) in enumerate(zip(label.topk, label.se)):
        print(f"#{rank + 1} i_theta={b.i_theta} i_phi={b.i_phi} i_r={b.i_r} "
              f"flat={flat_index(b, cb.N, cb.S)} se={v:.6f} bit/s/Hz")
    return 0


def train_cmd(args) -> int:
    splits, manifest = read_dataset(args.data, ("train", "val"))
    t_prev = args.t_prev or manifest.T_prev
    t_pred = horizon(manifest.T, t_prev, args.t_pred or manifest.T_pred)
    cfg = ModelConfig(
        d_model=args.d_model, heads=args.heads, backbone_layers=args.layers, T_prev=t_prev, T_pred=t_pred,
        K=manifest.K, gamma=manifest.gamma, lambda_loss=args.lambda_loss, N=manifest.codebook.N,
        S=manifest.codebook.S, lr=args.lr, batch_size=args.batch_size, epochs=args.epochs, seed=args.seed,
        use_points=not args.no_points, use_task=not args.no_task, detach_trajectory=args.detach_trajectory,
        bs_position=tuple(load_scene(Path(args.data) / manifest.scene_file).bs_position.tolist()),
        coverage_radius=manifest.codebook.ranges.r_max,
    )
    train_set = samples_from_records(splits["train"][:args.limit or None], t_prev, t_pred)
    val_set = samples_from_records(splits["val"], t_prev, t_pred)
    result = train(cfg, train_set, val_set, out_dir=args.out, progress=_progress())
    last = result.history[-1]
    print(f"trained {cfg.epochs} epochs: best val joint top-1 {result.best_top1:.4f} at epoch {result.best_epoch}; "
          f"last l_traj={last['l_traj']:.4f} l_beam={last['l_beam']:.4f}")
    return 0


def eval_cmd(args) -> int:
    splits, manifest = read_dataset(args.data, (args.split,))
    records = splits[args.split]
    if args.baseline:
        t_prev = args.t_prev or manifest.T_prev
        t_pred = horizon(manifest.T, t_prev, manifest.T_pred)
        cb = build_codebook(manifest.codebook.array, manifest.codebook.N, manifest.codebook.S,
                            manifest.codebook.ranges)
        bs = load_scene(Path(args.data) / manifest.scene_file).bs_position
        rows = evaluate_baseline(samples_from_records(records, t_prev, t_pred), cb, bs)
    else:
        if not args.model:
            raise ConfigError("eval needs --model <dir> or --baseline")
        model = load_trained(args.model)
        if args.t_prev and args.t_prev != model.cfg.T_prev:
            raise ConfigError(f"model was trained with T_prev={model.cfg.T_prev}, asked for {args.t_prev}")
        rows = evaluate_model(model, samples_from_records(records, model.cfg.T_prev, model.cfg.T_pred))
    path = write_metrics_csv(rows, args.out)
    summary = headline(rows)
    print(f"metrics {path}: {len(rows)} steps, mae={summary['mae_m']:.3f} m, "
          f"top1_joint={summary['top1_joint']:.4f}, top5_joint={summary['top5_joint']:.4f}")
    return 0


def gradcheck(args) -> int:
    results = run_suite(args.seed)
    for name, err in results.items():
        print(f"{name:<18} {err:.3e}")
    prim = max(v for k, v in results.items() if k != "end_to_end")
    print(f"max relative error: primitives {prim:.3e}, end-to-end {results['end_to_end']:.3e} "
          f"(tolerance {END_TO_END_TOL:.0e})")
    return 0 if suite_passed(results) else 1


def bench_sweep_cmd(args) -> int:
    cfg = _array(args)
    cb = build_codebook(cfg, args.N, args.S)
    rng = np.random.default_rng(derive_seed(args.seed, 0))
    scene = _scene(args)
    flat = int(rng.integers(0, cb.size))
    pos = scene.bs_position + cb.focal_point(flat).cartesian()
    h = slot_channel(cfg, scene, pos)
    workers = 1 if args.deterministic else args.workers
    out = bench_sweep(h, cb, calibrate_power(cfg), workers=workers)
    print(f"sweep {out['codewords']} codewords x {out['antennas']} antennas, workers={workers}: "
          f"{out['elapsed_s']:.3f} s, best flat {out['best_flat']} (focused at {flat})")
    return 0


COMANDOS = {
    "scene gen": scene_gen,
    "dataset gen": dataset_gen,
    "sweep": sweep,
    "train": train_cmd,
    "eval": eval_cmd,
    "gradcheck": gradcheck,
    "bench-sweep": bench_sweep_cmd,
}


def encaminhar(args) -> str:
    """Nome do comando a partir do Namespace (subcomandos compostos incluídos)."""
    name = args.command
    if getattr(args, "action", None):
        name = f"{name} {args.action}"
    if name not in COMANDOS:
        raise ConfigError(f"unknown command {name!r}")
    return name


def executar(args) -> int:
    try:
        return COMANDOS[encaminhar(args)](args)
    except LabError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or e.title
        print(f"error: invalid {e.title} ({where}): {first.get('msg')}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: file not found: {e.filename}", file=sys.stderr)
        return 1
