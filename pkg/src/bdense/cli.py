"""Command-line surface tying the pipeline together.

Subcommands: gen-data, train-teacher, distill, sample, eval, search-weights.
Every command is deterministic given its config and seed; report paths write
a PNG figure next to each delimited output.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import plots
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_config
from .data import generate_dataset, read_samples_csv, ring_centers, write_samples_csv
from .distill import (geometric_weights, run_distillation,
                      sfd_weight_objective, train_teacher, weight_search)
from .errors import BDenseError, ConfigError, ContractError
from .metrics import mmd_rbf, mode_coverage, sliced_wasserstein
from .network import ScoreNet
from .seeding import seed_stream
from .solvers import sampling_grid, solve

METRICS_HEADER = "method,nfe,metric,value,n,seed"


def _ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _dataset_path(cfg: RunConfig) -> str:
    if cfg.dataset.kind == "csv_file":
        return cfg.dataset.params["path"]
    return os.path.join(cfg.out_dir, "dataset.csv")


def _teacher_path(cfg: RunConfig) -> str:
    return cfg.teacher_checkpoint or os.path.join(cfg.out_dir, "teacher.bdns")


def _load_dataset(cfg: RunConfig) -> np.ndarray:
    path = _dataset_path(cfg)
    if not os.path.exists(path):
        raise ConfigError(f"dataset file {path!r} not found; run gen-data first")
    return read_samples_csv(path)


def _print_config(cfg: RunConfig) -> None:
    print(json.dumps(cfg.resolved(), indent=2, sort_keys=True))


def cmd_gen_data(cfg: RunConfig, dry_run: bool = False) -> int:
    if dry_run:
        _print_config(cfg)
        return 0
    _ensure_dir(cfg.out_dir)
    data = generate_dataset(cfg.dataset.kind, cfg.dataset.size,
                            seed=cfg.dataset.seed, **cfg.dataset.params)
    path = os.path.join(cfg.out_dir, "dataset.csv")
    write_samples_csv(path, data)
    plots.save_scatter(os.path.join(cfg.out_dir, "dataset.png"), data,
                       title=f"{cfg.dataset.kind} (n={len(data)})")
    print(f"wrote {len(data)} samples to {path}")
    return 0


def cmd_train_teacher(cfg: RunConfig, dry_run: bool = False) -> int:
    if dry_run:
        _print_config(cfg)
        return 0
    _ensure_dir(cfg.out_dir)
    data = _load_dataset(cfg)
    schedule = cfg.schedule.build()
    net = ScoreNet(channels=data.shape[1], hidden=cfg.network.hidden,
                   time_dim=cfg.network.time_dim,
                   parameterization=cfg.network.parameterization,
                   seed=int(seed_stream(cfg.seed, "teacher-init").integers(2 ** 31)))
    losses = train_teacher(net, schedule, data, updates=cfg.teacher.updates,
                           batch_size=cfg.teacher.batch_size, lr=cfg.teacher.lr,
                           weight_decay=cfg.teacher.weight_decay, seed=cfg.seed)
    ckpt = _teacher_path(cfg)
    save_checkpoint(ckpt, net, schedule,
                    provenance={"command": "train-teacher", "seed": cfg.seed,
                                "updates": cfg.teacher.updates,
                                "dataset": cfg.dataset.kind})
    loss_csv = os.path.join(cfg.out_dir, "teacher_loss.csv")
    with open(loss_csv, "w") as fh:
        fh.write("update,loss\n")
        for i, v in enumerate(losses):
            fh.write(f"{i},{v:.8g}\n")
    plots.save_loss_curve(os.path.join(cfg.out_dir, "teacher_loss.png"), losses,
                          title="teacher training loss")
    print(f"trained teacher for {cfg.teacher.updates} updates "
          f"(final loss {losses[-1]:.4g}); checkpoint at {ckpt}")
    return 0


def cmd_distill(cfg: RunConfig, dry_run: bool = False) -> int:
    if cfg.distill is None:
        raise ConfigError("config has no 'distill' section")
    if dry_run:
        _print_config(cfg)
        return 0
    _ensure_dir(cfg.out_dir)
    data = _load_dataset(cfg)
    ckpt = _teacher_path(cfg)
    if not os.path.exists(ckpt):
        raise ConfigError(f"teacher checkpoint {ckpt!r} not found; run train-teacher first")
    teacher, schedule, meta = load_checkpoint(ckpt)
    if meta["schedule"] != cfg.schedule.build().spec():
        raise ConfigError(
            f"teacher checkpoint schedule {meta['schedule']} does not match the "
            f"configured schedule {cfg.schedule.build().spec()}")
    dcfg = cfg.distill
    dcfg.seed = cfg.seed
    report = run_distillation(teacher, dcfg, data, schedule)
    method = dcfg.method

    student_path = os.path.join(cfg.out_dir, f"student_{method}.bdns")
    provenance = {"command": "distill", "method": method, "seed": cfg.seed,
                  "updates": dcfg.updates, "teacher": os.path.basename(ckpt)}
    if method.startswith("pd"):
        provenance["trained_steps"] = dcfg.steps // dcfg.step_factor ** dcfg.rounds
    else:
        provenance["trained_nfe"] = dcfg.nfe
    save_checkpoint(student_path, report.student, schedule, provenance=provenance)

    report_path = os.path.join(cfg.out_dir, f"report_{method}.json")
    with open(report_path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
    loss_csv = os.path.join(cfg.out_dir, f"distill_loss_{method}.csv")
    k = len(report.branch_curves[0]) if report.branch_curves else 1
    with open(loss_csv, "w") as fh:
        fh.write("update,loss," + ",".join(f"branch{i}" for i in range(k)) + "\n")
        for i, (v, comps) in enumerate(zip(report.loss_curve, report.branch_curves)):
            fh.write(f"{i},{v:.8g}," + ",".join(f"{c:.8g}" for c in comps) + "\n")
    plots.save_loss_curve(os.path.join(cfg.out_dir, f"distill_loss_{method}.png"),
                          report.loss_curve, branch_curves=report.branch_curves,
                          boundaries=report.round_boundaries,
                          title=f"{method} distillation loss")
    print(f"distilled with {method}: {len(report.loss_curve)} updates in "
          f"{report.wall_clock_s:.1f}s; student at {student_path}")
    return 0


def _valid_pd_nfes(trained_steps: int) -> list[int]:
    return [n for n in range(1, trained_steps + 1) if trained_steps % n == 0]


def sample_from_checkpoint(checkpoint: str, nfe: int, num: int, method: str | None,
                           seed: int) -> tuple[np.ndarray, dict]:
    """Draw prior noise and integrate with the checkpoint's inference branch."""
    if nfe < 1:
        raise ConfigError(f"nfe must be >= 1, got {nfe}")
    net, schedule, meta = load_checkpoint(checkpoint)
    trained_steps = meta.get("provenance", {}).get("trained_steps")
    if trained_steps is not None and trained_steps % nfe:
        raise ConfigError(
            f"nfe={nfe} is incompatible with this student's {trained_steps}-step grid; "
            f"valid values: {_valid_pd_nfes(trained_steps)}")
    if method is None:
        method = "ddim" if schedule.kind == "vp_linear" else "euler"
    grid = sampling_grid(schedule, nfe)
    rng = seed_stream(seed, "sample")
    noise = rng.standard_normal((num, net.channels), dtype=np.float32)
    if schedule.kind == "edm_sigma":
        noise = noise * float(grid.times[0])
    if num == 0:
        samples = np.empty((0, net.channels), dtype=np.float32)
    else:
        samples = solve(net, noise, grid, method).endpoint()
    info = {"method": method, "nfe": nfe, "seed": seed, "n": num,
            "checkpoint": os.path.basename(checkpoint),
            "schedule": schedule.spec()}
    return samples, info


def cmd_sample(args) -> int:
    samples, info = sample_from_checkpoint(args.checkpoint, args.nfe, args.num,
                                           args.solver, args.seed)
    write_samples_csv(args.out, samples)
    with open(args.out + ".meta.json", "w") as fh:
        json.dump(info, fh, indent=2, sort_keys=True)
    plots.save_scatter(os.path.splitext(args.out)[0] + ".png", samples,
                       title=f"{info['method']} samples, nfe={args.nfe}")
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def cmd_eval(args) -> int:
    samples = read_samples_csv(args.samples)
    reference = read_samples_csv(args.reference)
    if samples.shape[1] != reference.shape[1]:
        raise ContractError(f"sample dimension {samples.shape[1]} does not match "
                            f"reference dimension {reference.shape[1]}")
    metric_names = [m.strip() for m in args.metrics.split(",") if m.strip()]
    supported = ("swd", "mmd", "coverage")
    for m in metric_names:
        if m not in supported:
            raise ConfigError(f"unknown metric {m!r}; supported metrics: {list(supported)}")

    meta_path = args.samples + ".meta.json"
    method, nfe = args.method, args.nfe
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
        method = method or meta.get("method", "unknown")
        nfe = nfe if nfe is not None else meta.get("nfe", 0)
    method = method or "unknown"
    nfe = nfe if nfe is not None else 0

    rows = []
    for m in metric_names:
        if m == "swd":
            rep = sliced_wasserstein(samples, reference, seed=args.seed)
        elif m == "mmd":
            rep = mmd_rbf(samples, reference)
        else:
            centers = ring_centers(args.coverage_modes, args.coverage_radius_ring)
            rep = mode_coverage(samples, centers, args.coverage_radius)
        rows.append((rep.metric, rep.value, rep.n))

    new_file = not os.path.exists(args.out)
    with open(args.out, "a") as fh:
        if new_file:
            fh.write(METRICS_HEADER + "\n")
        for name, value, n in rows:
            fh.write(f"{method},{nfe},{name},{value:.8g},{n},{args.seed}\n")
    plots.save_scatter(os.path.splitext(args.out)[0] + "_samples.png", samples,
                       reference=reference, title=f"{method} nfe={nfe}")
    plots.save_metric_bars(os.path.splitext(args.out)[0] + "_bars.png",
                           [(name, value) for name, value, _ in rows],
                           title=f"{method} nfe={nfe}")
    for name, value, _ in rows:
        print(f"{name}: {value:.6g}")
    return 0


def cmd_search_weights(cfg: RunConfig, dry_run: bool = False) -> int:
    if dry_run:
        _print_config(cfg)
        return 0
    _ensure_dir(cfg.out_dir)
    data = _load_dataset(cfg)
    ckpt = _teacher_path(cfg)
    if not os.path.exists(ckpt):
        raise ConfigError(f"teacher checkpoint {ckpt!r} not found; run train-teacher first")
    teacher, schedule, _ = load_checkpoint(ckpt)
    if schedule.kind != "edm_sigma":
        raise ConfigError("weight search runs on an edm_sigma teacher")
    holdout = generate_dataset(cfg.dataset.kind, cfg.search.eval_samples,
                               seed=cfg.dataset.seed + 1, **cfg.dataset.params)
    spec = cfg.search
    objective = sfd_weight_objective(teacher, schedule, data, holdout,
                                     nfe=spec.nfe, branches=spec.branches,
                                     updates=spec.updates, batch_size=spec.batch_size,
                                     lr=spec.lr, eval_samples=spec.eval_samples,
                                     seed=cfg.seed)
    trials = weight_search(objective, spec.a_range, spec.b_range, spec.trials,
                           seed=cfg.seed)
    csv_path = os.path.join(cfg.out_dir, "weight_search.csv")
    with open(csv_path, "w") as fh:
        fh.write("rank,a,b,score\n")
        for rank, tr in enumerate(trials):
            fh.write(f"{rank},{tr.a:.8g},{tr.b:.8g},{tr.score:.8g}\n")
    best = trials[0]
    best_weights = geometric_weights((best.a, best.b), spec.branches)
    with open(os.path.join(cfg.out_dir, "best_weights.json"), "w") as fh:
        json.dump({"a": best.a, "b": best.b, "score": best.score,
                   "lambdas": list(best_weights.lambdas)}, fh, indent=2, sort_keys=True)
    plots.save_search_plot(os.path.join(cfg.out_dir, "weight_search.png"), trials)
    print(f"best (a, b) = ({best.a:.4g}, {best.b:.4g}) with score {best.score:.6g}; "
          f"{len(trials)} trials written to {csv_path}")
    return 0


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="path to a JSON run config")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out-dir", default=None, help="override the config output directory")
    p.add_argument("--dry-run", action="store_true",
                   help="validate and print the resolved config without computing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdense",
        description="Desk-scale diffusion distillation with multi-branch "
                    "trajectory supervision.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("gen-data", "generate a synthetic dataset CSV"),
                           ("train-teacher", "train the base denoiser"),
                           ("distill", "run the configured distillation loop"),
                           ("search-weights", "random-search geometric branch weights")):
        p = sub.add_parser(name, help=helptext)
        _add_config_args(p)

    p = sub.add_parser("sample", help="draw samples from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--nfe", type=int, required=True, help="sampling steps")
    p.add_argument("--num", type=int, default=1024, help="number of samples")
    p.add_argument("--solver", choices=("ddim", "euler", "heun"), default=None,
                   help="default: ddim for vp schedules, euler for sigma schedules")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="samples CSV path")

    p = sub.add_parser("eval", help="score a samples CSV against a reference CSV")
    p.add_argument("--samples", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--metrics", default="swd,mmd", help="comma list: swd,mmd,coverage")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="metrics CSV (appended)")
    p.add_argument("--method", default=None, help="method label for the CSV rows")
    p.add_argument("--nfe", type=int, default=None, help="nfe label for the CSV rows")
    p.add_argument("--coverage-radius", type=float, default=0.4)
    p.add_argument("--coverage-modes", type=int, default=8)
    p.add_argument("--coverage-radius-ring", type=float, default=4.0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sample":
            return cmd_sample(args)
        if args.command == "eval":
            return cmd_eval(args)
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out_dir)
        if args.command == "gen-data":
            return cmd_gen_data(cfg, dry_run=args.dry_run)
        if args.command == "train-teacher":
            return cmd_train_teacher(cfg, dry_run=args.dry_run)
        if args.command == "distill":
            return cmd_distill(cfg, dry_run=args.dry_run)
        return cmd_search_weights(cfg, dry_run=args.dry_run)
    except BDenseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
