"""Distillation loops: step-halving and trajectory-matching, each with an
optional multi-branch variant, plus branch-weight schedules and the
(a, b) weight search.

Both branched loops reduce exactly to their baselines when run with a
single branch and unit weight: the baseline and branched code paths share
the drawing, prediction, and loss arithmetic, so the parameter sequences
agree bitwise under a shared seed.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, ContractError
from .network import ScoreNet, branch_slice, collapse_branch_head, expand_branch_head, loss_simple
from .optim import AdamW
from .schedule import NoiseSchedule, convert_param, snr_weight
from .seeding import seed_stream
from .solvers import TimeGrid, TrajectoryRecord, sampling_grid, solve, sub_grid
from .tensor import (Tensor, add, as_tensor, backward, clear_tape, concat_cols,
                     reduce_loss, scale, sub)

METHODS = ("pd", "pd_bdense", "sfd", "sfd_bdense")


@dataclass(frozen=True)
class GeometricSchedule:
    """Log-linear branch-weight generator: lambda_i = exp(a*i + b)."""

    a: float
    b: float


@dataclass(frozen=True)
class BranchWeights:
    """Per-branch loss coefficients, earliest sub-step first."""

    lambdas: tuple

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if not lam:
            raise ConfigError("branch weights cannot be empty")
        if any(v < 0 for v in lam):
            raise ConfigError(f"branch weights must be non-negative, got {lam}")
        if not any(v > 0 for v in lam):
            raise ConfigError("at least one branch weight must be positive")

    def __len__(self) -> int:
        return len(self.lambdas)


def geometric_weights(sched, k: int) -> BranchWeights:
    """Evaluate the geometric schedule at branch indices 0..k-1 (raw, unnormalized)."""
    if k < 1:
        raise ConfigError(f"branch count must be >= 1, got {k}")
    if isinstance(sched, GeometricSchedule):
        a, b = sched.a, sched.b
    else:
        a, b = float(sched[0]), float(sched[1])
    return BranchWeights(tuple(math.exp(a * i + b) for i in range(k)))


# Published reference weights for four branches (weight-search winners on
# 32x32 natural images); used as the default for four-branch trajectory
# distillation.
CIFAR10_BRANCH_WEIGHTS = (0.017, 0.056, 0.191, 0.651)
IMAGENET_BRANCH_WEIGHTS = (0.014, 0.056, 0.223, 0.892)


@dataclass
class DistillConfig:
    """Settings shared by the four distillation loops."""

    method: str
    steps: int = 64              # starting sampling-step count (step-halving methods)
    rounds: int = 3              # outer iterations (step-halving methods)
    step_factor: int = 2         # teacher steps compressed per student step (N)
    branches: int = 1            # student branch count (K)
    substeps: int = 4            # teacher sub-steps per interval (trajectory methods)
    nfe: int = 2                 # student grid size (trajectory methods)
    updates: int = 1000          # gradient updates (per round for step-halving)
    batch_size: int = 128
    lr: float = 1e-3
    lr_decay: bool = True        # cosine decay to 5% within each training leg
    weight_decay: float = 0.0
    snr_weighting: str = "uniform"
    distance: str = "mse"
    weights: Optional[BranchWeights] = None
    teacher_solver: str = "heun"
    seed: int = 0

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r} (expected one of {METHODS})")
        if self.branches < 1:
            raise ConfigError(f"branches must be >= 1, got {self.branches}")
        if self.updates < 0 or self.batch_size < 1:
            raise ConfigError("updates must be >= 0 and batch_size >= 1")
        if self.distance not in ("mse", "l1"):
            raise ConfigError(f"unknown distance {self.distance!r}")
        if self.snr_weighting not in ("uniform", "truncated_snr"):
            raise ConfigError(f"unknown snr weighting {self.snr_weighting!r}")
        if self.method in ("pd", "pd_bdense"):
            if self.step_factor < 2:
                raise ConfigError(f"step-halving needs step_factor >= 2, got {self.step_factor}")
            if self.rounds < 0:
                raise ConfigError(f"rounds must be >= 0, got {self.rounds}")
            if self.steps % (self.step_factor ** max(self.rounds, 1)):
                raise ConfigError(
                    f"step count {self.steps} is not divisible by "
                    f"{self.step_factor}^{self.rounds}")
            if self.method == "pd" and self.branches != 1:
                raise ConfigError("method 'pd' is single-branch; use 'pd_bdense' for K > 1")
            if self.method == "pd_bdense" and self.branches not in (1, self.step_factor):
                raise ConfigError(
                    f"pd_bdense expects branches == step_factor ({self.step_factor}) "
                    f"or the single-branch reduction, got {self.branches}")
        else:
            if self.nfe < 1:
                raise ConfigError(f"nfe must be >= 1, got {self.nfe}")
            if self.substeps < 1:
                raise ConfigError(f"substeps must be >= 1, got {self.substeps}")
            if self.method == "sfd" and self.branches != 1:
                raise ConfigError("method 'sfd' is single-branch; use 'sfd_bdense' for K > 1")
            if self.method == "sfd_bdense" and self.branches != self.substeps:
                raise ConfigError(
                    f"sfd_bdense expects branches == substeps, got "
                    f"{self.branches} != {self.substeps}")

    def resolved_weights(self) -> BranchWeights:
        if self.weights is not None:
            if len(self.weights) != self.branches:
                raise ConfigError(
                    f"{len(self.weights)} branch weights given for {self.branches} branches")
            return self.weights
        if self.method == "sfd_bdense" and self.branches == 4:
            return BranchWeights(CIFAR10_BRANCH_WEIGHTS)
        return BranchWeights((1.0,) * self.branches)

    def echo(self) -> dict:
        out = {
            "method": self.method, "steps": self.steps, "rounds": self.rounds,
            "step_factor": self.step_factor, "branches": self.branches,
            "substeps": self.substeps, "nfe": self.nfe, "updates": self.updates,
            "batch_size": self.batch_size, "lr": self.lr, "lr_decay": self.lr_decay,
            "weight_decay": self.weight_decay, "snr_weighting": self.snr_weighting,
            "distance": self.distance, "teacher_solver": self.teacher_solver,
            "seed": self.seed,
        }
        if self.method.endswith("bdense"):
            out["weights"] = list(self.resolved_weights().lambdas)
        return out


def default_config(method: str, **overrides) -> DistillConfig:
    """Method-appropriate defaults: halving uses truncated-SNR MSE, trajectory
    matching uses uniform L1."""
    base = dict(method=method)
    if method in ("pd", "pd_bdense"):
        base.update(snr_weighting="truncated_snr", distance="mse", step_factor=2)
        if method == "pd_bdense":
            base.update(branches=2)
    elif method in ("sfd", "sfd_bdense"):
        base.update(snr_weighting="uniform", distance="l1", substeps=4)
        if method == "sfd_bdense":
            base.update(branches=4)
    else:
        raise ConfigError(f"unknown method {method!r}")
    base.update(overrides)
    # Keep the coupled fields in sync unless both were given explicitly.
    if method == "pd_bdense" and "step_factor" in overrides and "branches" not in overrides:
        base["branches"] = base["step_factor"]
    if method == "sfd_bdense" and "branches" in overrides and "substeps" not in overrides:
        base["substeps"] = base["branches"]
    if method == "sfd_bdense" and "substeps" in overrides and "branches" not in overrides:
        base["branches"] = base["substeps"]
    cfg = DistillConfig(**base)
    cfg.validate()
    return cfg


@dataclass
class DistillReport:
    """Training record for one distillation run."""

    method: str
    seed: int
    loss_curve: list = field(default_factory=list)
    branch_curves: list = field(default_factory=list)
    round_boundaries: list = field(default_factory=list)
    student: Optional[ScoreNet] = None
    wall_clock_s: float = 0.0
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "loss_curve": [float(v) for v in self.loss_curve],
            "branch_curves": [[float(v) for v in curve] for curve in self.branch_curves],
            "round_boundaries": list(self.round_boundaries),
            "wall_clock_s": self.wall_clock_s,
            "config": self.config,
        }


# -- shared update arithmetic -------------------------------------------


def _cosine_lr(base: float, step: int, total: int) -> float:
    """Cosine decay from ``base`` to 5% of it across ``total`` steps."""
    if total <= 1:
        return base
    frac = step / (total - 1)
    return base * (0.05 + 0.95 * 0.5 * (1.0 + math.cos(math.pi * frac)))


def _ddim_state_prediction(out: Tensor, parameterization: str, z: np.ndarray,
                           t, t_to, schedule: NoiseSchedule) -> Tensor:
    """Map a network output at (z, t) to a latent prediction at t_to."""
    zt = as_tensor(z)
    x0 = convert_param(out, parameterization, "x0", zt, t, schedule)
    eps = convert_param(out, parameterization, "epsilon", zt, t, schedule)
    a_to, s_to = schedule.alpha_sigma(t_to)
    return add(scale(x0, a_to), scale(eps, s_to))


def _euler_state_prediction(out: Tensor, parameterization: str, x: np.ndarray,
                            t_hi: float, t_lo: float, schedule: NoiseSchedule) -> Tensor:
    """One Euler step from (x, t_hi) to t_lo using the output's x0 estimate."""
    xt = as_tensor(x)
    x0 = convert_param(out, parameterization, "x0", xt, t_hi, schedule)
    d = scale(sub(xt, x0), 1.0 / float(t_hi))
    return add(xt, scale(d, float(t_lo) - float(t_hi)))


def branch_loss(student_out: Tensor, targets, weights: BranchWeights,
                snr_w: float, dist: str) -> Tensor:
    """Weighted sum of per-branch distances against teacher states.

    ``targets`` is a TrajectoryRecord or a sequence holding exactly one
    post-initial state per branch; branch k is always compared against the
    state at the (k+1)-th sub-step boundary.
    """
    if isinstance(targets, TrajectoryRecord):
        states = targets.states[1:]
    else:
        states = list(targets)
    k = len(weights)
    if len(states) != k:
        raise ContractError(f"{len(states)} targets for {k} branch weights")
    total = None
    for i in range(k):
        d = reduce_loss(dist, branch_slice(student_out, i, k), as_tensor(states[i]), 1.0)
        term = scale(d, weights.lambdas[i])
        total = term if total is None else add(total, term)
    return scale(total, float(snr_w))


# -- teacher pretraining -------------------------------------------------


def train_teacher(net: ScoreNet, schedule: NoiseSchedule, data: np.ndarray, *,
                  updates: int, batch_size: int = 128, lr: float = 2e-3,
                  weight_decay: float = 0.0, lr_decay: bool = True, seed: int = 0,
                  on_update: Optional[Callable] = None) -> list[float]:
    """Train a single-branch denoiser with the noise-prediction MSE.

    The learning rate follows a cosine decay to 5% of its initial value
    unless ``lr_decay`` is disabled.
    """
    if net.branches != 1:
        raise ContractError("teacher training expects a single-branch network")
    data = np.asarray(data, dtype=np.float32)
    rng = seed_stream(seed, "teacher")
    opt = AdamW(net.named_parameters(), lr=lr, weight_decay=weight_decay)
    losses: list[float] = []
    for u in range(updates):
        if lr_decay:
            opt.lr = _cosine_lr(lr, u, updates)
        idx = rng.integers(0, len(data), size=batch_size)
        x0 = data[idx]
        eps = rng.standard_normal((batch_size, net.channels), dtype=np.float32)
        if schedule.kind == "vp_linear":
            t = int(rng.integers(1, schedule.steps + 1))
        else:
            # Continuous log-uniform noise levels, so the denoiser is trained
            # everywhere solver grids may later query it.
            lo, hi = float(schedule.sigma[1]), float(schedule.sigma[-1])
            t = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        loss = loss_simple(net, x0, eps, t, schedule)
        value = float(loss.data)
        if not np.isfinite(value):
            raise RuntimeError(f"non-finite training loss {value} at update {u}")
        backward(loss)
        opt.step()
        opt.zero_grad()
        clear_tape()
        losses.append(value)
        if on_update is not None:
            on_update(u, net, value)
    return losses


# -- step-halving distillation (with and without branches) ----------------


def _pd_draw(rng, data: np.ndarray, batch_size: int, grid_points: np.ndarray, channels: int):
    idx = rng.integers(0, len(data), size=batch_size)
    eps = rng.standard_normal((batch_size, channels), dtype=np.float32)
    t = int(rng.choice(grid_points))
    return data[idx], eps, t


def _pd_round_setup(cfg: DistillConfig, schedule: NoiseSchedule, round_idx: int):
    if schedule.kind != "vp_linear":
        raise ConfigError("step-halving distillation requires a vp_linear schedule")
    if schedule.steps % cfg.steps:
        raise ConfigError(f"{cfg.steps} sampling steps do not divide the "
                          f"{schedule.steps}-step schedule")
    base = schedule.steps // cfg.steps
    delta_teacher = base * cfg.step_factor ** (round_idx - 1)
    delta_student = delta_teacher * cfg.step_factor
    grid_points = np.arange(delta_student, schedule.steps + 1, delta_student)
    return delta_teacher, delta_student, grid_points


def _pd_teacher_targets(teacher: ScoreNet, z: np.ndarray, t: int, delta: int,
                        n_steps: int, schedule: NoiseSchedule) -> list[np.ndarray]:
    grid = TimeGrid(schedule, tuple(t - delta * j for j in range(n_steps + 1)))
    return solve(teacher, z, grid, "ddim").states[1:]


def _run_pd(teacher: ScoreNet, cfg: DistillConfig, data: np.ndarray,
            schedule: NoiseSchedule, branched: bool,
            on_update: Optional[Callable]) -> DistillReport:
    cfg.validate()
    data = np.asarray(data, dtype=np.float32)
    k = cfg.branches
    n = cfg.step_factor
    report = DistillReport(method=cfg.method, seed=cfg.seed, config=cfg.echo())
    start = time.perf_counter()
    current = teacher.clone()
    total_updates = 0
    for r in range(1, cfg.rounds + 1):
        delta_t, delta_s, grid_points = _pd_round_setup(cfg, schedule, r)
        rng = seed_stream(cfg.seed, "pd-round", r)
        student = expand_branch_head(current.clone(), k) if branched else current.clone()
        opt = AdamW(student.named_parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
        for step in range(cfg.updates):
            if cfg.lr_decay:
                opt.lr = _cosine_lr(cfg.lr, step, cfg.updates)
            x0, eps, t = _pd_draw(rng, data, cfg.batch_size, grid_points, teacher.channels)
            a, s = schedule.alpha_sigma(t)
            z = a * x0 + s * eps
            targets = _pd_teacher_targets(current, z, t, delta_t, n, schedule)
            w = snr_weight(t, schedule, cfg.snr_weighting)
            u = schedule.normalized_time(t)
            if branched:
                out = student(z, u)
                preds = []
                for i in range(k):
                    boundary = t - delta_t * ((n - k) + i + 1)
                    preds.append(_ddim_state_prediction(
                        branch_slice(out, i, k), student.parameterization,
                        z, t, boundary, schedule))
                stacked = concat_cols(preds)
                weights = cfg.resolved_weights()
                loss = branch_loss(stacked, targets[n - k:], weights, w, cfg.distance)
                per_branch = [
                    float(reduce_loss(cfg.distance, branch_slice(stacked, i, k).detach(),
                                      as_tensor(targets[n - k + i]), 1.0).data)
                    for i in range(k)]
            else:
                out = student(z, u)
                pred = _ddim_state_prediction(out, student.parameterization,
                                              z, t, t - delta_s, schedule)
                loss = scale(reduce_loss(cfg.distance, pred, as_tensor(targets[-1]), 1.0), w)
                per_branch = [float(loss.data)]
            backward(loss)
            opt.step()
            opt.zero_grad()
            clear_tape()
            report.loss_curve.append(float(loss.data))
            report.branch_curves.append(per_branch)
            total_updates += 1
            if on_update is not None:
                on_update(total_updates, student)
        current = collapse_branch_head(student) if branched else student
        report.round_boundaries.append(total_updates)
    report.student = current
    report.wall_clock_s = time.perf_counter() - start
    return report


def pd_distill(teacher: ScoreNet, cfg: DistillConfig, data, schedule: NoiseSchedule,
               on_update: Optional[Callable] = None) -> DistillReport:
    """Iterative step-halving: the student predicts the teacher's N-step
    result in one step, then becomes the next round's teacher."""
    if cfg.method != "pd":
        raise ConfigError(f"pd_distill got method {cfg.method!r}")
    return _run_pd(teacher, cfg, data, schedule, branched=False, on_update=on_update)


def pd_bdense_distill(teacher: ScoreNet, cfg: DistillConfig, data, schedule: NoiseSchedule,
                      on_update: Optional[Callable] = None) -> DistillReport:
    """Step-halving with a branch-expanded student supervised on every
    intermediate teacher state; the inference branch seeds the next round."""
    if cfg.method != "pd_bdense":
        raise ConfigError(f"pd_bdense_distill got method {cfg.method!r}")
    return _run_pd(teacher, cfg, data, schedule, branched=True, on_update=on_update)


# -- trajectory-matching distillation (with and without branches) ---------


def _sfd_draw(rng, data: np.ndarray, batch_size: int, channels: int, t_top: float):
    idx = rng.integers(0, len(data), size=batch_size)
    eps = rng.standard_normal((batch_size, channels), dtype=np.float32)
    return data[idx] + float(t_top) * eps


def _run_sfd(teacher: ScoreNet, cfg: DistillConfig, data: np.ndarray, grid: TimeGrid,
             branched: bool, on_update: Optional[Callable]) -> DistillReport:
    cfg.validate()
    schedule = grid.schedule
    if schedule.kind != "edm_sigma":
        raise ConfigError("trajectory-matching distillation requires an edm_sigma schedule")
    if grid.intervals != cfg.nfe:
        raise ConfigError(f"grid has {grid.intervals} intervals but config expects nfe={cfg.nfe}")
    data = np.asarray(data, dtype=np.float32)
    k = cfg.branches
    report = DistillReport(method=cfg.method, seed=cfg.seed, config=cfg.echo())
    start = time.perf_counter()
    rng = seed_stream(cfg.seed, "sfd")
    student = expand_branch_head(teacher.clone(), k) if branched else teacher.clone()
    opt = AdamW(student.named_parameters(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    weights = cfg.resolved_weights() if branched else None
    updates = 0
    while updates < cfg.updates:
        x = _sfd_draw(rng, data, cfg.batch_size, teacher.channels, grid.times[0])
        for t_hi, t_lo in zip(grid.times, grid.times[1:]):
            if cfg.lr_decay:
                opt.lr = _cosine_lr(cfg.lr, updates, cfg.updates)
            sub = sub_grid(schedule, t_hi, t_lo, cfg.substeps)
            traj = solve(teacher, x, sub, cfg.teacher_solver)
            u = schedule.normalized_time(t_hi)
            if branched:
                out = student(x, u)
                preds = [
                    _euler_state_prediction(branch_slice(out, i, k),
                                            student.parameterization, x,
                                            t_hi, sub.times[i + 1], schedule)
                    for i in range(k)]
                stacked = concat_cols(preds)
                loss = branch_loss(stacked, traj, weights, 1.0, cfg.distance)
                per_branch = [
                    float(reduce_loss(cfg.distance, preds[i].detach(),
                                      as_tensor(traj.states[i + 1]), 1.0).data)
                    for i in range(k)]
                x_next = preds[-1].data.copy()
            else:
                out = student(x, u)
                pred = _euler_state_prediction(out, student.parameterization, x,
                                               t_hi, t_lo, schedule)
                loss = scale(reduce_loss(cfg.distance, pred, as_tensor(traj.endpoint()), 1.0), 1.0)
                per_branch = [float(loss.data)]
                x_next = pred.data.copy()
            backward(loss)
            opt.step()
            opt.zero_grad()
            clear_tape()
            x = x_next
            report.loss_curve.append(float(loss.data))
            report.branch_curves.append(per_branch)
            updates += 1
            if on_update is not None:
                on_update(updates, student)
            if updates >= cfg.updates:
                break
    report.student = student
    report.wall_clock_s = time.perf_counter() - start
    return report


def sfd_distill(teacher: ScoreNet, cfg: DistillConfig, data, grid: TimeGrid,
                on_update: Optional[Callable] = None) -> DistillReport:
    """Global trajectory matching: the student's one Euler step per interval
    chases the teacher's multi-step solve; intervals chain through detached
    student states."""
    if cfg.method != "sfd":
        raise ConfigError(f"sfd_distill got method {cfg.method!r}")
    return _run_sfd(teacher, cfg, data, grid, branched=False, on_update=on_update)


def sfd_bdense_distill(teacher: ScoreNet, cfg: DistillConfig, data, grid: TimeGrid,
                       on_update: Optional[Callable] = None) -> DistillReport:
    """Trajectory matching where each branch predicts the teacher state at
    its own sub-step boundary; the detached endpoint branch seeds the next
    interval."""
    if cfg.method != "sfd_bdense":
        raise ConfigError(f"sfd_bdense_distill got method {cfg.method!r}")
    return _run_sfd(teacher, cfg, data, grid, branched=True, on_update=on_update)


def run_distillation(teacher: ScoreNet, cfg: DistillConfig, data,
                     schedule: NoiseSchedule,
                     on_update: Optional[Callable] = None) -> DistillReport:
    """Dispatch to the configured loop."""
    cfg.validate()
    if cfg.method == "pd":
        return pd_distill(teacher, cfg, data, schedule, on_update)
    if cfg.method == "pd_bdense":
        return pd_bdense_distill(teacher, cfg, data, schedule, on_update)
    grid = sampling_grid(schedule, cfg.nfe)
    if cfg.method == "sfd":
        return sfd_distill(teacher, cfg, data, grid, on_update)
    return sfd_bdense_distill(teacher, cfg, data, grid, on_update)


# -- weight search ---------------------------------------------------------


@dataclass(frozen=True)
class SearchTrial:
    a: float
    b: float
    score: float


def weight_search(objective: Callable[[float, float], float], a_range, b_range,
                  trials: int, seed: int = 0) -> list[SearchTrial]:
    """Seeded random search over the (a, b) box; all trials, best first."""
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    a_lo, a_hi = float(a_range[0]), float(a_range[1])
    b_lo, b_hi = float(b_range[0]), float(b_range[1])
    for lo, hi, name in ((a_lo, a_hi, "a"), (b_lo, b_hi, "b")):
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise ConfigError(f"invalid {name} range [{lo}, {hi}]")
    rng = seed_stream(seed, "weight-search")
    results = []
    for _ in range(trials):
        a = float(rng.uniform(a_lo, a_hi))
        b = float(rng.uniform(b_lo, b_hi))
        results.append(SearchTrial(a=a, b=b, score=float(objective(a, b))))
    return sorted(results, key=lambda r: r.score)


def sfd_weight_objective(teacher: ScoreNet, schedule: NoiseSchedule, data,
                         holdout, *, nfe: int = 2, branches: int = 4,
                         updates: int = 240, batch_size: int = 64, lr: float = 1e-3,
                         eval_samples: int = 512, n_projections: int = 48,
                         seed: int = 0) -> Callable[[float, float], float]:
    """Toy search objective: distill briefly with the candidate weights and
    score held-out sample quality at the target step count (lower is better)."""
    from .metrics import sliced_wasserstein

    data = np.asarray(data, dtype=np.float32)
    holdout = np.asarray(holdout, dtype=np.float32)
    grid = sampling_grid(schedule, nfe)
    noise_rng = seed_stream(seed, "weight-objective-noise")
    noise = noise_rng.standard_normal((eval_samples, teacher.channels), dtype=np.float32)
    x_init = float(grid.times[0]) * noise

    def objective(a: float, b: float) -> float:
        cfg = default_config("sfd_bdense", branches=branches, substeps=branches,
                             nfe=nfe, updates=updates, batch_size=batch_size, lr=lr,
                             weights=geometric_weights((a, b), branches), seed=seed)
        run = sfd_bdense_distill(teacher, cfg, data, grid)
        samples = solve(run.student, x_init, grid, "euler").endpoint()
        if not np.all(np.isfinite(samples)):
            return float("inf")
        return sliced_wasserstein(samples, holdout, n_projections=n_projections,
                                  seed=seed).value

    return objective
