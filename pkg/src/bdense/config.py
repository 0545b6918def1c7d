"""Run configuration: strict JSON parsing with full validation up front.

No command starts computing with an invalid config; unknown keys are
rejected with their path so typos fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .data import DATASET_KINDS
from .distill import BranchWeights, DistillConfig, GeometricSchedule, default_config
from .errors import ConfigError

_METRIC_NAMES = ("swd", "mmd", "coverage")


def _take(section: dict, path: str, key: str, default, required: bool = False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key '{path}.{key}'")
        return default
    return section.pop(key)


def _no_extras(section: dict, path: str) -> None:
    if section:
        raise ConfigError(f"unknown key(s) under '{path}': {sorted(section)}")


@dataclass
class DatasetSpec:
    kind: str = "gmm_ring"
    size: int = 8192
    seed: int = 0
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict, path: str = "dataset") -> "DatasetSpec":
        raw = dict(raw)
        kind = _take(raw, path, "kind", "gmm_ring")
        if kind not in DATASET_KINDS:
            raise ConfigError(f"'{path}.kind' must be one of {DATASET_KINDS}, got {kind!r}")
        size = int(_take(raw, path, "size", 8192))
        if size < 0:
            raise ConfigError(f"'{path}.size' must be >= 0, got {size}")
        seed = int(_take(raw, path, "seed", 0))
        known = {"gmm_ring": ("modes", "radius", "noise"),
                 "checkerboard": ("extent", "squares"),
                 "swiss_roll": ("noise",),
                 "csv_file": ("path",)}[kind]
        params = {k: raw.pop(k) for k in list(raw) if k in known}
        _no_extras(raw, path)
        return cls(kind=kind, size=size, seed=seed, params=params)


@dataclass
class ScheduleSpec:
    kind: str = "vp_linear"
    steps: int = 1024
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict, path: str = "schedule") -> "ScheduleSpec":
        raw = dict(raw)
        kind = _take(raw, path, "kind", "vp_linear")
        if kind not in ("vp_linear", "edm_sigma"):
            raise ConfigError(f"'{path}.kind' must be vp_linear or edm_sigma, got {kind!r}")
        steps = int(_take(raw, path, "steps", 1024 if kind == "vp_linear" else 64))
        known = ("beta_min", "beta_max") if kind == "vp_linear" else ("sigma_min", "sigma_max")
        params = {k: float(raw.pop(k)) for k in list(raw) if k in known}
        _no_extras(raw, path)
        return cls(kind=kind, steps=steps, params=params)

    def build(self):
        from .schedule import build_schedule
        return build_schedule(self.kind, self.steps, **self.params)


@dataclass
class NetworkSpec:
    hidden: tuple = (128, 128, 128)
    time_dim: int = 32
    parameterization: str = "epsilon"

    @classmethod
    def from_dict(cls, raw: dict, path: str = "network") -> "NetworkSpec":
        raw = dict(raw)
        hidden = tuple(int(h) for h in _take(raw, path, "hidden", [128, 128, 128]))
        time_dim = int(_take(raw, path, "time_dim", 32))
        parameterization = _take(raw, path, "parameterization", "epsilon")
        if parameterization not in ("epsilon", "x0", "v"):
            raise ConfigError(f"'{path}.parameterization' must be epsilon/x0/v, "
                              f"got {parameterization!r}")
        _no_extras(raw, path)
        return cls(hidden=hidden, time_dim=time_dim, parameterization=parameterization)


@dataclass
class TeacherSpec:
    updates: int = 8000
    batch_size: int = 256
    lr: float = 2e-3
    weight_decay: float = 0.0

    @classmethod
    def from_dict(cls, raw: dict, path: str = "teacher") -> "TeacherSpec":
        raw = dict(raw)
        spec = cls(updates=int(_take(raw, path, "updates", 8000)),
                   batch_size=int(_take(raw, path, "batch_size", 256)),
                   lr=float(_take(raw, path, "lr", 2e-3)),
                   weight_decay=float(_take(raw, path, "weight_decay", 0.0)))
        if spec.updates < 1 or spec.batch_size < 1 or spec.lr <= 0:
            raise ConfigError(f"invalid '{path}' settings")
        _no_extras(raw, path)
        return spec


_DISTILL_KEYS = ("method", "steps", "rounds", "step_factor", "branches", "substeps",
                 "nfe", "updates", "batch_size", "lr", "weight_decay",
                 "snr_weighting", "distance", "teacher_solver", "seed")


def distill_from_dict(raw: dict, path: str = "distill") -> DistillConfig:
    raw = dict(raw)
    method = _take(raw, path, "method", None, required=True)
    weights = _take(raw, path, "weights", None)
    geometric = _take(raw, path, "geometric", None)
    overrides = {}
    for key in _DISTILL_KEYS:
        if key == "method":
            continue
        if key in raw:
            overrides[key] = raw.pop(key)
    _no_extras(raw, path)
    if weights is not None and geometric is not None:
        raise ConfigError(f"'{path}': give either 'weights' or 'geometric', not both")
    if weights is not None:
        overrides["weights"] = BranchWeights(tuple(float(v) for v in weights))
    cfg = default_config(method, **overrides)
    if geometric is not None:
        geometric = dict(geometric)
        a = float(_take(geometric, f"{path}.geometric", "a", None, required=True))
        b = float(_take(geometric, f"{path}.geometric", "b", None, required=True))
        _no_extras(geometric, f"{path}.geometric")
        from .distill import geometric_weights
        cfg.weights = geometric_weights(GeometricSchedule(a, b), cfg.branches)
    cfg.validate()
    cfg.resolved_weights()
    return cfg


@dataclass
class EvalSpec:
    nfe: tuple = (2, 4)
    metrics: tuple = ("swd", "mmd")
    samples: int = 2048
    coverage_radius: float = 0.4

    @classmethod
    def from_dict(cls, raw: dict, path: str = "eval") -> "EvalSpec":
        raw = dict(raw)
        nfe = tuple(int(v) for v in _take(raw, path, "nfe", [2, 4]))
        metrics = tuple(_take(raw, path, "metrics", ["swd", "mmd"]))
        for m in metrics:
            if m not in _METRIC_NAMES:
                raise ConfigError(f"'{path}.metrics' supports {_METRIC_NAMES}, got {m!r}")
        samples = int(_take(raw, path, "samples", 2048))
        radius = float(_take(raw, path, "coverage_radius", 0.4))
        _no_extras(raw, path)
        return cls(nfe=nfe, metrics=metrics, samples=samples, coverage_radius=radius)


@dataclass
class SearchSpec:
    trials: int = 20
    a_range: tuple = (-2.0, 2.5)
    b_range: tuple = (-7.0, -2.0)
    updates: int = 240
    batch_size: int = 64
    lr: float = 1e-3
    branches: int = 4
    nfe: int = 2
    eval_samples: int = 512

    @classmethod
    def from_dict(cls, raw: dict, path: str = "search") -> "SearchSpec":
        raw = dict(raw)
        spec = cls(trials=int(_take(raw, path, "trials", 20)),
                   a_range=tuple(float(v) for v in _take(raw, path, "a_range", [-2.0, 2.5])),
                   b_range=tuple(float(v) for v in _take(raw, path, "b_range", [-7.0, -2.0])),
                   updates=int(_take(raw, path, "updates", 240)),
                   batch_size=int(_take(raw, path, "batch_size", 64)),
                   lr=float(_take(raw, path, "lr", 1e-3)),
                   branches=int(_take(raw, path, "branches", 4)),
                   nfe=int(_take(raw, path, "nfe", 2)),
                   eval_samples=int(_take(raw, path, "eval_samples", 512)))
        if spec.trials < 1:
            raise ConfigError(f"'{path}.trials' must be >= 1")
        _no_extras(raw, path)
        return spec


@dataclass
class RunConfig:
    dataset: DatasetSpec
    schedule: ScheduleSpec
    network: NetworkSpec
    teacher: TeacherSpec
    distill: Optional[DistillConfig]
    eval: EvalSpec
    search: SearchSpec
    seed: int = 0
    out_dir: str = "runs/default"
    teacher_checkpoint: Optional[str] = None

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw)
        dataset = DatasetSpec.from_dict(_take(raw, "", "dataset", {}) or {})
        schedule = ScheduleSpec.from_dict(_take(raw, "", "schedule", {}) or {})
        network = NetworkSpec.from_dict(_take(raw, "", "network", {}) or {})
        teacher = TeacherSpec.from_dict(_take(raw, "", "teacher", {}) or {})
        distill_raw = _take(raw, "", "distill", None)
        distill = distill_from_dict(distill_raw) if distill_raw is not None else None
        eval_spec = EvalSpec.from_dict(_take(raw, "", "eval", {}) or {})
        search = SearchSpec.from_dict(_take(raw, "", "search", {}) or {})
        seed = int(_take(raw, "", "seed", 0))
        out_dir = str(_take(raw, "", "out_dir", "runs/default"))
        teacher_ckpt = _take(raw, "", "teacher_checkpoint", None)
        _no_extras(raw, "<top level>")
        cfg = cls(dataset=dataset, schedule=schedule, network=network, teacher=teacher,
                  distill=distill, eval=eval_spec, search=search, seed=seed,
                  out_dir=out_dir, teacher_checkpoint=teacher_ckpt)
        cfg.check_consistency()
        return cfg

    def check_consistency(self) -> None:
        if self.distill is None:
            return
        if self.distill.method.startswith("pd") and self.schedule.kind != "vp_linear":
            raise ConfigError(f"method {self.distill.method!r} requires a vp_linear schedule, "
                              f"got {self.schedule.kind!r}")
        if self.distill.method.startswith("sfd") and self.schedule.kind != "edm_sigma":
            raise ConfigError(f"method {self.distill.method!r} requires an edm_sigma schedule, "
                              f"got {self.schedule.kind!r}")

    def resolved(self) -> dict:
        """Plain-dict echo of the fully resolved configuration."""
        out = {
            "dataset": {"kind": self.dataset.kind, "size": self.dataset.size,
                        "seed": self.dataset.seed, **self.dataset.params},
            "schedule": {"kind": self.schedule.kind, "steps": self.schedule.steps,
                         **self.schedule.params},
            "network": {"hidden": list(self.network.hidden), "time_dim": self.network.time_dim,
                        "parameterization": self.network.parameterization},
            "teacher": vars(self.teacher),
            "eval": {"nfe": list(self.eval.nfe), "metrics": list(self.eval.metrics),
                     "samples": self.eval.samples,
                     "coverage_radius": self.eval.coverage_radius},
            "search": {**{k: (list(v) if isinstance(v, tuple) else v)
                          for k, v in vars(self.search).items()}},
            "seed": self.seed,
            "out_dir": self.out_dir,
        }
        if self.distill is not None:
            out["distill"] = self.distill.echo()
        if self.teacher_checkpoint is not None:
            out["teacher_checkpoint"] = self.teacher_checkpoint
        return out


def load_config(path, *, seed: Optional[int] = None,
                out_dir: Optional[str] = None) -> RunConfig:
    """Parse, validate, and apply command-line overrides."""
    try:
        with open(path, "r") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must contain a JSON object")
    cfg = RunConfig.from_dict(raw)
    if seed is not None:
        cfg.seed = int(seed)
    if out_dir is not None:
        cfg.out_dir = str(out_dir)
    return cfg
