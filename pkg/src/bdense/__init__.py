"""Desk-scale diffusion distillation with multi-branch trajectory supervision."""

from .distill import (BranchWeights, DistillConfig, DistillReport, GeometricSchedule,
                      branch_loss, default_config, geometric_weights, pd_bdense_distill,
                      pd_distill, run_distillation, sfd_bdense_distill, sfd_distill,
                      train_teacher, weight_search)
from .errors import (BDenseError, ConfigError, ContractError, DimensionError,
                     SingularityError)
from .metrics import (MetricReport, mmd_rbf, mode_coverage, sliced_wasserstein,
                      trajectory_endpoint_error)
from .network import (ScoreNet, branch_slice, collapse_branch_head, expand_branch_head,
                      loss_simple)
from .optim import AdamW
from .schedule import (NoiseSchedule, build_schedule, convert_param, forward_diffuse,
                       snr_weight)
from .solvers import (TimeGrid, TrajectoryRecord, ddim_step, euler_step, heun_step,
                      sampling_grid, solve, sub_grid)
from .tensor import Tensor, backward, clear_tape, no_grad, reduce_loss

__version__ = "0.1.0"

__all__ = [
    "AdamW", "BDenseError", "BranchWeights", "ConfigError", "ContractError",
    "DimensionError", "DistillConfig", "DistillReport", "GeometricSchedule",
    "MetricReport", "NoiseSchedule", "ScoreNet", "SingularityError", "Tensor",
    "TimeGrid", "TrajectoryRecord", "backward", "branch_loss", "branch_slice",
    "build_schedule", "clear_tape", "collapse_branch_head", "convert_param",
    "ddim_step", "default_config", "euler_step", "expand_branch_head",
    "forward_diffuse", "geometric_weights", "heun_step", "loss_simple", "mmd_rbf",
    "mode_coverage", "no_grad", "pd_bdense_distill", "pd_distill", "reduce_loss",
    "run_distillation", "sampling_grid", "sfd_bdense_distill", "sfd_distill",
    "sliced_wasserstein", "snr_weight", "solve", "sub_grid",
    "trajectory_endpoint_error", "train_teacher", "weight_search",
]
