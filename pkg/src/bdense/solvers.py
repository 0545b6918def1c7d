"""Deterministic probability-flow integrators and trajectory recording.

DDIM steps on the (alpha, sigma) index grid of a variance-preserving
schedule; Euler and Heun integrate in the sigma convention where the
velocity is ``d = (x - x0_hat) / sigma``. Network evaluations here never
touch the gradient tape: trajectories are training targets, i.e. constants.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractError, SingularityError
from .schedule import NoiseSchedule
from .tensor import no_grad

_SIGMA_EPS = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Strictly decreasing timesteps with their resolving schedule."""

    schedule: NoiseSchedule
    times: tuple = field(default_factory=tuple)

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", times)
        if len(times) < 2:
            raise ConfigError("a time grid needs at least one interval")
        for hi, lo in zip(times, times[1:]):
            if not hi > lo:
                raise ConfigError(f"grid times must strictly decrease, got {times}")
        for t in times:
            self.schedule.alpha_sigma(t)  # range check

    @property
    def intervals(self) -> int:
        return len(self.times) - 1


def sampling_grid(schedule: NoiseSchedule, num_steps: int) -> TimeGrid:
    """Uniform grid in the schedule's native coordinate, ending at t = 0.

    vp_linear: integer indices T, T - T/n, ..., 0 (T must divide evenly).
    edm_sigma: geometric spacing from sigma_max down to sigma_min, then 0.
    """
    if num_steps < 1:
        raise ConfigError(f"num_steps must be >= 1, got {num_steps}")
    if schedule.kind == "vp_linear":
        total = schedule.steps
        if total % num_steps:
            raise ConfigError(f"{num_steps} steps do not divide the {total}-step schedule")
        stride = total // num_steps
        return TimeGrid(schedule, tuple(range(total, -1, -stride)))
    lo = float(schedule.sigma[1])
    hi = float(schedule.sigma[-1])
    if num_steps == 1:
        return TimeGrid(schedule, (hi, 0.0))
    # Geometric spacing toward sigma_min, with the final point snapped to 0:
    # the last interval is the full denoise from the smallest positive level.
    inner = np.geomspace(hi, lo, num_steps + 1)[:-1]
    return TimeGrid(schedule, tuple(inner) + (0.0,))


def sub_grid(schedule: NoiseSchedule, t_hi, t_lo, k: int) -> TimeGrid:
    """Split one interval into ``k`` sub-steps in the native coordinate."""
    if k < 1:
        raise ConfigError(f"sub-step count must be >= 1, got {k}")
    if schedule.kind == "vp_linear":
        span = int(t_hi) - int(t_lo)
        if span <= 0 or span % k:
            raise ConfigError(f"interval [{t_hi}, {t_lo}] does not split into {k} integer steps")
        stride = span // k
        return TimeGrid(schedule, tuple(int(t_hi) - stride * j for j in range(k + 1)))
    hi, lo = float(t_hi), float(t_lo)
    if lo > 0.0:
        return TimeGrid(schedule, tuple(np.geomspace(hi, lo, k + 1)))
    if k == 1:
        return TimeGrid(schedule, (hi, 0.0))
    floor = min(float(schedule.sigma[1]), hi / 2.0)
    inner = np.geomspace(hi, floor, k)
    return TimeGrid(schedule, tuple(inner) + (0.0,))


@dataclass
class TrajectoryRecord:
    """Ordered (timestep, state) pairs, including the initial state."""

    times: tuple
    states: list

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ContractError("trajectory times and states must have equal length")

    @property
    def intervals(self) -> int:
        return len(self.times) - 1

    def endpoint(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            width = int(np.asarray(self.states[0]).size)
            writer.writerow(["t"] + [f"x{i}" for i in range(width)])
            for t, state in zip(self.times, self.states):
                flat = np.asarray(state, dtype=np.float32).reshape(-1)
                writer.writerow([f"{t:.8g}"] + [f"{v:.8g}" for v in flat])


def ddim_step(net, z, t, t_prev, schedule: NoiseSchedule) -> np.ndarray:
    """One deterministic denoising step through the predicted clean point."""
    z = np.asarray(z, dtype=np.float32)
    if t_prev == t:
        return z.copy()
    if not t > t_prev:
        raise ContractError(f"ddim_step needs t > t_prev, got {t} -> {t_prev}")
    a, s = schedule.alpha_sigma(t)
    a_prev, s_prev = schedule.alpha_sigma(t_prev)
    if a < 1e-6:
        raise SingularityError(f"alpha_t = {a} at t = {t} is below the DDIM floor")
    eps = net.predict_eps(z, t, schedule)
    x0 = (z - s * eps) / a
    return a_prev * x0 + s_prev * eps


def _velocity(net, x, t, schedule: NoiseSchedule) -> np.ndarray:
    if schedule.kind != "edm_sigma":
        raise ConfigError("euler/heun steps require an edm_sigma schedule")
    if float(t) <= _SIGMA_EPS:
        raise SingularityError(f"probability-flow velocity is singular at sigma = {t}")
    x0 = net.predict_x0(x, t, schedule)
    return (x - x0) / float(t)


def euler_step(net, x, t, t_prev, schedule: NoiseSchedule) -> np.ndarray:
    x = np.asarray(x, dtype=np.float32)
    if not t > t_prev:
        raise ContractError(f"euler_step needs t > t_prev, got {t} -> {t_prev}")
    d = _velocity(net, x, t, schedule)
    return x + (float(t_prev) - float(t)) * d


def heun_step(net, x, t, t_prev, schedule: NoiseSchedule) -> np.ndarray:
    """Euler predictor plus trapezoidal corrector.

    The corrector is skipped when stepping into sigma = 0, where the
    velocity is singular; the final step degenerates to Euler.
    """
    x = np.asarray(x, dtype=np.float32)
    if not t > t_prev:
        raise ContractError(f"heun_step needs t > t_prev, got {t} -> {t_prev}")
    h = float(t_prev) - float(t)
    d1 = _velocity(net, x, t, schedule)
    x_pred = x + h * d1
    if float(t_prev) <= _SIGMA_EPS:
        return x_pred
    d2 = _velocity(net, x_pred, t_prev, schedule)
    return x + h * (0.5 * d1 + 0.5 * d2)


_STEPPERS = {"ddim": ddim_step, "euler": euler_step, "heun": heun_step}


def solve(net, x_init, grid: TimeGrid, method: str = "ddim") -> TrajectoryRecord:
    """Integrate along a grid, recording every intermediate state."""
    if method not in _STEPPERS:
        raise ConfigError(f"unknown solver {method!r} (expected one of {sorted(_STEPPERS)})")
    step = _STEPPERS[method]
    x = np.array(x_init, dtype=np.float32, copy=True)
    states = [x]
    with no_grad():
        for t, t_prev in zip(grid.times, grid.times[1:]):
            x = step(net, x, t, t_prev, grid.schedule)
            states.append(x)
    return TrajectoryRecord(times=grid.times, states=states)
