"""Noise schedules, forward diffusion, and parameterization conversions.

Two schedule families are supported behind one interface:

* ``vp_linear`` -- variance-preserving DDPM-style schedule with linearly
  spaced betas. Timesteps are integer grid indices ``0..T`` and satisfy
  ``alpha_t^2 + sigma_t^2 = 1``.
* ``edm_sigma`` -- variance-exploding convention where the timestep *is*
  the noise level sigma (``alpha == 1``). Index 0 is the clean endpoint
  (sigma = 0); indices ``1..T`` hold a geometric sigma grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractError, DimensionError, SingularityError
from .tensor import Tensor, add, affine_pair, as_tensor, scale

PARAMETERIZATIONS = ("epsilon", "x0", "v")

_ALPHA_FLOOR = 1e-12


@dataclass(frozen=True)
class NoiseSchedule:
    """Discrete time grid with per-step signal/noise coefficients."""

    kind: str
    alpha: np.ndarray
    sigma: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return len(self.alpha) - 1

    def alpha_sigma(self, t) -> tuple[float, float]:
        """Resolve (alpha_t, sigma_t) for a timestep.

        vp_linear expects an integer grid index; edm_sigma expects the sigma
        value itself (any float in [0, sigma_max]).
        """
        if self.kind == "vp_linear":
            ti = int(t)
            if ti != t or not (0 <= ti <= self.steps):
                raise ContractError(f"timestep {t!r} outside integer grid [0, {self.steps}]")
            return float(self.alpha[ti]), float(self.sigma[ti])
        s = float(t)
        if not (0.0 <= s <= float(self.sigma[-1]) * (1 + 1e-9)):
            raise ContractError(f"sigma {s!r} outside [0, {float(self.sigma[-1])}]")
        return 1.0, s

    def normalized_time(self, t) -> float:
        """Map a timestep to [0, 1] for network conditioning."""
        if self.kind == "vp_linear":
            return float(t) / float(self.steps)
        s = float(t)
        lo = float(self.sigma[1])
        hi = float(self.sigma[-1])
        if s <= lo:
            return 0.0
        if hi <= lo:
            return 1.0
        return float(np.clip(np.log(s / lo) / np.log(hi / lo), 0.0, 1.0))

    def log_snr(self, t) -> float:
        a, s = self.alpha_sigma(t)
        if s == 0.0:
            return float("inf")
        return float(np.log(a * a / (s * s)))

    def spec(self) -> dict:
        return {"kind": self.kind, "steps": self.steps, **self.params}


def build_schedule(kind: str, steps: int, *, beta_min: float = 1e-4, beta_max: float = 0.02,
                   sigma_min: float = 0.002, sigma_max: float = 80.0) -> NoiseSchedule:
    """Construct a discrete noise schedule of ``steps`` intervals."""
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    if kind == "vp_linear":
        if not (0.0 < beta_min < beta_max < 1.0):
            raise ConfigError(f"need 0 < beta_min < beta_max < 1, got ({beta_min}, {beta_max})")
        betas = np.linspace(beta_min, beta_max, steps, dtype=np.float64)
        abar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
        return NoiseSchedule(kind, np.sqrt(abar), np.sqrt(1.0 - abar),
                             {"beta_min": beta_min, "beta_max": beta_max})
    if kind == "edm_sigma":
        if not (0.0 < sigma_min < sigma_max):
            raise ConfigError(f"need 0 < sigma_min < sigma_max, got ({sigma_min}, {sigma_max})")
        grid = np.geomspace(sigma_min, sigma_max, steps) if steps > 1 else np.array([sigma_max])
        sigma = np.concatenate([[0.0], grid])
        return NoiseSchedule(kind, np.ones_like(sigma), sigma,
                             {"sigma_min": sigma_min, "sigma_max": sigma_max})
    raise ConfigError(f"unknown schedule kind {kind!r}")


def forward_diffuse(x0, eps, t, schedule: NoiseSchedule) -> Tensor:
    """Noise a clean sample: alpha_t * x0 + sigma_t * eps."""
    x0 = as_tensor(x0)
    eps = as_tensor(eps)
    if x0.shape != eps.shape:
        raise DimensionError(f"forward_diffuse: shapes {x0.shape} and {eps.shape} differ")
    a, s = schedule.alpha_sigma(t)
    return add(scale(x0, a), scale(eps, s))


def convert_param(value, src: str, dst: str, z_t, t, schedule: NoiseSchedule) -> Tensor:
    """Convert a network output between epsilon, x0 and v parameterizations.

    Every conversion is affine in (value, z): out = c_v*value + c_z*z with
    coefficients from the identities around z = alpha*x0 + sigma*eps, so
    every ordered pair round-trips to identity.
    """
    for name in (src, dst):
        if name not in PARAMETERIZATIONS:
            raise ContractError(f"unknown parameterization {name!r}")
    value = as_tensor(value)
    z = as_tensor(z_t)
    if value.shape != z.shape:
        raise DimensionError(f"convert_param: value shape {value.shape} != z_t shape {z.shape}")
    if src == dst:
        return value
    a, s = schedule.alpha_sigma(t)

    def need(denom: float, what: str) -> float:
        if abs(denom) < _ALPHA_FLOOR:
            raise SingularityError(f"{what} vanishes at t = {t}; conversion "
                                   f"{src} -> {dst} is singular")
        return denom

    if (src, dst) == ("epsilon", "x0"):
        c_v, c_z = -s / need(a, "alpha_t"), 1.0 / a
    elif (src, dst) == ("x0", "epsilon"):
        c_v, c_z = -a / need(s, "sigma_t"), 1.0 / s
    elif (src, dst) == ("epsilon", "v"):
        c_v, c_z = (a * a + s * s) / need(a, "alpha_t"), -s / a
    elif (src, dst) == ("x0", "v"):
        c_v, c_z = -(a * a + s * s) / need(s, "sigma_t"), a / s
    elif (src, dst) == ("v", "x0"):
        d = a * a + s * s
        c_v, c_z = -s / d, a / d
    else:  # ("v", "epsilon")
        d = a * a + s * s
        c_v, c_z = a / d, s / d
    return affine_pair(value, z, c_v, c_z)


def snr_weight(t, schedule: NoiseSchedule, scheme: str = "uniform") -> float:
    """Loss weight for a timestep: 1, or the truncated signal-to-noise ratio.

    The truncated scheme floors at 1 so fully-noised timesteps keep training
    signal, and is capped at 1e4 to avoid overflow near the clean endpoint.
    """
    if scheme == "uniform":
        return 1.0
    if scheme != "truncated_snr":
        raise ContractError(f"unknown weighting scheme {scheme!r}")
    a, s = schedule.alpha_sigma(t)
    a2, s2 = a * a, s * s
    cap = 1e4
    if s2 * cap <= a2:
        return cap
    return float(max(a2 / s2, 1.0))
