"""Time-conditioned MLP denoising networks with an expandable output head.

The final affine layer emits ``branches * channels`` values per sample;
branch ``k`` occupies the contiguous channel slice ``[k*C, (k+1)*C)`` and the
last branch is the inference branch. With a single branch the network is an
ordinary denoiser.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .errors import ConfigError, ContractError, DimensionError
from .schedule import NoiseSchedule, convert_param
from .tensor import Tensor, add_bias, as_tensor, matmul, no_grad, silu, slice_cols


class ScoreNet:
    """MLP over (state, sinusoidal time features) with a K*C output head."""

    def __init__(self, channels: int = 2, hidden=(128, 128, 128), time_dim: int = 32,
                 parameterization: str = "epsilon", branches: int = 1, seed: int = 0):
        if channels < 1:
            raise ConfigError(f"channels must be >= 1, got {channels}")
        if branches < 1:
            raise ConfigError(f"branches must be >= 1, got {branches}")
        if time_dim < 2 or time_dim % 2:
            raise ConfigError(f"time_dim must be a positive even number, got {time_dim}")
        if parameterization not in ("epsilon", "x0", "v"):
            raise ConfigError(f"unknown parameterization {parameterization!r}")
        self.channels = channels
        self.hidden = tuple(int(h) for h in hidden)
        self.time_dim = time_dim
        self.parameterization = parameterization
        self.branches = branches
        self.seed = seed

        rng = np.random.default_rng(seed)
        dims = [channels + time_dim, *self.hidden]
        self.layers: list[tuple[Tensor, Tensor]] = []
        for i in range(len(dims) - 1):
            fan_in, fan_out = dims[i], dims[i + 1]
            w = rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            self.layers.append((
                Tensor(w, requires_grad=True, name=f"layer{i}.weight"),
                Tensor(np.zeros(fan_out), requires_grad=True, name=f"layer{i}.bias"),
            ))
        fan_in = dims[-1]
        w = rng.normal(0.0, math.sqrt(1.0 / fan_in), size=(fan_in, branches * channels))
        self.head_weight = Tensor(w, requires_grad=True, name="head.weight")
        self.head_bias = Tensor(np.zeros(branches * channels), requires_grad=True, name="head.bias")

    # -- parameters ----------------------------------------------------

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        for w, b in self.layers:
            out.append((w.name, w))
            out.append((b.name, b))
        out.append((self.head_weight.name, self.head_weight))
        out.append((self.head_bias.name, self.head_bias))
        return out

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def clone(self) -> "ScoreNet":
        """Deep copy with fresh parameter tensors."""
        new = self._bare_copy()
        new.layers = [(Tensor(w.data.copy(), requires_grad=True, name=w.name),
                       Tensor(b.data.copy(), requires_grad=True, name=b.name))
                      for w, b in self.layers]
        new.head_weight = Tensor(self.head_weight.data.copy(), requires_grad=True, name="head.weight")
        new.head_bias = Tensor(self.head_bias.data.copy(), requires_grad=True, name="head.bias")
        return new

    def _bare_copy(self) -> "ScoreNet":
        new = object.__new__(ScoreNet)
        new.channels = self.channels
        new.hidden = self.hidden
        new.time_dim = self.time_dim
        new.parameterization = self.parameterization
        new.branches = self.branches
        new.seed = self.seed
        return new

    def spec(self) -> dict:
        return {
            "channels": self.channels,
            "hidden": list(self.hidden),
            "time_dim": self.time_dim,
            "parameterization": self.parameterization,
            "branches": self.branches,
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "ScoreNet":
        return cls(channels=spec["channels"], hidden=tuple(spec["hidden"]),
                   time_dim=spec["time_dim"], parameterization=spec["parameterization"],
                   branches=spec["branches"])

    # -- forward -------------------------------------------------------

    def time_features(self, u, n: int) -> np.ndarray:
        u = np.asarray(u, dtype=np.float32)
        if u.ndim == 0:
            u = np.full(n, float(u), dtype=np.float32)
        if u.shape != (n,):
            raise DimensionError(f"time argument shape {u.shape} does not match batch {n}")
        half = self.time_dim // 2
        # Geometric frequencies from 1 to 1000 cycles over the unit interval,
        # matching the resolution of four-digit step grids without aliasing.
        if half > 1:
            freqs = (1000.0 ** (np.arange(half) / (half - 1))).astype(np.float32)
        else:
            freqs = np.ones(1, dtype=np.float32)
        ang = 2.0 * np.pi * u[:, None] * freqs[None, :]
        return np.concatenate([np.sin(ang), np.cos(ang)], axis=1).astype(np.float32)

    def __call__(self, x, u) -> Tensor:
        """Raw forward pass. ``u`` is a normalized time in [0, 1]."""
        xa = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float32)
        if xa.ndim != 2 or xa.shape[1] != self.channels:
            raise DimensionError(f"expected input of shape (batch, {self.channels}), got {xa.shape}")
        h = Tensor(np.concatenate([xa, self.time_features(u, xa.shape[0])], axis=1))
        for w, b in self.layers:
            h = silu(add_bias(matmul(h, w), b))
        return add_bias(matmul(h, self.head_weight), self.head_bias)

    # -- inference helpers (never recorded on the tape) ------------------

    def predict_x0(self, x, t, schedule: NoiseSchedule, branch: Optional[int] = None) -> np.ndarray:
        return self._predict(x, t, schedule, "x0", branch)

    def predict_eps(self, x, t, schedule: NoiseSchedule, branch: Optional[int] = None) -> np.ndarray:
        return self._predict(x, t, schedule, "epsilon", branch)

    def _predict(self, x, t, schedule, target: str, branch: Optional[int]) -> np.ndarray:
        k = self.branches - 1 if branch is None else branch
        with no_grad():
            out = self(x, schedule.normalized_time(t))
            sl = branch_slice(out, k, self.branches)
            converted = convert_param(sl, self.parameterization, target, as_tensor(x), t, schedule)
        return converted.data


def branch_slice(output: Tensor, k: int, branches: int) -> Tensor:
    """View of branch ``k``: output channels [k*C, (k+1)*C)."""
    if output.data.ndim != 2:
        raise DimensionError(f"branch_slice expects a 2-D output, got {output.shape}")
    width = output.shape[1]
    if branches < 1 or width % branches:
        raise ContractError(f"output width {width} is not divisible into {branches} branches")
    if not (0 <= k < branches):
        raise ContractError(f"branch index {k} out of range [0, {branches})")
    c = width // branches
    return slice_cols(output, k * c, (k + 1) * c)


def expand_branch_head(net: ScoreNet, branches: int) -> ScoreNet:
    """Tile the output head ``branches`` times along the channel axis.

    Hidden-layer parameters are shared by reference with the source network;
    only the head is materialized anew, so every branch initially reproduces
    the original output exactly.
    """
    if branches < 1:
        raise ConfigError(f"branches must be >= 1, got {branches}")
    if net.branches != 1:
        raise ContractError(f"expand_branch_head expects a single-branch network, got {net.branches}")
    new = net._bare_copy()
    new.branches = branches
    new.layers = list(net.layers)
    new.head_weight = Tensor(np.tile(net.head_weight.data, (1, branches)),
                             requires_grad=True, name="head.weight")
    new.head_bias = Tensor(np.tile(net.head_bias.data, branches),
                           requires_grad=True, name="head.bias")
    return new


def collapse_branch_head(net: ScoreNet, branch: Optional[int] = None) -> ScoreNet:
    """Keep only one branch of the head (default: the inference branch)."""
    k = net.branches - 1 if branch is None else branch
    if not (0 <= k < net.branches):
        raise ContractError(f"branch index {k} out of range [0, {net.branches})")
    c = net.channels
    new = net._bare_copy()
    new.branches = 1
    new.layers = list(net.layers)
    new.head_weight = Tensor(net.head_weight.data[:, k * c:(k + 1) * c].copy(),
                             requires_grad=True, name="head.weight")
    new.head_bias = Tensor(net.head_bias.data[k * c:(k + 1) * c].copy(),
                           requires_grad=True, name="head.bias")
    return new


def loss_simple(net: ScoreNet, x0, eps, t, schedule: NoiseSchedule,
                branch: Optional[int] = None) -> Tensor:
    """Denoising-score-matching MSE between true and predicted noise."""
    from .schedule import forward_diffuse
    from .tensor import reduce_loss

    if net.branches > 1 and branch is None:
        raise ContractError("network has multiple branches; pass an explicit branch index")
    k = 0 if branch is None else branch
    x0 = as_tensor(x0)
    eps = as_tensor(eps)
    z = forward_diffuse(x0, eps, t, schedule)
    out = net(z, schedule.normalized_time(t))
    sl = branch_slice(out, k, net.branches)
    eps_pred = convert_param(sl, net.parameterization, "epsilon", z, t, schedule)
    return reduce_loss("mse", eps_pred, eps, 1.0)
