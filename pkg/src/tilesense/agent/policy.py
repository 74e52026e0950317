"""Convolutional policy over observations, trained with plain numpy.

Two strided conv layers pool the sub-cell grid down to a small feature
map; the flattened map is joined with the scalar vector and the drawn
tile block and pushed through one hidden layer to a logit per action.
Gradients are hand-derived so they can be audited against finite
differences, and float64 keeps runs bit-reproducible.
"""

from __future__ import annotations

import hashlib
import json
from typing import Optional
from dataclasses import asdict, dataclass

import numpy as np

from ..actions import action_space_size
from ..nn import load_arrays, masked_softmax, relu, save_arrays
from .observe import Observation

CHECKPOINT_KIND = "policy"


@dataclass(frozen=True)
class PolicyConfig:
    board_size: int = 9
    in_channels: int = 5
    conv_channels: tuple = (16, 32)
    conv_kernel: int = 3
    conv_strides: tuple = (3, 2)
    hidden: int = 128
    scalars_dim: int = 5
    tile_dim: int = 45

    @property
    def grid_side(self) -> int:
        return 3 * self.board_size

    @property
    def n_actions(self) -> int:
        return action_space_size(self.board_size)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conv_channels"] = list(self.conv_channels)
        d["conv_strides"] = list(self.conv_strides)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyConfig":
        d = dict(d)
        d["conv_channels"] = tuple(d["conv_channels"])
        d["conv_strides"] = tuple(d["conv_strides"])
        return cls(**d)

    def arch_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _conv_out(side: int, kernel: int, stride: int) -> int:
    if side < kernel:
        raise ValueError(f"kernel {kernel} larger than input {side}")
    return (side - kernel) // stride + 1


def _im2col(x: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    h, w, c = x.shape
    oh = _conv_out(h, kernel, stride)
    ow = _conv_out(w, kernel, stride)
    cols = np.empty((oh, ow, kernel * kernel * c), dtype=x.dtype)
    for i in range(oh):
        for j in range(ow):
            patch = x[i * stride:i * stride + kernel,
                      j * stride:j * stride + kernel, :]
            cols[i, j] = patch.reshape(-1)
    return cols


def _col2im(dcols: np.ndarray, shape: tuple, kernel: int, stride: int) -> np.ndarray:
    dx = np.zeros(shape, dtype=dcols.dtype)
    oh, ow, _ = dcols.shape
    c = shape[2]
    for i in range(oh):
        for j in range(ow):
            patch = dcols[i, j].reshape(kernel, kernel, c)
            dx[i * stride:i * stride + kernel,
               j * stride:j * stride + kernel, :] += patch
    return dx


class PolicyNet:
    def __init__(self, config: PolicyConfig, seed: int = 0,
                 params: dict = None):
        self.config = config
        self.snapshot_id = 0
        if params is not None:
            self.params = params
            return
        rng = np.random.default_rng(seed)
        p = {}
        side = config.grid_side
        in_c = config.in_channels
        for i, (out_c, stride) in enumerate(
            zip(config.conv_channels, config.conv_strides)
        ):
            fan_in = config.conv_kernel ** 2 * in_c
            p[f"conv{i}_w"] = rng.normal(
                0.0, np.sqrt(2.0 / fan_in), (fan_in, out_c)
            )
            p[f"conv{i}_b"] = np.zeros(out_c)
            side = _conv_out(side, config.conv_kernel, stride)
            in_c = out_c
        flat = side * side * in_c + config.scalars_dim + config.tile_dim
        p["fc_w"] = rng.normal(0.0, np.sqrt(2.0 / flat), (flat, config.hidden))
        p["fc_b"] = np.zeros(config.hidden)
        p["out_w"] = rng.normal(
            0.0, np.sqrt(1.0 / config.hidden), (config.hidden, config.n_actions)
        )
        p["out_b"] = np.zeros(config.n_actions)
        self.params = p

    def copy(self) -> "PolicyNet":
        net = PolicyNet(self.config, params={k: v.copy()
                                             for k, v in self.params.items()})
        net.snapshot_id = self.snapshot_id
        return net

    def logits(self, obs: Observation, cache: dict = None) -> np.ndarray:
        cfg = self.config
        p = self.params
        x = obs.grid
        acts = []
        cols_list = []
        for i, stride in enumerate(cfg.conv_strides):
            cols = _im2col(x, cfg.conv_kernel, stride)
            z = cols @ p[f"conv{i}_w"] + p[f"conv{i}_b"]
            x = relu(z)
            cols_list.append(cols)
            acts.append(x)
        flat = np.concatenate(
            [x.reshape(-1), obs.scalars, obs.current_tile]
        )
        hid_z = flat @ p["fc_w"] + p["fc_b"]
        hid = relu(hid_z)
        logits = hid @ p["out_w"] + p["out_b"]
        if cache is not None:
            cache.update(obs=obs, cols=cols_list, acts=acts, flat=flat,
                         hid=hid)
        return logits

    def backward(self, cache: dict, dlogits: np.ndarray) -> dict:
        """Gradients of a scalar loss given d loss / d logits."""
        cfg = self.config
        p = self.params
        g = {}
        hid = cache["hid"]
        flat = cache["flat"]
        g["out_w"] = np.outer(hid, dlogits)
        g["out_b"] = dlogits.copy()
        dhid = (p["out_w"] @ dlogits) * (hid > 0)
        g["fc_w"] = np.outer(flat, dhid)
        g["fc_b"] = dhid
        dflat = p["fc_w"] @ dhid
        grid_len = flat.size - cfg.scalars_dim - cfg.tile_dim
        dx = dflat[:grid_len].reshape(cache["acts"][-1].shape)
        for i in reversed(range(len(cfg.conv_strides))):
            act = cache["acts"][i]
            cols = cache["cols"][i]
            dz = dx * (act > 0)
            dz2 = dz.reshape(-1, dz.shape[-1])
            cols2 = cols.reshape(-1, cols.shape[-1])
            g[f"conv{i}_w"] = cols2.T @ dz2
            g[f"conv{i}_b"] = dz2.sum(axis=0)
            if i > 0:
                dcols = dz @ p[f"conv{i}_w"].T
                dx = _col2im(dcols, cache["acts"][i - 1].shape,
                             cfg.conv_kernel, cfg.conv_strides[i])
        return g

    def accumulate(self, grads: dict, into: dict) -> None:
        for key, g in grads.items():
            if key in into:
                into[key] += g
            else:
                into[key] = g.copy()

    def save(self, path, extra_meta: Optional[dict] = None) -> None:
        meta = {
            "kind": CHECKPOINT_KIND,
            "config": self.config.to_dict(),
            "arch_hash": self.config.arch_hash(),
            "snapshot_id": self.snapshot_id,
        }
        if extra_meta:
            for key, value in extra_meta.items():
                meta.setdefault(key, value)
        save_arrays(path, meta, self.params)

    @classmethod
    def load(cls, path) -> "PolicyNet":
        meta, arrays = load_arrays(path)
        if meta.get("kind") != CHECKPOINT_KIND:
            raise ValueError(f"{path}: not a policy checkpoint")
        config = PolicyConfig.from_dict(meta["config"])
        if meta["arch_hash"] != config.arch_hash():
            raise ValueError(f"{path}: architecture hash mismatch")
        net = cls(config, params=arrays)
        net.snapshot_id = meta["snapshot_id"]
        return net


def policy_forward(net: PolicyNet, obs: Observation,
                   mask: np.ndarray) -> np.ndarray:
    """Masked action distribution; masked entries are exactly zero."""
    return masked_softmax(net.logits(obs), mask)


def select_action(dist: np.ndarray, mode: str = "sample",
                  rng: np.random.Generator = None) -> int:
    if mode == "greedy":
        return int(np.argmax(dist))
    if mode == "sample":
        if rng is None:
            raise ValueError("sample mode needs an rng")
        return int(rng.choice(dist.size, p=dist / dist.sum()))
    raise ValueError(f"unknown selection mode {mode!r}")
