"""Shared numeric pieces: stable softmax, Adam, deterministic array files.

Checkpoint and dataset files must be byte-identical for identical inputs,
which rules out zip containers with embedded timestamps.  The container
here is a little-endian length-prefixed JSON header followed by the
arrays in sorted key order, each in .npy form.
"""

from __future__ import annotations

import json
import zlib
from typing import Optional

import numpy as np

MAGIC = b"TSAR1\n"


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Probabilities over legal entries; masked entries are exactly zero."""
    if not mask.any():
        raise ValueError("mask has no legal entries")
    out = np.zeros_like(logits, dtype=np.float64)
    legal = logits[mask]
    legal = legal - legal.max()
    e = np.exp(legal)
    out[mask] = e / e.sum()
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def child_seed(seed: int, index: int) -> int:
    """Decorrelated per-worker/episode seed stream."""
    return (seed * 2654435761 + index) % (2 ** 32)


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {}
        self._v = {}

    def step(self, params: dict, grads: dict) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for key in sorted(grads):
            g = grads[key]
            if key not in self._m:
                self._m[key] = np.zeros_like(g)
                self._v[key] = np.zeros_like(g)
            m = self._m[key]
            v = self._v[key]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1 ** self.t)
            v_hat = v / (1 - b2 ** self.t)
            params[key] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def save_arrays(path, meta: dict, arrays: dict) -> None:
    header = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(len(header).to_bytes(8, "little"))
        f.write(header)
        f.write(len(arrays).to_bytes(8, "little"))
        for name in sorted(arrays):
            blob = name.encode()
            f.write(len(blob).to_bytes(8, "little"))
            f.write(blob)
            np.save(f, np.ascontiguousarray(arrays[name]))


def load_arrays(path) -> tuple:
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path}: not an array container")
        n = int.from_bytes(f.read(8), "little")
        meta = json.loads(f.read(n).decode())
        count = int.from_bytes(f.read(8), "little")
        arrays = {}
        for _ in range(count):
            n = int.from_bytes(f.read(8), "little")
            name = f.read(n).decode()
            arrays[name] = np.load(f)
    return meta, arrays


def grad_check(loss_fn, params: dict, grads: dict, rng: np.random.Generator,
               samples_per_array: int = 20, delta: float = 1e-5) -> float:
    """Worst relative error between analytic grads and central differences."""
    worst = 0.0
    for key in sorted(params):
        flat = params[key].reshape(-1)
        gflat = grads[key].reshape(-1)
        n = min(samples_per_array, flat.size)
        for i in map(int, rng.choice(flat.size, size=n, replace=False)):
            keep = flat[i]
            flat[i] = keep + delta
            up = loss_fn()
            flat[i] = keep - delta
            down = loss_fn()
            flat[i] = keep
            numeric = (up - down) / (2 * delta)
            denom = max(abs(numeric), abs(gflat[i]), 1e-8)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    return worst


def params_fingerprint(arrays: dict) -> str:
    crc = 0
    for name in sorted(arrays):
        crc = zlib.crc32(name.encode(), crc)
        crc = zlib.crc32(np.ascontiguousarray(arrays[name]).tobytes(), crc)
    return f"{crc:08x}"
