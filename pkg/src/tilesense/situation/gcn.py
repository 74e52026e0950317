"""Two-layer graph convolution over candidate boards.

Propagation uses the renormalized adjacency D^{-1/2}(A+I)D^{-1/2},
applied by edge scatter so no sparse-matrix dependency is needed.  A
ReLU and (train-only, seeded) inverted dropout sit between the layers;
per-candidate mean pooling and a linear readout produce one score per
instance, and a softmax across instances yields placement
probabilities.  Backprop is hand-derived; being symmetric, the
propagation operator is its own transpose.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ..actions import encode_action
from ..nn import load_arrays, relu, save_arrays, softmax
from .candidate import CandidateBoard, build_candidate_board

CHECKPOINT_KIND = "situation"


@dataclass(frozen=True)
class GcnConfig:
    d_in: int = 7
    d_h: int = 32
    d_out: int = 16
    dropout: float = 0.5

    def to_dict(self) -> dict:
        return asdict(self)

    def arch_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


class Propagator:
    """Â h for one graph, as scatter-adds over the edge list."""

    def __init__(self, n_vertices: int, edges: np.ndarray):
        deg = np.ones(n_vertices, dtype=np.float64)  # self loops
        if len(edges):
            np.add.at(deg, edges[:, 0], 1.0)
            np.add.at(deg, edges[:, 1], 1.0)
        self.dinv = 1.0 / np.sqrt(deg)
        self.edges = edges

    def __call__(self, h: np.ndarray) -> np.ndarray:
        g = h * self.dinv[:, None]
        out = g.copy()
        if len(self.edges):
            np.add.at(out, self.edges[:, 0], g[self.edges[:, 1]])
            np.add.at(out, self.edges[:, 1], g[self.edges[:, 0]])
        return out * self.dinv[:, None]


class GcnNet:
    def __init__(self, config: GcnConfig, seed: int = 0,
                 params: dict = None):
        self.config = config
        self.snapshot_id = 0
        if params is not None:
            self.params = params
            return
        rng = np.random.default_rng(seed)
        self.params = {
            "w1": rng.normal(0.0, np.sqrt(2.0 / config.d_in),
                             (config.d_in, config.d_h)),
            "w2": rng.normal(0.0, np.sqrt(2.0 / config.d_h),
                             (config.d_h, config.d_out)),
            "read_w": rng.normal(0.0, np.sqrt(1.0 / config.d_out),
                                 (config.d_out,)),
            "read_b": np.zeros(1),
        }

    def copy(self) -> "GcnNet":
        net = GcnNet(self.config, params={k: v.copy()
                                          for k, v in self.params.items()})
        net.snapshot_id = self.snapshot_id
        return net

    def forward(self, cb: CandidateBoard, train_mode: bool = False,
                rng: Optional[np.random.Generator] = None,
                cache: dict = None) -> np.ndarray:
        p = self.params
        prop = Propagator(cb.n_vertices, cb.edges)
        x = cb.x.astype(np.float64)
        z1 = prop(x) @ p["w1"]
        h1 = relu(z1)
        if train_mode and self.config.dropout > 0:
            if rng is None:
                raise ValueError("train mode dropout needs an rng")
            keep = rng.random(h1.shape) >= self.config.dropout
            h1 = h1 * keep / (1.0 - self.config.dropout)
        else:
            keep = None
        p2 = prop(h1)
        h2 = p2 @ p["w2"]
        pooled = np.stack([
            h2[inst.vertex_ids].mean(axis=0) for inst in cb.instances
        ])
        scores = pooled @ p["read_w"] + p["read_b"][0]
        probs = softmax(scores)
        if cache is not None:
            cache.update(cb=cb, prop=prop, px=prop(x), z1=z1, keep=keep,
                         h1=h1, p2=p2, pooled=pooled, probs=probs)
        return probs

    def backward(self, cache: dict) -> tuple:
        """Cross-entropy grads for the cached forward; cache must hold
        the label.  Returns (grads, loss)."""
        p = self.params
        cb = cache["cb"]
        probs = cache["probs"]
        label = cache["label"]
        loss = -float(np.log(max(probs[label], 1e-300)))
        dscores = probs.copy()
        dscores[label] -= 1.0
        pooled = cache["pooled"]
        g = {
            "read_w": pooled.T @ dscores,
            "read_b": np.array([dscores.sum()]),
        }
        dpooled = np.outer(dscores, p["read_w"])
        dh2 = np.zeros((cb.n_vertices, self.config.d_out))
        for inst, row in zip(cb.instances, dpooled):
            dh2[inst.vertex_ids] += row / len(inst.vertex_ids)
        g["w2"] = cache["p2"].T @ dh2
        dh1 = cache["prop"](dh2 @ p["w2"].T)
        if cache["keep"] is not None:
            dh1 = dh1 * cache["keep"] / (1.0 - self.config.dropout)
        dz1 = dh1 * (cache["z1"] > 0)
        g["w1"] = cache["px"].T @ dz1
        return g, loss

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
    def load(cls, path) -> "GcnNet":
        meta, arrays = load_arrays(path)
        if meta.get("kind") != CHECKPOINT_KIND:
            raise ValueError(f"{path}: not a situation-model checkpoint")
        config = GcnConfig(**meta["config"])
        if meta["arch_hash"] != config.arch_hash():
            raise ValueError(f"{path}: architecture hash mismatch")
        net = cls(config, params=arrays)
        net.snapshot_id = meta["snapshot_id"]
        return net


def gcn_forward(net: GcnNet, cb: CandidateBoard, train_mode: bool = False,
                rng: Optional[np.random.Generator] = None) -> np.ndarray:
    return net.forward(cb, train_mode=train_mode, rng=rng)


def predict(net: GcnNet, state, tile_id: Optional[str] = None,
            k: int = 5) -> list:
    """Top-k placements as (pos, rotation, probability), best first.

    Probability ties break toward the lower flat action index, so the
    ordering is total and stable.
    """
    cb = build_candidate_board(state, tile_id)
    probs = net.forward(cb)
    size = state.config.board_size
    order = sorted(
        range(len(cb.instances)),
        key=lambda i: (
            -probs[i],
            encode_action(size, cb.instances[i].pos[0],
                          cb.instances[i].pos[1],
                          cb.instances[i].rotation, "none"),
        ),
    )
    return [
        (cb.instances[i].pos, cb.instances[i].rotation, float(probs[i]))
        for i in order[:k]
    ]
