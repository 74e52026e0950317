"""Training loop for the placement-prediction model.

Splits by game so validation turns never leak context from trained
games, runs Adam over per-example cross-entropy, and reports loss and
top-1/top-3 accuracy per epoch.  Everything is seed-deterministic.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..nn import Adam, child_seed
from .dataset import Dataset
from .gcn import GcnConfig, GcnNet

SM_CSV_COLUMNS = ("epoch", "train_loss", "val_loss", "val_top1", "val_top3")


class SmTrainingError(RuntimeError):
    def __init__(self, message: str, net: Optional[GcnNet] = None):
        super().__init__(message)
        self.net = net


@dataclass(frozen=True)
class SmTrainConfig:
    epochs: int = 3
    lr: float = 1e-3
    seed: int = 0
    val_fraction: float = 0.2
    model: GcnConfig = GcnConfig()
    abort_path: Optional[str] = None


@dataclass(frozen=True)
class SmEpochMetrics:
    epoch: int
    train_loss: float
    val_loss: float
    val_top1: float
    val_top3: float

    def csv_row(self) -> list:
        return [
            self.epoch,
            f"{self.train_loss:.6f}",
            f"{self.val_loss:.6f}",
            f"{self.val_top1:.6f}",
            f"{self.val_top3:.6f}",
        ]


def write_sm_metrics_csv(path, rows: list, header: Optional[dict] = None) -> None:
    with open(path, "w", newline="") as f:
        if header is not None:
            f.write("# " + json.dumps(header, sort_keys=True,
                                      separators=(",", ":")) + "\n")
        writer = csv.writer(f)
        writer.writerow(SM_CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_row())


def top_k_hit(probs: np.ndarray, label: int, k: int) -> bool:
    if len(probs) <= k:
        return True
    order = np.argsort(-probs, kind="stable")
    return label in order[:k]


def evaluate_model(net: GcnNet, dataset: Dataset,
                   indices: np.ndarray) -> tuple:
    """(mean loss, top-1 accuracy, top-3 accuracy) in inference mode."""
    if len(indices) == 0:
        return 0.0, 0.0, 0.0
    losses = []
    top1 = top3 = 0
    for i in indices:
        cb, label = dataset.example(int(i))
        probs = net.forward(cb)
        losses.append(-np.log(max(probs[label], 1e-300)))
        if int(np.argmax(probs)) == label:
            top1 += 1
        if top_k_hit(probs, label, 3):
            top3 += 1
    n = len(indices)
    return float(np.mean(losses)), top1 / n, top3 / n


def train_situation_model(dataset: Dataset, config: SmTrainConfig,
                          net: Optional[GcnNet] = None) -> tuple:
    """Returns (trained net, list of SmEpochMetrics)."""
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if net is None:
        net = GcnNet(config.model, seed=config.seed)
    train_idx, val_idx = dataset.split_by_game(config.val_fraction,
                                               config.seed)
    if len(train_idx) == 0:
        train_idx, val_idx = val_idx, train_idx
    optimizer = Adam(lr=config.lr)
    rows = []
    for epoch in range(config.epochs):
        rng = np.random.default_rng(child_seed(config.seed, epoch))
        order = train_idx[rng.permutation(len(train_idx))]
        epoch_losses = []
        for i in order:
            cb, label = dataset.example(int(i))
            cache = {}
            net.forward(cb, train_mode=True, rng=rng, cache=cache)
            cache["label"] = label
            grads, loss = net.backward(cache)
            if not np.isfinite(loss):
                err = SmTrainingError(f"non-finite loss {loss}", net)
                if config.abort_path:
                    net.save(config.abort_path)
                raise err
            optimizer.step(net.params, grads)
            epoch_losses.append(loss)
        net.snapshot_id += 1
        val_loss, top1, top3 = evaluate_model(net, dataset, val_idx)
        rows.append(SmEpochMetrics(
            epoch=epoch + 1,
            train_loss=float(np.mean(epoch_losses)),
            val_loss=val_loss,
            val_top1=top1,
            val_top3=top3,
        ))
    return net, rows
