"""Training loop for the placement-prediction model."""

import csv

import numpy as np
import pytest

from tilesense.agent import GreedyAgent
from tilesense.engine import GameConfig, run_game
from tilesense.situation import GcnConfig, GcnNet, generate_dataset
from tilesense.situation.train import (
    SM_CSV_COLUMNS,
    SmTrainConfig,
    SmTrainingError,
    evaluate_model,
    top_k_hit,
    train_situation_model,
    write_sm_metrics_csv,
)


@pytest.fixture(scope="module")
def dataset(catalog):
    config = GameConfig(catalog=catalog, board_size=9)
    records = []
    for seed in range(3):
        _, record, _ = run_game(
            config, seed, [GreedyAgent(seed), GreedyAgent(seed + 31)]
        )
        records.append(record)
    return generate_dataset(records, catalog)


def test_top_k_hit():
    probs = np.array([0.1, 0.5, 0.2, 0.15, 0.05])
    assert top_k_hit(probs, 1, 1)
    assert not top_k_hit(probs, 0, 3)
    assert top_k_hit(probs, 3, 3)
    assert top_k_hit(probs, 4, 5)  # k >= n always hits


def test_epochs_and_metrics(dataset):
    config = SmTrainConfig(epochs=2, seed=0)
    net, rows = train_situation_model(dataset, config)
    assert [r.epoch for r in rows] == [1, 2]
    assert net.snapshot_id == 2
    for r in rows:
        assert np.isfinite(r.train_loss) and np.isfinite(r.val_loss)
        assert 0.0 <= r.val_top1 <= r.val_top3 <= 1.0


def test_training_deterministic(dataset):
    config = SmTrainConfig(epochs=1, seed=5)
    net_a, rows_a = train_situation_model(dataset, config)
    net_b, rows_b = train_situation_model(dataset, config)
    assert rows_a == rows_b
    assert all(np.array_equal(net_a.params[k], net_b.params[k])
               for k in net_a.params)


def test_overfits_single_example(dataset):
    """Repeated steps on one mid-game example push its loss toward zero.

    Early-game examples can be fully symmetric (equivalent placements
    are graph-isomorphic, so no network can separate them); a mid-game
    board breaks the symmetry.
    """
    import dataclasses

    k = 30
    one = dataclasses.replace(
        dataset,
        labels=dataset.labels[k:k + 1],
        game_ids=dataset.game_ids[k:k + 1],
        turns=dataset.turns[k:k + 1],
        v_off=dataset.v_off[k:k + 2],
        e_off=dataset.e_off[k:k + 2],
        inst_off=dataset.inst_off[k:k + 2],
    )
    config = SmTrainConfig(epochs=60, lr=0.05, seed=0,
                           model=GcnConfig(dropout=0.0))
    net, rows = train_situation_model(one, config)
    cb, label = one.example(0)
    assert len(cb.instances) > 2
    final_loss = -np.log(net.forward(cb)[label])
    assert final_loss < 0.05


def test_empty_dataset_rejected(dataset):
    import dataclasses

    empty = dataclasses.replace(
        dataset,
        labels=dataset.labels[:0],
        game_ids=dataset.game_ids[:0],
        turns=dataset.turns[:0],
    )
    with pytest.raises(ValueError):
        train_situation_model(empty, SmTrainConfig())


def test_divergence_aborts_with_checkpoint(tmp_path, dataset):
    abort = tmp_path / "abort.tsar"
    config = SmTrainConfig(epochs=1, seed=0, abort_path=str(abort))
    poisoned = GcnNet(config.model, seed=0)
    poisoned.params["w1"][:] = np.nan
    with pytest.raises(SmTrainingError):
        train_situation_model(dataset, config, net=poisoned)
    assert abort.is_file()
    assert GcnNet.load(abort).config == config.model


def test_evaluate_model_inference_mode(dataset):
    net = GcnNet(GcnConfig(), seed=0)
    idx = np.arange(min(20, len(dataset)))
    a = evaluate_model(net, dataset, idx)
    b = evaluate_model(net, dataset, idx)
    assert a == b
    loss, top1, top3 = a
    assert loss > 0 and 0 <= top1 <= top3 <= 1


def test_metrics_csv_layout(tmp_path, dataset):
    _, rows = train_situation_model(dataset, SmTrainConfig(epochs=1, seed=0))
    path = tmp_path / "sm.csv"
    write_sm_metrics_csv(path, rows, header={"command": "train-sm"})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# {")
    assert lines[1] == "epoch,train_loss,val_loss,val_top1,val_top3"
    with open(path) as f:
        f.readline()
        parsed = list(csv.DictReader(f))
    assert len(parsed) == 1
    assert set(parsed[0]) == set(SM_CSV_COLUMNS)
