"""Dataset builds from game records."""

import numpy as np
import pytest

from tilesense.agent import GreedyAgent, RandomAgent
from tilesense.engine import GameConfig, run_game
from tilesense.situation import (
    Dataset,
    GcnConfig,
    GcnNet,
    generate_dataset,
    load_dataset,
    save_dataset,
)


@pytest.fixture(scope="module")
def records(catalog):
    config = GameConfig(catalog=catalog, board_size=9)
    out = []
    for seed in range(4):
        _, record, _ = run_game(
            config, seed, [GreedyAgent(seed), RandomAgent(seed + 17)]
        )
        out.append(record)
    return out


@pytest.fixture(scope="module")
def dataset(records, catalog):
    return generate_dataset(records, catalog)


def test_one_example_per_recorded_turn(records, dataset):
    assert len(dataset) == sum(len(r.turns) for r in records)
    for record in records:
        discards = sum(len(t.get("discards", [])) for t in record.turns)
        discards += len(record.trailing_discards)
        assert len(record.turns) == 71 - discards


def test_examples_group_by_game(records, dataset):
    assert set(dataset.game_ids.tolist()) == set(range(len(records)))
    for gid, record in enumerate(records):
        rows = np.flatnonzero(dataset.game_ids == gid)
        assert len(rows) == len(record.turns)
        assert dataset.turns[rows].tolist() == [t["turn"] for t in record.turns]


def test_labels_point_at_played_instance(records, dataset):
    for i in range(len(dataset)):
        cb, label = dataset.example(i)
        assert 0 <= label < len(cb.instances)
        record = records[int(dataset.game_ids[i])]
        turn = record.turns[
            [t["turn"] for t in record.turns].index(int(dataset.turns[i]))
        ]
        inst = cb.instances[label]
        assert inst.pos == (turn["x"], turn["y"])
        assert inst.rotation == turn["rotation"]


def test_single_candidate_examples_retained(dataset):
    widths = np.diff(dataset.inst_off)
    # forced placements stay in the data; they still teach the readout
    if (widths == 1).any():
        i = int(np.flatnonzero(widths == 1)[0])
        cb, label = dataset.example(i)
        assert len(cb.instances) == 1 and label == 0
    assert dataset.mean_candidates() > 1.0


def test_examples_reconstruct_and_run(dataset):
    net = GcnNet(GcnConfig(), seed=0)
    for i in (0, len(dataset) // 2, len(dataset) - 1):
        cb, label = dataset.example(i)
        assert cb.n_real == int((cb.x[:, 6] == 0).sum())
        assert cb.edges.max() < cb.n_vertices
        probs = net.forward(cb)
        assert abs(probs.sum() - 1.0) < 1e-9
        assert len(probs) == len(cb.instances)


def test_generation_deterministic(records, catalog):
    a = generate_dataset(records, catalog)
    b = generate_dataset(records, catalog)
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.edges, b.edges)
    assert np.array_equal(a.labels, b.labels)


def test_save_load_round_trip(tmp_path, dataset):
    path = tmp_path / "d.tsar"
    save_dataset(path, dataset, extra_meta={"note": "test"})
    back = load_dataset(path)
    assert back.catalog_hash == dataset.catalog_hash
    assert back.board_size == dataset.board_size
    for name in ("x", "edges", "v_off", "e_off", "inst_off", "inst_pos",
                 "inst_voff", "inst_vids", "labels", "game_ids", "turns"):
        assert np.array_equal(getattr(back, name), getattr(dataset, name)), name


def test_save_bytes_deterministic(tmp_path, dataset):
    a, b = tmp_path / "a.tsar", tmp_path / "b.tsar"
    save_dataset(a, dataset)
    save_dataset(b, dataset)
    assert a.read_bytes() == b.read_bytes()


def test_load_rejects_other_containers(tmp_path):
    from tilesense.nn import save_arrays

    path = tmp_path / "x.tsar"
    save_arrays(path, {"kind": "policy"}, {"w": np.zeros(2)})
    with pytest.raises(ValueError):
        load_dataset(path)


def test_split_by_game_is_disjoint_and_whole(dataset):
    train, val = dataset.split_by_game(val_fraction=0.25, seed=0)
    assert len(train) + len(val) == len(dataset)
    train_games = set(dataset.game_ids[train].tolist())
    val_games = set(dataset.game_ids[val].tolist())
    assert not train_games & val_games
    assert len(val_games) == 1  # 25% of four games
    t2, v2 = dataset.split_by_game(val_fraction=0.25, seed=0)
    assert np.array_equal(train, t2) and np.array_equal(val, v2)
    t3, v3 = dataset.split_by_game(val_fraction=0.25, seed=1)
    assert not np.array_equal(val, v3) or not np.array_equal(train, t3)


def test_mismatched_catalog_refused(records):
    from tilesense.catalog import base_catalog, parse_catalog

    doctored = parse_catalog("# different file\n" + base_catalog().source_text)
    with pytest.raises(Exception):
        generate_dataset(records, doctored)
