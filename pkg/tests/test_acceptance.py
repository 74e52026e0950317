"""Acceptance gate: one test per top-level capability claim.

Each test is self-contained and pins its own tolerance; the heavyweight
learning checks (policy improvement, placement-prediction skill) carry
their CPU budgets as assertions so regressions in speed fail too.
"""

import time

import numpy as np

from _synth import make_cluster_trace
from tilesense.actions import action_space_size, decode_action, encode_action
from tilesense.agent import GreedyAgent, RandomAgent, observe
from tilesense.agent.policy import PolicyNet
from tilesense.agent.train import (
    TrainConfig,
    evaluate_single,
    train_single_player,
    write_metrics_csv,
)
from tilesense.engine import (
    DeckEmpty,
    GameConfig,
    apply,
    draw,
    finalize,
    legal_actions,
    legal_placements,
    new_game,
    run_game,
    save_corpus,
)
from tilesense.gaze import fixations, heatmap, make_trace
from tilesense.nn import child_seed, grad_check
from tilesense.situation import GcnConfig, GcnNet, build_candidate_board
from tilesense.situation.candidate import CandidateBoard, CandidateInstance
from tilesense.situation.dataset import generate_dataset
from tilesense.situation.train import SmTrainConfig, train_situation_model

MEEPLES_PER_PLAYER = 7


def random_agents(seed, players=2):
    return [RandomAgent(seed=child_seed(seed, 100 + p)) for p in range(players)]


def test_01_encoding_shapes_w40(catalog):
    started = time.monotonic()
    config = GameConfig(catalog=catalog, board_size=40, num_players=2)
    state, _ = draw(new_game(config, seed=0))
    assert state.board.bit_matrix().shape == (120, 120)
    assert state.board.shield_matrix().shape == (120, 120)
    obs = observe(state, 0)
    assert obs.grid.shape == (120, 120, 5)
    assert time.monotonic() - started < 1.0


def test_02_action_space_size_and_bijection():
    started = time.monotonic()
    assert action_space_size(40) == 38400
    seen = set()
    for index in range(38400):
        x, y, rotation, option = decode_action(40, index)
        assert 0 <= x < 40 and 0 <= y < 40 and 0 <= rotation < 4
        assert encode_action(40, x, y, rotation, option) == index
        seen.add((x, y, rotation, option))
    assert len(seen) == 38400
    assert time.monotonic() - started < 30.0


SIDE_CELL = {"N": (0, 1), "E": (1, 2), "S": (2, 1), "W": (1, 0)}
NEIGHBOR_OF = {"N": (0, -1), "E": (1, 0), "S": (0, 1), "W": (-1, 0)}
OPPOSITE = {"N": "S", "E": "W", "S": "N", "W": "E"}


def _side_class(bits):
    if bits & 4:
        return "city"
    if bits & 2:
        return "road"
    return "field"


def _grid_bits(catalog, tile_id, rotation):
    grid = catalog[tile_id].subgrid(rotation)
    return [[cell.bits for cell in row] for row in grid]


def _oracle_legal(catalog, state, pos, rotation):
    """Brute-force side matching straight from the 3x3 tile art."""
    board = state.board
    size = state.config.board_size
    x, y = pos
    if not (0 <= x < size and 0 <= y < size) or pos in board.placements:
        return False
    mine = _grid_bits(catalog, state.drawn_tile, rotation)
    any_neighbor = False
    for side, (dx, dy) in NEIGHBOR_OF.items():
        placed = board.placements.get((x + dx, y + dy))
        if placed is None:
            continue
        any_neighbor = True
        theirs = _grid_bits(catalog, placed.tile_id, placed.rotation)
        r, c = SIDE_CELL[side]
        nr, nc = SIDE_CELL[OPPOSITE[side]]
        if _side_class(mine[r][c]) != _side_class(theirs[nr][nc]):
            return False
    return any_neighbor


def test_03_legality_oracle_agreement(catalog):
    samples = 0
    positives = 0
    config = GameConfig(catalog=catalog, board_size=9, num_players=2)
    for g in range(50):
        state = new_game(config, seed=g)
        agents = random_agents(g)
        rng = np.random.default_rng(10_000 + g)
        turn = 0
        while True:
            try:
                state, _ = draw(state)
            except DeckEmpty:
                break
            if turn % 8 == 0:
                spec = catalog[state.drawn_tile]
                legal = set(legal_placements(state))
                for _ in range(30):
                    pos = (int(rng.integers(9)), int(rng.integers(9)))
                    rot = int(rng.integers(4))
                    want = _oracle_legal(catalog, state, pos, rot)
                    via_engine = (pos, rot) in legal
                    via_graph = state.graph.is_legal(state.board, spec, pos, rot)
                    assert want == via_engine == via_graph, (g, turn, pos, rot)
                    samples += 1
                    positives += want
            mask = legal_actions(state)
            state, _ = apply(state, agents[state.current_player](state, mask))
            turn += 1
    assert samples >= 10_000
    assert positives >= 100


def test_04_dataset_examples_per_game(catalog):
    config = GameConfig(catalog=catalog, board_size=9, num_players=2)
    for seed in range(25):
        _, record, _ = run_game(config, seed, random_agents(seed))
        discards = sum(len(t.get("discards", [])) for t in record.turns)
        discards += len(record.trailing_discards)
        dataset = generate_dataset([record], catalog)
        assert len(dataset) == 71 - discards, seed
        assert len(dataset) == len(record.turns)


def test_05_conservation_invariants_200_games(catalog):
    config = GameConfig(catalog=catalog, board_size=9, num_players=2)
    expected_meeples = MEEPLES_PER_PLAYER * 2
    for seed in range(200):
        state = new_game(config, seed=seed)
        agents = random_agents(seed)
        scored = [0, 0]

        def absorb(events):
            for event in events:
                if event.kind == "score":
                    for pid, value in event.payload["points"].items():
                        scored[int(pid)] += value

        while True:
            try:
                state, events = draw(state)
            except DeckEmpty as exc:
                state = exc.state
                break
            absorb(events)
            mask = legal_actions(state)
            state, events = apply(state, agents[state.current_player](state, mask))
            absorb(events)
            held = sum(state.meeples_of(p) for p in range(2))
            assert held + state.meeples_on_board() == expected_meeples, seed
            assert [state.score_of(0), state.score_of(1)] == scored, seed
        state, events = finalize(state)
        absorb(events)
        assert [state.score_of(0), state.score_of(1)] == scored, seed
        held = sum(state.meeples_of(p) for p in range(2))
        assert held + state.meeples_on_board() == expected_meeples, seed


def _toy_board(rng, n_real=6, n_inst=3, verts_per_inst=4, n_edges=14):
    n = n_real + n_inst * verts_per_inst
    x = np.zeros((n, 7), dtype=np.int8)
    x[np.arange(n), rng.integers(0, 4, size=n)] = 1
    x[n_real:, 6] = 1
    edges = []
    for _ in range(n_edges):
        a, b = rng.choice(n_real, size=2, replace=False)
        edges.append((a, b))
    instances = []
    for k in range(n_inst):
        base = n_real + k * verts_per_inst
        ids = np.arange(base, base + verts_per_inst, dtype=np.int32)
        for i in range(verts_per_inst - 1):
            edges.append((ids[i], ids[i + 1]))
        edges.append((ids[0], int(rng.integers(n_real))))
        instances.append(CandidateInstance(ids, (k, 0), 0))
    return CandidateBoard(
        x=x, edges=np.array(edges, dtype=np.int32), n_real=n_real,
        instances=instances,
    )


def test_06_gcn_gradients_probabilities_invariance(catalog):
    started = time.monotonic()

    # analytic gradients against central differences on small graphs
    for trial in range(3):
        cb = _toy_board(np.random.default_rng(trial))
        net = GcnNet(GcnConfig(dropout=0.0), seed=trial)
        label = trial % len(cb.instances)
        cache = {}
        net.forward(cb, cache=cache)
        cache["label"] = label
        grads, _ = net.backward(cache)

        def loss_fn():
            return -np.log(net.forward(cb)[label])

        worst = grad_check(loss_fn, net.params, grads,
                           np.random.default_rng(100 + trial))
        assert worst <= 1e-4, f"trial {trial}: {worst:.3e}"

    # candidate probabilities sum to one on live positions
    net = GcnNet(GcnConfig(), seed=0)
    config = GameConfig(catalog=catalog, board_size=9, num_players=2)
    checked = 0
    for seed in range(8):
        state = new_game(config, seed=seed)
        agents = random_agents(seed)
        while checked < 50:
            try:
                state, _ = draw(state)
            except DeckEmpty:
                break
            probs = net.forward(build_candidate_board(state))
            assert abs(probs.sum() - 1.0) <= 1e-6
            checked += 1
            mask = legal_actions(state)
            state, _ = apply(state, agents[state.current_player](state, mask))
        if checked >= 50:
            break
    assert checked >= 50

    # vertex relabeling must not move any probability
    state, _ = draw(new_game(config, seed=3))
    cb = build_candidate_board(state)
    base = net.forward(cb)
    perm = np.random.default_rng(9).permutation(cb.n_vertices)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(cb.n_vertices)
    shuffled = CandidateBoard(
        x=cb.x[perm],
        edges=inv[cb.edges],
        n_real=cb.n_real,
        instances=[
            CandidateInstance(inv[inst.vertex_ids], inst.pos, inst.rotation)
            for inst in cb.instances
        ],
    )
    assert np.max(np.abs(net.forward(shuffled) - base)) <= 1e-9
    assert time.monotonic() - started < 60.0


def test_07_policy_learning_improves_over_untrained(catalog):
    # meeple economy emerges late: the training curve plateaus near the
    # untrained level until ~2000 episodes, then climbs well clear of it
    started = time.monotonic()
    config = TrainConfig(board_size=9, episodes=3200, lr=1e-3, seed=0)
    net, _ = train_single_player(config, catalog)
    train_seconds = time.monotonic() - started
    assert train_seconds <= 600.0, f"training took {train_seconds:.0f}s"

    untrained = PolicyNet(net.config, seed=config.seed)
    trained = evaluate_single(net, catalog, n_games=100, seed=123,
                              board_size=9, mode="sample")
    baseline = evaluate_single(untrained, catalog, n_games=100, seed=123,
                               board_size=9, mode="sample")

    def mean(value):
        return float(np.mean(value))

    score_t = mean([s.final_score for s in trained])
    score_b = mean([s.final_score for s in baseline])
    meeples_t = mean([s.meeples_per_turn() for s in trained])
    meeples_b = mean([s.meeples_per_turn() for s in baseline])
    gains_t = mean([s.point_gain_turns for s in trained])
    gains_b = mean([s.point_gain_turns for s in baseline])

    assert score_t > score_b, (score_t, score_b)
    assert meeples_t > meeples_b, (meeples_t, meeples_b)
    assert gains_t > gains_b, (gains_t, gains_b)


def test_08_situation_model_beats_uniform_baseline(catalog):
    started = time.monotonic()
    config = GameConfig(catalog=catalog, board_size=9, num_players=2)
    records = []
    for i in range(500):
        agents = [GreedyAgent(seed=child_seed(7, 100 + 2 * i + p))
                  for p in range(2)]
        _, record, _ = run_game(config, child_seed(7, i), agents)
        records.append(record)
    dataset = generate_dataset(records, catalog)

    mean_candidates = float(np.diff(dataset.inst_off).mean())
    uniform = 1.0 / mean_candidates
    threshold = 1.25 * uniform

    sm_config = SmTrainConfig(epochs=4, lr=1e-3, seed=0, val_fraction=0.2)
    _, rows = train_situation_model(dataset, sm_config)
    top1 = rows[-1].val_top1

    elapsed = time.monotonic() - started
    assert elapsed <= 900.0, f"pipeline took {elapsed:.0f}s"
    assert top1 >= threshold, (
        f"val top-1 {top1:.4f} vs 1.25x uniform {threshold:.4f} "
        f"(mean candidates {mean_candidates:.2f})"
    )


def test_09_gaze_conservation_and_monotonicity():
    # dwell mass conservation on unstructured random traces
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 120))
        t = np.cumsum(rng.uniform(5.0, 50.0, size=n))
        xy = rng.uniform(-1.0, 10.0, size=(n, 2))
        valid = rng.random(n) < 0.85
        trace = make_trace(t, xy, valid)
        hm = heatmap(trace, board_size=9)
        total = hm.on_board_ms + hm.off_board_ms
        max_interval = float(np.diff(t).max())
        assert abs(total - trace.valid_dwell_ms()) <= max_interval, seed

    # I-DT fixation counts move monotonically with both thresholds
    durations = (40.0, 80.0, 120.0, 200.0, 400.0)
    dispersions = (0.1, 0.2, 1.0 / 3.0, 0.5, 0.8)
    for seed in range(100):
        trace = make_cluster_trace(np.random.default_rng(seed))
        by_duration = [len(fixations(trace, 1.0 / 3.0, t)) for t in durations]
        by_dispersion = [len(fixations(trace, d, 100.0)) for d in dispersions]
        assert by_duration == sorted(by_duration, reverse=True), seed
        assert by_dispersion == sorted(by_dispersion), seed


def test_10_seeded_byte_determinism(catalog, tmp_path):
    config = GameConfig(catalog=catalog, board_size=9, num_players=2)

    # identical seeds give identical game records and corpus bytes
    texts = []
    for _ in range(2):
        records = [run_game(config, seed, random_agents(seed))[1]
                   for seed in (3, 4)]
        path = tmp_path / f"corpus_{len(texts)}.txt"
        save_corpus(path, records)
        texts.append((path.read_bytes(),
                      [r.to_text() for r in records]))
    assert texts[0] == texts[1]

    # training twice gives identical metric CSVs and checkpoints
    checkpoints = []
    for run in range(2):
        train_config = TrainConfig(board_size=9, episodes=3, lr=1e-3, seed=5,
                                   checkpoint_every=1)
        net, rows = train_single_player(train_config, catalog)
        policy_path = tmp_path / f"policy_{run}.tsar"
        metrics_path = tmp_path / f"metrics_{run}.csv"
        net.save(policy_path)
        write_metrics_csv(metrics_path, rows)
        checkpoints.append((policy_path.read_bytes(), metrics_path.read_bytes()))
    assert checkpoints[0] == checkpoints[1]

    # same for the placement-prediction model
    record = run_game(config, 6, random_agents(6))[1]
    dataset = generate_dataset([record], catalog)
    sm_bytes = []
    for run in range(2):
        sm_net, _ = train_situation_model(
            dataset, SmTrainConfig(epochs=1, lr=1e-3, seed=2)
        )
        path = tmp_path / f"situation_{run}.tsar"
        sm_net.save(path)
        sm_bytes.append(path.read_bytes())
    assert sm_bytes[0] == sm_bytes[1]
