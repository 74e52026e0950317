"""Policy-gradient training: single-player scoring and self-play.

Both trainers run REINFORCE with a per-timestep exponential moving
average baseline and Adam updates.  Single-player reward is the turn's
score delta plus the endgame delta on the last turn; self-play reward
is the terminal score differential against an opponent drawn from a
snapshot pool (pool size 1 degenerates to mirrored live parameters).

Metric checkpoints follow the learning-curve quantities used for the
gameplay agent: cities completed, meeples remaining per turn, and
turns with point gains, plus final score.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..engine import DeckEmpty, GameConfig, apply, draw, finalize, legal_actions, new_game
from ..nn import Adam, child_seed, masked_softmax
from .greedy import RandomAgent
from .observe import observe
from .policy import PolicyConfig, PolicyNet, select_action

CSV_COLUMNS = (
    "episode",
    "episodes",
    "Number of cities completed",
    "Average number of meeples remaining per turn",
    "Number of turns where points were gained",
    "mean final score",
    "loss",
)


class TrainingError(RuntimeError):
    def __init__(self, message: str, net: Optional[PolicyNet] = None):
        super().__init__(message)
        self.net = net


@dataclass(frozen=True)
class TrainConfig:
    board_size: int = 9
    episodes: int = 300
    lr: float = 1e-3
    seed: int = 0
    baseline_beta: float = 0.9
    checkpoint_every: int = 50
    snapshot_every: int = 50  # self-play pool update interval
    pool_size: int = 1
    abort_path: Optional[str] = None
    policy: Optional[PolicyConfig] = None

    def policy_config(self) -> PolicyConfig:
        return self.policy or PolicyConfig(board_size=self.board_size)


@dataclass(frozen=True)
class TrainMetrics:
    episode: int  # cumulative episodes at this checkpoint
    episodes: int  # episodes aggregated into this row
    cities_completed: float
    meeples_remaining_per_turn: float
    point_gain_turns: float
    final_score: float
    loss: float

    def csv_row(self) -> list:
        return [
            self.episode,
            self.episodes,
            f"{self.cities_completed:.6f}",
            f"{self.meeples_remaining_per_turn:.6f}",
            f"{self.point_gain_turns:.6f}",
            f"{self.final_score:.6f}",
            f"{self.loss:.6f}",
        ]


def write_metrics_csv(path, rows: list, header: Optional[dict] = None) -> None:
    with open(path, "w", newline="") as f:
        if header is not None:
            f.write("# " + json.dumps(header, sort_keys=True,
                                      separators=(",", ":")) + "\n")
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_row())


@dataclass
class EpisodeStats:
    final_score: int = 0
    cities_completed: int = 0
    point_gain_turns: int = 0
    meeple_samples: list = field(default_factory=list)

    def meeples_per_turn(self) -> float:
        if not self.meeple_samples:
            return 0.0
        return float(np.mean(self.meeple_samples))


def _rollout(net: PolicyNet, game_config: GameConfig, game_seed: int,
             rng: np.random.Generator, learner_seat: int,
             opponent) -> tuple:
    """One game; returns (steps for the learner, stats, final state).

    Each learner step is (obs, mask, action, probs, reward).  Opponent
    seats (if any) are driven by ``opponent(state, mask)``.
    """
    state = new_game(game_config, game_seed)
    steps = []
    stats = EpisodeStats()
    prev_score = 0
    while True:
        try:
            state, _ = draw(state)
        except DeckEmpty as exc:
            state = exc.state
            break
        mask = legal_actions(state)
        seat = state.current_player
        if seat == learner_seat:
            obs = observe(state, seat)
            probs = masked_softmax(net.logits(obs), mask)
            if not np.all(np.isfinite(probs)):
                raise TrainingError("non-finite policy output", net)
            action = select_action(probs, "sample", rng)
            state, events = apply(state, action)
            score = state.score_of(learner_seat)
            reward = score - prev_score
            prev_score = score
            steps.append([obs, mask, action, reward])
            stats.meeple_samples.append(state.meeples_of(learner_seat))
            if reward > 0:
                stats.point_gain_turns += 1
            for event in events:
                if event.kind == "score" and \
                        event.payload["feature_class"] == "city":
                    stats.cities_completed += 1
        else:
            action = opponent(state, mask)
            state, events = apply(state, action)
            prev_score = state.score_of(learner_seat)
            for event in events:
                if event.kind == "score" and \
                        event.payload["feature_class"] == "city":
                    stats.cities_completed += 1
    state, _ = finalize(state)
    stats.final_score = state.score_of(learner_seat)
    return steps, stats, state


def _returns_single(steps: list, endgame_delta: int) -> np.ndarray:
    rewards = np.array([s[3] for s in steps], dtype=np.float64)
    if len(rewards):
        rewards[-1] += endgame_delta
    return np.cumsum(rewards[::-1])[::-1]


class _Baseline:
    """Per-timestep EMA of observed returns."""

    def __init__(self, beta: float):
        self.beta = beta
        self.values = {}

    def advantages(self, returns: np.ndarray) -> np.ndarray:
        adv = np.empty_like(returns)
        for t, g in enumerate(returns):
            b = self.values.get(t, 0.0)
            adv[t] = g - b
            self.values[t] = self.beta * b + (1 - self.beta) * g
        return adv


def _update(net: PolicyNet, optimizer: Adam, steps: list,
            advantages: np.ndarray) -> float:
    """One Adam step over an episode; returns the surrogate loss."""
    grads = {}
    loss = 0.0
    for (obs, mask, action, _), adv in zip(steps, advantages):
        cache = {}
        logits = net.logits(obs, cache)
        probs = masked_softmax(logits, mask)
        logp = np.log(max(probs[action], 1e-300))
        loss += -adv * logp
        dlogits = probs.copy()
        dlogits[action] -= 1.0
        dlogits *= adv / len(steps)
        net.accumulate(net.backward(cache, dlogits), grads)
    loss /= max(len(steps), 1)
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite loss {loss}", net)
    optimizer.step(net.params, grads)
    return float(loss)


def _checkpoint_rows(rows, window, episode, losses):
    if not window:
        return
    rows.append(TrainMetrics(
        episode=episode,
        episodes=len(window),
        cities_completed=float(np.mean([s.cities_completed for s in window])),
        meeples_remaining_per_turn=float(
            np.mean([s.meeples_per_turn() for s in window])
        ),
        point_gain_turns=float(np.mean([s.point_gain_turns for s in window])),
        final_score=float(np.mean([s.final_score for s in window])),
        loss=float(np.mean(losses)) if losses else 0.0,
    ))
    window.clear()
    losses.clear()


def _abort(config: TrainConfig, err: TrainingError) -> None:
    if config.abort_path and err.net is not None:
        err.net.save(config.abort_path)


def train_single_player(config: TrainConfig, catalog,
                        net: Optional[PolicyNet] = None) -> tuple:
    """Returns (trained net, list of TrainMetrics checkpoints)."""
    if net is None:
        net = PolicyNet(config.policy_config(), seed=config.seed)
    game_config = GameConfig(catalog=catalog, board_size=config.board_size,
                             num_players=1)
    optimizer = Adam(lr=config.lr)
    baseline = _Baseline(config.baseline_beta)
    rows, window, losses = [], [], []
    for episode in range(config.episodes):
        rng = np.random.default_rng(child_seed(config.seed, episode))
        try:
            steps, stats, final = _rollout(
                net, game_config, child_seed(config.seed, episode), rng,
                learner_seat=0, opponent=None,
            )
            last_turn_score = sum(s[3] for s in steps)
            endgame = final.score_of(0) - last_turn_score
            returns = _returns_single(steps, endgame)
            loss = _update(net, optimizer, steps, baseline.advantages(returns))
        except TrainingError as err:
            _abort(config, err)
            raise
        net.snapshot_id += 1
        window.append(stats)
        losses.append(loss)
        if (episode + 1) % config.checkpoint_every == 0:
            _checkpoint_rows(rows, window, episode + 1, losses)
    _checkpoint_rows(rows, window, config.episodes, losses)
    return net, rows


def train_self_play(config: TrainConfig, catalog,
                    net: Optional[PolicyNet] = None) -> tuple:
    """Two-seat training against a pool of past snapshots."""
    if net is None:
        net = PolicyNet(config.policy_config(), seed=config.seed)
    game_config = GameConfig(catalog=catalog, board_size=config.board_size,
                             num_players=2)
    optimizer = Adam(lr=config.lr)
    baseline = _Baseline(config.baseline_beta)
    pool = []  # kept empty when pool_size == 1: mirror play on live params
    rows, window, losses = [], [], []
    for episode in range(config.episodes):
        rng = np.random.default_rng(child_seed(config.seed, episode))
        learner_seat = episode % 2
        if config.pool_size > 1 and pool:
            opponent_net = pool[int(rng.integers(len(pool)))]
        else:
            opponent_net = net

        def opponent(state, mask, _net=opponent_net, _rng=rng):
            probs = masked_softmax(_net.logits(observe(state, state.current_player)),
                                   mask)
            return select_action(probs, "sample", _rng)

        try:
            steps, stats, final = _rollout(
                net, game_config, child_seed(config.seed, episode), rng,
                learner_seat=learner_seat, opponent=opponent,
            )
            diff = final.score_of(learner_seat) - final.score_of(1 - learner_seat)
            returns = np.full(len(steps), float(diff))
            loss = _update(net, optimizer, steps, baseline.advantages(returns))
        except TrainingError as err:
            _abort(config, err)
            raise
        net.snapshot_id += 1
        if config.pool_size > 1 and (episode + 1) % config.snapshot_every == 0:
            pool.append(net.copy())
            if len(pool) > config.pool_size:
                pool.pop(0)
        window.append(stats)
        losses.append(loss)
        if (episode + 1) % config.checkpoint_every == 0:
            _checkpoint_rows(rows, window, episode + 1, losses)
    _checkpoint_rows(rows, window, config.episodes, losses)
    return net, rows


def _policy_chooser(net: Optional[PolicyNet], rng: np.random.Generator,
                    mode: str):
    if net is None:
        fallback = RandomAgent(int(rng.integers(2 ** 31)))
        return lambda state, mask: fallback(state, mask)

    def chooser(state, mask):
        probs = masked_softmax(net.logits(observe(state, state.current_player)),
                               mask)
        return select_action(probs, mode, rng)

    return chooser


def evaluate_single(net: Optional[PolicyNet], catalog, n_games: int,
                    seed: int, board_size: int = 9,
                    mode: str = "sample") -> list:
    """Per-game EpisodeStats for one seat; None plays uniformly at random.

    Game seeds come from the shared child-seed stream, so two calls with
    the same (n_games, seed) play the same decks: a paired comparison.
    """
    game_config = GameConfig(catalog=catalog, board_size=board_size,
                             num_players=1)
    out = []
    for i in range(n_games):
        rng = np.random.default_rng(child_seed(seed, 10_000 + i))
        chooser = _policy_chooser(net, rng, mode)
        state = new_game(game_config, child_seed(seed, i))
        stats = EpisodeStats()
        prev = 0
        while True:
            try:
                state, _ = draw(state)
            except DeckEmpty as exc:
                state = exc.state
                break
            state, events = apply(state, chooser(state, legal_actions(state)))
            delta = state.score_of(0) - prev
            prev = state.score_of(0)
            if delta > 0:
                stats.point_gain_turns += 1
            stats.meeple_samples.append(state.meeples_of(0))
            for event in events:
                if event.kind == "score" and \
                        event.payload["feature_class"] == "city":
                    stats.cities_completed += 1
        state, _ = finalize(state)
        stats.final_score = state.score_of(0)
        out.append(stats)
    return out


def evaluate(net_a: Optional[PolicyNet], net_b: Optional[PolicyNet], catalog,
             n_games: int, seed: int, board_size: int = 9,
             mode: str = "sample") -> dict:
    """Head-to-head evaluation; seats alternate so neither side keeps
    the first-move advantage.  Returns Fig-style metrics for side A
    plus its win rate (draws count half)."""
    if n_games < 1:
        raise ValueError("n_games must be >= 1")
    game_config = GameConfig(catalog=catalog, board_size=board_size,
                             num_players=2)
    wins = 0.0
    a_stats = []
    for i in range(n_games):
        seat_a = i % 2
        rng_a = np.random.default_rng(child_seed(seed, 2 * i))
        rng_b = np.random.default_rng(child_seed(seed, 2 * i + 1))
        choosers = [None, None]
        choosers[seat_a] = _policy_chooser(net_a, rng_a, mode)
        choosers[1 - seat_a] = _policy_chooser(net_b, rng_b, mode)
        state = new_game(game_config, child_seed(seed, 40_000 + i))
        stats = EpisodeStats()
        prev = 0
        while True:
            try:
                state, _ = draw(state)
            except DeckEmpty as exc:
                state = exc.state
                break
            seat = state.current_player
            state, events = apply(
                state, choosers[seat](state, legal_actions(state))
            )
            delta = state.score_of(seat_a) - prev
            prev = state.score_of(seat_a)
            if seat == seat_a:
                if delta > 0:
                    stats.point_gain_turns += 1
                stats.meeple_samples.append(state.meeples_of(seat_a))
            for event in events:
                if event.kind == "score" and \
                        event.payload["feature_class"] == "city":
                    stats.cities_completed += 1
        state, _ = finalize(state)
        stats.final_score = state.score_of(seat_a)
        a_stats.append(stats)
        score_a = state.score_of(seat_a)
        score_b = state.score_of(1 - seat_a)
        if score_a > score_b:
            wins += 1.0
        elif score_a == score_b:
            wins += 0.5
    return {
        "games": n_games,
        "win_rate": wins / n_games,
        "final_score": float(np.mean([s.final_score for s in a_stats])),
        "cities_completed": float(
            np.mean([s.cities_completed for s in a_stats])
        ),
        "meeples_remaining_per_turn": float(
            np.mean([s.meeples_per_turn() for s in a_stats])
        ),
        "point_gain_turns": float(
            np.mean([s.point_gain_turns for s in a_stats])
        ),
    }
