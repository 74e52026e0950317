"""Command-line front end.

Batch subcommands (self-play training, corpus generation, dataset
builds, model training, evaluation, gaze reports, graph exports) run
in-process against the library; ``serve`` hands off to uvicorn.

Every subcommand accepts ``--config FILE`` (a JSON object of option
defaults); explicit flags win over the file.  The fully resolved
configuration is echoed to stderr as one JSON line, and every written
artifact carries the same configuration in its header.  Exit status is
2 for usage errors and 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import engine
from .agent.greedy import GreedyAgent, RandomAgent
from .agent.observe import observe
from .agent.policy import PolicyNet, select_action
from .agent.train import (
    TrainConfig,
    TrainingError,
    evaluate,
    evaluate_single,
    train_self_play,
    train_single_player,
    write_metrics_csv,
)
from .catalog import base_catalog
from .engine import GameConfig, load_corpus, run_game, save_corpus
from .gaze import fixations as detect_fixations
from .gaze import heatmap as build_heatmap
from .gaze import load_trace
from .nn import child_seed, masked_softmax
from .situation.candidate import build_candidate_board
from .situation.dataset import generate_dataset, load_dataset, save_dataset
from .situation.gcn import GcnNet
from .situation.train import (
    SmTrainConfig,
    SmTrainingError,
    train_situation_model,
    write_sm_metrics_csv,
)

PROG = "tilesense"


class CliError(RuntimeError):
    """Runtime failure; reported on stderr with exit status 1."""


def _load_config_file(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise CliError("config file must hold a JSON object")
    return data


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit flags."""
    file_cfg = _load_config_file(getattr(args, "config", None))
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise CliError(
            f"config file sets unknown options: {', '.join(sorted(unknown))}"
        )
    resolved = dict(defaults)
    resolved.update(file_cfg)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _echo(command: str, resolved: dict) -> None:
    line = json.dumps(
        {"command": command, "config": resolved},
        sort_keys=True,
        separators=(",", ":"),
    )
    print(line, file=sys.stderr)


def _artifact_header(command: str, resolved: dict) -> dict:
    """Config header for artifacts.

    Output paths and worker counts are execution details, not run
    parameters: excluding them keeps artifact bytes identical when the
    same run is written elsewhere or split across workers.
    """
    config = {
        k: v
        for k, v in resolved.items()
        if not k.startswith("out") and k != "workers" and v is not None
    }
    return {"command": command, "config": config}


def _policy_chooser(net: PolicyNet, mode: str = "greedy",
                    rng: Optional[np.random.Generator] = None):
    def choose(state, mask):
        dist = masked_softmax(net.logits(observe(state, state.current_player)), mask)
        return select_action(dist, mode=mode, rng=rng)

    return choose


def _make_agents(kind: str, policy_path: Optional[str], board_size: int,
                 players: int, seed: int) -> list:
    if kind == "policy":
        if policy_path is None:
            raise CliError("--agent policy requires --policy PATH")
        net = PolicyNet.load(policy_path)
        if net.config.board_size != board_size:
            raise CliError(
                f"policy expects board size {net.config.board_size}, "
                f"got {board_size}"
            )
        return [_policy_chooser(net) for _ in range(players)]
    if kind == "random":
        return [RandomAgent(seed=child_seed(seed, 100 + i)) for i in range(players)]
    return [GreedyAgent(seed=child_seed(seed, 100 + i)) for i in range(players)]


def _play_batch(task: tuple) -> list:
    """Worker for gen-games: play the given (index, seed) pairs."""
    kind, policy_path, board_size, players, seed, pairs = task
    catalog = base_catalog()
    config = GameConfig(catalog=catalog, board_size=board_size, num_players=players)
    out = []
    for index, game_seed in pairs:
        agents = _make_agents(kind, policy_path, board_size, players,
                              child_seed(seed, 50000 + index))
        _, record, _ = run_game(config, game_seed, agents)
        out.append((index, record.to_text()))
    return out


# -- subcommand bodies --------------------------------------------------


def _cmd_selfplay(args: argparse.Namespace) -> int:
    defaults = {
        "mode": "single",
        "episodes": 300,
        "board_size": 9,
        "lr": 1e-3,
        "seed": 0,
        "checkpoint_every": 50,
        "pool_size": 1,
        "snapshot_every": 50,
        "out": None,
    }
    resolved = _resolve(args, defaults)
    _echo("selfplay", resolved)
    if resolved["out"] is None:
        raise CliError("--out DIR is required")
    out_dir = Path(resolved["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    catalog = base_catalog()
    config = TrainConfig(
        board_size=resolved["board_size"],
        episodes=resolved["episodes"],
        lr=resolved["lr"],
        seed=resolved["seed"],
        checkpoint_every=resolved["checkpoint_every"],
        pool_size=resolved["pool_size"],
        snapshot_every=resolved["snapshot_every"],
        abort_path=str(out_dir / "abort.tsar"),
    )
    try:
        if resolved["mode"] == "single":
            net, rows = train_single_player(config, catalog)
        else:
            net, rows = train_self_play(config, catalog)
    except TrainingError as exc:
        raise CliError(f"training diverged: {exc}") from None
    header = _artifact_header("selfplay", resolved)
    net.save(out_dir / "policy.tsar", extra_meta=header)
    write_metrics_csv(out_dir / "metrics.csv", rows, header=header)
    print(f"trained {resolved['episodes']} episodes -> {out_dir}")
    return 0


def _cmd_gen_games(args: argparse.Namespace) -> int:
    defaults = {
        "games": 100,
        "agent": "greedy",
        "policy": None,
        "board_size": 9,
        "players": 2,
        "seed": 0,
        "workers": os.cpu_count() or 1,
        "out": None,
    }
    resolved = _resolve(args, defaults)
    _echo("gen-games", resolved)
    if resolved["out"] is None:
        raise CliError("--out FILE is required")
    games = resolved["games"]
    pairs = [(i, child_seed(resolved["seed"], i)) for i in range(games)]
    workers = max(1, min(resolved["workers"], games))
    task_of = lambda chunk: (
        resolved["agent"],
        resolved["policy"],
        resolved["board_size"],
        resolved["players"],
        resolved["seed"],
        chunk,
    )
    results: list = []
    if workers == 1:
        results = _play_batch(task_of(pairs))
    else:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [pairs[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_play_batch, [task_of(c) for c in chunks]):
                results.extend(part)
    results.sort(key=lambda item: item[0])
    records = [engine.GameRecord.from_text(text) for _, text in results]
    save_corpus(resolved["out"], records,
                header=_artifact_header("gen-games", resolved))
    print(f"wrote {len(records)} games -> {resolved['out']}")
    return 0


def _cmd_gen_dataset(args: argparse.Namespace) -> int:
    defaults = {"games": None, "out": None}
    resolved = _resolve(args, defaults)
    _echo("gen-dataset", resolved)
    if resolved["games"] is None or resolved["out"] is None:
        raise CliError("--games FILE and --out FILE are required")
    try:
        records = load_corpus(resolved["games"])
    except OSError as exc:
        raise CliError(f"cannot read corpus: {exc}") from None
    if not records:
        raise CliError("corpus holds no games")
    catalog = base_catalog()
    try:
        dataset = generate_dataset(records, catalog)
    except engine.GameError as exc:
        raise CliError(f"corpus replay failed: {exc}") from None
    save_dataset(resolved["out"], dataset,
                 extra_meta=_artifact_header("gen-dataset", resolved))
    print(
        f"wrote {len(dataset)} examples from {len(records)} games "
        f"-> {resolved['out']}"
    )
    return 0


def _cmd_train_sm(args: argparse.Namespace) -> int:
    defaults = {
        "dataset": None,
        "epochs": 3,
        "lr": 1e-3,
        "seed": 0,
        "val_fraction": 0.2,
        "out": None,
    }
    resolved = _resolve(args, defaults)
    _echo("train-sm", resolved)
    if resolved["dataset"] is None or resolved["out"] is None:
        raise CliError("--dataset FILE and --out DIR are required")
    try:
        dataset = load_dataset(resolved["dataset"])
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load dataset: {exc}") from None
    out_dir = Path(resolved["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    config = SmTrainConfig(
        epochs=resolved["epochs"],
        lr=resolved["lr"],
        seed=resolved["seed"],
        val_fraction=resolved["val_fraction"],
        abort_path=str(out_dir / "abort.tsar"),
    )
    try:
        net, rows = train_situation_model(dataset, config)
    except SmTrainingError as exc:
        raise CliError(f"training diverged: {exc}") from None
    header = _artifact_header("train-sm", resolved)
    net.save(out_dir / "situation.tsar", extra_meta=header)
    write_sm_metrics_csv(out_dir / "sm_metrics.csv", rows, header=header)
    if rows:
        last = rows[-1]
        print(
            f"epoch {last.epoch}: val_top1 {last.val_top1:.4f} "
            f"val_top3 {last.val_top3:.4f} -> {out_dir}"
        )
    return 0


def _load_optional_policy(spec: Optional[str]) -> Optional[PolicyNet]:
    if spec is None or spec == "random":
        return None
    try:
        return PolicyNet.load(spec)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load policy {spec!r}: {exc}") from None


def _cmd_eval(args: argparse.Namespace) -> int:
    defaults = {
        "games": 100,
        "board_size": 9,
        "seed": 0,
        "mode": "sample",
        "policy_a": None,
        "policy_b": None,
        "single": False,
        "out": None,
    }
    resolved = _resolve(args, defaults)
    _echo("eval", resolved)
    catalog = base_catalog()
    net_a = _load_optional_policy(resolved["policy_a"])
    if resolved["single"]:
        stats = evaluate_single(
            net_a,
            catalog,
            n_games=resolved["games"],
            seed=resolved["seed"],
            board_size=resolved["board_size"],
            mode=resolved["mode"],
        )
        results = {
            "games": len(stats),
            "final_score": float(np.mean([s.final_score for s in stats])),
            "cities_completed": float(np.mean([s.cities_completed for s in stats])),
            "meeples_remaining_per_turn": float(
                np.mean([s.meeples_per_turn() for s in stats])
            ),
            "point_gain_turns": float(np.mean([s.point_gain_turns for s in stats])),
        }
    else:
        net_b = _load_optional_policy(resolved["policy_b"])
        results = evaluate(
            net_a,
            net_b,
            catalog,
            n_games=resolved["games"],
            seed=resolved["seed"],
            board_size=resolved["board_size"],
            mode=resolved["mode"],
        )
    text = json.dumps(results, sort_keys=True, separators=(",", ":"))
    print(text)
    if resolved["out"] is not None:
        payload = dict(_artifact_header("eval", resolved))
        payload["results"] = results
        with open(resolved["out"], "w", encoding="utf-8") as fh:
            fh.write(json.dumps(payload, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    defaults = {
        "host": "127.0.0.1",
        "port": 8000,
        "params_dir": None,
        "persist_dir": None,
    }
    resolved = _resolve(args, defaults)
    _echo("serve", resolved)
    import uvicorn

    from .service import create_app

    app = create_app(
        params_dir=resolved["params_dir"], persist_dir=resolved["persist_dir"]
    )
    uvicorn.run(app, host=resolved["host"], port=resolved["port"], log_level="warning")
    return 0


def _cmd_gaze_report(args: argparse.Namespace) -> int:
    defaults = {
        "trace": None,
        "board_size": 9,
        "half_life_ms": None,
        "dispersion": 1.0 / 3.0,
        "duration_ms": 100.0,
        "out": None,
    }
    resolved = _resolve(args, defaults)
    _echo("gaze-report", resolved)
    if resolved["trace"] is None or resolved["out"] is None:
        raise CliError("--trace FILE and --out DIR are required")
    try:
        trace = load_trace(resolved["trace"])
    except OSError as exc:
        raise CliError(f"cannot read trace: {exc}") from None
    except ValueError as exc:
        raise CliError(f"bad trace: {exc}") from None
    out_dir = Path(resolved["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    header = _artifact_header("gaze-report", resolved)
    header_line = "# " + json.dumps(header, sort_keys=True, separators=(",", ":"))

    hm = build_heatmap(trace, resolved["board_size"],
                       half_life_ms=resolved["half_life_ms"])
    with open(out_dir / "heatmap.csv", "w", encoding="utf-8") as fh:
        fh.write(header_line + "\n")
        for line in hm.to_csv_lines():
            fh.write(line + "\n")

    found = detect_fixations(trace, resolved["dispersion"], resolved["duration_ms"])
    with open(out_dir / "fixations.csv", "w", encoding="utf-8") as fh:
        fh.write(header_line + "\n")
        fh.write("x,y,onset_ms,duration_ms,n_samples\n")
        for f in found:
            fh.write(
                f"{f.x:.6f},{f.y:.6f},{f.onset_ms:.6f},"
                f"{f.duration_ms:.6f},{f.n_samples}\n"
            )
    print(
        f"{len(found)} fixations, {hm.on_board_ms:.0f} ms on board, "
        f"{hm.off_board_ms:.0f} ms off board -> {out_dir}"
    )
    return 0


def _cmd_export_graph(args: argparse.Namespace) -> int:
    defaults = {
        "games": None,
        "game_index": 0,
        "turn": -1,
        "candidates": False,
        "out": None,
    }
    resolved = _resolve(args, defaults)
    _echo("export-graph", resolved)
    if resolved["games"] is None or resolved["out"] is None:
        raise CliError("--games FILE and --out FILE are required")
    try:
        records = load_corpus(resolved["games"])
    except OSError as exc:
        raise CliError(f"cannot read corpus: {exc}") from None
    index = resolved["game_index"]
    if not 0 <= index < len(records):
        raise CliError(f"game index {index} outside corpus of {len(records)}")
    record = records[index]
    catalog = base_catalog()

    captured: dict = {}
    want = resolved["turn"]
    if want < 0:
        want = len(record.turns) + want
    if not 0 <= want < len(record.turns):
        raise CliError(f"turn {resolved['turn']} outside game of {len(record.turns)}")

    def observer(state, entry):
        if entry["turn"] == want:
            captured["state"] = state

    try:
        engine.replay(record, catalog, observer=observer)
    except engine.GameError as exc:
        raise CliError(f"replay failed: {exc}") from None
    state = captured["state"]
    if resolved["candidates"]:
        from .gaze import candidate_node_link_lines

        cb = build_candidate_board(state)
        text = "\n".join(candidate_node_link_lines(cb)) + "\n"
    else:
        text = state.graph.export_node_link()
    if resolved["out"] == "-":
        sys.stdout.write(text)
    else:
        with open(resolved["out"], "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote graph for game {index} turn {want} -> {resolved['out']}")
    return 0


# -- parser -------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file of option defaults")
    sub.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Carcassonne research stack: engine, agents, "
        "placement prediction, gaze analytics, game service",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("selfplay", help="train the gameplay policy")
    _add_common(p)
    p.add_argument("--mode", choices=["single", "adversarial"])
    p.add_argument("--episodes", type=int)
    p.add_argument("--board-size", dest="board_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    p.add_argument("--pool-size", dest="pool_size", type=int)
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_selfplay)

    p = subs.add_parser("gen-games", help="play games and record them")
    _add_common(p)
    p.add_argument("--games", type=int)
    p.add_argument("--agent", choices=["random", "greedy", "policy"])
    p.add_argument("--policy", help="policy checkpoint for --agent policy")
    p.add_argument("--board-size", dest="board_size", type=int)
    p.add_argument("--players", type=int)
    p.add_argument("--workers", type=int, help="worker processes (default: cores)")
    p.add_argument("--out", help="corpus file")
    p.set_defaults(func=_cmd_gen_games)

    p = subs.add_parser("gen-dataset", help="build a prediction dataset from games")
    _add_common(p)
    p.add_argument("--games", help="corpus file")
    p.add_argument("--out", help="dataset file")
    p.set_defaults(func=_cmd_gen_dataset)

    p = subs.add_parser("train-sm", help="train the placement-prediction model")
    _add_common(p)
    p.add_argument("--dataset", help="dataset file")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--val-fraction", dest="val_fraction", type=float)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_train_sm)

    p = subs.add_parser("eval", help="evaluate policies over paired games")
    _add_common(p)
    p.add_argument("--games", type=int)
    p.add_argument("--board-size", dest="board_size", type=int)
    p.add_argument("--mode", choices=["sample", "greedy"])
    p.add_argument("--policy-a", dest="policy_a",
                   help="checkpoint path, or 'random'")
    p.add_argument("--policy-b", dest="policy_b",
                   help="checkpoint path, or 'random'")
    p.add_argument("--single", action="store_true", default=None,
                   help="single-player scoring eval of policy-a")
    p.add_argument("--out", help="results JSON file")
    p.set_defaults(func=_cmd_eval)

    p = subs.add_parser("serve", help="run the HTTP game service")
    _add_common(p)
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--params-dir", dest="params_dir",
                   help="checkpoint directory served by id")
    p.add_argument("--persist-dir", dest="persist_dir",
                   help="event-log directory")
    p.set_defaults(func=_cmd_serve)

    p = subs.add_parser("gaze-report", help="heatmap and fixation report for a trace")
    _add_common(p)
    p.add_argument("--trace", help="gaze log file")
    p.add_argument("--board-size", dest="board_size", type=int)
    p.add_argument("--half-life-ms", dest="half_life_ms", type=float)
    p.add_argument("--dispersion", type=float)
    p.add_argument("--duration-ms", dest="duration_ms", type=float)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_gaze_report)

    p = subs.add_parser("export-graph", help="node-link export of a recorded position")
    _add_common(p)
    p.add_argument("--games", help="corpus file")
    p.add_argument("--game-index", dest="game_index", type=int)
    p.add_argument("--turn", type=int, help="turn to export (negative: from end)")
    p.add_argument("--candidates", action="store_true", default=None,
                   help="include candidate instances for the drawn tile")
    p.add_argument("--out", help="output file, '-' for stdout")
    p.set_defaults(func=_cmd_export_graph)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    # value checks that are usage errors, not runtime failures
    games = getattr(args, "games", None)
    if args.command in ("gen-games", "eval") and isinstance(games, int) and games <= 0:
        parser.error("--games must be a positive integer")
    episodes = getattr(args, "episodes", None)
    if episodes is not None and episodes < 0:
        parser.error("--episodes must be non-negative")

    try:
        return args.func(args)
    except CliError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
