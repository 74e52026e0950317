"""HTTP layer: a turn-based game service over the engine.

Sessions are held in memory and optionally journaled to an append-only
event log.  All session mutation is serialized by a per-session lock.
The parameter directory (checkpoints addressable by id) comes from the
``TILESENSE_PARAMS_DIR`` environment variable unless passed explicitly;
``TILESENSE_PERSIST_DIR`` enables the event-log journal the same way.
"""

from __future__ import annotations

import json
import os
import time
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

import numpy as np

from .. import gaze as gaze_mod
from ..actions import decode_action
from ..catalog import TileCatalog
from ..engine import legal_actions
from ..situation import build_candidate_board, predict
from . import schemas
from .store import ServiceError, Session, SessionStore, state_view

PARAMS_ENV = "TILESENSE_PARAMS_DIR"
PERSIST_ENV = "TILESENSE_PERSIST_DIR"


def _http_error(status: int, exc: ServiceError) -> HTTPException:
    detail: dict = {"error": str(exc)}
    if exc.mask_indices is not None:
        detail["mask"] = exc.mask_indices
    return HTTPException(status_code=status, detail=detail)


def create_app(
    catalog: Optional[TileCatalog] = None,
    params_dir: Optional[str] = None,
    persist_dir: Optional[str] = None,
) -> FastAPI:
    if params_dir is None:
        params_dir = os.environ.get(PARAMS_ENV)
    if persist_dir is None:
        persist_dir = os.environ.get(PERSIST_ENV)
    store = SessionStore(
        catalog=catalog, params_dir=params_dir, persist_dir=persist_dir
    )
    app = FastAPI(title="tilesense", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    def get_session(session_id: str) -> Session:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail={"error": "unknown session"})

    @app.get("/healthz")
    def healthz() -> dict:
        return {"ok": True}

    @app.get("/catalog", response_model=schemas.CatalogResponse)
    def catalog_view():
        tiles = {}
        for spec in store.catalog.tiles:
            grid = spec.subgrid(0)
            tiles[spec.tile_id] = {
                "grid": [[int(cell.bits) for cell in row] for row in grid],
                "shield": bool(spec.shield),
                "count": int(spec.count),
            }
        return {"start_tile": "D", "tiles": tiles}

    @app.post("/sessions", response_model=schemas.SessionCreated)
    def create_session(req: schemas.CreateSessionRequest):
        try:
            session = store.create(
                board_size=req.board_size,
                seed=req.seed,
                seats=req.seats,
                agent=req.agent,
                policy_id=req.policy_id,
                situation_id=req.situation_id,
            )
        except ServiceError as exc:
            raise _http_error(400, exc)
        with session.lock:
            view = state_view(session.state, session.seats)
        return {
            "session_id": session.session_id,
            "seed": session.seed,
            "board_size": session.config.board_size,
            "seats": list(session.seats),
            "state": view,
        }

    @app.get("/sessions/{session_id}/state", response_model=schemas.StateView)
    def get_state(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return state_view(session.state, session.seats)

    @app.get("/sessions/{session_id}/actions", response_model=schemas.ActionsResponse)
    def get_actions(session_id: str):
        session = get_session(session_id)
        size = session.config.board_size
        with session.lock:
            state = session.state
            if state.finished or state.drawn_tile is None:
                return {"count": 0, "actions": []}
            mask = legal_actions(state)
        indices = [int(i) for i in np.flatnonzero(mask)]
        actions = []
        for idx in indices:
            x, y, rotation, option = decode_action(size, idx)
            actions.append(
                {"action": idx, "x": x, "y": y, "rotation": rotation, "option": option}
            )
        return {"count": len(actions), "actions": actions}

    @app.post("/sessions/{session_id}/act", response_model=schemas.ActResponse)
    def act(session_id: str, req: schemas.ActRequest):
        session = get_session(session_id)
        try:
            applied = store.act(session, req.player, req.action)
        except ServiceError as exc:
            raise _http_error(409, exc)
        with session.lock:
            view = state_view(session.state, session.seats)
        return {"applied": applied, "state": view}

    @app.get(
        "/sessions/{session_id}/predictions",
        response_model=schemas.PredictionsResponse,
    )
    def predictions(session_id: str, k: int = Query(default=5, ge=1)):
        session = get_session(session_id)
        if session.situation_net is None:
            raise HTTPException(
                status_code=409,
                detail={"error": "session has no situation model"},
            )
        with session.lock:
            state = session.state
            if state.finished or state.drawn_tile is None:
                raise HTTPException(
                    status_code=409, detail={"error": "no tile to predict for"}
                )
            ranked = predict(session.situation_net, state, k=k)
            tile = state.drawn_tile
        return {
            "tile": tile,
            "predictions": [
                {"x": int(pos[0]), "y": int(pos[1]), "rotation": int(rot), "prob": float(p)}
                for pos, rot, p in ranked
            ],
        }

    @app.post("/sessions/{session_id}/gaze", response_model=schemas.GazeResponse)
    def gaze(session_id: str, req: schemas.GazeRequest):
        session = get_session(session_id)
        try:
            trace = gaze_mod.ingest(req.trace)
        except gaze_mod.GazeError as exc:
            raise HTTPException(status_code=400, detail={"error": str(exc)})
        graph = gaze_mod.build_gaze_graph(
            trace, req.dispersion_threshold, req.duration_threshold_ms
        )
        with session.lock:
            state = session.state
            if state.finished or state.drawn_tile is None:
                raise HTTPException(
                    status_code=409,
                    detail={"error": "no candidate board to attach to"},
                )
            cb = build_candidate_board(state)
        attached = gaze_mod.attach(graph, cb, req.radius)
        return {
            "fixations": [
                {
                    "x": f.x,
                    "y": f.y,
                    "onset_ms": f.onset_ms,
                    "duration_ms": f.duration_ms,
                    "n_samples": f.n_samples,
                }
                for f in attached.fixations
            ],
            "links": [[fi, vid] for fi, vid in attached.links],
            "fused": gaze_mod.fused_node_link(attached, cb),
        }

    @app.post("/sessions/{session_id}/heatmap", response_model=schemas.HeatmapResponse)
    def heatmap(session_id: str, req: schemas.HeatmapRequest):
        session = get_session(session_id)
        try:
            trace = gaze_mod.ingest(req.trace)
        except gaze_mod.GazeError as exc:
            raise HTTPException(status_code=400, detail={"error": str(exc)})
        hm = gaze_mod.heatmap(
            trace, session.config.board_size, half_life_ms=req.half_life_ms
        )
        return {
            "board_size": hm.board_size,
            "grid": hm.grid.tolist(),
            "off_board_ms": hm.off_board_ms,
        }

    @app.get("/sessions/{session_id}/events")
    def events(
        session_id: str,
        since: int = Query(default=0, ge=0),
        follow: bool = Query(default=False),
    ):
        session = get_session(session_id)

        def dump(event: dict) -> str:
            return json.dumps(event, sort_keys=True, separators=(",", ":")) + "\n"

        def stream():
            cursor = since
            while True:
                with session.lock:
                    chunk = list(session.events[cursor:])
                    finished = session.state.finished
                for event in chunk:
                    yield dump(event)
                cursor += len(chunk)
                if not follow or finished:
                    break
                time.sleep(0.05)

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    return app
