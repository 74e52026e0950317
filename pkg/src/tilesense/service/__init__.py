from .app import create_app
from .store import SessionStore, rebuild_from_events, state_view

__all__ = ["create_app", "SessionStore", "rebuild_from_events", "state_view"]
