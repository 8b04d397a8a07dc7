"""HTTP service exposing training, comparison, and selftest endpoints."""

from .app import app, create_app

__all__ = ["app", "create_app"]
