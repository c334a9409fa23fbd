"""HTTP front end: a FastAPI app wrapping the report handlers."""

from .app import create_app

__all__ = ["create_app"]
