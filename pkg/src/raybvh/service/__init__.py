"""FastAPI service: pydantic schemas and the stateless tracing endpoints."""

from .app import app, create_app

__all__ = ["app", "create_app"]
