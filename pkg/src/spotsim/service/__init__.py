"""HTTP service: pydantic schemas, operations, and the FastAPI app."""

from .app import app, create_app

__all__ = ["app", "create_app"]
