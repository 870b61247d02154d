"""Clients the CLI talks through.

LocalClient calls the service operations in-process (the default: no server
needed, byte-deterministic). HttpClient speaks to a running spotsim service;
error bodies are mapped back onto the local exception hierarchy so the CLI
behaves identically either way.
"""

from __future__ import annotations

import httpx

from .errors import Infeasible, ParseError, SpotSimError, ValidationError
from .service import ops, schemas

_OPS = {
    "characterize": (ops.characterize, schemas.CharacterizeResponse),
    "forecast": (ops.forecast, schemas.ForecastResponse),
    "optimize": (ops.optimize, schemas.OptimizeResponse),
    "simulate": (ops.simulate, schemas.SimulateResponse),
    "compare": (ops.compare, schemas.CompareResponse),
}


class LocalClient:
    def call(self, op: str, request):
        fn, _ = _OPS[op]
        return fn(request)


class HttpClient:
    def __init__(self, base_url: str, timeout: float = 300.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def call(self, op: str, request):
        _, response_model = _OPS[op]
        resp = httpx.post(
            f"{self.base_url}/{op}", json=request.model_dump(), timeout=self.timeout
        )
        if resp.status_code >= 400:
            self._raise_remote(resp)
        return response_model.model_validate(resp.json())

    @staticmethod
    def _raise_remote(resp: httpx.Response):
        try:
            body = resp.json()
            category = body.get("category", "internal")
            detail = body.get("detail", resp.text)
        except ValueError:
            category, detail = "internal", resp.text
        if category == "infeasible":
            raise Infeasible(detail)
        if category == "parse":
            raise ParseError(detail)
        if category == "validation":
            raise ValidationError(detail)
        raise SpotSimError(f"server error ({resp.status_code}): {detail}")
