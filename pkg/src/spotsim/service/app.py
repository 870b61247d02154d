"""FastAPI application wrapping the service operations.

Error mapping: parse/validation failures return 400, infeasibility 422,
anything unexpected 500; the body always carries {category, detail}.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import SpotSimError
from . import ops, schemas

_STATUS_BY_CATEGORY = {"parse": 400, "validation": 400, "infeasible": 422}


def create_app() -> FastAPI:
    app = FastAPI(
        title="spotsim",
        version=__version__,
        description=(
            "Spot-instance cluster cost optimization: load-test characterization,"
            " price forecasting, multi-objective allocation, and cluster simulation."
        ),
    )

    @app.exception_handler(SpotSimError)
    async def spotsim_error_handler(request: Request, exc: SpotSimError):
        status = _STATUS_BY_CATEGORY.get(exc.category, 500)
        body = schemas.ErrorBody(category=exc.category, detail=str(exc))
        return JSONResponse(status_code=status, content=body.model_dump())

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.get("/version")
    async def version():
        return {"version": __version__}

    @app.post("/characterize", response_model=schemas.CharacterizeResponse)
    async def characterize(req: schemas.CharacterizeRequest):
        return ops.characterize(req)

    @app.post("/forecast", response_model=schemas.ForecastResponse)
    async def forecast(req: schemas.ForecastRequest):
        return ops.forecast(req)

    @app.post("/optimize", response_model=schemas.OptimizeResponse)
    async def optimize(req: schemas.OptimizeRequest):
        return ops.optimize(req)

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    async def simulate(req: schemas.SimulateRequest):
        return ops.simulate(req)

    @app.post("/compare", response_model=schemas.CompareResponse)
    async def compare(req: schemas.CompareRequest):
        return ops.compare(req)

    return app


app = create_app()
