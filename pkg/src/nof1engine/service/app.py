"""HTTP surface over the engine. Device and aggregate modes expose disjoint routes."""

from __future__ import annotations

from pathlib import Path

from fastapi import Body, FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..errors import (
    BudgetExhaustedError,
    ConsentRequiredError,
    CorruptLogError,
    EngineError,
    NotFoundError,
    StateError,
    ValidationError,
)
from .engine import Engine

_STATUS = {
    ValidationError.code: 400,
    NotFoundError.code: 404,
    StateError.code: 409,
    BudgetExhaustedError.code: 403,
    ConsentRequiredError.code: 403,
    CorruptLogError.code: 500,
    EngineError.code: 500,
}


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="nof1engine", version="0.1.0")

    @app.exception_handler(EngineError)
    async def engine_error_handler(_request: Request, exc: EngineError):
        return JSONResponse(
            status_code=_STATUS.get(exc.code, 500),
            content={"code": exc.code, "message": exc.message, "field": exc.field},
        )

    @app.middleware("http")
    async def auth_stub(request: Request, call_next):
        # stub token check only, no real auth stack
        if engine.config.token and request.headers.get("x-auth-token") != engine.config.token:
            return JSONResponse(status_code=401, content={"code": "unauthorized", "message": "bad token"})
        return await call_next(request)

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "mode": engine.mode, "schema_version": "v1"}

    if engine.mode == "device":
        _device_routes(app, engine)
        static_dir = engine.config.static_dir
        if static_dir and Path(static_dir).is_dir():
            app.mount("/app", StaticFiles(directory=static_dir, html=True), name="app")
    else:
        _aggregate_routes(app, engine)
    return app


def _device_routes(app: FastAPI, engine: Engine) -> None:
    @app.post("/v1/patients")
    def register_patient(payload: dict = Body(...)):
        return engine.register_patient(payload)

    @app.post("/v1/candidates/rank")
    def rank(payload: dict = Body(...)):
        return engine.rank(payload)

    @app.post("/v1/trigger/decide")
    def trigger_decide(payload: dict = Body(...)):
        return engine.trigger_decide(payload)

    @app.post("/v1/trials")
    def create_trial(payload: dict = Body(...)):
        return engine.create_trial(payload)

    @app.get("/v1/trials/{trial_id}")
    def trial_summary(trial_id: str):
        return engine.trial_summary(trial_id)

    @app.get("/v1/trials/{trial_id}/assignment")
    def assignment(trial_id: str, day: int):
        return engine.assignment(trial_id, day)

    @app.post("/v1/trials/{trial_id}/outcomes")
    def ingest(trial_id: str, payload: dict = Body(...)):
        return engine.ingest(trial_id, payload)

    @app.get("/v1/trials/{trial_id}/posterior")
    def posterior(trial_id: str, carryover: bool = False):
        return engine.posterior(trial_id, carryover=carryover)

    @app.get("/v1/trials/{trial_id}/report")
    def report(trial_id: str):
        return engine.report(trial_id)

    @app.post("/v1/privacy/contribute")
    def contribute(payload: dict = Body(...)):
        return engine.contribute(payload)


def _aggregate_routes(app: FastAPI, engine: Engine) -> None:
    @app.post("/v1/aggregate/contributions")
    def accept_contribution(payload: dict = Body(...)):
        return engine.accept_contribution(payload)

    @app.get("/v1/aggregate/prior")
    def aggregate_prior():
        return engine.aggregate_prior()


def serve(engine: Engine) -> None:
    """Run the service until interrupted; state was replayed at engine construction."""
    import uvicorn

    uvicorn.run(create_app(engine), host=engine.config.host, port=engine.config.port, log_level="info")
