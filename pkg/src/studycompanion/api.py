"""HTTP surface over the engine, consumed by the web client.

Read endpoints expose the same audit artifacts the CLI can print:
profile, assessment, last composed prompt. The only mutating path is
the chat endpoint; everything else is a view. Error bodies always have
the shape {"error": {"code", "message"}} and never carry stack traces
or provider keys.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .engine import Engine, UnknownSessionError
from .gateway import ConfigurationError, GatewayError
from .report import assess_profile


class OpenSessionBody(BaseModel):
    student_id: str


class MessageBody(BaseModel):
    text: str


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="study companion api", docs_url=None, redoc_url=None)

    @app.exception_handler(ValueError)
    async def handle_bad_request(request: Request, exc: ValueError):
        return _error(400, "bad_request", str(exc))

    @app.exception_handler(UnknownSessionError)
    async def handle_unknown_session(request: Request, exc: UnknownSessionError):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(GatewayError)
    async def handle_gateway(request: Request, exc: GatewayError):
        if isinstance(exc, ConfigurationError):
            message = f"{exc}; configure the key and retry"
        else:
            message = f"{exc}; the provider may be temporarily down, retry shortly"
        return _error(502, "provider_unavailable", message)

    @app.exception_handler(Exception)
    async def handle_internal(request: Request, exc: Exception):
        return _error(500, "internal", "internal error")

    @app.get("/health")
    def health():
        return {"status": "ok", "provider": engine.config.provider}

    @app.post("/sessions")
    def open_session(body: OpenSessionBody):
        session = engine.open_session(body.student_id)
        return {
            "session_id": session.session_id,
            "student_id": session.student_id,
            "started_at": session.started_at,
        }

    @app.post("/sessions/{session_id}/messages")
    def send_message(session_id: str, body: MessageBody):
        session = engine.get_session(session_id)
        result = engine.handle_turn(session, body.text)
        return {
            "reply": result.reply,
            "category": result.category.value,
            "fired_rules": list(result.strategy.fired),
            "strategy_block": result.strategy.rendered,
            "profile_delta": [entry.to_doc() for entry in result.delta],
        }

    @app.post("/sessions/{session_id}/close")
    def close_session(session_id: str):
        session = engine.get_session(session_id)
        record = engine.close_session(session)
        return {"closed": True, "summary": record.content}

    @app.get("/sessions/{session_id}/prompt")
    def last_prompt(session_id: str):
        session = engine.get_session(session_id)
        bundle = session.last_prompt
        if bundle is None:
            return {"system_prompt": None, "sections": []}
        return {
            "system_prompt": bundle.system_prompt,
            "sections": [[name, text] for name, text in bundle.sections],
        }

    @app.get("/learners/{student_id}/profile")
    def learner_profile(student_id: str):
        profile = engine.store.load_profile(student_id)
        if profile is None:
            return _error(404, "not_found", f"no profile for {student_id!r}")
        return profile.to_doc()

    @app.get("/learners/{student_id}/assessment")
    def learner_assessment(student_id: str):
        profile = engine.store.load_profile(student_id)
        if profile is None:
            return _error(404, "not_found", f"no profile for {student_id!r}")
        report = assess_profile(profile, session_saturation=engine.config.session_saturation)
        return report.to_doc()

    return app
