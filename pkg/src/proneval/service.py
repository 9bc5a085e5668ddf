"""HTTP facade over the triage queue for the annotator UI and scripts.

JSON over HTTP/1.1 with canonical field ordering; no authentication, the
annotator identity travels as a plain request field.  Every non-success
response body is a single ``{"code", "message"}`` error object.
"""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict

from . import __version__
from .corpus import PronounCategory, Verdict
from .errors import ConflictError, InputError, NotFoundError
from .triage import (
    DisagreementLabel,
    Judgment,
    ReviewItem,
    ReviewStatus,
    TriageState,
    TriageStore,
    final_report,
    render_report_json,
)


def item_payload(item: ReviewItem) -> dict:
    return {
        "item_id": item.item_id,
        "pronoun_id": item.pronoun_id,
        "system_name": item.system_name,
        "category": item.category.value,
        "apt_case": int(item.apt_case),
        "status": item.status.value,
        "revision": item.revision,
        "context": item.context,
        "judgments": [
            {
                "annotator": j.annotator,
                "pronoun_verdict": j.pronoun_verdict.value,
                "antecedent_verdict": j.antecedent_verdict.value if j.antecedent_verdict else None,
                "disagreement_label": j.disagreement_label.value if j.disagreement_label else None,
                "timestamp": j.timestamp,
            }
            for _, j in sorted(item.judgments.items())
        ],
    }


def progress_payload(state: TriageState) -> dict:
    def bucket() -> dict:
        return {"total": 0, "auto_accepted": 0, "pending": 0, "judged": 0}

    totals = bucket()
    by_category: dict[str, dict] = {}
    by_system: dict[str, dict] = {}
    for item in state.ordered():
        slot = {
            ReviewStatus.AUTO_ACCEPTED: "auto_accepted",
            ReviewStatus.PENDING: "pending",
            ReviewStatus.JUDGED: "judged",
        }[item.status]
        for cell in (
            totals,
            by_category.setdefault(item.category.value, bucket()),
            by_system.setdefault(item.system_name, bucket()),
        ):
            cell["total"] += 1
            cell[slot] += 1
    return {
        "total": totals["total"],
        "auto_accepted": totals["auto_accepted"],
        "pending": totals["pending"],
        "judged": totals["judged"],
        "by_category": dict(sorted(by_category.items())),
        "by_system": dict(sorted(by_system.items())),
    }


_VERDICTS = Literal["correct", "incorrect", "unable"]


class JudgmentBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    annotator: str
    pronoun_verdict: _VERDICTS
    antecedent_verdict: _VERDICTS | None = None
    disagreement_label: Literal["V", "E", "I", "O"] | None = None
    revision: int
    timestamp: str | None = None


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"code": code, "message": message}, status_code=status)


def create_app(store: TriageStore, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="pronoun review service", version=__version__)

    @app.exception_handler(NotFoundError)
    async def on_not_found(request: Request, exc: NotFoundError):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(ConflictError)
    async def on_conflict(request: Request, exc: ConflictError):
        return _error(409, "conflict", str(exc))

    @app.exception_handler(InputError)
    async def on_validation(request: Request, exc: InputError):
        return _error(422, "validation", str(exc))

    @app.exception_handler(RequestValidationError)
    async def on_request_validation(request: Request, exc: RequestValidationError):
        return _error(422, "validation", str(exc.errors()))

    @app.exception_handler(Exception)
    async def on_internal(request: Request, exc: Exception):
        return _error(500, "internal", str(exc))

    @app.get("/api/queue/next")
    def queue_next(
        annotator: str = Query(min_length=1),
        category: str | None = None,
        system: str | None = None,
    ):
        parsed_category = None
        if category is not None:
            try:
                parsed_category = PronounCategory(category)
            except ValueError:
                raise InputError(f"unknown category {category!r}") from None
        item = store.state.next_pending(annotator, parsed_category, system)
        if item is None:
            return Response(status_code=204)
        return JSONResponse(item_payload(item))

    @app.post("/api/items/{item_id}/judgment")
    def submit_judgment(item_id: str, body: JudgmentBody):
        item = store.state.by_item_id(item_id)
        judgment = Judgment(
            pronoun_id=item.pronoun_id,
            system_name=item.system_name,
            annotator=body.annotator,
            pronoun_verdict=Verdict(body.pronoun_verdict),
            antecedent_verdict=(
                Verdict(body.antecedent_verdict) if body.antecedent_verdict else None
            ),
            disagreement_label=(
                DisagreementLabel(body.disagreement_label) if body.disagreement_label else None
            ),
            revision=body.revision,
            timestamp=body.timestamp or _utc_now(),
        )
        updated = store.submit(judgment)
        return JSONResponse(item_payload(updated))

    @app.get("/api/progress")
    def progress():
        return JSONResponse(progress_payload(store.state))

    @app.get("/api/report")
    def report():
        body = render_report_json(final_report(store.state))
        return Response(content=body, media_type="application/json")

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(store: TriageStore, host: str = "127.0.0.1", port: int = 7878,
          ui_dir: str | Path | None = None) -> None:
    """Run the review service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(store, ui_dir), host=host, port=port, log_level="info")
