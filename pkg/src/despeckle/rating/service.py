"""HTTP front for the rating store.

Small fixed JSON route set over one data directory. Everything served to
the rating UI is blinded; method identities appear only in the results
endpoint, which the UI shows after rating is complete. Log writes are
serialized through a single lock; reads replay the append-only logs.
"""

from __future__ import annotations

import os
import re
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field

from ..errors import (
    ConfigError,
    DataError,
    DuplicateRatingError,
    RatingValidationError,
    UnknownSessionError,
)
from .store import (
    SCHEMA,
    RatingStore,
    aggregate_results,
    create_session,
    next_sample_payload,
    session_summary,
    submit_rating,
)

_HASH_RE = re.compile(r"^[0-9a-f]{64}$")


class CreateSessionRequest(BaseModel):
    schema_: str = Field(alias="schema")
    dataset: str
    methods: list[str]
    n_samples: int
    rater_id: str
    seed: int = 0


class SubmitRatingRequest(BaseModel):
    schema_: str = Field(alias="schema")
    sample_id: str
    ranking: list[str]


def _check_schema(value: str) -> None:
    if value != SCHEMA:
        raise HTTPException(
            status_code=400, detail=f"unsupported schema {value!r}, expected {SCHEMA!r}"
        )


def build_app(data_dir: str | os.PathLike) -> FastAPI:
    store = RatingStore(data_dir)
    write_lock = threading.Lock()
    app = FastAPI(title="despeckle rating service")

    @app.post("/sessions")
    def post_session(body: CreateSessionRequest) -> dict:
        _check_schema(body.schema_)
        try:
            with write_lock:
                session = create_session(
                    store,
                    dataset_dir=body.dataset,
                    methods=body.methods,
                    n_samples=body.n_samples,
                    rater_id=body.rater_id,
                    seed=body.seed,
                )
        except (ConfigError, DataError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return session_summary(store, session)

    @app.get("/sessions/{session_id}/next")
    def get_next(session_id: str) -> dict:
        try:
            return next_sample_payload(store, session_id)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.post("/sessions/{session_id}/ratings")
    def post_rating(session_id: str, body: SubmitRatingRequest) -> dict:
        _check_schema(body.schema_)
        try:
            with write_lock:
                record = submit_rating(store, session_id, body.sample_id, body.ranking)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except DuplicateRatingError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except RatingValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        follow_up = next_sample_payload(store, session_id)
        return {
            "schema": SCHEMA,
            "accepted": True,
            "sample_id": record.sample_id,
            "rated": follow_up["rated"] if not follow_up["done"] else follow_up["total"],
            "total": follow_up["total"],
            "done": follow_up["done"],
        }

    @app.get("/results")
    def get_results(sessions: str = "") -> dict:
        ids = [s for s in sessions.split(",") if s]
        if not ids:
            raise HTTPException(status_code=400, detail="pass ?sessions=id1,id2,...")
        try:
            return aggregate_results(store, ids).to_dict()
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get("/images/{content_hash}")
    def get_image(content_hash: str) -> FileResponse:
        if not _HASH_RE.match(content_hash):
            raise HTTPException(status_code=404, detail="no such image")
        path: Path = store.image_path(content_hash)
        if not path.is_file():
            raise HTTPException(status_code=404, detail="no such image")
        return FileResponse(path, media_type="image/png")

    return app
