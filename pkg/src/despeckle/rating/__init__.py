"""Blind expert-rating backend: persistent sessions and the HTTP service."""

from .service import build_app
from .store import (
    IMAGE_ROUTE,
    REFERENCE_FILENAME,
    SCHEMA,
    AggregateResult,
    RatingCandidate,
    RatingRecord,
    RatingSample,
    RatingSession,
    RatingStore,
    aggregate_results,
    create_session,
    draw_presentation_order,
    next_sample_payload,
    session_summary,
    submit_rating,
)

__all__ = [
    "IMAGE_ROUTE",
    "REFERENCE_FILENAME",
    "SCHEMA",
    "AggregateResult",
    "RatingCandidate",
    "RatingRecord",
    "RatingSample",
    "RatingSession",
    "RatingStore",
    "aggregate_results",
    "build_app",
    "create_session",
    "draw_presentation_order",
    "next_sample_payload",
    "session_summary",
    "submit_rating",
]
