"""Blind-evaluation sessions: creation, persistence, rating, aggregation.

Sessions pair a reference image with candidate denoisings whose method
identity is hidden from the rater. Candidates are stored under opaque ids
and content-addressed image names, shown in a per-sample random order, and
un-blinded only during aggregation.

Persistence is two append-only newline-delimited JSON logs (sessions and
ratings) plus an image directory; replaying the logs reconstructs all
completion state, so a crash can lose at most a partial final line.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ..errors import (
    ConfigError,
    DataError,
    DuplicateRatingError,
    RatingValidationError,
    UnknownSessionError,
)

SCHEMA = "rating/v1"
IMAGE_ROUTE = "/images"
REFERENCE_FILENAME = "reference.png"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class RatingCandidate:
    candidate_id: str
    hidden_method_label: str
    image_ref: str  # content hash

    def to_dict(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "hidden_method_label": self.hidden_method_label,
            "image_ref": self.image_ref,
        }


@dataclass(frozen=True)
class RatingSample:
    sample_id: str
    reference_id: str
    candidates: tuple[RatingCandidate, ...]
    presentation_order: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.presentation_order) != list(range(len(self.candidates))):
            raise RatingValidationError(
                f"presentation_order must permute {len(self.candidates)} candidates"
            )

    def candidate_ids(self) -> set[str]:
        return {c.candidate_id for c in self.candidates}

    def presented(self) -> list[RatingCandidate]:
        return [self.candidates[i] for i in self.presentation_order]

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "reference_id": self.reference_id,
            "candidates": [c.to_dict() for c in self.candidates],
            "presentation_order": list(self.presentation_order),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RatingSample":
        return cls(
            sample_id=raw["sample_id"],
            reference_id=raw["reference_id"],
            candidates=tuple(RatingCandidate(**c) for c in raw["candidates"]),
            presentation_order=tuple(raw["presentation_order"]),
        )


@dataclass(frozen=True)
class RatingSession:
    session_id: str
    rater_id: str
    methods: tuple[str, ...]
    samples: tuple[RatingSample, ...]
    created_at: str = field(default_factory=_now)
    seed: int = 0

    def sample(self, sample_id: str) -> RatingSample:
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        raise RatingValidationError(f"unknown sample {sample_id!r}")

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "kind": "session",
            "session_id": self.session_id,
            "rater_id": self.rater_id,
            "methods": list(self.methods),
            "samples": [s.to_dict() for s in self.samples],
            "created_at": self.created_at,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RatingSession":
        return cls(
            session_id=raw["session_id"],
            rater_id=raw["rater_id"],
            methods=tuple(raw["methods"]),
            samples=tuple(RatingSample.from_dict(s) for s in raw["samples"]),
            created_at=raw["created_at"],
            seed=raw["seed"],
        )


@dataclass(frozen=True)
class RatingRecord:
    session_id: str
    sample_id: str
    rater_id: str
    ranking: tuple[str, ...]  # candidate ids, best similarity first
    submitted_at: str = field(default_factory=_now)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "kind": "rating",
            "session_id": self.session_id,
            "sample_id": self.sample_id,
            "rater_id": self.rater_id,
            "ranking": list(self.ranking),
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RatingRecord":
        return cls(
            session_id=raw["session_id"],
            sample_id=raw["sample_id"],
            rater_id=raw["rater_id"],
            ranking=tuple(raw["ranking"]),
            submitted_at=raw["submitted_at"],
        )


class RatingStore:
    """Append-only session/rating logs plus a content-addressed image dir."""

    def __init__(self, data_dir: str | os.PathLike):
        self.data_dir = Path(data_dir)
        self.images_dir = self.data_dir / "images"
        self.sessions_path = self.data_dir / "sessions.ndjson"
        self.ratings_path = self.data_dir / "ratings.ndjson"
        self.images_dir.mkdir(parents=True, exist_ok=True)

    # -- images ---------------------------------------------------------

    def add_image(self, src: str | os.PathLike) -> str:
        """Copy a file into the store under its content hash; returns the hash."""
        src = Path(src)
        try:
            payload = src.read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read image {src}: {exc}") from exc
        ref = hashlib.sha256(payload).hexdigest()
        dst = self.image_path(ref)
        if not dst.exists():
            shutil.copyfile(src, dst)
        return ref

    def image_path(self, ref: str) -> Path:
        return self.images_dir / f"{ref}.png"

    # -- log plumbing ----------------------------------------------------

    @staticmethod
    def _append(path: Path, record: dict) -> None:
        line = json.dumps(record, separators=(",", ":"))
        with open(path, "a") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    @staticmethod
    def _read_lines(path: Path) -> list[dict]:
        if not path.exists():
            return []
        with open(path) as fh:
            lines = [(n, ln.strip()) for n, ln in enumerate(fh, start=1) if ln.strip()]
        records = []
        for i, (n, line) in enumerate(lines):
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                # a torn final line is the expected crash artifact; anything
                # earlier means real corruption
                if i == len(lines) - 1:
                    break
                raise DataError(f"{path}:{n}: bad log line: {exc}") from exc
        return records

    # -- replayed state --------------------------------------------------

    def sessions(self) -> dict[str, RatingSession]:
        out: dict[str, RatingSession] = {}
        for raw in self._read_lines(self.sessions_path):
            session = RatingSession.from_dict(raw)
            out[session.session_id] = session
        return out

    def get_session(self, session_id: str) -> RatingSession:
        try:
            return self.sessions()[session_id]
        except KeyError:
            raise UnknownSessionError(f"unknown session {session_id!r}") from None

    def ratings(self) -> list[RatingRecord]:
        return [RatingRecord.from_dict(raw) for raw in self._read_lines(self.ratings_path)]

    def rated_sample_ids(self, session_id: str) -> set[str]:
        return {r.sample_id for r in self.ratings() if r.session_id == session_id}

    def pending_sample(self, session: RatingSession) -> RatingSample | None:
        """Earliest unrated sample in session order, or None when complete."""
        rated = self.rated_sample_ids(session.session_id)
        for sample in session.samples:
            if sample.sample_id not in rated:
                return sample
        return None

    def append_session(self, session: RatingSession) -> None:
        self._append(self.sessions_path, session.to_dict())

    def append_rating(self, record: RatingRecord) -> None:
        self._append(self.ratings_path, record.to_dict())


def draw_presentation_order(rng: np.random.Generator, n: int) -> tuple[int, ...]:
    """Uniform random permutation of candidate slots for one sample."""
    return tuple(int(i) for i in rng.permutation(n))


def create_session(
    store: RatingStore,
    dataset_dir: str | os.PathLike,
    methods: list[str],
    n_samples: int,
    rater_id: str,
    seed: int,
) -> RatingSession:
    """Build, persist, and return a blinded session.

    ``dataset_dir`` holds one directory per sample containing
    ``reference.png`` plus one ``<method>.png`` per candidate method.
    Candidate ids and per-sample presentation orders are drawn from a
    generator seeded with ``seed``, so re-creation is reproducible.
    """
    methods = list(methods)
    if not methods:
        raise ConfigError("need at least one method")
    if len(set(methods)) != len(methods):
        raise ConfigError(f"duplicate method names in {methods}")
    if n_samples < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}")
    dataset_dir = Path(dataset_dir)
    if not dataset_dir.is_dir():
        raise DataError(f"dataset directory {dataset_dir} does not exist")
    sample_dirs = sorted(p for p in dataset_dir.iterdir() if p.is_dir())
    if len(sample_dirs) < n_samples:
        raise DataError(
            f"dataset has {len(sample_dirs)} samples, need {n_samples}"
        )

    rng = np.random.default_rng(seed)
    samples = []
    for sample_dir in sample_dirs[:n_samples]:
        reference = sample_dir / REFERENCE_FILENAME
        missing = [
            p.name
            for p in [reference] + [sample_dir / f"{m}.png" for m in methods]
            if not p.is_file()
        ]
        if missing:
            raise DataError(f"{sample_dir}: missing image(s): {', '.join(missing)}")
        candidates = tuple(
            RatingCandidate(
                candidate_id=rng.bytes(8).hex(),
                hidden_method_label=m,
                image_ref=store.add_image(sample_dir / f"{m}.png"),
            )
            for m in methods
        )
        samples.append(
            RatingSample(
                sample_id=sample_dir.name,
                reference_id=store.add_image(reference),
                candidates=candidates,
                presentation_order=draw_presentation_order(rng, len(candidates)),
            )
        )
    session = RatingSession(
        session_id=uuid.uuid4().hex,
        rater_id=rater_id,
        methods=tuple(methods),
        samples=tuple(samples),
        seed=seed,
    )
    store.append_session(session)
    return session


def session_summary(store: RatingStore, session: RatingSession) -> dict:
    """Blinded progress view of a session (no method identities)."""
    rated = store.rated_sample_ids(session.session_id)
    return {
        "schema": SCHEMA,
        "session_id": session.session_id,
        "rater_id": session.rater_id,
        "total": len(session.samples),
        "rated": len([s for s in session.samples if s.sample_id in rated]),
        "created_at": session.created_at,
    }


def next_sample_payload(store: RatingStore, session_id: str) -> dict:
    """Blinded payload for the earliest unrated sample, or a done-marker.

    Idempotent: repeated calls without an intervening rating return the
    same sample in the same order.
    """
    session = store.get_session(session_id)
    rated = store.rated_sample_ids(session_id)
    total = len(session.samples)
    pending = store.pending_sample(session)
    if pending is None:
        return {
            "schema": SCHEMA,
            "session_id": session_id,
            "done": True,
            "rated": total,
            "total": total,
        }
    index = [s.sample_id for s in session.samples].index(pending.sample_id)
    return {
        "schema": SCHEMA,
        "session_id": session_id,
        "done": False,
        "sample_id": pending.sample_id,
        "index": index,
        "rated": len(rated),
        "total": total,
        "reference": {"image": f"{IMAGE_ROUTE}/{pending.reference_id}"},
        "candidates": [
            {
                "candidate_id": c.candidate_id,
                "image": f"{IMAGE_ROUTE}/{c.image_ref}",
            }
            for c in pending.presented()
        ],
    }


def submit_rating(
    store: RatingStore, session_id: str, sample_id: str, ranking: list[str]
) -> RatingRecord:
    """Validate and append one rating for the currently pending sample."""
    session = store.get_session(session_id)
    sample = session.sample(sample_id)
    if sample_id in store.rated_sample_ids(session_id):
        raise DuplicateRatingError(f"sample {sample_id!r} is already rated")
    pending = store.pending_sample(session)
    if pending is None or pending.sample_id != sample_id:
        raise RatingValidationError(
            f"sample {sample_id!r} is not the pending sample"
        )
    ranking = list(ranking)
    if len(set(ranking)) != len(ranking) or set(ranking) != sample.candidate_ids():
        raise RatingValidationError(
            "ranking must be a permutation of the sample's candidate ids"
        )
    record = RatingRecord(
        session_id=session_id,
        sample_id=sample_id,
        rater_id=session.rater_id,
        ranking=tuple(ranking),
    )
    store.append_rating(record)
    return record


@dataclass(frozen=True)
class AggregateResult:
    """Un-blinded tallies: how often each method landed at each rank."""

    methods: tuple[str, ...]
    rank_counts: dict  # rater_id -> method -> list of counts per rank position
    first_place: dict  # method -> count of rank-0 placements
    completed: dict  # rater_id -> number of rated samples

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "methods": list(self.methods),
            "rank_counts": {
                rater: {m: list(counts) for m, counts in per.items()}
                for rater, per in self.rank_counts.items()
            },
            "first_place": dict(self.first_place),
            "completed": dict(self.completed),
        }


def aggregate_results(store: RatingStore, session_ids: list[str]) -> AggregateResult:
    """Tally rank positions per rater and method across sessions."""
    sessions = [store.get_session(sid) for sid in session_ids]
    methods: list[str] = []
    for session in sessions:
        for m in session.methods:
            if m not in methods:
                methods.append(m)
    n_positions = max((len(s.methods) for s in sessions), default=0)

    rank_counts: dict[str, dict[str, list[int]]] = {}
    first_place = {m: 0 for m in methods}
    completed: dict[str, int] = {}
    wanted = set(session_ids)
    by_id = {s.session_id: s for s in sessions}
    for record in store.ratings():
        if record.session_id not in wanted:
            continue
        session = by_id[record.session_id]
        labels = {
            c.candidate_id: c.hidden_method_label
            for c in session.sample(record.sample_id).candidates
        }
        per = rank_counts.setdefault(
            record.rater_id, {m: [0] * n_positions for m in methods}
        )
        for position, candidate_id in enumerate(record.ranking):
            method = labels[candidate_id]
            per[method][position] += 1
            if position == 0:
                first_place[method] += 1
        completed[record.rater_id] = completed.get(record.rater_id, 0) + 1
    return AggregateResult(
        methods=tuple(methods),
        rank_counts=rank_counts,
        first_place=first_place,
        completed=completed,
    )
