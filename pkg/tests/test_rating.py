"""Tests for the blind rating store and its HTTP service."""

import itertools
import json
import shutil

import numpy as np
import pytest
from fastapi.testclient import TestClient

from despeckle.data import BScan, Domain, save_bscan
from despeckle.errors import (
    ConfigError,
    DataError,
    DuplicateRatingError,
    RatingValidationError,
    UnknownSessionError,
)
from despeckle.rating import (
    RatingStore,
    aggregate_results,
    build_app,
    create_session,
    draw_presentation_order,
    next_sample_payload,
    submit_rating,
)

METHODS = ["ours", "bm3d", "wavelet"]


def write_image(path, value):
    path.parent.mkdir(parents=True, exist_ok=True)
    save_bscan(path, BScan(np.full((8, 8), value), Domain.LOW_NOISE, ""))


def make_dataset(root, n_samples=3, methods=METHODS):
    """One directory per sample: reference.png plus <method>.png each."""
    for i in range(n_samples):
        d = root / f"sample_{i:03d}"
        write_image(d / "reference.png", 0.05 + 0.02 * i)
        for j, m in enumerate(methods):
            write_image(d / f"{m}.png", 0.3 + 0.02 * i + 0.1 * j)
    return root


def assert_blinded(payload: bytes, methods=METHODS):
    low = payload.lower()
    for m in methods:
        assert m.encode() not in low, f"method name {m!r} leaked into payload"


@pytest.fixture
def store(tmp_path):
    return RatingStore(tmp_path / "rating-data")


@pytest.fixture
def dataset(tmp_path):
    return make_dataset(tmp_path / "dataset")


class TestCreateSession:
    def test_structure(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=5)
        assert len(session.samples) == 3
        assert session.methods == tuple(METHODS)
        for sample in session.samples:
            assert len(sample.candidates) == 3
            assert sorted(sample.presentation_order) == [0, 1, 2]
            labels = [c.hidden_method_label for c in sample.candidates]
            assert labels == METHODS
            assert len(sample.candidate_ids()) == 3
        assert len(store.sessions()) == 1

    def test_many_samples_three_candidates_each(self, store, tmp_path):
        # one fixed image set reused across samples; content addressing
        # collapses them to four stored files
        root = tmp_path / "big"
        src = tmp_path / "src"
        write_image(src / "reference.png", 0.1)
        for j, m in enumerate(METHODS):
            write_image(src / f"{m}.png", 0.3 + 0.1 * j)
        for i in range(150):
            d = root / f"sample_{i:03d}"
            d.mkdir(parents=True)
            for name in ["reference.png"] + [f"{m}.png" for m in METHODS]:
                shutil.copyfile(src / name, d / name)
        session = create_session(store, root, METHODS, 150, "expert-1", seed=0)
        assert len(session.samples) == 150
        assert all(len(s.candidates) == 3 for s in session.samples)
        assert len(list(store.images_dir.iterdir())) == 4

    def test_seed_reproduces_orders_and_ids(self, store, dataset, tmp_path):
        a = create_session(store, dataset, METHODS, 3, "expert-1", seed=42)
        other = RatingStore(tmp_path / "other-data")
        b = create_session(other, dataset, METHODS, 3, "expert-1", seed=42)
        assert [s.presentation_order for s in a.samples] == [
            s.presentation_order for s in b.samples
        ]
        assert [[c.candidate_id for c in s.candidates] for s in a.samples] == [
            [c.candidate_id for c in s.candidates] for s in b.samples
        ]
        assert a.session_id != b.session_id

    def test_content_addressed_images_deduplicated(self, store, tmp_path):
        root = tmp_path / "dup"
        make_dataset(root, n_samples=2)
        # make sample_001's reference byte-identical to sample_000's
        shutil.copyfile(root / "sample_000/reference.png", root / "sample_001/reference.png")
        create_session(store, root, METHODS, 2, "expert-1", seed=1)
        # 2 samples x 4 files with one duplicate pair -> 7 unique images
        assert len(list(store.images_dir.iterdir())) == 7

    def test_missing_candidate_image(self, store, dataset):
        (dataset / "sample_001" / "bm3d.png").unlink()
        with pytest.raises(DataError, match="bm3d.png"):
            create_session(store, dataset, METHODS, 3, "expert-1", seed=0)

    def test_too_few_samples(self, store, dataset):
        with pytest.raises(DataError, match="need 5"):
            create_session(store, dataset, METHODS, 5, "expert-1", seed=0)

    def test_missing_dataset_dir(self, store, tmp_path):
        with pytest.raises(DataError, match="does not exist"):
            create_session(store, tmp_path / "nope", METHODS, 1, "expert-1", seed=0)

    @pytest.mark.parametrize(
        "methods,n",
        [([], 1), (["ours", "ours"], 1), (METHODS, 0)],
    )
    def test_bad_arguments(self, store, dataset, methods, n):
        with pytest.raises(ConfigError):
            create_session(store, dataset, methods, n, "expert-1", seed=0)


class TestNextAndSubmit:
    def test_fresh_session_starts_at_index_zero(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=2)
        payload = next_sample_payload(store, session.session_id)
        assert payload["done"] is False
        assert payload["index"] == 0
        assert payload["rated"] == 0
        assert payload["total"] == 3
        assert payload["sample_id"] == session.samples[0].sample_id
        assert len(payload["candidates"]) == 3

    def test_idempotent_until_submission(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=2)
        first = next_sample_payload(store, session.session_id)
        second = next_sample_payload(store, session.session_id)
        assert first == second

    def test_candidates_follow_presentation_order(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=9)
        payload = next_sample_payload(store, session.session_id)
        sample = session.samples[0]
        expected = [sample.candidates[i].candidate_id for i in sample.presentation_order]
        assert [c["candidate_id"] for c in payload["candidates"]] == expected

    def test_submission_advances_to_done(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=3)
        for k in range(3):
            payload = next_sample_payload(store, session.session_id)
            assert payload["index"] == k
            ranking = [c["candidate_id"] for c in payload["candidates"]]
            submit_rating(store, session.session_id, payload["sample_id"], ranking)
        final = next_sample_payload(store, session.session_id)
        assert final == {
            "schema": "rating/v1",
            "session_id": session.session_id,
            "done": True,
            "rated": 3,
            "total": 3,
        }

    def test_unknown_session(self, store):
        with pytest.raises(UnknownSessionError):
            next_sample_payload(store, "nope")
        with pytest.raises(UnknownSessionError):
            submit_rating(store, "nope", "sample_000", ["a"])

    def test_ranking_with_repeats_rejected(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=4)
        payload = next_sample_payload(store, session.session_id)
        ids = [c["candidate_id"] for c in payload["candidates"]]
        with pytest.raises(RatingValidationError, match="permutation"):
            submit_rating(
                store, session.session_id, payload["sample_id"], [ids[0], ids[0], ids[1]]
            )

    def test_foreign_candidate_ids_rejected(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=4)
        payload = next_sample_payload(store, session.session_id)
        with pytest.raises(RatingValidationError, match="permutation"):
            submit_rating(
                store, session.session_id, payload["sample_id"], ["x", "y", "z"]
            )

    def test_incomplete_ranking_rejected(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=4)
        payload = next_sample_payload(store, session.session_id)
        ids = [c["candidate_id"] for c in payload["candidates"]]
        with pytest.raises(RatingValidationError, match="permutation"):
            submit_rating(store, session.session_id, payload["sample_id"], ids[:2])

    def test_duplicate_submission_conflicts(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=4)
        payload = next_sample_payload(store, session.session_id)
        ids = [c["candidate_id"] for c in payload["candidates"]]
        submit_rating(store, session.session_id, payload["sample_id"], ids)
        with pytest.raises(DuplicateRatingError):
            submit_rating(store, session.session_id, payload["sample_id"], ids)

    def test_out_of_order_submission_rejected(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=4)
        future = session.samples[2]
        ids = [c.candidate_id for c in future.candidates]
        with pytest.raises(RatingValidationError, match="pending"):
            submit_rating(store, session.session_id, future.sample_id, ids)


class TestBlinding:
    def test_payloads_never_name_methods(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=6)
        while True:
            payload = next_sample_payload(store, session.session_id)
            assert_blinded(json.dumps(payload).encode())
            if payload["done"]:
                break
            ranking = [c["candidate_id"] for c in payload["candidates"]]
            submit_rating(store, session.session_id, payload["sample_id"], ranking)


class TestPermutationFairness:
    def test_all_orders_near_uniform(self):
        rng = np.random.default_rng(123)
        counts = {p: 0 for p in itertools.permutations(range(3))}
        n = 10_000
        for _ in range(n):
            counts[draw_presentation_order(rng, 3)] += 1
        assert len(counts) == 6
        for order, count in counts.items():
            assert abs(count / n - 1 / 6) <= 0.02, (order, count)


class TestPersistence:
    def test_append_only_log_growth(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=7)
        sessions_before = store.sessions_path.read_bytes()
        ratings_before = store.ratings_path.read_bytes() if store.ratings_path.exists() else b""
        payload = next_sample_payload(store, session.session_id)
        ids = [c["candidate_id"] for c in payload["candidates"]]
        submit_rating(store, session.session_id, payload["sample_id"], ids)
        assert store.sessions_path.read_bytes() == sessions_before
        ratings_after = store.ratings_path.read_bytes()
        assert ratings_after.startswith(ratings_before)
        assert ratings_after.count(b"\n") == ratings_before.count(b"\n") + 1

    def test_replay_reconstructs_completion(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=7)
        payload = next_sample_payload(store, session.session_id)
        ids = [c["candidate_id"] for c in payload["candidates"]]
        submit_rating(store, session.session_id, payload["sample_id"], ids)

        replayed = RatingStore(store.data_dir)
        payload2 = next_sample_payload(replayed, session.session_id)
        assert payload2["rated"] == 1
        assert payload2["sample_id"] == session.samples[1].sample_id

    def test_torn_final_line_tolerated(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=7)
        payload = next_sample_payload(store, session.session_id)
        ids = [c["candidate_id"] for c in payload["candidates"]]
        submit_rating(store, session.session_id, payload["sample_id"], ids)
        with open(store.ratings_path, "a") as fh:
            fh.write('{"schema": "rating/')  # simulated crash mid-append
        replayed = RatingStore(store.data_dir)
        assert len(replayed.ratings()) == 1
        assert next_sample_payload(replayed, session.session_id)["rated"] == 1

    def test_mid_log_corruption_raises(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=7)
        for _ in range(2):
            payload = next_sample_payload(store, session.session_id)
            ids = [c["candidate_id"] for c in payload["candidates"]]
            submit_rating(store, session.session_id, payload["sample_id"], ids)
        lines = store.ratings_path.read_text().splitlines()
        store.ratings_path.write_text(lines[0] + "\ngarbage\n" + lines[1] + "\n")
        with pytest.raises(DataError, match="bad log line"):
            RatingStore(store.data_dir).ratings()


def rate_full_session(store, session, choose):
    """Rate every sample; ``choose(sample)`` returns the ranking to submit."""
    for sample in session.samples:
        submit_rating(store, session.session_id, sample.sample_id, choose(sample))


def ranking_by_label(sample, label_order):
    by_label = {c.hidden_method_label: c.candidate_id for c in sample.candidates}
    return [by_label[m] for m in label_order]


class TestAggregation:
    def test_single_first_place(self, store, dataset):
        session = create_session(store, dataset, METHODS, 1, "expert-1", seed=8)
        rate_full_session(
            store, session, lambda s: ranking_by_label(s, ["ours", "bm3d", "wavelet"])
        )
        result = aggregate_results(store, [session.session_id])
        assert result.first_place["ours"] == 1
        assert result.first_place["bm3d"] == 0
        assert result.rank_counts["expert-1"]["ours"] == [1, 0, 0]
        assert result.rank_counts["expert-1"]["bm3d"] == [0, 1, 0]
        assert result.rank_counts["expert-1"]["wavelet"] == [0, 0, 1]
        assert result.completed == {"expert-1": 1}

    def test_counts_sum_to_completed(self, store, dataset):
        session = create_session(store, dataset, METHODS, 3, "expert-1", seed=9)
        orders = [
            ["ours", "bm3d", "wavelet"],
            ["bm3d", "ours", "wavelet"],
            ["wavelet", "ours", "bm3d"],
        ]
        it = iter(orders)
        rate_full_session(store, session, lambda s: ranking_by_label(s, next(it)))
        result = aggregate_results(store, [session.session_id])
        per = result.rank_counts["expert-1"]
        for position in range(3):
            assert sum(per[m][position] for m in METHODS) == result.completed["expert-1"]

    def test_disjoint_aggregation_is_additive(self, store, dataset):
        s1 = create_session(store, dataset, METHODS, 2, "expert-1", seed=10)
        s2 = create_session(store, dataset, METHODS, 2, "expert-2", seed=11)
        rate_full_session(
            store, s1, lambda s: ranking_by_label(s, ["ours", "bm3d", "wavelet"])
        )
        rate_full_session(
            store, s2, lambda s: ranking_by_label(s, ["bm3d", "wavelet", "ours"])
        )
        a = aggregate_results(store, [s1.session_id])
        b = aggregate_results(store, [s2.session_id])
        both = aggregate_results(store, [s1.session_id, s2.session_id])
        for m in METHODS:
            assert both.first_place[m] == a.first_place[m] + b.first_place[m]
        assert both.rank_counts["expert-1"] == a.rank_counts["expert-1"]
        assert both.rank_counts["expert-2"] == b.rank_counts["expert-2"]
        assert both.completed == {"expert-1": 2, "expert-2": 2}

    def test_unknown_session_rejected(self, store):
        with pytest.raises(UnknownSessionError):
            aggregate_results(store, ["missing"])


@pytest.fixture
def client(tmp_path):
    return TestClient(build_app(tmp_path / "service-data"))


def create_via_http(client, dataset, n_samples=3, rater="expert-1", seed=0):
    response = client.post(
        "/sessions",
        json={
            "schema": "rating/v1",
            "dataset": str(dataset),
            "methods": METHODS,
            "n_samples": n_samples,
            "rater_id": rater,
            "seed": seed,
        },
    )
    assert response.status_code == 200, response.text
    return response


class TestService:
    def test_session_flow_stays_blinded(self, client, dataset):
        created = create_via_http(client, dataset)
        assert_blinded(created.content)
        session_id = created.json()["session_id"]
        submissions = 0
        while True:
            nxt = client.get(f"/sessions/{session_id}/next")
            assert nxt.status_code == 200
            assert_blinded(nxt.content)
            payload = nxt.json()
            if payload["done"]:
                break
            ranking = [c["candidate_id"] for c in payload["candidates"]]
            ack = client.post(
                f"/sessions/{session_id}/ratings",
                json={
                    "schema": "rating/v1",
                    "sample_id": payload["sample_id"],
                    "ranking": ranking,
                },
            )
            assert ack.status_code == 200
            assert_blinded(ack.content)
            assert ack.json()["accepted"] is True
            submissions += 1
        assert submissions == 3

    def test_images_served_by_content_hash(self, client, dataset):
        created = create_via_http(client, dataset)
        session_id = created.json()["session_id"]
        payload = client.get(f"/sessions/{session_id}/next").json()
        url = payload["reference"]["image"]
        response = client.get(url)
        assert response.status_code == 200
        assert response.headers["content-type"] == "image/png"
        expected = (dataset / "sample_000" / "reference.png").read_bytes()
        assert response.content == expected

    @pytest.mark.parametrize(
        "path",
        ["/images/deadbeef", "/images/" + "0" * 64, "/images/..%2F..%2Fetc%2Fpasswd"],
    )
    def test_bad_image_refs_404(self, client, path):
        assert client.get(path).status_code == 404

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope/next").status_code == 404

    def test_wrong_schema_version_400(self, client, dataset):
        response = client.post(
            "/sessions",
            json={
                "schema": "rating/v99",
                "dataset": str(dataset),
                "methods": METHODS,
                "n_samples": 1,
                "rater_id": "expert-1",
                "seed": 0,
            },
        )
        assert response.status_code == 400
        assert "schema" in response.json()["detail"]

    def test_missing_dataset_400(self, client, tmp_path):
        response = client.post(
            "/sessions",
            json={
                "schema": "rating/v1",
                "dataset": str(tmp_path / "absent"),
                "methods": METHODS,
                "n_samples": 1,
                "rater_id": "expert-1",
                "seed": 0,
            },
        )
        assert response.status_code == 400

    def test_duplicate_rating_409_and_bad_ranking_400(self, client, dataset):
        session_id = create_via_http(client, dataset).json()["session_id"]
        payload = client.get(f"/sessions/{session_id}/next").json()
        ranking = [c["candidate_id"] for c in payload["candidates"]]
        bad = client.post(
            f"/sessions/{session_id}/ratings",
            json={
                "schema": "rating/v1",
                "sample_id": payload["sample_id"],
                "ranking": ranking[:1],
            },
        )
        assert bad.status_code == 400
        ok = client.post(
            f"/sessions/{session_id}/ratings",
            json={
                "schema": "rating/v1",
                "sample_id": payload["sample_id"],
                "ranking": ranking,
            },
        )
        assert ok.status_code == 200
        dup = client.post(
            f"/sessions/{session_id}/ratings",
            json={
                "schema": "rating/v1",
                "sample_id": payload["sample_id"],
                "ranking": ranking,
            },
        )
        assert dup.status_code == 409

    def test_results_endpoint_unblinds_totals(self, client, dataset):
        session_id = create_via_http(client, dataset).json()["session_id"]
        while True:
            payload = client.get(f"/sessions/{session_id}/next").json()
            if payload["done"]:
                break
            client.post(
                f"/sessions/{session_id}/ratings",
                json={
                    "schema": "rating/v1",
                    "sample_id": payload["sample_id"],
                    "ranking": [c["candidate_id"] for c in payload["candidates"]],
                },
            )
        result = client.get(f"/results?sessions={session_id}")
        assert result.status_code == 200
        body = result.json()
        assert set(body["methods"]) == set(METHODS)
        assert sum(body["first_place"].values()) == 3
        assert body["completed"] == {"expert-1": 3}

    def test_results_requires_ids(self, client):
        assert client.get("/results").status_code == 400
        assert client.get("/results?sessions=missing").status_code == 404
