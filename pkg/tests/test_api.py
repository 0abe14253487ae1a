from __future__ import annotations

import base64

import pytest
from fastapi.testclient import TestClient

from footscan.api import create_app
from footscan.images import encode_png
from footscan.jobs import JobQueue
from footscan.store import Store
from footscan.synthetic import demo_png, red_square_demo_image, solid_image
from footscan.worker import InferenceWorker

AUTH = {"Authorization": "Bearer test-token"}


@pytest.fixture
def service(service_config):
    store = Store(service_config.store_config())
    queue = JobQueue(store, lease_seconds=service_config.lease_seconds)
    app = create_app(service_config, store=store, queue=queue)
    client = TestClient(app, raise_server_exceptions=False)
    worker = InferenceWorker("test-worker", store, queue)
    store.add_patient("P001")
    return client, store, queue, worker


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def open_exam(client) -> str:
    response = client.post("/api/v1/exams", json={"patient_id": "P001"},
                           headers=AUTH)
    assert response.status_code == 201
    return response.json()["exam_id"]


def put_details(client, exam_id, side="left", checked=True, count=1):
    return client.put(f"/api/v1/exams/{exam_id}/feet/{side}",
                      json={"checked": checked, "visible_ulcer_count": count},
                      headers=AUTH)


def upload(client, exam_id, side="left", png: bytes | None = None):
    payload = png if png is not None else encode_png(red_square_demo_image())
    return client.post(f"/api/v1/exams/{exam_id}/feet/{side}/photo",
                       json={"png_base64": b64(payload)}, headers=AUTH)


class TestStatus:
    def test_healthy_empty_system(self, service):
        client, *_ = service
        body = client.get("/api/v1/status").json()
        assert body["status"] == "ok"
        assert body["store_ok"] is True
        assert body["queue"] == {"pending": 0, "in_progress": 0,
                                 "complete": 0, "failed": 0}

    def test_degraded_when_store_down(self, service):
        client, store, *_ = service
        store.close()
        body = client.get("/api/v1/status").json()
        assert body["status"] == "degraded"
        assert body["store_ok"] is False

    def test_counts_pending_jobs(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        put_details(client, exam_id, "right")
        upload(client, exam_id, "left")
        upload(client, exam_id, "right")
        assert client.get("/api/v1/status").json()["queue"]["pending"] == 2

    def test_no_auth_required(self, service):
        client, *_ = service
        assert client.get("/api/v1/status").status_code == 200


class TestVersion:
    def test_at_minimum_is_compatible(self, service):
        client, *_ = service
        body = client.get("/api/v1/version", params={"client": "1.0.0"},
                          headers=AUTH).json()
        assert body == {"compatible": True, "min_supported": "1.0.0",
                        "current": "1.0.0"}

    def test_below_minimum(self, service):
        client, *_ = service
        body = client.get("/api/v1/version", params={"client": "0.9.9"},
                          headers=AUTH).json()
        assert body["compatible"] is False

    def test_malformed(self, service):
        client, *_ = service
        response = client.get("/api/v1/version", params={"client": "abc"},
                              headers=AUTH)
        assert response.status_code == 400
        assert response.json()["error_code"] == "MalformedVersion"

    def test_missing_param(self, service):
        client, *_ = service
        assert client.get("/api/v1/version", headers=AUTH).status_code == 400


class TestAuth:
    def test_missing_token_rejected(self, service):
        client, *_ = service
        response = client.post("/api/v1/exams", json={"patient_id": "P001"})
        assert response.status_code == 401
        assert response.json()["error_code"] == "Unauthorized"

    def test_wrong_token_rejected(self, service):
        client, *_ = service
        response = client.get("/api/v1/version", params={"client": "1.0.0"},
                              headers={"Authorization": "Bearer nope"})
        assert response.status_code == 401


class TestExams:
    def test_create(self, service):
        client, *_ = service
        assert open_exam(client)

    def test_unknown_patient(self, service):
        client, *_ = service
        response = client.post("/api/v1/exams", json={"patient_id": "ghost"},
                               headers=AUTH)
        assert response.status_code == 404
        assert response.json()["error_code"] == "UnknownPatient"

    def test_two_exams_distinct_ids(self, service):
        client, *_ = service
        assert open_exam(client) != open_exam(client)

    def test_get_exam_view(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        body = client.get(f"/api/v1/exams/{exam_id}", headers=AUTH).json()
        assert body["exam_id"] == exam_id
        assert body["state"] == "open"
        assert body["version"] == 1
        assert body["feet"] == {"left": None, "right": None}


class TestFootDetails:
    def test_valid_body(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        response = put_details(client, exam_id, "left", True, 1)
        assert response.status_code == 200
        assert response.json()["checked"] is True

    def test_checked_flip_after_photo_conflicts(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left", True, 1)
        upload(client, exam_id, "left")
        response = put_details(client, exam_id, "left", False, 1)
        assert response.status_code == 409
        assert response.json()["error_code"] == "CheckedLocked"

    def test_negative_count(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        response = put_details(client, exam_id, "left", True, -1)
        assert response.status_code == 400
        assert response.json()["error_code"] == "NegativeCount"

    def test_malformed_body(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        response = client.put(f"/api/v1/exams/{exam_id}/feet/left",
                              json={"checked": True}, headers=AUTH)
        assert response.status_code == 400
        assert response.json()["error_code"] == "ValidationError"

    def test_unknown_side(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        response = client.put(f"/api/v1/exams/{exam_id}/feet/middle",
                              json={"checked": True, "visible_ulcer_count": 0},
                              headers=AUTH)
        assert response.status_code == 404


class TestPhotoUpload:
    def test_first_upload_accepted(self, service):
        client, _, queue, _ = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        response = upload(client, exam_id, "left")
        assert response.status_code == 202
        body = response.json()
        assert queue.get(body["job_id"]).photo_id == body["photo_id"]

    def test_second_upload_conflicts_and_stores_nothing(self, service):
        client, store, queue, _ = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        upload(client, exam_id, "left")
        before = queue.stats().total
        response = upload(client, exam_id, "left")
        assert response.status_code == 409
        assert response.json()["error_code"] == "DuplicateUpload"
        assert queue.stats().total == before
        count = store.connection().execute(
            "SELECT COUNT(*) FROM photos").fetchone()[0]
        assert count == 1

    def test_missing_details_rejected(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        response = upload(client, exam_id, "left")
        assert response.status_code == 409
        assert response.json()["error_code"] == "NoFootDetails"

    def test_oversized_payload(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        big = encode_png(solid_image(40, 40, (1, 2, 3))) + b"\x00" * 200_001
        response = upload(client, exam_id, "left", png=big)
        assert response.status_code == 400
        assert response.json()["error_code"] == "TooLarge"

    def test_not_a_png(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        response = upload(client, exam_id, "left", png=b"JFIF garbage")
        assert response.status_code == 400
        assert response.json()["error_code"] == "BadImage"

    def test_invalid_base64(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        response = client.post(f"/api/v1/exams/{exam_id}/feet/left/photo",
                               json={"png_base64": "@@not base64@@"},
                               headers=AUTH)
        assert response.status_code == 400
        assert response.json()["error_code"] == "BadImage"


class TestJobPolling:
    def test_pending_state_only(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        job_id = upload(client, exam_id, "left").json()["job_id"]
        assert client.get(f"/api/v1/jobs/{job_id}", headers=AUTH).json() == \
            {"state": "pending"}

    def test_completed_red_square_detections(self, service):
        client, _, _, worker = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        job_id = upload(client, exam_id, "left").json()["job_id"]
        worker.run_once()
        body = client.get(f"/api/v1/jobs/{job_id}", headers=AUTH).json()
        assert body["state"] == "complete"
        assert body["detections"] == [{"left": 20, "top": 30, "width": 20,
                                       "height": 20, "confidence": 1.0}]

    def test_failed_reason(self, service):
        client, store, queue, worker = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        # corrupt PNG that still passes upload? it can't; corrupt it in store
        job_id = upload(client, exam_id, "left").json()["job_id"]
        photo_id = queue.get(job_id).photo_id
        with store.transaction() as conn:
            conn.execute("UPDATE photos SET inline_bytes = ? WHERE photo_id = ?",
                         (b"corrupted", photo_id))
        for _ in range(3):
            worker.run_once()
        body = client.get(f"/api/v1/jobs/{job_id}", headers=AUTH).json()
        assert body == {"state": "failed", "failure_reason": "decode"}

    def test_unknown_job(self, service):
        client, *_ = service
        assert client.get("/api/v1/jobs/ghost", headers=AUTH).status_code == 404


class TestConfirmationAndComplete:
    def full_left_foot(self, client, worker, exam_id):
        put_details(client, exam_id, "left")
        job_id = upload(client, exam_id, "left").json()["job_id"]
        worker.run_once()
        return job_id

    def test_confirmation_after_result(self, service):
        client, _, _, worker = service
        exam_id = open_exam(client)
        self.full_left_foot(client, worker, exam_id)
        response = client.post(
            f"/api/v1/exams/{exam_id}/feet/left/confirmation",
            json={"agrees": True}, headers=AUTH)
        assert response.status_code == 200
        assert response.json()["confirmation"]["agrees"] is True

    def test_confirmation_before_result(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        response = client.post(
            f"/api/v1/exams/{exam_id}/feet/left/confirmation",
            json={"agrees": True}, headers=AUTH)
        assert response.status_code == 409
        assert response.json()["error_code"] == "NoResult"

    def test_duplicate_confirmation(self, service):
        client, _, _, worker = service
        exam_id = open_exam(client)
        self.full_left_foot(client, worker, exam_id)
        url = f"/api/v1/exams/{exam_id}/feet/left/confirmation"
        client.post(url, json={"agrees": True}, headers=AUTH)
        response = client.post(url, json={"agrees": False}, headers=AUTH)
        assert response.status_code == 409
        assert response.json()["error_code"] == "DuplicateConfirmation"

    def test_complete_happy_path(self, service):
        client, _, _, worker = service
        exam_id = open_exam(client)
        self.full_left_foot(client, worker, exam_id)
        client.post(f"/api/v1/exams/{exam_id}/feet/left/confirmation",
                    json={"agrees": True}, headers=AUTH)
        response = client.post(f"/api/v1/exams/{exam_id}/complete", headers=AUTH)
        assert response.status_code == 200
        assert response.json()["state"] == "completed"

    def test_complete_with_pending_inference(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        upload(client, exam_id, "left")
        response = client.post(f"/api/v1/exams/{exam_id}/complete", headers=AUTH)
        assert response.status_code == 409
        assert response.json()["error_code"] == "PendingInference"

    def test_complete_empty_exam(self, service):
        client, *_ = service
        exam_id = open_exam(client)
        response = client.post(f"/api/v1/exams/{exam_id}/complete", headers=AUTH)
        assert response.status_code == 409
        assert response.json()["error_code"] == "NothingRecorded"


class TestErrorBodies:
    def test_error_body_shape_everywhere(self, service):
        client, *_ = service
        cases = [
            client.post("/api/v1/exams", json={"patient_id": "ghost"},
                        headers=AUTH),
            client.get("/api/v1/jobs/ghost", headers=AUTH),
            client.get("/api/v1/version", params={"client": "zzz"},
                       headers=AUTH),
            client.post("/api/v1/exams", json={}, headers=AUTH),
            client.post("/api/v1/exams", json={"patient_id": "P001"}),
        ]
        for response in cases:
            body = response.json()
            assert set(body) == {"error_code", "message"}, body

    def test_demo_png_size_upload(self, service):
        # exactly the deployment's average upload size
        client, _, queue, _ = service
        exam_id = open_exam(client)
        put_details(client, exam_id, "left")
        png = demo_png()
        assert len(png) == 61_440
        assert upload(client, exam_id, "left", png=png).status_code == 202
