from __future__ import annotations

import random
import threading
import time

import pytest

from footscan.domain import FootSide
from footscan.errors import DuplicateJob, InvalidState, NotFound, UnknownPhoto
from footscan.jobs import JobQueue, JobState

from test_domain import result_with

L, R = FootSide.LEFT, FootSide.RIGHT


def add_photo(store, photo_id="photo-1"):
    store.store_photo(b"bytes", photo_id)
    return photo_id


class TestEnqueue:
    def test_first_job_gets_seq_1(self, store, queue):
        job = queue.enqueue("exam-1", L, add_photo(store))
        assert (job.seq, job.state) == (1, JobState.PENDING)

    def test_duplicate_live_job_rejected(self, store, queue):
        queue.enqueue("exam-1", L, add_photo(store))
        with pytest.raises(DuplicateJob):
            queue.enqueue("exam-1", L, "photo-1")

    def test_other_foot_is_not_a_duplicate(self, store, queue):
        add_photo(store, "p1")
        add_photo(store, "p2")
        queue.enqueue("exam-1", L, "p1")
        assert queue.enqueue("exam-1", R, "p2").seq == 2

    def test_unknown_photo(self, queue):
        with pytest.raises(UnknownPhoto):
            queue.enqueue("exam-1", L, "ghost")

    def test_seq_strictly_increasing(self, store, queue):
        seqs = []
        for i in range(3):
            add_photo(store, f"p{i}")
            seqs.append(queue.enqueue(f"exam-{i}", L, f"p{i}").seq)
        assert seqs == [1, 2, 3]


class TestClaim:
    def test_oldest_first(self, store, queue):
        for i in range(3):
            add_photo(store, f"p{i}")
            queue.enqueue(f"exam-{i}", L, f"p{i}")
        job = queue.claim_next("w1")
        assert job.seq == 1
        assert job.state is JobState.IN_PROGRESS
        assert job.attempts == 1
        assert job.worker_id == "w1"

    def test_empty_queue_returns_none(self, queue):
        assert queue.claim_next("w1") is None

    def test_two_workers_two_jobs_distinct(self, store, queue):
        for trial in range(30):
            ids = []
            for k in range(2):
                pid = f"p{trial}-{k}"
                add_photo(store, pid)
                ids.append(queue.enqueue(f"exam-{trial}-{k}", L, pid).job_id)
            grabbed = []
            barrier = threading.Barrier(2)

            def claim():
                barrier.wait()
                job = queue.claim_next("racer")
                grabbed.append(job.job_id)

            threads = [threading.Thread(target=claim) for _ in range(2)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            assert sorted(grabbed) == sorted(ids)
            for job_id in ids:
                queue.complete(job_id, result_with(job_id=job_id))

    def test_lease_expiry_reclaims(self, store):
        queue = JobQueue(store, lease_seconds=0.05)
        add_photo(store)
        queue.enqueue("exam-1", L, "photo-1")
        first = queue.claim_next("dying-worker")
        assert queue.claim_next("w2") is None  # lease still live
        time.sleep(0.08)
        reclaimed = queue.claim_next("w2")
        assert reclaimed is not None
        assert reclaimed.job_id == first.job_id
        assert reclaimed.attempts == 2


class TestCompleteAndFail:
    def test_complete(self, store, queue):
        queue.enqueue("exam-1", L, add_photo(store))
        job = queue.claim_next("w1")
        done = queue.complete(job.job_id, result_with(job_id=job.job_id))
        assert done.state is JobState.COMPLETE
        assert done.finished_at is not None
        assert done.result.job_id == job.job_id

    def test_complete_pending_rejected(self, store, queue):
        job = queue.enqueue("exam-1", L, add_photo(store))
        with pytest.raises(InvalidState):
            queue.complete(job.job_id, result_with(job_id=job.job_id))

    def test_complete_twice_rejected(self, store, queue):
        queue.enqueue("exam-1", L, add_photo(store))
        job = queue.claim_next("w1")
        queue.complete(job.job_id, result_with(job_id=job.job_id))
        with pytest.raises(InvalidState):
            queue.complete(job.job_id, result_with(job_id=job.job_id))

    def test_fail_requeues_below_max(self, store, queue):
        queue.enqueue("exam-1", L, add_photo(store))
        job = queue.claim_next("w1")
        back = queue.fail(job.job_id, "decode", max_attempts=3)
        assert back.state is JobState.PENDING
        assert back.seq == job.seq
        assert back.worker_id is None

    def test_fail_parks_at_max(self, store, queue):
        queue.enqueue("exam-1", L, add_photo(store))
        job_id = None
        for _ in range(3):
            job = queue.claim_next("w1")
            job_id = job.job_id
            parked = queue.fail(job_id, "decode", max_attempts=3)
        assert parked.state is JobState.FAILED
        assert parked.failure_reason == "decode"
        assert parked.attempts == 3

    def test_requeued_job_claims_before_younger(self, store, queue):
        for i in range(3):
            add_photo(store, f"p{i}")
            queue.enqueue(f"exam-{i}", L, f"p{i}")
        first = queue.claim_next("w1")
        queue.fail(first.job_id, "transient", max_attempts=3)
        again = queue.claim_next("w1")
        assert again.job_id == first.job_id  # seq preserved, oldest again

    def test_fail_non_in_progress_rejected(self, store, queue):
        job = queue.enqueue("exam-1", L, add_photo(store))
        with pytest.raises(InvalidState):
            queue.fail(job.job_id, "nope", max_attempts=3)


class TestStatsAndGet:
    def test_empty_all_zero(self, queue):
        stats = queue.stats()
        assert (stats.pending, stats.in_progress, stats.complete,
                stats.failed) == (0, 0, 0, 0)

    def test_counts_by_state(self, store, queue):
        for i in range(2):
            add_photo(store, f"p{i}")
            queue.enqueue(f"exam-{i}", L, f"p{i}")
        queue.claim_next("w1")
        stats = queue.stats()
        assert (stats.pending, stats.in_progress) == (1, 1)
        assert stats.total == 2

    def test_conservation_under_transitions(self, store, queue):
        rng = random.Random(99)
        total = 0
        for i in range(40):
            roll = rng.random()
            if roll < 0.5:
                pid = f"p{i}"
                add_photo(store, pid)
                queue.enqueue(f"exam-{i}", L, pid)
                total += 1
            elif roll < 0.8:
                job = queue.claim_next("w1")
                if job and rng.random() < 0.7:
                    queue.complete(job.job_id, result_with(job_id=job.job_id))
            else:
                job = queue.claim_next("w1")
                if job:
                    queue.fail(job.job_id, "x", max_attempts=1)
            assert queue.stats().total == total  # jobs are never deleted

    def test_get_unknown(self, queue):
        with pytest.raises(NotFound):
            queue.get("ghost")
