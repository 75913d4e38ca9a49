from __future__ import annotations

import asyncio
import threading
import time

import pytest

from regnorm.runner import BlockExecutor


class _Tracker:
    def __init__(self) -> None:
        self.lock = threading.Lock()
        self.active = 0
        self.peak = 0

    def __call__(self, index: int) -> int:
        with self.lock:
            self.active += 1
            self.peak = max(self.peak, self.active)
        time.sleep(0.01)
        with self.lock:
            self.active -= 1
        return index * index


@pytest.mark.parametrize("workers", [1, 2, 4])
def test_never_exceeds_worker_count(workers):
    tracker = _Tracker()
    out = BlockExecutor(workers).run(tracker, range(12))
    assert out == [i * i for i in range(12)]
    assert 1 <= tracker.peak <= workers
    assert tracker.active == 0


def test_results_follow_submission_order():
    def slow_first(index: int) -> int:
        time.sleep(0.02 if index == 0 else 0.0)
        return index

    assert BlockExecutor(4).run(slow_first, [0, 1, 2, 3]) == [0, 1, 2, 3]


def test_runs_inline_inside_an_event_loop():
    async def main():
        return BlockExecutor(3).run(lambda i: i + 1, range(3))

    assert asyncio.run(main()) == [1, 2, 3]


def test_worker_count_defaults_and_floor():
    assert BlockExecutor(0).workers >= 1
    assert BlockExecutor(3).workers == 3
