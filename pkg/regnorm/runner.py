from __future__ import annotations

import asyncio
import logging
from typing import Callable, List, Optional, Sequence, TypeVar

from .settings import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")


class BlockExecutor:
    """Runs independent blocking blocks on worker threads, at most ``workers`` at a time.

    Results come back in submission order, so any reduction over them is
    independent of how the threads were scheduled.
    """

    def __init__(self, workers: Optional[int] = None) -> None:
        self._workers = max(1, int(workers or settings.SIM_WORKERS))

    @property
    def workers(self) -> int:
        return self._workers

    async def _execute_block(self, sem: asyncio.Semaphore, fn: Callable[[int], T], index: int) -> T:
        async with sem:
            # 阻塞计算放到线程里，避免卡住事件循环
            return await asyncio.to_thread(fn, index)

    async def run_async(self, fn: Callable[[int], T], indices: Sequence[int]) -> List[T]:
        sem = asyncio.Semaphore(self._workers)
        return list(await asyncio.gather(*(self._execute_block(sem, fn, i) for i in indices)))

    def run(self, fn: Callable[[int], T], indices: Sequence[int]) -> List[T]:
        indices = list(indices)
        try:
            asyncio.get_running_loop()
        except RuntimeError:
            return asyncio.run(self.run_async(fn, indices))
        # already inside an event loop: same results, computed inline
        logger.debug("[sim] event loop already running, executing %d blocks inline", len(indices))
        return [fn(i) for i in indices]
