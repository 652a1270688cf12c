"""Timing, memory accounting and thread-pool fan-out for batch checks."""

import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Iterator, List, Optional, Sequence

import psutil

from .error_handling import ErrorHandler


def _rss_mb() -> float:
    return psutil.Process().memory_info().rss / (1024 * 1024)


@dataclass
class PerformanceMetrics:
    """Wall time and resident memory growth of one monitored run."""
    execution_time: float
    memory_usage: float
    tasks: int
    cache_hits: int = 0
    cache_misses: int = 0

    @property
    def cache_hit_rate(self) -> float:
        lookups = self.cache_hits + self.cache_misses
        return self.cache_hits / lookups if lookups else 0.0


class PerformanceMonitor:
    """Records one PerformanceMetrics per start/stop pair."""

    def __init__(self) -> None:
        self._runs: List[PerformanceMetrics] = []
        self._started: Optional[float] = None
        self._baseline_mb = 0.0

    @property
    def running(self) -> bool:
        return self._started is not None

    def start_monitoring(self) -> None:
        self._baseline_mb = _rss_mb()
        self._started = time.perf_counter()

    def stop_monitoring(self, tasks: int = 1, cache_hits: int = 0, cache_misses: int = 0) -> PerformanceMetrics:
        if self._started is None:
            raise ValueError("stop_monitoring called before start_monitoring")
        elapsed, self._started = time.perf_counter() - self._started, None
        run = PerformanceMetrics(elapsed, _rss_mb() - self._baseline_mb, tasks, cache_hits, cache_misses)
        self._runs.append(run)
        return run

    @property
    def history(self) -> List[PerformanceMetrics]:
        return list(self._runs)


@contextmanager
def performance_context(monitor: Optional[PerformanceMonitor] = None) -> Iterator[PerformanceMonitor]:
    """Monitor the enclosed block, recording a run even when it raises."""
    monitor = monitor or PerformanceMonitor()
    monitor.start_monitoring()
    try:
        yield monitor
    finally:
        if monitor.running:
            monitor.stop_monitoring()


class ConcurrentProcessor:
    """Map a function over work items, sequentially or on a thread pool.

    Results always come back in input order regardless of completion order.
    """

    def __init__(self, max_workers: Optional[int] = None, parallel: bool = False):
        self.parallel = parallel
        self.max_workers = max_workers or self._get_optimal_workers()
        self.error_handler = ErrorHandler("probmu.concurrency")

    @staticmethod
    def _get_optimal_workers() -> int:
        """Physical cores, bounded so small desks are not oversubscribed."""
        return max(1, min(8, psutil.cpu_count(logical=False) or 1))

    def map(self, func: Callable[[Any], Any], items: Sequence[Any],
            progress_callback: Optional[Callable[[int, int], None]] = None) -> List[Any]:
        """Apply func to every item; exceptions are logged and propagate after all items are scheduled."""
        total = len(items)

        def run(item: Any) -> Any:
            try:
                return func(item)
            except Exception as exc:
                self.error_handler.handle_error(exc, {"item": str(item)})
                raise

        if not self.parallel or self.max_workers <= 1 or total <= 1:
            results = []
            for done, item in enumerate(items, start=1):
                results.append(run(item))
                if progress_callback:
                    progress_callback(done, total)
            return results

        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = [executor.submit(run, item) for item in items]
            results = []
            for done, future in enumerate(futures, start=1):
                results.append(future.result())
                if progress_callback:
                    progress_callback(done, total)
            return results
