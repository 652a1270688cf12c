"""Bounded LRU cache for tables derived from a pLTS."""

import threading
import time
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

_MISSING = object()


@dataclass
class _Entry:
    value: Any
    expires_at: Optional[float]

    def expired(self, now: float) -> bool:
        return self.expires_at is not None and now > self.expires_at


class MemoryCache:
    """Thread-safe LRU map with an optional time-to-live per entry.

    Keys are content digests, so entries are valid for as long as they are held;
    a negative ``default_ttl`` means entries never expire.
    """

    def __init__(self, max_size: int = 64, default_ttl: int = -1):
        self.max_size = max_size
        self.default_ttl = default_ttl
        self._cache: "OrderedDict[str, _Entry]" = OrderedDict()
        self._lock = threading.RLock()
        self.stats: Dict[str, int] = self._fresh_stats()

    @staticmethod
    def _fresh_stats() -> Dict[str, int]:
        return {"hits": 0, "misses": 0, "evictions": 0}

    def __len__(self) -> int:
        return len(self._cache)

    def __contains__(self, key: str) -> bool:
        return key in self._cache

    def get(self, key: str, default: Any = None) -> Any:
        with self._lock:
            entry = self._cache.get(key)
            if entry is not None and entry.expired(time.time()):
                del self._cache[key]
                entry = None
            if entry is None:
                self.stats["misses"] += 1
                return default
            self._cache.move_to_end(key)
            self.stats["hits"] += 1
            return entry.value

    def set(self, key: str, value: Any, ttl: Optional[int] = None) -> None:
        """Store value under key, evicting the least recently used entries when full."""
        ttl = self.default_ttl if ttl is None else ttl
        expires_at = None if ttl < 0 else time.time() + ttl
        with self._lock:
            if key not in self._cache:
                while self._cache and len(self._cache) >= self.max_size:
                    self._cache.popitem(last=False)
                    self.stats["evictions"] += 1
            self._cache[key] = _Entry(value, expires_at)
            self._cache.move_to_end(key)

    def get_or_create(self, key: str, factory: Callable[[], Any]) -> Any:
        """Return the value for key, calling factory once on a miss."""
        with self._lock:
            value = self.get(key, _MISSING)
            if value is _MISSING:
                value = factory()
                self.set(key, value)
            return value

    def delete(self, key: str) -> bool:
        with self._lock:
            return self._cache.pop(key, None) is not None

    def clear(self) -> None:
        """Drop every entry and reset the counters."""
        with self._lock:
            self._cache.clear()
            self.stats = self._fresh_stats()
