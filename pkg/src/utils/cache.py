import logging
import threading
import time
from collections import OrderedDict
from datetime import datetime
from functools import wraps
from typing import Any, Optional

import joblib

from src.utils.config import Config

log = logging.getLogger(__name__)

_MISSING = object()


class MemoCache:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(MemoCache, cls).__new__(cls)
            cls._instance._initialize()
        return cls._instance

    def _initialize(self):
        """Initialize the in-process store and its statistics"""
        self._store: "OrderedDict[str, Any]" = OrderedDict()
        self._lock = threading.Lock()
        self._max_entries = int(Config().get('cache', 'max_entries', default=512))
        self._cache_stats = {
            'hits': 0,
            'misses': 0,
            'computations': 0
        }

    def get(self, key: str, default: Any = None) -> Optional[Any]:
        """Get value from cache with stats tracking"""
        with self._lock:
            if key in self._store:
                self._store.move_to_end(key)
                self._cache_stats['hits'] += 1
                return self._store[key]
            self._cache_stats['misses'] += 1
        return default

    def set(self, key: str, value: Any):
        """Store a value, evicting the least recently used entry when full"""
        with self._lock:
            self._store[key] = value
            self._store.move_to_end(key)
            while len(self._store) > self._max_entries:
                self._store.popitem(last=False)

    def get_stats(self) -> dict:
        """Get cache performance statistics"""
        total_requests = self._cache_stats['hits'] + self._cache_stats['misses']
        hit_rate = (self._cache_stats['hits'] / total_requests * 100) if total_requests > 0 else 0

        return {
            'cache_hits': self._cache_stats['hits'],
            'cache_misses': self._cache_stats['misses'],
            'hit_rate': f"{hit_rate:.1f}%",
            'computations': self._cache_stats['computations'],
            'entries': len(self._store),
            'timestamp': datetime.now().isoformat()
        }

    def track_computation(self):
        with self._lock:
            self._cache_stats['computations'] += 1

    def clear(self):
        """Clear all entries and statistics"""
        with self._lock:
            self._store.clear()
            self._cache_stats = {
                'hits': 0,
                'misses': 0,
                'computations': 0
            }


def _identity(value: Any) -> Any:
    """Large immutable values carry a precomputed content fingerprint"""
    return getattr(value, "fingerprint", value)


def memoize(func):
    """Cache a pure function's results under a content hash of its arguments"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        cache = MemoCache()
        key = joblib.hash((
            func.__module__,
            func.__qualname__,
            tuple(_identity(a) for a in args),
            {name: _identity(value) for name, value in kwargs.items()},
        ))

        result = cache.get(key, _MISSING)
        if result is not _MISSING:
            return result

        cache.track_computation()
        start_time = time.time()
        result = func(*args, **kwargs)
        execution_time = time.time() - start_time
        if execution_time > 1.0:
            log.info("%s took %.2f seconds", func.__qualname__, execution_time)

        cache.set(key, result)
        return result

    return wrapper
