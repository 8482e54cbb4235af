"""Single-word atomic operations for pure-Python concurrent algorithms.

Real hardware offers read-modify-write (RMW) instructions (exchange,
add-and-fetch, fetch-and-or, ...) on single machine words. CPython has no
such primitive, so :class:`AtomicU64` emulates one 64-bit word whose RMW
operations are linearizable: each RMW runs under a per-word lock, and plain
loads/stores rely on the GIL making attribute access of an ``int`` a single
indivisible bytecode.

Memory ordering: under the GIL every bytecode is a global synchronization
point, so all operations here are sequentially consistent. That is strictly
stronger than the acquire/release contract the register algorithms require,
so no separate fences are needed.
"""

from __future__ import annotations

import threading

_MASK64 = (1 << 64) - 1


class AtomicU64:
    """A 64-bit word supporting linearizable RMW operations.

    ``load`` and ``store`` are plain atomic accesses (not RMW): they touch
    the word without taking the lock, mirroring how ordinary aligned loads
    and stores behave on 64-bit hardware. All arithmetic wraps modulo 2**64.
    """

    __slots__ = ("_lock", "_value")

    def __init__(self, value: int = 0) -> None:
        self._lock = threading.Lock()
        self._value = value & _MASK64

    def load(self) -> int:
        """Plain atomic load (single untorn read, acquire under the GIL)."""
        return self._value

    def store(self, value: int) -> None:
        """Plain atomic store (release under the GIL). Not an RMW."""
        self._value = value & _MASK64

    def add_and_fetch(self, delta: int) -> int:
        """RMW: add ``delta`` (wrapping) and return the new value."""
        with self._lock:
            self._value = (self._value + delta) & _MASK64
            return self._value

    def exchange(self, value: int) -> int:
        """RMW: store ``value`` and return the previous value."""
        with self._lock:
            old = self._value
            self._value = value & _MASK64
            return old

    def fetch_or(self, bits: int) -> int:
        """RMW: OR ``bits`` into the word and return the previous value."""
        with self._lock:
            old = self._value
            self._value = (old | bits) & _MASK64
            return old

    def fetch_and(self, bits: int) -> int:
        """RMW: AND ``bits`` into the word and return the previous value."""
        with self._lock:
            old = self._value
            self._value = old & bits & _MASK64
            return old

    def __repr__(self) -> str:
        return f"AtomicU64({self._value:#x})"
