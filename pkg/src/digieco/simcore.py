"""Discrete-event engine and reproducible random streams.

Time is measured in integer ticks. Randomness comes from SplitMix64
(Steele, Lea & Flood, "Fast Splittable Pseudorandom Number Generators",
OOPSLA 2014; reference code by S. Vigna), implemented here on plain Python
integers so a given ``(master seed, stream id)`` yields the same sequence on
every platform and in any language that follows the recipe below.

Stream derivation::

    state0 = mix64(mix64(master) ^ mix64(id + GOLDEN))

Each draw advances ``state += GOLDEN`` and returns ``mix64(state)``.
Doubles use the top 53 bits, bounded integers use rejection on ``x % n``.
"""

from __future__ import annotations

import heapq
from typing import Any, Callable, Sequence, TypeVar

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_DOUBLE_UNIT = 1.0 / (1 << 53)

T = TypeVar("T")


class SimulationError(RuntimeError):
    """Fatal engine misuse, e.g. scheduling an event in the past."""


def mix64(z: int) -> int:
    """SplitMix64 finalizer (Stafford variant 13)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class RngStream:
    """A SplitMix64 generator bound to a (master seed, stream id) pair."""

    __slots__ = ("master", "stream_id", "_state")

    def __init__(self, master: int, stream_id: int = 0):
        if master < 0 or master > MASK64:
            raise ValueError(f"master seed must be a 64-bit unsigned integer, got {master}")
        if stream_id < 0:
            raise ValueError(f"stream id must be non-negative, got {stream_id}")
        self.master = master
        self.stream_id = stream_id
        self._state = mix64(mix64(master) ^ mix64((stream_id + GOLDEN) & MASK64))

    def next_u64(self) -> int:
        s = (self._state + GOLDEN) & MASK64
        self._state = s
        s = ((s ^ (s >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        s = ((s ^ (s >> 27)) * 0x94D049BB133111EB) & MASK64
        return s ^ (s >> 31)

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        s = (self._state + GOLDEN) & MASK64
        self._state = s
        s = ((s ^ (s >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        s = ((s ^ (s >> 27)) * 0x94D049BB133111EB) & MASK64
        return ((s ^ (s >> 31)) >> 11) * _DOUBLE_UNIT

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias."""
        if n <= 0:
            raise ValueError("randbelow() requires n > 0")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def choice(self, seq: Sequence[T]) -> T:
        return seq[self.randbelow(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, walking from the end."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        """k distinct elements, in draw order (partial Fisher-Yates from the front)."""
        pool = list(seq)
        if not 0 <= k <= len(pool):
            raise ValueError(f"sample size {k} out of range for population {len(pool)}")
        for i in range(k):
            j = i + self.randbelow(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def __repr__(self) -> str:
        return f"RngStream(master={self.master}, stream_id={self.stream_id})"


def derive_stream(master: int, stream_id: int) -> RngStream:
    """Deterministic child stream for ``(master, stream_id)``."""
    return RngStream(master, stream_id)


class EventQueue:
    """Pending events ordered by (tick, insertion sequence)."""

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Any]] = []
        self._seq = 0
        self.now = 0
        self.scheduled = 0
        self.processed = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, event: Any, at: int) -> None:
        if at < self.now:
            raise SimulationError(f"cannot schedule at tick {at}, current time is {self.now}")
        heapq.heappush(self._heap, (at, self._seq, event))
        self._seq += 1
        self.scheduled += 1

    def pop(self) -> tuple[int, Any]:
        at, _, event = heapq.heappop(self._heap)
        self.now = at
        self.processed += 1
        return at, event


class Simulator:
    """Single-threaded event loop; events are ``(callback, args)`` pairs."""

    def __init__(self) -> None:
        self.queue = EventQueue()

    @property
    def now(self) -> int:
        return self.queue.now

    def schedule(self, at: int, callback: Callable[..., None], *args: Any) -> None:
        self.queue.schedule((callback, args), at)

    def run(self, until: int | None = None) -> int:
        """Process events until the queue drains (or ``until`` is passed).

        Returns the number of events processed by this call.
        """
        queue = self.queue
        heap = queue._heap
        count = 0
        while heap:
            if until is not None and heap[0][0] > until:
                break
            _, (callback, args) = queue.pop()
            callback(*args)
            count += 1
        return count
