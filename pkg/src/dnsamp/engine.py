"""A small deterministic discrete-event engine with generator processes.

Processes are generators that yield :class:`Future` objects and are resumed
with the future's value once it resolves. Events at equal timestamps run in
the order they were scheduled.
"""

from __future__ import annotations

import heapq
from typing import Any, Callable, Generator


class Future:
    __slots__ = ("done", "value", "_callbacks")

    def __init__(self):
        self.done = False
        self.value: Any = None
        self._callbacks: list[Callable[[Any], None]] = []

    def add_callback(self, fn: Callable[[Any], None]) -> None:
        if self.done:
            fn(self.value)
        else:
            self._callbacks.append(fn)

    def set_result(self, value: Any = None) -> None:
        if self.done:
            raise RuntimeError("future already resolved")
        self.done = True
        self.value = value
        callbacks, self._callbacks = self._callbacks, []
        for fn in callbacks:
            fn(value)


class Simulator:
    def __init__(self):
        self.now = 0.0
        self._queue: list = []
        self._seq = 0
        self.events_run = 0

    def schedule(self, delay: float, fn: Callable, *args) -> None:
        if delay < 0:
            raise ValueError("cannot schedule into the past")
        self._seq += 1
        heapq.heappush(self._queue, (self.now + delay, self._seq, fn, args))

    def timeout(self, delay: float, value: Any = None) -> Future:
        fut = Future()
        self.schedule(delay, fut.set_result, value)
        return fut

    def process(self, gen: Generator) -> Process:
        return Process(self, gen)

    def run(self, until: float | None = None) -> None:
        queue = self._queue
        while queue:
            if until is not None and queue[0][0] > until:
                self.now = until
                return
            t, _, fn, args = heapq.heappop(queue)
            self.now = t
            self.events_run += 1
            fn(*args)

    @property
    def pending(self) -> int:
        return len(self._queue)


class Process(Future):
    """Drives a generator; resolves with the generator's return value."""

    __slots__ = ("sim", "_gen")

    def __init__(self, sim: Simulator, gen: Generator):
        super().__init__()
        self.sim = sim
        self._gen = gen
        sim.schedule(0, self._step, None)

    def _resume(self, value: Any) -> None:
        self.sim.schedule(0, self._step, value)

    def _step(self, value: Any) -> None:
        try:
            fut = self._gen.send(value)
        except StopIteration as stop:
            self.set_result(stop.value)
            return
        fut.add_callback(self._resume)


def any_of(futures: list[Future]) -> Future:
    """A future that resolves with the first of ``futures`` to complete."""
    out = Future()

    def fire(value: Any) -> None:
        if not out.done:
            out.set_result(value)

    for fut in futures:
        fut.add_callback(fire)
        if out.done:
            break
    return out
