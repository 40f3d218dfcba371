"""A deterministic discrete-event simulator for message-passing processes.

Processes own their state and talk only through :meth:`Simulator.send`.
Each message takes a latency drawn from the configured model; delivery is
FIFO per ``(src, dst)`` pair and otherwise shuffled by a seeded RNG, so a
given seed always reproduces the same run.

Handlers may be plain methods or generators.  A generator handler suspends
by yielding a :class:`Request` (see :func:`call`, :func:`call_all`,
:func:`sleep`) and is resumed with the replies once they have all arrived.
This keeps multi-step protocols readable without threads.
"""

from __future__ import annotations

import heapq
import json
import random
from numbers import Rational
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Iterator

Address = int


class _Dead:
    """Reply value bounced back when a request reaches a terminated process."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "DEAD"

    def __reduce__(self):
        return (_Dead, ())


DEAD = _Dead()


class Message:
    """Base class for payloads.  ``kind`` names the handler ``on_<kind>``."""

    __slots__ = ()
    kind = "message"

    def describe(self) -> dict[str, Any]:
        return {}


class Reply(Message):
    __slots__ = ("token", "value")
    kind = "reply"

    def __init__(self, token: int, value: Any):
        self.token = token
        self.value = value


@dataclass(slots=True)
class Envelope:
    src: Address
    dst: Address
    seq: int
    payload: Message
    sent: int
    token: int | None = None
    reply_to: Address | None = None


class Request:
    __slots__ = ("calls", "single", "delay")

    def __init__(self, calls, single: bool, delay: int | None = None):
        self.calls = calls
        self.single = single
        self.delay = delay


def call(dst: Address, payload: Message) -> Request:
    """Yield this from a handler to send ``payload`` and wait for its reply."""
    return Request(((dst, payload),), True)


def call_all(pairs: Iterable[tuple[Address, Message]]) -> Request:
    """Send every ``(dst, payload)`` at once and wait for all replies (in order)."""
    return Request(tuple(pairs), False)


def sleep(ticks: int) -> Request:
    return Request((), True, max(1, ticks))


@dataclass(frozen=True)
class SchedulerConfig:
    seed: int = 0
    latency: tuple = ("fixed", 1)
    max_ticks: int | None = None
    record_messages: bool = True

    @staticmethod
    def parse_latency(text: str) -> tuple:
        """Parse ``fixed:K`` or ``uniform:LO:HI``."""
        parts = text.split(":")
        try:
            if parts[0] == "fixed" and len(parts) == 2:
                k = int(parts[1])
                if k >= 1:
                    return ("fixed", k)
            elif parts[0] == "uniform" and len(parts) == 3:
                lo, hi = int(parts[1]), int(parts[2])
                if 1 <= lo <= hi:
                    return ("uniform", lo, hi)
        except ValueError:
            pass
        raise ValueError(f"bad latency model {text!r}; use fixed:K or uniform:LO:HI with K, LO >= 1")


def _jsonable(x: Any) -> Any:
    if isinstance(x, Rational) and not isinstance(x, int):
        from .graph import format_weight

        return format_weight(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_jsonable(v) for v in x)
    if x is DEAD:
        return "DEAD"
    return x


class EventTrace:
    """Ordered event records ``(tick, actor, kind, payload)``.

    Message deliveries are stored compactly as ``(src, seq, sent, message)``
    tuples; everything else carries a dict payload.
    """

    def __init__(self, records: list | None = None):
        self.records: list[tuple[int, Any, str, Any]] = records if records is not None else []

    def add(self, tick: int, actor: Any, kind: str, payload: Any) -> None:
        self.records.append((tick, actor, kind, payload))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def of_kind(self, *kinds: str) -> list[tuple]:
        return [r for r in self.records if r[2] in kinds]

    def count(self, kind: str) -> int:
        return sum(1 for r in self.records if r[2] == kind)

    def iter_dicts(self) -> Iterator[dict[str, Any]]:
        for tick, actor, kind, payload in self.records:
            if kind == "deliver":
                src, seq, sent, msg = payload
                payload = {"src": src, "seq": seq, "sent": sent, "msg": msg}
            yield {"tick": tick, "actor": actor, "kind": kind, "payload": _jsonable(payload)}

    def to_jsonl(self) -> str:
        return "".join(json.dumps(d, sort_keys=True, separators=(",", ":")) + "\n" for d in self.iter_dicts())

    @classmethod
    def from_jsonl(cls, text: str) -> "EventTrace":
        recs = []
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            p = d["payload"]
            if d["kind"] == "deliver":
                p = (p["src"], p["seq"], p["sent"], p["msg"])
            recs.append((d["tick"], d["actor"], d["kind"], p))
        return cls(recs)


class LivelockSuspected(RuntimeError):
    """The tick budget ran out before the system went quiet."""

    def __init__(self, tick: int, trace: EventTrace):
        super().__init__(f"no quiescence after {tick} ticks")
        self.tick = tick
        self.trace = trace


class Process:
    """Base class for simulated processes.

    Subclasses implement ``on_<kind>(env, msg)`` handlers.  A handler that
    returns a generator becomes a task which is resumed as replies arrive.
    """

    kind = "process"

    def __init__(self) -> None:
        self.addr: Address = -1
        self.sim: Simulator | None = None
        self.alive = True
        self._next_token = 0
        self._waiting: dict[int, tuple[_Task, int]] = {}

    # hooks
    def started(self) -> None:
        """Called once right after spawning."""

    def describe(self) -> dict[str, Any]:
        return {}

    # messaging
    def send(self, dst: Address, payload: Message) -> None:
        self.sim.send(self.addr, dst, payload)

    def reply(self, env: Envelope, value: Any) -> None:
        if env.token is not None:
            self.sim.send(self.addr, env.reply_to, Reply(env.token, value))

    def forward(self, env: Envelope, dst: Address, payload: Message) -> None:
        """Pass a request on; whoever answers it replies to the original asker."""
        self.sim.send(self.addr, dst, payload, env.token, env.reply_to)

    def spawn_task(self, gen) -> None:
        self._step(_Task(gen), None)

    def receive(self, env: Envelope) -> None:
        payload = env.payload
        if payload.__class__ is Reply:
            entry = self._waiting.pop(payload.token, None)
            if entry is None:
                return
            task, slot = entry
            task.results[slot] = payload.value
            task.remaining -= 1
            if task.remaining == 0:
                self._step(task, task.results[0] if task.single else task.results)
            return
        handlers = self.__class__.__dict__.get("_handlers")
        if handlers is None:
            handlers = {}
            self.__class__._handlers = handlers
        kind = payload.kind
        handler = handlers.get(kind, _MISSING)
        if handler is _MISSING:
            handler = handlers[kind] = getattr(self.__class__, "on_" + kind, None)
        if handler is None:
            self.sim.trace.add(self.sim.tick, self.addr, "warning", {"unhandled": kind})
            return
        result = handler(self, env, payload)
        if result is not None:
            self._step(_Task(result), None)

    def _step(self, task: "_Task", value: Any) -> None:
        while True:
            try:
                req = task.gen.send(value)
            except StopIteration:
                return
            calls = req.calls
            if req.delay is not None:
                token = self._take_token()
                task.results = [None]
                task.remaining = 1
                task.single = True
                self._waiting[token] = (task, 0)
                self.sim.send(self.addr, self.addr, Reply(token, None), delay=req.delay)
                return
            if not calls:
                value = None if req.single else []
                continue
            task.results = [None] * len(calls)
            task.remaining = len(calls)
            task.single = req.single
            for slot, (dst, payload) in enumerate(calls):
                token = self._take_token()
                self._waiting[token] = (task, slot)
                self.sim.send(self.addr, dst, payload, token, self.addr)
            return

    def _take_token(self) -> int:
        t = self._next_token
        self._next_token = t + 1
        return t


_MISSING = object()


class _Task:
    __slots__ = ("gen", "results", "remaining", "single")

    def __init__(self, gen):
        self.gen = gen
        self.results: list = []
        self.remaining = 0
        self.single = True


class Simulator:
    """Seeded tick-based scheduler.

    At each tick the envelopes that are due are grouped per ``(src, dst)``
    pair, the groups are shuffled, and each envelope is handed to its
    destination in turn.  Handlers run to their next suspension point
    immediately, and anything they send is due at a later tick.
    """

    def __init__(self, config: SchedulerConfig | None = None):
        self.config = config or SchedulerConfig()
        self.rng = random.Random(self.config.seed)
        self.tick = 0
        self.procs: dict[Address, Process] = {}
        self._next_addr = 0
        self._due: dict[int, dict[tuple[int, int], list[Envelope]]] = {}
        self._ticks: list[int] = []
        self._seq: dict[tuple[int, int], int] = {}
        self._last: dict[tuple[int, int], int] = {}
        self.trace = EventTrace()
        self.message_count = 0
        self.locked_count = 0
        self.state_version = 0
        self.tick_hooks: list[Callable[["Simulator"], None]] = []
        lat = self.config.latency
        self._fixed = 0
        if lat[0] == "fixed":
            k = self._fixed = lat[1]
            self._latency = lambda: k
        else:
            lo, hi = lat[1], lat[2]
            randint = self.rng.randint
            self._latency = lambda: randint(lo, hi)
        self._record = self.config.record_messages

    # process management
    def spawn(self, proc: Process, by: Address | None = None) -> Address:
        addr = self._next_addr
        self._next_addr += 1
        proc.addr = addr
        proc.sim = self
        self.procs[addr] = proc
        info = {"by": by, "role": proc.kind}
        info.update(proc.describe())
        self.trace.add(self.tick, addr, "spawn", info)
        proc.started()
        return addr

    def terminate(self, addr: Address) -> None:
        proc = self.procs.get(addr)
        if proc is None or not proc.alive:
            return
        proc.alive = False
        self.trace.add(self.tick, addr, "terminate", {})

    def is_alive(self, addr: Address) -> bool:
        p = self.procs.get(addr)
        return p is not None and p.alive

    # messaging
    def send(self, src: Address, dst: Address, payload: Message, token: int | None = None,
             reply_to: Address | None = None, delay: int | None = None) -> None:
        pair = (src, dst)
        seq = self._seq.get(pair, 0)
        self._seq[pair] = seq + 1
        due = self.tick + (delay if delay is not None else (self._fixed or self._latency()))
        last = self._last.get(pair, 0)
        if due < last:
            due = last
        self._last[pair] = due
        env = Envelope(src, dst, seq, payload, self.tick, token, reply_to)
        bucket = self._due.get(due)
        if bucket is None:
            self._due[due] = {pair: [env]}
            heapq.heappush(self._ticks, due)
            return
        group = bucket.get(pair)
        if group is None:
            bucket[pair] = [env]
        else:
            group.append(env)

    def pending(self) -> bool:
        return bool(self._ticks)

    def run(self, max_ticks: int | None = None) -> EventTrace:
        """Deliver messages until none are in flight; return the trace."""
        limit = max_ticks if max_ticks is not None else self.config.max_ticks
        shuffle = self.rng.shuffle
        procs = self.procs
        trace_add = self.trace.add
        record = self._record
        while self._ticks:
            t = heapq.heappop(self._ticks)
            if limit is not None and t > limit:
                self.tick = limit
                raise LivelockSuspected(limit, self.trace)
            self.tick = t
            groups = list(self._due.pop(t).values())
            if len(groups) > 1:
                shuffle(groups)
            for group in groups:
                for env in group:
                    self.message_count += 1
                    proc = procs.get(env.dst)
                    if proc is None or not proc.alive:
                        trace_add(t, env.dst, "drop", {"src": env.src, "seq": env.seq, "msg": env.payload.kind})
                        if env.token is not None and env.payload.__class__ is not Reply:
                            self.send(env.dst, env.reply_to, Reply(env.token, DEAD))
                        continue
                    if record:
                        trace_add(t, env.dst, "deliver", (env.src, env.seq, env.sent, env.payload.kind))
                    proc.receive(env)
            for hook in self.tick_hooks:
                hook(self)
        return self.trace
