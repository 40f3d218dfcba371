"""The coordinator process: vertex injection, discovery, termination and reaping."""

from __future__ import annotations

from typing import Any, Callable

from .messages import Begin, MatchQuery, Pong, Reap, RunTerminalExpand
from .node import BlossomNode
from .runtime import DEAD, Address, Process, call_all, sleep


class Dryad(Process):
    """Spawns vertices on ``sow``, answers ``discover`` and watches ``sprout``.

    Once every vertex has sprouted (been covered by the matching) it asks each
    vertex for its partner.  Vertices still buried in a macrovertex report
    their top-level blossom, which is then expanded by a dedicated
    supervisor.  When every vertex reports a partner, one ``reap`` per pair
    goes to ``match_address``.
    """

    kind = "dryad"

    def __init__(self, edge_weight: Callable[[int, int], Any], match_address: Address, rescan_delay: int = 2):
        super().__init__()
        self.edge_weight = edge_weight
        self.match_address = match_address
        self.roster: dict[int, Address] = {}
        self.ids: dict[Address, int] = {}
        self.sprouted: set[int] = set()
        self.phase = "sowing"
        self.rescan_delay = rescan_delay
        self.on_reap_begin: Callable[[], None] | None = None
        # instrumentation hook run once every vertex exists, before any begins
        self.on_start: Callable[[], None] | None = None

    def note(self, kind: str, **payload) -> None:
        self.sim.trace.add(self.sim.tick, self.addr, kind, payload)

    def on_sow(self, env, m):
        if self.phase != "sowing" or m.id in self.roster:
            self.note("reject", id=m.id, phase=self.phase)
            return
        node = BlossomNode(m.id, self.addr, self.edge_weight, self.rescan_delay)
        addr = self.sim.spawn(node, by=self.addr)
        self.roster[m.id] = addr
        self.ids[addr] = m.id

    def on_start_solving(self, env, m):
        if self.phase != "sowing":
            return None
        self.phase = "solving"
        if self.on_start is not None:
            self.on_start()
        for vid in sorted(self.roster):
            self.send(self.roster[vid], Begin())
        if not self.roster:
            return self._begin_reaping()
        return None

    def on_discover(self, env, m):
        if m.id not in self.roster or self.roster[m.id] != env.src:
            self.note("warning", unknown_requester=m.id)
            self.reply(env, [])
            return
        self.reply(env, [(vid, a) for vid, a in sorted(self.roster.items()) if vid != m.id])

    def on_sprout(self, env, m):
        self.sprouted.update(m.ids)
        if self.phase == "solving" and len(self.sprouted) == len(self.roster):
            return self._begin_reaping()
        return None

    def _begin_reaping(self):
        self.phase = "reaping"
        self.note("reap-begin", sprouted=len(self.sprouted))
        if self.on_reap_begin is not None:
            self.on_reap_begin()
        return self._reap()

    def _reap(self):
        from .supervisor import Supervisor

        order = sorted(self.roster)
        while True:
            replies = yield call_all((self.roster[v], MatchQuery()) for v in order)
            pairs = set()
            tops = set()
            for vid, r in zip(order, replies):
                if r is DEAD:
                    continue
                partner, top = r
                if partner is None:
                    if top is not None:
                        tops.add(top)
                else:
                    other = self.ids[partner]
                    pairs.add((min(vid, other), max(vid, other)))
            if not tops:
                break
            sups = []
            for top in sorted(tops):
                sup = Supervisor(None, Pong("expand", target=top), -1, self.addr, terminal=True)
                sups.append(self.sim.spawn(sup, by=self.addr))
            results = yield call_all((s, RunTerminalExpand()) for s in sups)
            if not all(r is True for r in results):
                yield sleep(2)
        for a, b in sorted(pairs):
            self.send(self.match_address, Reap(a, b))
            self.note("reap", pair=[a, b])
        self.phase = "done"


class MatchSink(Process):
    """Collects ``reap`` announcements."""

    kind = "sink"

    def __init__(self):
        super().__init__()
        self.pairs: list[tuple[int, int]] = []

    def on_reap(self, env, m):
        self.pairs.append((m.id_a, m.id_b))
