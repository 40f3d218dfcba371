"""The per-blossom process: vertices and macrovertices alike.

A blossom keeps only its own slots.  Everything it learns about other
blossoms arrives by message: pings ask a vertex what the edge to it would
sponsor, scans fan out over a tree and fold the answers, and the remaining
handlers are plumbing used by supervisors inside their critical sections.
"""

from __future__ import annotations

from collections import deque
from typing import Any, Callable

from .graph import Weight
from .messages import (
    PASS,
    ApplyWeight,
    Augment,
    DirectedEdge,
    Discover,
    Kick,
    LockTree,
    Ping,
    Pong,
    Resolve,
    Scan,
    Sprout,
    Yield,
    unify_pongs,
)
from .runtime import DEAD, Address, Envelope, Process, call, call_all

ZERO = Weight(0)

# slots a supervisor may overwrite with SetSlots
WRITABLE = frozenset(
    {"match_edge", "parent", "children", "positive", "pistil", "petals", "internal_weight", "members", "priority"}
)


class NodeView:
    """A copy of a blossom's slots, as returned by ``GetState``."""

    __slots__ = (
        "addr", "id", "match_edge", "parent", "children", "positive", "pistil", "petals",
        "internal_weight", "priority", "members", "lock_owner", "paused",
    )

    def __init__(self, node: "BlossomNode"):
        self.addr = node.addr
        self.id = node.id
        self.match_edge = node.match_edge
        self.parent = node.parent
        self.children = list(node.children)
        self.positive = node.positive
        self.pistil = node.pistil
        self.petals = list(node.petals)
        self.internal_weight = node.internal_weight
        self.priority = node.priority
        self.members = node.members
        self.lock_owner = node.lock_owner
        self.paused = node.paused

    @property
    def is_unmatched_root(self) -> bool:
        return self.pistil is None and self.parent is None and self.match_edge is None

    @property
    def is_barbell(self) -> bool:
        return self.pistil is None and self.parent is None and self.match_edge is not None and not self.children


class BlossomNode(Process):
    """A vertex (``vid`` set) or a macrovertex (``vid is None``)."""

    kind = "blossom"
    hop_limit = 10_000

    def __init__(self, vid: int | None, dryad: Address, edge_weight: Callable[[int, int], Weight],
                 rescan_delay: int = 2):
        super().__init__()
        self.id = vid
        self.dryad = dryad
        self.edge_weight = edge_weight
        self.match_edge: DirectedEdge | None = None
        self.parent: DirectedEdge | None = None
        self.children: list[DirectedEdge] = []
        self.positive = True
        self.pistil: Address | None = None
        self.petals: list[DirectedEdge] = []
        self.internal_weight = ZERO
        self.pingable = "all"
        self.paused = False
        self.lock_owner: Address | None = None
        self.lock_priority: int | None = None
        self.tentative: int | None = None
        self.deferred: deque[Envelope] = deque()
        self.scanning = False
        self.active = False
        self.last_scan: Pong | None = None
        self.members: tuple[int, ...] = (vid,) if vid is not None else ()
        self.priority = vid if vid is not None else 0
        self.neighbors: list[tuple[int, Address]] | None = None
        self.rescan_delay = rescan_delay

    def describe(self) -> dict[str, Any]:
        return {"id": self.id} if self.id is not None else {"members": list(self.members)}

    # --- root behaviour ---------------------------------------------------

    @property
    def eligible_root(self) -> bool:
        return (
            self.match_edge is None
            and not self.paused
            and self.pistil is None
            and self.parent is None
            and self.lock_owner is None
            and self.alive
        )

    def maybe_initiate_scan(self, delay: int | None = None) -> None:
        """Send ourselves a scan if we are an unmatched, unpaused, top-level root."""
        if self.active and not self.scanning and self.eligible_root:
            self.scanning = True
            self.sim.send(self.addr, self.addr, Kick(), delay=delay)

    def on_begin(self, env, m):
        self.active = True
        self.maybe_initiate_scan()

    def on_kick(self, env, m):
        if not self.eligible_root:
            self.scanning = False
            return None
        return self._root_scan()

    def _root_scan(self):
        root = self.addr
        a = yield from self.scan_body(root, None, ZERO, frozenset((root,)), False, self.priority)
        self.scanning = False
        self.last_scan = a
        if not self.eligible_root:
            return
        if a.tag == "pass" or (a.tag == "reweight" and a.weight <= 0):
            self.maybe_initiate_scan(self.rescan_delay)
            return
        from .supervisor import Supervisor

        self.paused = True
        self.sim.spawn(Supervisor(self.addr, a, self.priority, self.dryad), by=self.addr)

    # --- scan (fan out over the tree and fold) ----------------------------

    def on_scan(self, env, m: Scan):
        return self._scan_reply(env, m)

    def _scan_reply(self, env, m: Scan):
        a = yield from self.scan_body(m.root, m.blossom, m.weight, m.hold_cluster, m.soft, m.priority)
        self.reply(env, a)

    def scan_body(self, root, blossom, weight, hold_cluster, soft, priority):
        if self.pistil is not None:
            beta, w = blossom, weight + self.internal_weight
        else:
            beta, w = self.addr, self.internal_weight
        requests = []
        if self.positive:
            a = PASS
            if self.petals:
                for e in self.petals:
                    requests.append((e.source_blossom, Scan(root, beta, w, hold_cluster, soft, priority)))
            else:
                if self.neighbors is None:
                    reply = yield call(self.dryad, Discover(self.id))
                    self.neighbors = list(reply) if reply is not DEAD else []
                for _, addr in self.neighbors:
                    requests.append((addr, Ping(root, beta, w, hold_cluster, self.addr, self.id, soft, priority)))
        elif self.petals:
            iw = self.internal_weight
            if iw == 0:
                a = Pong("expand", target=self.addr, floor=iw, floor_by=priority)
            else:
                # nonzero weight: the macrovertex only bounds how far the tree may reweight
                a = Pong("reweight", weight=iw, target=self.addr, floor=iw, floor_by=priority)
        else:
            a = PASS
        for c in self.children:
            requests.append((c.target_blossom, Scan(root, None, ZERO, hold_cluster, soft, priority)))
        if requests:
            replies = yield call_all(requests)
            for r in replies:
                if r is DEAD or r is None:
                    continue
                a = unify_pongs(a, r, hold_cluster)
        return a

    # --- ping -------------------------------------------------------------

    def _ping_allowed(self, m: Ping) -> bool:
        mode = self.pingable
        return mode == "all" or (mode == "soft" and m.soft)

    def on_ping(self, env, m: Ping):
        if not self._ping_allowed(m):
            self.deferred.append(env)
            return None
        return self._answer_ping(env, m)

    def _resolve_full(self):
        acc = self.internal_weight
        if self.pistil is not None:
            r = yield call(self.pistil, Resolve(acc, None, True, True, 1))
            return r
        if self.parent is not None:
            r = yield call(self.parent.target_blossom, Resolve(acc, self.addr, self.positive, True, 1))
            return r
        return (self.addr, acc, self.positive, self.addr, self.match_edge is not None, self.priority)

    def _resolve_top(self):
        acc = self.internal_weight
        if self.pistil is not None:
            r = yield call(self.pistil, Resolve(acc, None, True, False, 1))
            return r
        return (self.addr, acc)

    def _answer_ping(self, env, m: Ping):
        info = yield from self._resolve_full()
        if info is DEAD or info is None:
            self.reply(env, PASS)
            return
        if not self._ping_allowed(m):
            # a critical section began while we climbed: answer once it ends
            self.deferred.append(env)
            return
        a = self.ping_outcome(m, info)
        if (
            m.soft
            and self.tentative is not None
            and m.priority < self.tentative
            and a.floor is not None
            and a.floor < 0
            and self.lock_owner is not None
        ):
            # a higher-priority tree sees our tentative weights overshoot: make room
            self.send(self.lock_owner, Yield(m.priority))
            self.deferred.append(env)
            return
        self.reply(env, a)

    def ping_outcome(self, m: Ping, info) -> Pong:
        """What the edge from the pinging vertex to this one sponsors."""
        beta, wchain, beta_positive, rho, rho_matched, rho_priority = info
        me = self.match_edge
        if me is not None and self.pistil is None and me.target_vertex == m.addr:
            return PASS
        if beta == m.blossom:
            return PASS
        wp = self.edge_weight(self.id, m.id) - wchain - m.weight
        e = DirectedEdge(m.blossom, m.addr, self.addr, beta)
        if not beta_positive:
            return Pong("hold", e, ZERO, frozenset((rho,)), None, wp, rho_priority)
        if wp != 0:
            if rho == m.root or (rho in m.hold_cluster and m.root in m.hold_cluster):
                amount = wp / 2
            else:
                amount = wp
            return Pong("reweight", e, amount, frozenset((rho,)), None, wp, rho_priority)
        if rho != m.root:
            return Pong("graft" if rho_matched else "augment", e, ZERO, frozenset((rho,)), None, wp, rho_priority)
        return Pong("contract", e, ZERO, frozenset((rho,)), None, wp, rho_priority)

    def on_resolve(self, env, m: Resolve):
        if m.hops > self.hop_limit:
            self.reply(env, None)
            return
        if m.beta is None:
            acc = m.acc + self.internal_weight
            if self.pistil is not None:
                self.forward(env, self.pistil, Resolve(acc, None, True, m.to_root, m.hops + 1))
                return
            if not m.to_root:
                self.reply(env, (self.addr, acc))
                return
            beta, bpos = self.addr, self.positive
        else:
            acc, beta, bpos = m.acc, m.beta, m.beta_positive
            if self.pistil is not None:
                # stale parent pointer into a petal: climb to the top first
                self.forward(env, self.pistil, Resolve(acc, beta, bpos, True, m.hops + 1))
                return
        if self.parent is not None:
            self.forward(env, self.parent.target_blossom, Resolve(acc, beta, bpos, True, m.hops + 1))
            return
        self.reply(env, (beta, acc, bpos, self.addr, self.match_edge is not None, self.priority))

    def on_reping(self, env, m):
        return self._reping(env, m)

    def _reping(self, env, m):
        info = yield from self._resolve_top()
        if info is DEAD or info is None:
            self.reply(env, DEAD)
            return
        beta, acc = info
        p = yield call(m.target, Ping(m.root, beta, acc, m.hold_cluster, self.addr, self.id, True, m.priority))
        self.reply(env, p)

    # --- augment ----------------------------------------------------------

    def on_augment(self, env, m: Augment):
        e = m.edge
        if self.match_edge is not None and e.same_vertices(self.match_edge):
            self.match_edge = self.parent
        else:
            self.match_edge = e
        if self.parent is None:
            self.send(self.dryad, Sprout(self.members))
            self.reply(env, True)
        else:
            self.forward(env, self.parent.target_blossom, Augment(self.parent.reversed(), m.owner))

    # --- plumbing for supervisors ----------------------------------------

    def on_get_state(self, env, m):
        self.reply(env, NodeView(self))

    def on_set_slots(self, env, m):
        if m.owner != self.lock_owner:
            self.sim.trace.add(self.sim.tick, self.addr, "warning", {"unlocked-write": m.owner})
        for k, v in m.slots.items():
            if k not in WRITABLE:
                raise KeyError(k)
            setattr(self, k, v)
        self.reply(env, True)

    def on_lock_tree(self, env, m: LockTree):
        owner = self.lock_owner
        if owner is not None:
            if owner == m.owner:
                self.reply(env, (True, [], None))
            else:
                self.reply(env, (False, [], (owner, self.lock_priority)))
            return None
        self.lock_owner = m.owner
        self.lock_priority = m.priority
        self.pingable = "none"
        self.sim.locked_count += 1
        targets = [c.target_blossom for c in self.children] + [p.source_blossom for p in self.petals]
        if not targets:
            self.reply(env, (True, [self.addr], None))
            return None
        return self._lock_below(env, m, targets)

    def _lock_below(self, env, m, targets):
        res = yield call_all((t, LockTree(m.owner, m.priority)) for t in targets)
        ok = True
        addrs = [self.addr]
        blocker = None
        for r in res:
            if r is DEAD or r is None:
                ok = False
                continue
            ok = ok and r[0]
            addrs.extend(r[1])
            if r[2] is not None and blocker is None:
                blocker = r[2]
        self.reply(env, (ok, addrs, blocker))

    def on_unlock(self, env, m):
        if self.lock_owner == m.owner:
            self.lock_owner = None
            self.tentative = None
            self.sim.locked_count -= 1
            if m.reset:
                self.parent = None
                self.children = []
                self.positive = True
            self._set_pingable("all")
        self.reply(env, True)
        self.maybe_initiate_scan()

    def on_set_pingable(self, env, m):
        if self.lock_owner == m.owner:
            self.tentative = m.tentative
            self._set_pingable(m.mode)
        self.reply(env, True)

    def _set_pingable(self, mode: str) -> None:
        self.pingable = mode
        if mode == "none" or not self.deferred:
            return
        waiting = self.deferred
        self.deferred = deque()
        for env in waiting:
            if self._ping_allowed(env.payload):
                gen = self._answer_ping(env, env.payload)
                self.spawn_task(gen)
            else:
                self.deferred.append(env)

    def on_apply_weight(self, env, m: ApplyWeight):
        if self.pistil is None:
            if self.positive:
                self.internal_weight += m.delta
            else:
                self.internal_weight -= m.delta
        if not self.children:
            self.reply(env, True)
            return None
        return self._apply_below(env, m)

    def _apply_below(self, env, m):
        yield call_all((c.target_blossom, ApplyWeight(m.owner, m.delta)) for c in self.children)
        self.reply(env, True)

    def on_held_query(self, env, m):
        unmatched_root = self.pistil is None and self.parent is None and self.match_edge is None
        self.reply(env, (self.last_scan, unmatched_root, self.priority))

    def on_find_petal(self, env, m):
        if self.pistil == m.top:
            self.reply(env, self.addr)
        elif self.pistil is None:
            self.reply(env, None)
        else:
            self.forward(env, self.pistil, m)

    def on_unpause(self, env, m):
        self.paused = False
        self.reply(env, True)
        self.maybe_initiate_scan(m.backoff or None)

    def on_terminate(self, env, m):
        if self.lock_owner == m.owner:
            self.lock_owner = None
            self.sim.locked_count -= 1
        self.reply(env, True)
        self.sim.terminate(self.addr)

    def on_match_query(self, env, m):
        if self.pistil is None:
            partner = self.match_edge.target_vertex if self.match_edge is not None else None
            self.reply(env, (partner, self.addr))
            return None
        return self._match_query_nested(env)

    def _match_query_nested(self, env):
        info = yield from self._resolve_top()
        top = info[0] if info not in (DEAD, None) else None
        self.reply(env, (None, top))
