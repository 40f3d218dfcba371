"""Edges, pong operations and the message catalogue of the distributed solver."""

from __future__ import annotations

from typing import Any

from .graph import Weight
from .runtime import Address, Message

ZERO = Weight(0)


class DirectedEdge:
    """An edge seen from one side: ``(source_blossom, source_vertex, target_vertex, target_blossom)``.

    Equality and hashing use only the two vertex slots, since the blossom
    slots are a cache of where each endpoint sat when the edge was recorded.
    """

    __slots__ = ("source_blossom", "source_vertex", "target_vertex", "target_blossom")

    def __init__(self, source_blossom: Address, source_vertex: Address, target_vertex: Address, target_blossom: Address):
        self.source_blossom = source_blossom
        self.source_vertex = source_vertex
        self.target_vertex = target_vertex
        self.target_blossom = target_blossom

    def reversed(self) -> "DirectedEdge":
        return DirectedEdge(self.target_blossom, self.target_vertex, self.source_vertex, self.source_blossom)

    def with_source(self, blossom: Address) -> "DirectedEdge":
        return DirectedEdge(blossom, self.source_vertex, self.target_vertex, self.target_blossom)

    def with_target(self, blossom: Address) -> "DirectedEdge":
        return DirectedEdge(self.source_blossom, self.source_vertex, self.target_vertex, blossom)

    def same_vertices(self, other: "DirectedEdge | None") -> bool:
        return (
            other is not None
            and self.source_vertex == other.source_vertex
            and self.target_vertex == other.target_vertex
        )

    def same_undirected(self, other: "DirectedEdge | None") -> bool:
        if other is None:
            return False
        return {self.source_vertex, self.target_vertex} == {other.source_vertex, other.target_vertex}

    def key(self) -> tuple[int, int]:
        return (self.source_vertex, self.target_vertex)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DirectedEdge) and self.same_vertices(other)

    def __hash__(self) -> int:
        return hash((self.source_vertex, self.target_vertex))

    def __repr__(self) -> str:
        return f"Edge({self.source_blossom}:{self.source_vertex}->{self.target_vertex}:{self.target_blossom})"

    def as_list(self) -> list[int]:
        return [self.source_blossom, self.source_vertex, self.target_vertex, self.target_blossom]


# Higher rank wins when two non-reweight operations meet.
RANK = {"augment": 5, "graft": 4, "contract": 3, "expand": 2, "hold": 1}


class Pong:
    """The operation a ping or scan sponsors.

    ``weight`` is the reweight amount for ``reweight`` and the macrovertex
    internal weight for ``expand``.  ``roots`` is the root bucket of a hold
    and the foreign root for graft and augment.  ``floor`` is the least
    unhalved adjusted weight seen among answered pings (``None`` if none),
    which soft scans use to detect overshoot.
    """

    __slots__ = ("tag", "edge", "weight", "roots", "target", "floor", "floor_by")

    def __init__(self, tag: str, edge: DirectedEdge | None = None, weight: Weight = ZERO,
                 roots: frozenset = frozenset(), target: Address | None = None, floor: Weight | None = None,
                 floor_by: int | None = None):
        self.tag = tag
        self.edge = edge
        self.weight = weight
        self.roots = roots
        self.target = target
        self.floor = floor
        # priority of the root on the far side of the floor edge
        self.floor_by = floor_by

    def with_floor(self, floor: tuple) -> "Pong":
        value, by = floor
        if value == self.floor and by == self.floor_by:
            return self
        return Pong(self.tag, self.edge, self.weight, self.roots, self.target, value, by)

    def sort_key(self) -> tuple:
        if self.edge is not None:
            return (self.edge.source_vertex, self.edge.target_vertex, self.target if self.target is not None else -1)
        return (-1, -1, self.target if self.target is not None else -1)

    def describe(self) -> dict[str, Any]:
        d: dict[str, Any] = {"tag": self.tag}
        if self.edge is not None:
            d["edge"] = self.edge.as_list()
        if self.tag in ("reweight", "expand"):
            d["weight"] = self.weight
        if self.roots:
            d["roots"] = sorted(self.roots)
        if self.target is not None:
            d["target"] = self.target
        return d

    def __repr__(self) -> str:
        return f"Pong({self.describe()}, floor={self.floor})"


PASS = Pong("pass")


def _min_floor(a: Pong, b: Pong) -> tuple:
    if a.floor is None:
        return (b.floor, b.floor_by)
    if b.floor is None or a.floor < b.floor or (a.floor == b.floor and (a.floor_by or 0) <= (b.floor_by or 0)):
        return (a.floor, a.floor_by)
    return (b.floor, b.floor_by)


def strip_cluster(p: Pong, hold_cluster: frozenset) -> Pong:
    """Drop cluster members from a hold's bucket; an emptied hold becomes pass."""
    if p.tag != "hold":
        return p
    rest = p.roots - hold_cluster
    if not rest:
        return Pong("pass", floor=p.floor, floor_by=p.floor_by)
    if rest == p.roots:
        return p
    return Pong("hold", p.edge, ZERO, rest, None, p.floor, p.floor_by)


def unify_pongs(a: Pong, b: Pong, hold_cluster: frozenset) -> Pong:
    """Combine two sponsored operations into the one the tree should pursue.

    pass is the identity; two holds merge their buckets; any non-reweight
    beats a reweight; two reweights keep the smaller amount; otherwise the
    higher-ranked operation wins, ties broken by the edge's vertex pair.
    Holds whose buckets lie inside ``hold_cluster`` count as pass.
    """
    a = strip_cluster(a, hold_cluster)
    b = strip_cluster(b, hold_cluster)
    floor = _min_floor(a, b)
    ta, tb = a.tag, b.tag
    if ta == "pass":
        return b.with_floor(floor)
    if tb == "pass":
        return a.with_floor(floor)
    if ta == "hold" and tb == "hold":
        edge = a.edge if a.sort_key() <= b.sort_key() else b.edge
        return Pong("hold", edge, ZERO, a.roots | b.roots, None, *floor)
    if ta == "reweight" and tb == "reweight":
        if a.weight != b.weight:
            win = a if a.weight < b.weight else b
        else:
            win = a if a.sort_key() <= b.sort_key() else b
        return win.with_floor(floor)
    if ta == "reweight":
        return b.with_floor(floor)
    if tb == "reweight":
        return a.with_floor(floor)
    ra, rb = RANK[ta], RANK[tb]
    if ra != rb:
        return (a if ra > rb else b).with_floor(floor)
    return (a if a.sort_key() <= b.sort_key() else b).with_floor(floor)


# --- blossom protocol -------------------------------------------------------


class Ping(Message):
    __slots__ = ("root", "blossom", "weight", "hold_cluster", "addr", "id", "soft", "priority")
    kind = "ping"

    def __init__(self, root, blossom, weight, hold_cluster, addr, id, soft=False, priority=0):
        self.root = root
        self.blossom = blossom
        self.weight = weight
        self.hold_cluster = hold_cluster
        self.addr = addr
        self.id = id
        self.soft = soft
        self.priority = priority


class Scan(Message):
    __slots__ = ("root", "blossom", "weight", "hold_cluster", "soft", "priority")
    kind = "scan"

    def __init__(self, root, blossom, weight, hold_cluster, soft=False, priority=0):
        self.root = root
        self.blossom = blossom
        self.weight = weight
        self.hold_cluster = hold_cluster
        self.soft = soft
        self.priority = priority


class Resolve(Message):
    """Walk up the pistil chain (summing weights), then up the parent chain.

    Answered by the last blossom reached with ``(beta, chain_weight,
    beta_positive, root, root_matched, root_priority)``, or with ``(beta, chain_weight)`` when
    ``to_root`` is false.
    """

    __slots__ = ("acc", "beta", "beta_positive", "to_root", "hops")
    kind = "resolve"

    def __init__(self, acc, beta=None, beta_positive=True, to_root=True, hops=0):
        self.acc = acc
        self.beta = beta
        self.beta_positive = beta_positive
        self.to_root = to_root
        self.hops = hops


class Augment(Message):
    __slots__ = ("edge", "owner")
    kind = "augment"

    def __init__(self, edge: DirectedEdge, owner: Address):
        self.edge = edge
        self.owner = owner


class Begin(Message):
    kind = "begin"


class Kick(Message):
    """Self-addressed wake-up that lets an eligible root start a scan."""

    kind = "kick"


class GetState(Message):
    kind = "get_state"


class SetSlots(Message):
    __slots__ = ("owner", "slots")
    kind = "set_slots"

    def __init__(self, owner: Address, slots: dict[str, Any]):
        self.owner = owner
        self.slots = slots


class LockTree(Message):
    __slots__ = ("owner", "priority")
    kind = "lock_tree"

    def __init__(self, owner: Address, priority: int):
        self.owner = owner
        self.priority = priority


class Unlock(Message):
    __slots__ = ("owner", "reset")
    kind = "unlock"

    def __init__(self, owner: Address, reset: bool = False):
        self.owner = owner
        self.reset = reset


class SetPingable(Message):
    __slots__ = ("owner", "mode", "tentative")
    kind = "set_pingable"

    def __init__(self, owner: Address, mode: str, tentative: int | None = None):
        self.owner = owner
        self.mode = mode
        self.tentative = tentative


class ApplyWeight(Message):
    """Shift ``delta`` onto positive and off negative top-level blossoms of a tree."""

    __slots__ = ("owner", "delta")
    kind = "apply_weight"

    def __init__(self, owner: Address, delta: Weight):
        self.owner = owner
        self.delta = delta


class HeldQuery(Message):
    kind = "held_query"


class FindPetal(Message):
    """Climb a vertex's pistil chain to the member whose pistil is ``top``."""

    __slots__ = ("top",)
    kind = "find_petal"

    def __init__(self, top: Address):
        self.top = top


class Reping(Message):
    """Ask a source vertex to re-ping a target softly and return the pong."""

    __slots__ = ("target", "root", "hold_cluster", "priority")
    kind = "reping"

    def __init__(self, target, root, hold_cluster, priority):
        self.target = target
        self.root = root
        self.hold_cluster = hold_cluster
        self.priority = priority


class Unpause(Message):
    __slots__ = ("backoff",)
    kind = "unpause"

    def __init__(self, backoff: int = 0):
        self.backoff = backoff


class MatchQuery(Message):
    kind = "match_query"


class Yield(Message):
    """Sent to a tentative reweighter's supervisor when a higher-priority tree sees overshoot."""

    __slots__ = ("by",)
    kind = "yield"

    def __init__(self, by: int):
        self.by = by


class Wound(Message):
    """Asks a lower-priority supervisor that has not entered its critical section to back off."""

    __slots__ = ("by",)
    kind = "wound"

    def __init__(self, by: int):
        self.by = by


class Terminate(Message):
    __slots__ = ("owner",)
    kind = "terminate"

    def __init__(self, owner: Address):
        self.owner = owner


# --- dryad protocol ---------------------------------------------------------


class Sow(Message):
    __slots__ = ("id",)
    kind = "sow"

    def __init__(self, id: int):
        self.id = id


class Discover(Message):
    __slots__ = ("id",)
    kind = "discover"

    def __init__(self, id: int):
        self.id = id


class Sprout(Message):
    __slots__ = ("ids",)
    kind = "sprout"

    def __init__(self, ids: tuple[int, ...]):
        self.ids = ids


class Reap(Message):
    __slots__ = ("id_a", "id_b")
    kind = "reap"

    def __init__(self, id_a: int, id_b: int):
        self.id_a = id_a
        self.id_b = id_b


class StartSolving(Message):
    kind = "start_solving"


class RunTerminalExpand(Message):
    kind = "run_terminal_expand"
