"""Serial reference solvers: weighted blossom for K_n and Hungarian for bipartite graphs.

The blossom solver grows a single alternating tree at a time and applies one
operation per step.  Matches are stored only between top-level blossoms; the
matching inside a macrovertex is implied by which petal carries its
external match, and is made explicit when the macrovertex is expanded.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from typing import Iterable, Mapping

from .graph import Matching, ProblemGraph, Weight
from .runtime import EventTrace
from .snapshot import BlossomView, StateSnapshot

ZERO = Weight(0)
INFINITY = math.inf

VEdge = tuple[int, int]  # (vertex inside the owning blossom, vertex outside)


@dataclass
class Macro:
    petals: list[int]  # blossom ids in cyclic order
    links: list[VEdge]  # links[k] joins petals[k] (first) to petals[k+1] (second)
    members: frozenset[int]


@dataclass
class SerialState:
    graph: ProblemGraph
    weight: dict[int, Weight] = field(default_factory=dict)
    pistil: dict[int, int] = field(default_factory=dict)
    macros: dict[int, Macro] = field(default_factory=dict)
    top_level: set[int] = field(default_factory=set)
    match: dict[int, VEdge] = field(default_factory=dict)
    root: int | None = None
    sign: dict[int, int] = field(default_factory=dict)
    parent: dict[int, VEdge] = field(default_factory=dict)
    next_id: int = 0

    @classmethod
    def initial(cls, graph: ProblemGraph) -> "SerialState":
        s = cls(graph)
        for v in range(graph.n):
            s.weight[v] = ZERO
            s.top_level.add(v)
        s.next_id = graph.n
        return s

    # structure queries
    def members(self, b: int) -> frozenset[int]:
        return self.macros[b].members if b in self.macros else frozenset((b,))

    def top(self, v: int) -> int:
        while v in self.pistil:
            v = self.pistil[v]
        return v

    def chain(self, v: int) -> list[int]:
        out = [v]
        while v in self.pistil:
            v = self.pistil[v]
            out.append(v)
        return out

    def adjusted(self, u: int, v: int) -> Weight:
        """Raw weight minus every blossom containing exactly one endpoint."""
        cu, cv = self.chain(u), self.chain(v)
        common = set(cu) & set(cv)
        w = self.graph.edge_weight(u, v)
        for b in cu:
            if b not in common:
                w -= self.weight[b]
        for b in cv:
            if b not in common:
                w -= self.weight[b]
        return w

    def unmatched(self) -> list[int]:
        return sorted(b for b in self.top_level if b not in self.match)

    def tree_parent(self, b: int) -> int | None:
        e = self.parent.get(b)
        return None if e is None else self.top(e[1])

    def path_to_root(self, b: int) -> list[int]:
        path = [b]
        while b != self.root:
            b = self.tree_parent(b)
            path.append(b)
        return path

    def snapshot(self, tick: int = 0) -> StateSnapshot:
        """Render as a snapshot the independent validators understand."""

        def ev(owner: int, e: VEdge | None):
            if e is None:
                return None
            return (owner, e[0], e[1], self.top(e[1]))

        children: dict[int, list] = {b: [] for b in self.top_level}
        for b, e in self.parent.items():
            p = self.top(e[1])
            children[p].append((p, e[1], e[0], b))
        views = {}
        for b, w in self.weight.items():
            if b in self.macros:
                m = self.macros[b]
                k = len(m.petals)
                petals = tuple((m.petals[i], m.links[i][0], m.links[i][1], m.petals[(i + 1) % k]) for i in range(k))
                members = tuple(sorted(m.members))
                vertex = None
            else:
                petals = ()
                members = (b,)
                vertex = b
            views[b] = BlossomView(
                key=b,
                vertex=vertex,
                members=members,
                weight=w,
                pistil=self.pistil.get(b),
                petals=petals,
                parent=ev(b, self.parent.get(b)),
                children=tuple(sorted(children.get(b, ()))),
                match=ev(b, self.match.get(b)),
                positive=self.sign.get(b, 1) > 0,
            )
        return StateSnapshot(self.graph, views, tick)


# --- operations -------------------------------------------------------------


def find_operation(s: SerialState):
    """The next operation, by precedence augment > graft > contract > expand.

    Candidates within a kind are compared by their vertex pair, so the
    choice is deterministic.  Returns ``None`` when only a reweight remains.
    """
    best: dict[str, tuple] = {}
    positives = sorted(b for b, sg in s.sign.items() if sg > 0)
    for p in positives:
        for u in sorted(s.members(p)):
            for v in range(s.graph.n):
                q = s.top(v)
                if q == p or s.adjusted(u, v) != 0:
                    continue
                if q not in s.sign:
                    kind = "augment" if q not in s.match else "graft"
                elif s.sign[q] > 0:
                    kind = "contract"
                else:
                    continue
                cand = (min(u, v), max(u, v), u, v)
                if kind not in best or cand < best[kind]:
                    best[kind] = cand
    for kind in ("augment", "graft", "contract"):
        if kind in best:
            _, _, u, v = best[kind]
            return kind, (u, v)
    expandable = sorted(b for b, sg in s.sign.items() if sg < 0 and b in s.macros and s.weight[b] == 0)
    if expandable:
        return "expand", expandable[0]
    return None


def reweight_amount(s: SerialState):
    """Largest shift keeping every adjusted weight nonnegative.

    Minimum over: adjusted weights from positive blossoms to blossoms outside
    the tree, half the adjusted weights between distinct positive blossoms,
    and the internal weights of negative macrovertices.  ``math.inf`` if no
    candidate exists.
    """
    best = INFINITY
    pos_vertices = [(u, p) for p, sg in s.sign.items() if sg > 0 for u in s.members(p)]
    for u, p in pos_vertices:
        for v in range(s.graph.n):
            q = s.top(v)
            if q == p:
                continue
            if q not in s.sign:
                a = s.adjusted(u, v)
            elif s.sign[q] > 0:
                a = s.adjusted(u, v) / 2
            else:
                continue
            if a < best:
                best = a
    for b, sg in s.sign.items():
        if sg < 0 and b in s.macros and s.weight[b] < best:
            best = s.weight[b]
    return best


def apply_reweight(s: SerialState, delta: Weight) -> None:
    for b, sg in s.sign.items():
        s.weight[b] += delta if sg > 0 else -delta


def graft(s: SerialState, u: int, v: int) -> tuple[int, int]:
    q = s.top(v)
    qx, rv = s.match[q]
    r = s.top(rv)
    s.sign[q] = -1
    s.parent[q] = (v, u)
    s.sign[r] = 1
    s.parent[r] = (rv, qx)
    return q, r


def augment(s: SerialState, u: int, v: int) -> None:
    p, q = s.top(u), s.top(v)
    s.match[q] = (v, u)
    s.match[p] = (u, v)
    b = p
    while b != s.root:
        # b is positive: its parent edge is its match, leading to a negative
        neg = s.tree_parent(b)
        nx, px = s.parent[neg]
        up = s.top(px)
        s.match[neg] = (nx, px)
        s.match[up] = (px, nx)
        b = up
    s.sign.clear()
    s.parent.clear()
    s.root = None


def contract_cycle(s: SerialState, u: int, v: int) -> int:
    """Contract the cycle closed by weightless edge (u, v) between two positives."""
    a, b = s.top(u), s.top(v)
    if s.sign.get(a, 0) <= 0 or s.sign.get(b, 0) <= 0 or a == b:
        raise ValueError("contraction needs two distinct positive blossoms of the tree")
    pa, pb = s.path_to_root(a), s.path_to_root(b)
    on_b = set(pb)
    i = next(k for k, x in enumerate(pa) if x in on_b)
    base = pa[i]
    j = pb.index(base)
    down = pa[:i][::-1]  # base's child ... a
    up = pb[:j]  # b ... child of base
    petals = [base] + down + up
    links: list[VEdge] = []
    for x in down:
        cx, px = s.parent[x]
        links.append((px, cx))
    links.append((u, v))
    for x in up:
        links.append(s.parent[x])
    macro = s.next_id
    s.next_id += 1
    members = frozenset().union(*(s.members(x) for x in petals))
    s.macros[macro] = Macro(petals, links, members)
    s.weight[macro] = ZERO
    base_parent = s.parent.get(base)
    base_match = s.match.get(base)
    for x in petals:
        s.pistil[x] = macro
        s.top_level.discard(x)
        s.sign.pop(x, None)
        s.parent.pop(x, None)
        s.match.pop(x, None)
    s.top_level.add(macro)
    s.sign[macro] = 1
    if base_match is not None:
        s.match[macro] = base_match
    if base_parent is not None:
        s.parent[macro] = base_parent
    if base == s.root:
        s.root = macro
    return macro


def _rotation(m: Macro, base_index: int) -> dict[int, VEdge]:
    """Internal matches when ``petals[base_index]`` holds the external match."""
    k = len(m.petals)
    out: dict[int, VEdge] = {}
    for step in range(1, k, 2):
        x = (base_index + step) % k
        y = (x + 1) % k
        link = m.links[x]
        out[m.petals[x]] = link
        out[m.petals[y]] = (link[1], link[0])
    return out


def _petal_of(s: SerialState, m: Macro, vertex: int) -> int:
    chain = s.chain(vertex)
    for idx, p in enumerate(m.petals):
        if p in chain:
            return idx
    raise ValueError("vertex not inside macrovertex")


def _dissolve(s: SerialState, b: int) -> Macro:
    m = s.macros.pop(b)
    del s.weight[b]
    s.top_level.discard(b)
    for p in m.petals:
        del s.pistil[p]
        s.top_level.add(p)
    return m


def expand_macrovertex(s: SerialState, b: int) -> None:
    """Expand top-level macrovertex ``b``.

    Outside any tree the petals simply take the rotated internal matching.
    As a negative tree blossom with zero weight, the even-length route from
    the petal holding the parent edge to the petal holding the match joins
    the tree and the remaining petals leave it as matched pairs.
    """
    if b not in s.macros or b not in s.top_level:
        raise ValueError(f"{b} is not a top-level macrovertex")
    sg = s.sign.get(b)
    if sg is not None and sg > 0:
        raise ValueError("cannot expand a positive tree blossom")
    m = s.macros[b]
    ext = s.match.get(b)
    k = len(m.petals)
    if ext is None:
        raise ValueError("macrovertex has no external match")
    j = _petal_of(s, m, ext[0])
    internal = _rotation(m, j)
    parent_edge = s.parent.get(b)
    i = _petal_of(s, m, parent_edge[0]) if parent_edge is not None else None
    _dissolve(s, b)
    s.match.pop(b, None)
    s.match[m.petals[j]] = ext
    s.match.update(internal)
    if sg is None:
        return
    s.sign.pop(b)
    s.parent.pop(b)
    # walk from p_in to p_out the way with an even number of links
    forward = (j - i) % k
    route = [(i + t) % k for t in range(forward + 1)] if forward % 2 == 0 else [(i - t) % k for t in range(k - forward + 1)]
    s.parent[m.petals[route[0]]] = parent_edge
    s.sign[m.petals[route[0]]] = -1
    for t in range(1, len(route)):
        prev, cur = route[t - 1], route[t]
        if cur == (prev + 1) % k:
            link = m.links[prev]
            edge = (link[1], link[0])
        else:
            edge = m.links[cur]
        s.parent[m.petals[cur]] = edge
        s.sign[m.petals[cur]] = 1 if t % 2 else -1


def terminal_expand(s: SerialState) -> list[int]:
    """Expand every macrovertex of a perfect contracted matching, outermost first."""
    done = []
    while True:
        tops = sorted(b for b in s.top_level if b in s.macros)
        if not tops:
            return done
        for b in tops:
            expand_macrovertex(s, b)
            done.append(b)


def serial_mwpm(graph: ProblemGraph, snapshots: list | None = None) -> tuple[Matching, EventTrace]:
    """Minimum-weight perfect matching by the serial blossom algorithm.

    The trace holds one record per operation in order, a ``certificate``
    record with the contracted state before terminal expansion, and one
    ``reap`` record per final pair.  When ``snapshots`` is a list, the state
    after every operation is appended to it.
    """
    graph.validate()
    s = SerialState.initial(graph)
    trace = EventTrace()
    step = 0
    actor = "serial"

    def note(kind: str, **payload) -> None:
        trace.add(step, actor, kind, payload)
        if snapshots is not None:
            snapshots.append(s.snapshot(step))

    while True:
        free = s.unmatched()
        if not free:
            break
        s.root = free[0]
        s.sign = {s.root: 1}
        s.parent = {}
        note("root", blossom=s.root)
        while s.root is not None:
            step += 1
            op = find_operation(s)
            if op is None:
                delta = reweight_amount(s)
                if delta == INFINITY:
                    raise RuntimeError("no operation applies")
                apply_reweight(s, delta)
                note("reweight", amount=delta, root=s.root)
                continue
            kind, arg = op
            if kind == "augment":
                u, v = arg
                augment(s, u, v)
                note("augment", edge=[u, v])
            elif kind == "graft":
                u, v = arg
                q, r = graft(s, u, v)
                note("graft", edge=[u, v], negative=q, positive=r)
            elif kind == "contract":
                u, v = arg
                mac = contract_cycle(s, u, v)
                note("contract", edge=[u, v], macro=mac, petals=list(s.macros[mac].petals))
            else:
                expand_macrovertex(s, arg)
                note("expand", macro=arg)
    trace.add(step, actor, "certificate", s.snapshot(step).to_dict())
    for b in terminal_expand(s):
        trace.add(step, actor, "expand", {"macro": b, "terminal": True})
    pairs = sorted(tuple(sorted((b, e[1]))) for b, e in s.match.items() if b < e[1])
    for a, b in pairs:
        trace.add(step, actor, "reap", {"pair": [a, b]})
    return Matching.from_pairs(pairs), trace


# --- Hungarian --------------------------------------------------------------


class NotBipartite(ValueError):
    pass


def two_colouring(adjacency: Mapping[int, Iterable[int]]) -> dict[int, int]:
    colour: dict[int, int] = {}
    for start in sorted(adjacency):
        if start in colour:
            continue
        colour[start] = 0
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for y in adjacency[x]:
                if y not in colour:
                    colour[y] = 1 - colour[x]
                    queue.append(y)
                elif colour[y] == colour[x]:
                    raise NotBipartite(f"odd cycle through {x}-{y}")
    return colour


def hungarian_maximum_matching(adjacency: Mapping[int, Iterable[int]], m0: Matching | None = None) -> Matching:
    """Maximum-cardinality matching of a bipartite graph by alternating trees.

    ``adjacency`` maps every vertex to its neighbours (symmetric).  Starting
    from ``m0``, a tree is grown from each unmatched vertex in turn: reaching
    another unmatched vertex augments; a tree that gets stuck can never be
    augmented later, so its vertices are set aside.
    """
    adj = {x: sorted(set(ys)) for x, ys in adjacency.items()}
    for x, ys in list(adj.items()):
        for y in ys:
            adj.setdefault(y, [])
            if x not in adj[y]:
                raise ValueError(f"adjacency not symmetric at {x}-{y}")
    two_colouring(adj)
    mate: dict[int, int] = dict(m0.mate()) if m0 is not None else {}
    for x, y in mate.items():
        if y not in adj.get(x, ()):
            raise ValueError(f"initial matching uses non-edge {x}-{y}")
    removed: set[int] = set()
    progress = True
    while progress:
        progress = False
        for root in sorted(adj):
            if root in mate or root in removed:
                continue
            outer = {root: None}  # positive vertex -> the negative it was reached through
            inner: dict[int, int] = {}  # negative vertex -> positive parent
            queue = deque([root])
            end = None
            while queue and end is None:
                x = queue.popleft()
                for y in adj[x]:
                    if y in removed or y in inner or y in outer:
                        continue
                    inner[y] = x
                    if y not in mate:
                        end = y
                        break
                    z = mate[y]
                    outer[z] = y
                    queue.append(z)
            if end is None:
                removed.update(outer)
                removed.update(inner)
                continue
            y = end
            while y is not None:
                x = inner[y]
                nxt = outer[x]
                mate[x] = y
                mate[y] = x
                y = nxt
            progress = True
    return Matching.from_pairs((x, y) for x, y in mate.items() if x < y)
