"""Supervisor processes: one per sponsored operation.

A supervisor locks the trees it needs, checks the roots are still what the
scan saw, re-derives the sponsoring action, performs the state change with
slot writes, and releases.  Any failed check aborts cleanly: locks are
released and the sponsoring root is unpaused with a small random backoff.
"""

from __future__ import annotations

from typing import Any

from .graph import Weight
from .messages import (
    ApplyWeight,
    Augment,
    DirectedEdge,
    FindPetal,
    GetState,
    HeldQuery,
    LockTree,
    Pong,
    Reping,
    Scan,
    SetPingable,
    SetSlots,
    Terminate,
    Unlock,
    Unpause,
    Wound,
    unify_pongs,
)
from .node import BlossomNode, NodeView
from .runtime import DEAD, Address, Process, call, call_all, sleep

ZERO = Weight(0)

LOCK_RETRIES = 2


class Abort(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def acquire_tree_lock(proc: "Supervisor", roots: list[Address]):
    """Lock every blossom of each listed tree, in root-priority order.

    A generator to be driven with ``yield from`` inside a supervisor task.
    Returns true on success.  On failure everything acquired so far stays in
    ``proc.locked`` for the caller to release.  When the holder of a wanted
    tree has lower priority the requester asks it to back off and retries.
    """
    prios = []
    for r in roots:
        st = yield call(r, GetState())
        if st is DEAD:
            return False
        prios.append((st.priority, r))
    for _, r in sorted(set(prios)):
        for attempt in range(LOCK_RETRIES + 1):
            res = yield call(r, LockTree(proc.addr, proc.priority))
            if res is DEAD:
                return False
            ok, addrs, blocker = res
            proc.locked.extend(addrs)
            if addrs:
                proc.trace("lock", tree=r, addrs=list(addrs))
            if ok:
                break
            if addrs:
                yield from release_tree_locks(proc, addrs)
            if blocker is None or attempt == LOCK_RETRIES:
                return False
            holder, holder_priority = blocker
            if holder_priority <= proc.priority:
                return False
            proc.send(holder, Wound(proc.priority))
            yield sleep(2 + attempt * 2)
        if proc.wounded:
            return False
    return True


def release_tree_locks(proc: "Supervisor", addrs: list[Address] | None = None, reset: bool = False):
    """Unlock in reverse acquisition order; restores pingable to all."""
    todo = proc.locked if addrs is None else addrs
    seen: set[Address] = set()
    order = []
    for a in reversed(todo):
        if a not in seen:
            seen.add(a)
            order.append(a)
    if order:
        yield call_all((a, Unlock(proc.addr, reset)) for a in order)
        proc.trace("unlock", addrs=order)
    if addrs is None:
        proc.locked = []
    else:
        proc.locked = [a for a in proc.locked if a not in seen]


class Supervisor(Process):
    """Carries out one sponsored action for ``sponsor`` (a root address).

    Terminal expansions directed by the dryad have no sponsor and run when
    the dryad sends ``run_terminal_expand``.
    """

    kind = "supervisor"

    def __init__(self, sponsor: Address | None, action: Pong, priority: int, dryad: Address, terminal: bool = False):
        super().__init__()
        self.sponsor = sponsor
        self.action = action
        self.priority = priority
        self.dryad = dryad
        self.terminal = terminal
        self.phase = "locking"
        self.locked: list[Address] = []
        self.wounded = False
        self.yield_by: int | None = None
        self.updates = 0

    def describe(self) -> dict[str, Any]:
        return {"sponsor": self.sponsor, "action": self.action.describe(), "priority": self.priority}

    def trace(self, kind: str, **payload) -> None:
        self.sim.trace.add(self.sim.tick, self.addr, kind, payload)

    def started(self) -> None:
        if not self.terminal:
            self.spawn_task(self.run())

    # --- incoming notices -------------------------------------------------

    def on_yield(self, env, m):
        if self.phase == "tentative" and (self.yield_by is None or m.by < self.yield_by):
            self.yield_by = m.by

    def on_wound(self, env, m):
        if self.phase in ("locking", "revalidating"):
            self.wounded = True

    # --- helpers ------------------------------------------------------------

    def state(self, addr: Address):
        st = yield call(addr, GetState())
        if st is DEAD:
            raise Abort("dead blossom")
        return st

    def states(self, addrs: list[Address]):
        res = yield call_all((a, GetState()) for a in addrs)
        if any(r is DEAD for r in res):
            raise Abort("dead blossom")
        return res

    def set_pingable(self, mode: str, tentative: int | None = None):
        if self.locked:
            yield call_all((a, SetPingable(self.addr, mode, tentative)) for a in dict.fromkeys(self.locked))

    def write(self, slot_updates: dict[Address, dict[str, Any]]):
        yield call_all((a, SetSlots(self.addr, s)) for a, s in slot_updates.items())

    def lock(self, roots: list[Address]):
        ok = yield from acquire_tree_lock(self, roots)
        if not ok:
            raise Abort("lock denied" if not self.wounded else "wounded")

    def check_unmatched_roots(self, roots: list[Address]):
        sts = yield from self.states(roots)
        for st in sts:
            if not st.is_unmatched_root or st.lock_owner != self.addr:
                raise Abort("root changed")
        return sts

    def reping(self, edge: DirectedEdge, root: Address, cluster: frozenset):
        p = yield call(edge.source_vertex, Reping(edge.target_vertex, root, cluster, self.priority))
        if p is DEAD or p is None:
            raise Abort("re-ping failed")
        return p

    def enter_critical(self):
        if self.wounded:
            raise Abort("wounded")
        self.phase = "critical"
        yield from self.set_pingable("none")

    def record(self, kind: str, **payload) -> None:
        self.updates += 1
        self.sim.state_version += 1
        self.trace(kind, **payload)

    def finish(self, backoff: int = 0, extra_unpause: tuple = ()):
        self.phase = "releasing"
        yield from release_tree_locks(self)
        targets = [a for a in (self.sponsor, *extra_unpause) if a is not None]
        if targets:
            yield call_all((a, Unpause(backoff)) for a in targets)
        self.phase = "done"
        self.sim.terminate(self.addr)

    # --- lifecycle ----------------------------------------------------------

    def run(self):
        tag = self.action.tag
        extra: tuple = ()
        try:
            if tag == "graft":
                yield from self.do_graft()
            elif tag == "augment":
                yield from self.do_augment()
            elif tag == "contract":
                extra = yield from self.do_contract()
            elif tag == "expand":
                yield from self.do_expand()
            elif tag == "reweight":
                yield from self.do_reweight()
            elif tag == "hold":
                yield from self.do_multireweight()
            else:
                raise Abort(f"nothing to do for {tag}")
        except Abort as exc:
            self.phase = "aborted"
            self.trace("abort", reason=exc.reason, action=tag)
            yield from self.finish(backoff=self.sim.rng.randint(1, 4))
            return
        yield from self.finish(extra_unpause=extra)

    def revalidate(self, root: Address, tag: str):
        """Soft re-ping of the sponsoring edge; must sponsor the same action."""
        self.phase = "revalidating"
        yield from self.set_pingable("soft")
        p = yield from self.reping(self.action.edge, root, frozenset((root,)))
        if p.tag != tag or not p.edge.same_vertices(self.action.edge):
            raise Abort(f"sponsor changed to {p.tag}")
        return p

    # --- graft --------------------------------------------------------------

    def do_graft(self):
        root = self.sponsor
        a_addr = self.action.edge.target_blossom
        a0 = yield from self.state(a_addr)
        if not a0.is_barbell:
            raise Abort("target not a barbell")
        b_addr = a0.match_edge.target_blossom
        yield from self.lock([root, a_addr, b_addr])
        yield from self.check_unmatched_roots([root])
        sa, sb = yield from self.states([a_addr, b_addr])
        if not (sa.is_barbell and sb.is_barbell and sa.match_edge.target_blossom == b_addr
                and sb.match_edge.target_blossom == a_addr):
            raise Abort("barbell changed")
        p = yield from self.revalidate(root, "graft")
        e = p.edge
        if e.target_blossom != a_addr:
            raise Abort("graft target moved")
        yield from self.enter_critical()
        sp = yield from self.state(e.source_blossom)
        yield from self.write({
            a_addr: {"positive": False, "parent": e.reversed(), "children": [sa.match_edge]},
            b_addr: {"positive": True, "parent": sb.match_edge, "children": []},
            sp.addr: {"children": sp.children + [e]},
        })
        self.record("graft", edge=e.as_list(), root=root)

    # --- augment ------------------------------------------------------------

    def do_augment(self):
        root = self.sponsor
        other = min(self.action.roots)
        yield from self.lock([root, other])
        yield from self.check_unmatched_roots([root, other])
        p = yield from self.revalidate(root, "augment")
        if other not in p.roots:
            raise Abort("augment target moved")
        yield from self.enter_critical()
        e = p.edge
        done = yield call_all([
            (e.source_blossom, Augment(e, self.addr)),
            (e.target_blossom, Augment(e.reversed(), self.addr)),
        ])
        if any(d is DEAD for d in done):
            # cannot happen under locks; leave a loud marker rather than guess
            self.trace("warning", augment="chain hit a dead blossom")
        self.record("augment", edge=e.as_list(), roots=[root, other])
        self.phase = "releasing"
        yield from release_tree_locks(self, reset=True)

    # --- contract -----------------------------------------------------------

    def path_to_root(self, start: Address):
        path = []
        seen = set()
        cur = start
        while True:
            if cur in seen:
                raise Abort("cycle in tree")
            seen.add(cur)
            st = yield from self.state(cur)
            path.append(st)
            if st.parent is None:
                return path
            cur = st.parent.target_blossom

    def do_contract(self):
        root = self.sponsor
        yield from self.lock([root])
        yield from self.check_unmatched_roots([root])
        p = yield from self.revalidate(root, "contract")
        yield from self.enter_critical()
        e = p.edge
        path_v = yield from self.path_to_root(e.source_blossom)
        path_w = yield from self.path_to_root(e.target_blossom)
        index_w = {st.addr: j for j, st in enumerate(path_w)}
        for i, st in enumerate(path_v):
            if st.addr in index_w:
                j = index_w[st.addr]
                break
        else:
            raise Abort("no common ancestor")
        base = path_v[i]
        down_v = path_v[:i][::-1]
        up_w = path_w[:j]
        cycle = [base] + down_v + up_w
        edges = [x.parent.reversed() for x in down_v] + [e] + [x.parent for x in up_w]
        if len(cycle) % 2 == 0 or len(cycle) < 3:
            raise Abort("cycle is not odd")
        in_cycle = {x.addr for x in cycle}

        members = tuple(sorted(v for x in cycle for v in x.members))
        # macrovertices never ping, so they need no edge weights
        macro = BlossomNode(None, self.dryad, None)
        macro.members = members
        macro.priority = min(x.priority for x in cycle)
        macro.paused = True
        macro.active = True
        macro.lock_owner = self.addr
        macro.lock_priority = self.priority
        macro.pingable = "none"
        m_addr = self.sim.spawn(macro, by=self.addr)
        self.sim.locked_count += 1
        self.locked.append(m_addr)
        self.trace("lock", tree=m_addr, addrs=[m_addr])

        children = [c.with_source(m_addr) for x in cycle for c in x.children if c.target_blossom not in in_cycle]
        macro.petals = list(edges)
        macro.positive = True
        macro.parent = base.parent.with_source(m_addr) if base.parent is not None else None
        macro.match_edge = base.match_edge.with_source(m_addr) if base.match_edge is not None else None
        macro.children = children

        updates: dict[Address, dict[str, Any]] = {}
        for x in cycle:
            updates[x.addr] = {"pistil": m_addr, "parent": None, "children": [], "match_edge": None, "positive": True}
        if base.parent is not None:
            sp = yield from self.state(base.parent.target_blossom)
            slots: dict[str, Any] = {
                "children": [c.with_target(m_addr) if c.target_blossom == base.addr else c for c in sp.children]
            }
            if sp.match_edge is not None and sp.match_edge.target_blossom == base.addr:
                slots["match_edge"] = sp.match_edge.with_target(m_addr)
            updates[sp.addr] = slots
        for c in children:
            updates[c.target_blossom] = {"parent": c.reversed()}
        yield from self.write(updates)
        self.record(
            "contract",
            edge=e.as_list(),
            macro=m_addr,
            petals=[x.addr for x in cycle],
            members=list(members),
        )
        return (m_addr,)

    # --- expand -------------------------------------------------------------

    def do_expand(self):
        root = self.sponsor
        b_addr = self.action.target
        yield from self.lock([root])
        yield from self.check_unmatched_roots([root])
        self.phase = "revalidating"
        sb = yield from self.state(b_addr)
        if (sb.pistil is not None or sb.positive or not sb.petals or sb.internal_weight != 0
                or sb.parent is None or sb.lock_owner != self.addr):
            raise Abort("macrovertex no longer expandable")
        yield from self.enter_critical()
        yield from self.expand_in_tree(sb)

    def find_petal(self, vertex: Address, top: Address):
        r = yield call(vertex, FindPetal(top))
        if r is DEAD or r is None:
            raise Abort("petal lookup failed")
        return r

    def expand_in_tree(self, sb: NodeView):
        b_addr = sb.addr
        pe, me = sb.parent, sb.match_edge
        p_in = yield from self.find_petal(pe.source_vertex, b_addr)
        p_out = yield from self.find_petal(me.source_vertex, b_addr)
        petals = sb.petals
        nodes = [x.source_blossom for x in petals]
        k = len(nodes)
        i, j = nodes.index(p_in), nodes.index(p_out)
        updates = rotated_matches(petals, j)
        for x in nodes:
            updates[x].update({"pistil": None, "parent": None, "children": [], "positive": True})
        updates[p_out]["match_edge"] = me.with_source(p_out)

        # the even-length alternating route from the entry petal to the base
        path = [i]
        route: list[DirectedEdge] = []
        step = -1 if (i - j) % k % 2 == 0 else 1
        q = i
        while q != j:
            if step == -1:
                route.append(petals[(q - 1) % k].reversed())
            else:
                route.append(petals[q])
            q = (q + step) % k
            path.append(q)
        updates[p_in]["parent"] = pe.with_source(p_in)
        updates[p_in]["positive"] = False
        for t, edge in enumerate(route):
            a, b = nodes[path[t]], nodes[path[t + 1]]
            updates[a]["children"] = [edge]
            updates[b]["parent"] = edge.reversed()
            updates[b]["positive"] = (t % 2 == 0)
        updates[p_out]["children"] = [me.with_source(p_out)]

        sp = yield from self.state(pe.target_blossom)
        updates[sp.addr] = {
            "children": [c.with_target(p_in) if c.target_blossom == b_addr else c for c in sp.children]
        }
        sc = yield from self.state(me.target_blossom)
        updates[sc.addr] = {
            "parent": sc.parent.with_target(p_out) if sc.parent is not None else None,
            "match_edge": sc.match_edge.with_target(p_out),
        }
        yield from self.write(updates)
        yield call(b_addr, Terminate(self.addr))
        self.record(
            "expand",
            macro=b_addr,
            petals=nodes,
            path=[nodes[x] for x in path],
            terminal=False,
        )

    def on_run_terminal_expand(self, env, m):
        return self._terminal(env)

    def _terminal(self, env):
        b_addr = self.action.target
        ok = True
        try:
            sb = yield from self.state(b_addr)
            if sb.pistil is not None or sb.parent is not None or sb.match_edge is None or not sb.petals:
                raise Abort("not a tree-free matched macrovertex")
            c_addr = sb.match_edge.target_blossom
            yield from self.lock([b_addr, c_addr])
            sb, sc = yield from self.states([b_addr, c_addr])
            if (sb.parent is not None or sb.children or sb.match_edge is None
                    or sc.match_edge is None or sc.match_edge.target_blossom != b_addr):
                raise Abort("macrovertex changed")
            yield from self.enter_critical()
            me = sb.match_edge
            p_out = yield from self.find_petal(me.source_vertex, b_addr)
            petals = sb.petals
            nodes = [x.source_blossom for x in petals]
            updates = rotated_matches(petals, nodes.index(p_out))
            for x in nodes:
                updates[x].update({"pistil": None, "parent": None, "children": [], "positive": True})
            updates[p_out]["match_edge"] = me.with_source(p_out)
            updates[c_addr] = {"match_edge": sc.match_edge.with_target(p_out)}
            yield from self.write(updates)
            yield call(b_addr, Terminate(self.addr))
            self.record("expand", macro=b_addr, petals=nodes, path=[], terminal=True)
        except Abort as exc:
            ok = False
            self.trace("abort", reason=exc.reason, action="expand")
        self.phase = "releasing"
        yield from release_tree_locks(self)
        self.reply(env, ok)
        self.phase = "done"
        self.sim.terminate(self.addr)

    # --- reweight -----------------------------------------------------------

    def soft_scan(self, root: Address, cluster: frozenset):
        r = yield call(root, Scan(root, None, ZERO, cluster, True, self.priority))
        if r is DEAD or r is None:
            raise Abort("soft scan failed")
        return r

    def apply(self, roots: list[Address], delta: Weight):
        yield call_all((r, ApplyWeight(self.addr, delta)) for r in roots)

    def tentative_check(self, roots: list[Address], delta: Weight, kind: str):
        """Apply ``delta``, soft-scan for overshoot, and rewind if needed."""
        yield from self.set_pingable("none")
        yield from self.apply(roots, delta)
        self.record(kind, roots=list(roots), delta=delta, priority=self.priority)
        self.phase = "tentative"
        yield from self.set_pingable("soft", self.priority)
        floor, floor_by = None, None
        results = yield call_all((r, Scan(r, None, ZERO, frozenset((r,)), True, self.priority)) for r in roots)
        for res in results:
            if res is DEAD or res is None:
                continue
            if res.floor is not None and (floor is None or res.floor < floor):
                floor, floor_by = res.floor, res.floor_by
        negative = floor is not None and floor < 0
        if negative or self.yield_by is not None:
            self.phase = "critical"
            yield from self.set_pingable("none")
            yield from self.apply(roots, -delta)
            self.record(
                "rewind",
                roots=list(roots),
                delta=delta,
                priority=self.priority,
                reason="yield" if self.yield_by is not None else "negative",
                against=self.yield_by if self.yield_by is not None else floor_by,
                floor=floor,
            )
        self.phase = "critical"

    def do_reweight(self):
        root = self.sponsor
        delta = self.action.weight
        if delta <= 0:
            raise Abort("nonpositive reweight")
        yield from self.lock([root])
        yield from self.check_unmatched_roots([root])
        self.phase = "revalidating"
        yield from self.set_pingable("soft")
        r = yield from self.soft_scan(root, frozenset((root,)))
        if r.tag != "reweight" or r.weight != delta:
            raise Abort(f"sponsor changed to {r.tag}")
        if self.wounded:
            raise Abort("wounded")
        self.phase = "critical"
        yield from self.tentative_check([root], delta, "reweight")

    # --- hold clusters ------------------------------------------------------

    def discover_hold_cluster(self):
        """Close the sponsoring hold bucket under 'is held by'.  Runs before locking."""
        members: dict[Address, int] = {self.sponsor: self.priority}
        frontier = sorted(self.action.roots)
        while frontier:
            x = frontier.pop(0)
            if x in members:
                continue
            r = yield call(x, HeldQuery())
            if r is DEAD:
                raise Abort("cluster member vanished")
            last, unmatched_root, prio = r
            if not unmatched_root or last is None or last.tag != "hold":
                raise Abort("cluster invalid")
            members[x] = prio
            frontier.extend(sorted(a for a in last.roots if a not in members))
        if len(members) < 2:
            raise Abort("cluster too small")
        return members

    def do_multireweight(self):
        self.phase = "locking"
        members = yield from self.discover_hold_cluster()
        if min(members.values()) != self.priority:
            raise Abort("not the cluster leader")
        roots = sorted(members, key=lambda a: (members[a], a))
        cluster = frozenset(roots)
        yield from self.lock(roots)
        yield from self.check_unmatched_roots(roots)
        self.phase = "revalidating"
        yield from self.set_pingable("soft")
        results = yield call_all((r, Scan(r, None, ZERO, cluster, True, self.priority)) for r in roots)
        total = Pong("pass")
        for res in results:
            if res is DEAD or res is None:
                raise Abort("soft scan failed")
            total = unify_pongs(total, res, cluster)
        if total.tag != "reweight" or total.weight <= 0:
            raise Abort(f"cluster scan gave {total.tag}")
        if self.wounded:
            raise Abort("wounded")
        self.phase = "critical"
        yield from self.tentative_check(roots, total.weight, "multireweight")


def rotated_matches(petals: list[DirectedEdge], base: int) -> dict[Address, dict[str, Any]]:
    """Internal match edges once petal ``base`` carries the external match.

    Counting positions from the base, petal q pairs with q+1 when q is odd
    and with q-1 when q is even.  The base itself gets no internal match.
    """
    k = len(petals)
    nodes = [x.source_blossom for x in petals]
    updates: dict[Address, dict[str, Any]] = {x: {} for x in nodes}
    for q in range(1, k):
        idx = (base + q) % k
        if q % 2 == 1:
            updates[nodes[idx]]["match_edge"] = petals[idx]
        else:
            updates[nodes[idx]]["match_edge"] = petals[(idx - 1) % k].reversed()
    return updates

