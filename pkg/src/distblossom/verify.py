"""Independent oracles and checkers.

Nothing here shares code with either solver: the brute-force matchers
enumerate, and the validators recompute every quantity from a
:class:`~distblossom.snapshot.StateSnapshot` and the raw edge weights.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .graph import Matching, ProblemGraph, format_weight
from .runtime import EventTrace
from .snapshot import BlossomView, StateSnapshot

ORACLE_LIMIT = 12


class OracleRefused(ValueError):
    pass


# --- brute force ------------------------------------------------------------


def oracle_mwpm(graph: ProblemGraph) -> tuple[Fraction, Matching]:
    """Exhaustive minimum-weight perfect matching for ``n <= 12``.

    Enumerates all (n-1)!! perfect matchings by always pairing the lowest
    free vertex, trying partners in increasing order; the first minimum in
    that (lexicographic) order wins ties.
    """
    n = graph.n
    if n > ORACLE_LIMIT:
        raise OracleRefused(f"brute force refuses n = {n} > {ORACLE_LIMIT}")
    if n % 2:
        raise ValueError("odd vertex count")
    if n == 0:
        return Fraction(0), Matching()
    # exact integer arithmetic on a common denominator keeps the loop fast
    den = 1
    for _, _, w in graph.edges():
        d = int(w.denominator)
        den = den * d // _gcd(den, d)
    t = [[int(graph.table[u][v] * den) for v in range(n)] for u in range(n)]
    best_cost: list = [None]
    best_pairs: list = [None]
    pairs: list[tuple[int, int]] = []

    def rec(free: list[int], cost: int) -> None:
        if best_cost[0] is not None and cost >= best_cost[0]:
            # strictly worse or tied-but-later: cannot become the answer
            if cost > best_cost[0] or not free:
                return
        if not free:
            best_cost[0] = cost
            best_pairs[0] = list(pairs)
            return
        a = free[0]
        row = t[a]
        for i in range(1, len(free)):
            b = free[i]
            pairs.append((a, b))
            rec(free[1:i] + free[i + 1:], cost + row[b])
            pairs.pop()

    rec(list(range(n)), 0)
    return Fraction(best_cost[0], den), Matching.from_pairs(best_pairs[0])


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def all_perfect_matchings(n: int) -> Iterable[list[tuple[int, int]]]:
    def rec(free):
        if not free:
            yield []
            return
        a = free[0]
        for i in range(1, len(free)):
            for rest in rec(free[1:i] + free[i + 1:]):
                yield [(a, free[i])] + rest

    yield from rec(list(range(n)))


def brute_max_bipartite(left: Sequence, right: Sequence, edges: Iterable[tuple]) -> int:
    """Maximum matching cardinality by trying every assignment of left vertices."""
    adj = defaultdict(list)
    for a, b in edges:
        adj[a].append(b)
    left = list(left)
    best = 0

    def rec(i: int, used: frozenset, size: int) -> None:
        nonlocal best
        if size + (len(left) - i) <= best:
            return
        if i == len(left):
            best = max(best, size)
            return
        for b in adj[left[i]]:
            if b not in used:
                rec(i + 1, used | {b}, size + 1)
        rec(i + 1, used, size)

    rec(0, frozenset(), 0)
    return best


# --- state validation -------------------------------------------------------


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str) -> None:
        self.violations.append(msg)

    def __str__(self) -> str:
        return "ok" if self.ok else "\n".join(self.violations)


def _containing(snapshot: StateSnapshot) -> dict[int, list[int]]:
    """For each vertex, keys of every blossom containing it, innermost first."""
    out: dict[int, list[int]] = {v: [] for v in range(snapshot.graph.n)}
    blossoms = snapshot.blossoms
    for b in blossoms.values():
        if b.vertex is not None:
            chain = [b.key]
            cur = b
            seen = {b.key}
            while cur.pistil is not None and cur.pistil in blossoms and cur.pistil not in seen:
                cur = blossoms[cur.pistil]
                seen.add(cur.key)
                chain.append(cur.key)
            out[b.vertex] = chain
    return out


def slack(snapshot: StateSnapshot, u: int, v: int, chains: dict[int, list[int]] | None = None) -> Fraction:
    """Edge weight minus the weights of all blossoms containing exactly one endpoint."""
    chains = chains if chains is not None else _containing(snapshot)
    cu, cv = chains[u], chains[v]
    common = set(cu) & set(cv)
    w = snapshot.graph.edge_weight(u, v)
    for k in cu:
        if k not in common:
            w -= snapshot.blossoms[k].weight
    for k in cv:
        if k not in common:
            w -= snapshot.blossoms[k].weight
    return w


def validate_quiescent_state(snapshot: StateSnapshot) -> ValidationReport:
    """Check the invariants that must hold whenever no blossom is locked.

    Adjusted weights are nonnegative, petal, match and tree edges are
    weightless, macrovertices are odd alternating cycles with consistent
    pistils and positive internal weight, and the tree slots form a forest of
    alternating trees with unmatched roots.
    """
    rep = ValidationReport()
    g = snapshot.graph
    bl = snapshot.blossoms
    n = g.n

    trivial = {}
    for b in bl.values():
        if b.vertex is not None:
            if b.vertex in trivial:
                rep.add(f"vertex {b.vertex} has two processes")
            trivial[b.vertex] = b.key
    if sorted(trivial) != list(range(n)):
        rep.add("vertex processes do not cover 0..n-1")
        return rep

    # pistil chains must be acyclic and end at a top-level blossom
    for b in bl.values():
        seen = set()
        cur = b
        while cur.pistil is not None:
            if cur.key in seen or cur.pistil not in bl:
                rep.add(f"blossom {b.key}: broken pistil chain")
                return rep
            seen.add(cur.key)
            cur = bl[cur.pistil]

    chains = _containing(snapshot)
    top_of = {v: chains[v][-1] for v in range(n)}

    # top-level blossoms partition the vertices
    covered = Counter(v for b in bl.values() if b.pistil is None for v in b.members)
    for v in range(n):
        if covered[v] != 1:
            rep.add(f"vertex {v} lies in {covered[v]} top-level blossoms")

    for b in bl.values():
        derived = {v for v in range(n) if b.key in chains[v]}
        if set(b.members) != derived:
            rep.add(f"blossom {b.key}: members {sorted(b.members)} disagree with pistil structure {sorted(derived)}")
        if b.vertex is None:
            _check_macro(snapshot, b, chains, rep)
        elif b.petals:
            rep.add(f"vertex blossom {b.key} has petals")
        if b.pistil is not None and (b.parent is not None or b.children or b.match is not None):
            rep.add(f"petal {b.key} keeps tree or match slots")

    # dual feasibility across all pairs
    for u, v in combinations(range(n), 2):
        s = slack(snapshot, u, v, chains)
        if s < 0:
            rep.add(f"edge {u}-{v} has negative adjusted weight {format_weight(s)}")

    tops = [b for b in bl.values() if b.pistil is None]
    for b in tops:
        _check_edge_slots(snapshot, b, top_of, chains, rep)
    _check_forest(snapshot, tops, rep)
    return rep


def _check_macro(snapshot: StateSnapshot, b: BlossomView, chains, rep: ValidationReport) -> None:
    bl = snapshot.blossoms
    k = len(b.petals)
    if k < 3 or k % 2 == 0:
        rep.add(f"macrovertex {b.key} has {k} petals")
        return
    if b.weight < 0:
        rep.add(f"macrovertex {b.key} has negative weight {format_weight(b.weight)}")
    nodes = [e[0] for e in b.petals]
    if len(set(nodes)) != k:
        rep.add(f"macrovertex {b.key} repeats a petal")
    for i, (sb, sv, tv, tb) in enumerate(b.petals):
        nxt = nodes[(i + 1) % k]
        if tb != nxt:
            rep.add(f"macrovertex {b.key}: petal edge {i} does not reach the next petal")
        if sb not in bl or bl[sb].pistil != b.key:
            rep.add(f"macrovertex {b.key}: petal {sb} has pistil {bl[sb].pistil if sb in bl else None}")
            continue
        if tb in bl and (sv not in bl[sb].members or tv not in bl[tb].members):
            rep.add(f"macrovertex {b.key}: petal edge {sv}-{tv} endpoints outside its petals")
        s = slack(snapshot, sv, tv, chains)
        if s != 0:
            rep.add(f"macrovertex {b.key}: petal edge {sv}-{tv} has adjusted weight {format_weight(s)}")
    children_of = {x.key for x in bl.values() if x.pistil == b.key}
    if children_of != set(nodes):
        rep.add(f"macrovertex {b.key}: petal list disagrees with pistil pointers")


def _check_edge_slots(snapshot, b: BlossomView, top_of, chains, rep: ValidationReport) -> None:
    for name, e in (("match", b.match), ("parent", b.parent)):
        if e is None:
            continue
        sb, sv, tv, tb = e
        if sb != b.key or top_of.get(sv) != b.key:
            rep.add(f"blossom {b.key}: {name} edge {sv}-{tv} does not start in it")
        if top_of.get(tv) != tb:
            rep.add(f"blossom {b.key}: {name} edge {sv}-{tv} names target {tb}, not {top_of.get(tv)}")
        s = slack(snapshot, sv, tv, chains)
        if s != 0:
            rep.add(f"blossom {b.key}: {name} edge {sv}-{tv} has adjusted weight {format_weight(s)}")
    for e in b.children:
        sb, sv, tv, tb = e
        if sb != b.key or top_of.get(sv) != b.key or top_of.get(tv) != tb:
            rep.add(f"blossom {b.key}: child edge {sv}-{tv} has stale endpoints")
    if b.match is not None:
        other = snapshot.blossoms.get(b.match[3])
        if other is None or other.match is None or (other.match[1], other.match[2]) != (b.match[2], b.match[1]):
            rep.add(f"blossom {b.key}: match edge not mirrored by its partner")


def _check_forest(snapshot, tops: list[BlossomView], rep: ValidationReport) -> None:
    bl = snapshot.blossoms
    for b in tops:
        if b.match is None and b.parent is not None:
            rep.add(f"blossom {b.key}: unmatched but not a root")
        if b.parent is None:
            if b.match is None and not b.positive:
                rep.add(f"root {b.key} is negative")
            if b.match is not None and b.children:
                rep.add(f"blossom {b.key}: matched with children but no parent")
            if b.match is not None and not b.positive:
                rep.add(f"blossom {b.key}: negative outside any tree")
            continue
        p = bl.get(b.parent[3])
        if p is None:
            rep.add(f"blossom {b.key}: parent missing")
            continue
        if not any((c[1], c[2]) == (b.parent[2], b.parent[1]) for c in p.children):
            rep.add(f"blossom {b.key}: parent {p.key} does not list it as a child")
        is_match = b.match is not None and (b.match[1], b.match[2]) == (b.parent[1], b.parent[2])
        if b.positive:
            if not is_match:
                rep.add(f"positive blossom {b.key}: parent edge is not its match")
            if p.positive:
                rep.add(f"positive blossom {b.key} has a positive parent")
        else:
            if is_match:
                rep.add(f"negative blossom {b.key}: parent edge is its match")
            if not p.positive:
                rep.add(f"negative blossom {b.key} has a negative parent")
            if len(b.children) != 1 or b.match is None or (b.children[0][1], b.children[0][2]) != (b.match[1], b.match[2]):
                rep.add(f"negative blossom {b.key}: child is not its matched partner")
        for c in b.children:
            ch = bl.get(c[3])
            if ch is None or ch.parent is None or (ch.parent[1], ch.parent[2]) != (c[2], c[1]):
                rep.add(f"blossom {b.key}: child {c[3]} does not point back")
    # no cycles in parent pointers
    for b in tops:
        seen = set()
        cur = b
        while cur is not None and cur.parent is not None:
            if cur.key in seen:
                rep.add(f"blossom {b.key}: parent pointers cycle")
                break
            seen.add(cur.key)
            cur = bl.get(cur.parent[3])


# --- optimality certificate -------------------------------------------------


@dataclass
class OptimalityCertificate:
    """A final matching plus the contracted state it was expanded from.

    The contraction sequence is read off the state: starting from the bare
    vertices, each macrovertex is contracted once all of its petals exist,
    innermost first.
    """

    graph: ProblemGraph
    matching: Matching
    contracted: StateSnapshot

    def stages(self) -> list[int]:
        """Macrovertex keys in contraction order."""
        bl = self.contracted.blossoms

        def depth(b: BlossomView) -> int:
            return 0 if b.vertex is not None else 1 + max(depth(bl[p[0]]) for p in b.petals)

        macros = [b for b in bl.values() if b.vertex is None]
        return [b.key for b in sorted(macros, key=lambda b: (depth(b), b.key))]


@dataclass
class CertificateReport:
    failures: list[str] = field(default_factory=list)
    stages: int = 0

    @property
    def passed(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.passed


def _stage_slack(graph: ProblemGraph, weights: dict[int, Fraction], owners: dict[int, list[int]], u: int, v: int) -> Fraction:
    """Adjusted weight of u-v counting only blossoms present at this stage."""
    cu, cv = owners[u], owners[v]
    common = set(cu) & set(cv)
    w = Fraction(graph.edge_weight(u, v))
    for k in cu:
        if k not in common:
            w -= weights[k]
    for k in cv:
        if k not in common:
            w -= weights[k]
    return w


def check_certificate(cert: OptimalityCertificate, detail: bool = False):
    """Recognition check for a minimum-weight perfect matching.

    Walks the contraction sequence ``G_0, ..., G_n``.  At every stage the
    internal weights must be admissible (every adjusted weight between
    distinct top-level blossoms nonnegative, every macrovertex weight
    nonnegative); only the new macrovertex gains a weight; and the
    contracted cycle must be an odd cycle of petals, alternating with
    respect to the matching, whose contraction edges are weightless.  In the
    last stage every matched edge must be weightless and every unmatched
    blossom must have zero weight.  As a final cross-check the total internal
    weight must equal the matching's weight.

    Returns a bool, or a :class:`CertificateReport` when ``detail`` is set.
    """
    rep = CertificateReport()
    g, m, snap = cert.graph, cert.matching, cert.contracted
    n = g.n
    fail = rep.failures.append
    if not m.is_matching() or not m.is_perfect(n):
        fail("matching is not perfect")
        return rep if detail else False
    mate = m.mate()
    bl = snap.blossoms
    by_vertex = {b.vertex: b.key for b in bl.values() if b.vertex is not None}
    if sorted(by_vertex) != list(range(n)):
        fail("state does not hold exactly one blossom per vertex")
        return rep if detail else False

    # stage 0: bare vertices
    owners: dict[int, list[int]] = {v: [by_vertex[v]] for v in range(n)}
    weights: dict[int, Fraction] = {by_vertex[v]: Fraction(bl[by_vertex[v]].weight) for v in range(n)}
    top: dict[int, int] = {v: by_vertex[v] for v in range(n)}
    members: dict[int, set[int]] = {by_vertex[v]: {v} for v in range(n)}

    def admissible(label: str) -> None:
        for u, v in combinations(range(n), 2):
            if top[u] != top[v] and _stage_slack(g, weights, owners, u, v) < 0:
                fail(f"{label}: edge {u}-{v} has negative adjusted weight")
        for k, w in weights.items():
            if bl[k].vertex is None and w < 0:
                fail(f"{label}: macrovertex {k} has negative weight")

    admissible("stage 0")
    for j, key in enumerate(cert.stages(), start=1):
        b = bl[key]
        label = f"stage {j} (macrovertex {key})"
        k = len(b.petals)
        if k < 3 or k % 2 == 0:
            fail(f"{label}: {k} petals")
            continue
        petals = [p[0] for p in b.petals]
        if len(set(petals)) != k or any(p not in members for p in petals):
            fail(f"{label}: petals are not distinct blossoms of the previous stage")
            continue
        if any(top[next(iter(members[p]))] != p for p in petals):
            fail(f"{label}: a petal is not top-level in the previous stage")
            continue
        matched_links = []
        for i, (sb, sv, tv, tb) in enumerate(b.petals):
            if tb != petals[(i + 1) % k] or sv not in members[sb] or tv not in members[tb]:
                fail(f"{label}: contraction edge {sv}-{tv} does not join consecutive petals")
                continue
            if _stage_slack(g, weights, owners, sv, tv) != 0:
                fail(f"{label}: contraction edge {sv}-{tv} is not weightless")
            if mate.get(sv) == tv:
                matched_links.append(i)
        touched = Counter()
        for i in matched_links:
            touched[i] += 1
            touched[(i + 1) % k] += 1
        if len(matched_links) != (k - 1) // 2 or any(c > 1 for c in touched.values()):
            fail(f"{label}: cycle does not alternate ({len(matched_links)} matched of {k})")
        # contract: the new blossom joins the stage with its recorded weight
        inside = set().union(*(members[p] for p in petals))
        members[key] = inside
        weights[key] = Fraction(b.weight)
        for v in inside:
            owners[v] = owners[v] + [key]
            top[v] = key
        if set(b.members) != inside:
            fail(f"{label}: recorded members differ from its petals")
        admissible(label)
        rep.stages = j

    # last stage
    tops = set(top.values())
    for t in sorted(tops):
        leaving = [v for v in members[t] if top[mate[v]] != t]
        if len(leaving) > 1:
            fail(f"final stage: blossom {t} is matched {len(leaving)} times")
        if not leaving and weights[t] != 0:
            fail(f"final stage: unmatched blossom {t} has weight {format_weight(weights[t])}")
    for a, c in m.pairs:
        if top[a] != top[c] and _stage_slack(g, weights, owners, a, c) != 0:
            fail(f"final stage: matched edge {a}-{c} is not weightless")
    dual = sum(weights.values(), Fraction(0))
    if dual != Fraction(m.weight(g)):
        fail(f"dual value {format_weight(dual)} differs from matching weight {format_weight(m.weight(g))}")
    return rep if detail else rep.passed


def certificate_from_trace(graph: ProblemGraph, trace: EventTrace) -> OptimalityCertificate:
    """Rebuild the certificate from the ``certificate`` and ``reap`` records."""
    snap = None
    pairs = []
    for _, _, kind, payload in trace.records:
        if kind == "certificate":
            snap = StateSnapshot.from_dict(graph, payload)
        elif kind == "reap":
            pairs.append(tuple(payload["pair"]))
    if snap is None:
        raise ValueError("trace has no certificate record")
    return OptimalityCertificate(graph, Matching.from_pairs(pairs), snap)


# --- crown ------------------------------------------------------------------


@dataclass(frozen=True)
class CrownGraph:
    """Three copies of the vertex set with the crown's edge rules.

    Vertices are ``("circlet", v)``, ``("arch", v)`` and ``("monde", v)``.
    """

    n: int
    edges: tuple[tuple[tuple[str, int], tuple[str, int]], ...]
    regal_matching: tuple[tuple[tuple[str, int], tuple[str, int]], ...]

    @property
    def vertices(self) -> list[tuple[str, int]]:
        return [(layer, v) for layer in ("circlet", "arch", "monde") for v in range(self.n)]

    def count_between(self, a: str, b: str) -> int:
        return sum(1 for x, y in self.edges if {x[0], y[0]} == {a, b} and (a != b or x[0] == y[0] == a))


def build_crown(n: int, edges: Iterable[tuple[int, int]]) -> CrownGraph:
    """Crown of an unweighted graph on ``0..n-1``, with its initial regal matching."""
    out = []
    seen = set()
    for u, v in edges:
        key = (min(u, v), max(u, v))
        if u == v or key in seen:
            continue
        seen.add(key)
        out.append((("circlet", key[0]), ("circlet", key[1])))
    for v in range(n):
        out.append((("arch", v), ("circlet", v)))
    for a in range(n):
        for m in range(n):
            out.append((("arch", a), ("monde", m)))
    regal = tuple((("circlet", v), ("arch", v)) for v in range(n))
    return CrownGraph(n, tuple(out), regal)


# --- trace audit ------------------------------------------------------------

STATE_UPDATES = ("graft", "augment", "contract", "expand", "reweight", "multireweight")


@dataclass
class TraceAudit:
    problems: list[str] = field(default_factory=list)
    message_count: int = 0
    counts: dict[str, int] = field(default_factory=dict)
    segments: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


def audit_trace(trace: EventTrace) -> TraceAudit:
    """Check Lamport validity, lock balance and per-supervisor discipline.

    ``segments`` lists the lengths of graft runs between the other state
    updates.
    """
    audit = TraceAudit()
    last_seq: dict[tuple, int] = {}
    last_tick = -1
    held: dict[object, set] = defaultdict(set)
    updates: dict[object, list[str]] = defaultdict(list)
    counts: Counter = Counter()
    run = 0
    for i, rec in enumerate(trace.records):
        if not isinstance(rec, tuple) or len(rec) != 4:
            raise ValueError(f"malformed record {i}")
        tick, actor, kind, payload = rec
        if tick < last_tick:
            audit.problems.append(f"record {i}: tick goes backwards")
        last_tick = tick
        counts[kind] += 1
        if kind == "deliver":
            src, seq, sent, _ = payload
            if not sent < tick:
                audit.problems.append(f"record {i}: delivered at {tick} but sent at {sent}")
            pair = (src, actor)
            if seq != last_seq.get(pair, -1) + 1:
                # drops consume sequence numbers too, so allow those gaps
                pass
            if seq <= last_seq.get(pair, -1):
                audit.problems.append(f"record {i}: {src}->{actor} out of order")
            last_seq[pair] = seq
            audit.message_count += 1
        elif kind == "drop":
            pair = (payload["src"], actor)
            if payload["seq"] <= last_seq.get(pair, -1):
                audit.problems.append(f"record {i}: dropped message out of order")
            last_seq[pair] = payload["seq"]
            audit.message_count += 1
        elif kind == "lock":
            held[actor].update(payload["addrs"])
        elif kind == "unlock":
            missing = set(payload["addrs"]) - held[actor]
            if missing:
                audit.problems.append(f"record {i}: {actor} unlocks {sorted(missing)} it never locked")
            held[actor] -= set(payload["addrs"])
        elif kind in STATE_UPDATES or kind == "rewind":
            updates[actor].append(kind)
            if kind == "graft":
                run += 1
            elif kind in STATE_UPDATES:
                audit.segments.append(run)
                run = 0
    audit.segments.append(run)
    for actor, addrs in held.items():
        if addrs:
            audit.problems.append(f"supervisor {actor} never released {sorted(addrs)}")
    for actor, kinds in updates.items():
        primary = [k for k in kinds if k in STATE_UPDATES]
        if len(primary) > 1:
            audit.problems.append(f"supervisor {actor} made {len(primary)} state updates")
        if "rewind" in kinds:
            if kinds.count("rewind") > 1 or not primary or primary[0] not in ("reweight", "multireweight"):
                audit.problems.append(f"supervisor {actor}: rewind without a matching reweight")
            elif kinds.index("rewind") < kinds.index(primary[0]):
                audit.problems.append(f"supervisor {actor}: rewind precedes its reweight")
    audit.counts = dict(counts)
    return audit


def priority_rewinds(trace: EventTrace) -> list[dict]:
    """Rewinds whose evidence came from a tree of strictly higher priority."""
    out = []
    for _, _, kind, payload in trace.records:
        if kind == "rewind" and payload.get("against") is not None and payload["against"] < payload["priority"]:
            out.append(payload)
    return out


def dump_report(report) -> str:
    if isinstance(report, ValidationReport):
        return json.dumps({"ok": report.ok, "violations": report.violations}, indent=2)
    if isinstance(report, TraceAudit):
        return json.dumps(
            {"ok": report.ok, "problems": report.problems, "messages": report.message_count, "counts": report.counts},
            indent=2,
            sort_keys=True,
        )
    raise TypeError(type(report))


def main(argv: list[str] | None = None) -> int:
    """Audit a saved trace: ``distblossom-verify --input G --trace T``.

    Prints a JSON report and exits 0 when the trace audit, the certificate
    and (for n <= 12) the oracle weight all agree, 1 otherwise.
    """
    import argparse

    from .graph import load_instance

    parser = argparse.ArgumentParser(prog="distblossom-verify", description="Check a solver trace.")
    parser.add_argument("--input", required=True)
    parser.add_argument("--trace", required=True)
    args = parser.parse_args(argv)
    graph = load_instance(args.input)
    with open(args.trace) as fh:
        trace = EventTrace.from_jsonl(fh.read())
    audit = audit_trace(trace)
    cert = certificate_from_trace(graph, trace)
    report = check_certificate(cert, detail=True)
    out = {
        "audit": json.loads(dump_report(audit)),
        "certificate": {"passed": report.passed, "stages": report.stages, "failures": report.failures},
        "weight": format_weight(cert.matching.weight(graph)),
    }
    ok = audit.ok and report.passed
    if graph.n <= ORACLE_LIMIT:
        best = oracle_mwpm(graph)[0]
        out["oracle"] = format_weight(best)
        ok = ok and best == Fraction(cert.matching.weight(graph))
    out["ok"] = ok
    print(json.dumps(out, indent=2, sort_keys=True))
    return 0 if ok else 1

