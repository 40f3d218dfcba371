"""Run the distributed solver end to end inside the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .dryad import Dryad, MatchSink
from .graph import Matching, ProblemGraph, Weight
from .messages import DirectedEdge, Sow, StartSolving
from .node import BlossomNode
from .runtime import EventTrace, LivelockSuspected, SchedulerConfig, Simulator
from .snapshot import BlossomView, StateSnapshot


def default_max_ticks(n: int) -> int:
    """Tick budget used when none is given: generous, but polynomial in n."""
    return 20_000 + 50 * max(n, 2) ** 4


@dataclass
class DistributedResult:
    matching: Matching
    weight: Weight
    trace: EventTrace
    ticks: int
    messages: int
    certificate: StateSnapshot | None = None
    snapshots: list[StateSnapshot] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        kinds = ("graft", "augment", "contract", "expand", "reweight", "multireweight", "rewind", "abort")
        out = {k: 0 for k in kinds}
        for _, _, kind, _ in self.trace.records:
            if kind in out:
                out[kind] += 1
        return out


def _edge_view(e: DirectedEdge | None, ids: dict[int, int]):
    if e is None:
        return None
    return (e.source_blossom, ids[e.source_vertex], ids[e.target_vertex], e.target_blossom)


def snapshot_of(sim: Simulator, graph: ProblemGraph) -> StateSnapshot:
    """Read every live blossom directly (instrumentation, not protocol)."""
    nodes = [p for p in sim.procs.values() if p.alive and isinstance(p, BlossomNode)]
    ids = {p.addr: p.id for p in nodes if p.id is not None}
    views = {}
    for p in nodes:
        views[p.addr] = BlossomView(
            key=p.addr,
            vertex=p.id,
            members=tuple(sorted(p.members)),
            weight=p.internal_weight,
            pistil=p.pistil,
            petals=tuple(_edge_view(e, ids) for e in p.petals),
            parent=_edge_view(p.parent, ids),
            children=tuple(_edge_view(e, ids) for e in p.children),
            match=_edge_view(p.match_edge, ids),
            positive=p.positive,
        )
    return StateSnapshot(graph, views, sim.tick)


def _warm_start_hook(graph: ProblemGraph, dryad: Dryad, sim: Simulator, matching: Matching, weights: Mapping[int, Weight]):
    if not matching.is_matching():
        raise ValueError("warm start is not a matching")
    w = {v: Weight(weights.get(v, 0)) for v in range(graph.n)}
    for u, v, c in graph.edges():
        if c - w[u] - w[v] < 0:
            raise ValueError(f"warm start is not dual feasible on {u}-{v}")
    for u, v in matching.pairs:
        if graph.edge_weight(u, v) != w[u] + w[v]:
            raise ValueError(f"warm start matched edge {u}-{v} is not weightless")

    def apply() -> None:
        nodes = {dryad.roster[v]: sim.procs[dryad.roster[v]] for v in dryad.roster}
        for v, node in ((v, nodes[dryad.roster[v]]) for v in dryad.roster):
            node.internal_weight = w[v]
        for u, v in matching.pairs:
            a, b = dryad.roster[u], dryad.roster[v]
            nodes[a].match_edge = DirectedEdge(a, a, b, b)
            nodes[b].match_edge = DirectedEdge(b, b, a, a)
            dryad.sprouted.update((u, v))

    return apply


def solve_distributed(
    graph: ProblemGraph,
    config: SchedulerConfig | None = None,
    collect_snapshots: bool = False,
    rescan_delay: int = 2,
    warm_start: tuple[Matching, Mapping[int, Weight]] | None = None,
) -> DistributedResult:
    """Solve ``graph`` with the message-passing blossom algorithm.

    Raises :class:`LivelockSuspected` if the tick budget runs out.  When
    ``collect_snapshots`` is set, a snapshot is taken at the end of every tick
    in which no blossom is locked and some state update has landed since the
    previous snapshot, up to the moment reaping begins (terminal expansion
    deliberately discards macrovertex weights, so later states are not dual
    feasible; the ``certificate`` snapshot is the one to check there).

    ``warm_start`` is an optional ``(matching, vertex weights)`` pair to
    begin from instead of the empty matching with zero weights.  It must be
    dual feasible with every matched edge weightless.
    """
    if config is None:
        config = SchedulerConfig()
    if config.max_ticks is None:
        config = SchedulerConfig(config.seed, config.latency, default_max_ticks(graph.n), config.record_messages)
    sim = Simulator(config)
    sink = MatchSink()
    sim.spawn(sink)
    dryad = Dryad(graph.edge_weight, sink.addr, rescan_delay)
    sim.spawn(dryad)
    holder: dict[str, StateSnapshot] = {}

    def take_certificate() -> None:
        snap = snapshot_of(sim, graph)
        holder["cert"] = snap
        sim.trace.add(sim.tick, dryad.addr, "certificate", snap.to_dict())

    dryad.on_reap_begin = take_certificate
    if warm_start is not None:
        dryad.on_start = _warm_start_hook(graph, dryad, sim, *warm_start)

    snapshots: list[StateSnapshot] = []
    if collect_snapshots:
        seen = {"version": 0}

        def hook(s: Simulator) -> None:
            if dryad.phase == "solving" and s.locked_count == 0 and s.state_version != seen["version"]:
                seen["version"] = s.state_version
                snapshots.append(snapshot_of(s, graph))

        sim.tick_hooks.append(hook)

    for v in range(graph.n):
        sim.send(sink.addr, dryad.addr, Sow(v))
    sim.send(sink.addr, dryad.addr, StartSolving())
    sim.run()
    matching = Matching.from_pairs(sink.pairs)
    return DistributedResult(
        matching=matching,
        weight=matching.weight(graph),
        trace=sim.trace,
        ticks=sim.tick,
        messages=sim.message_count,
        certificate=holder.get("cert"),
        snapshots=snapshots,
    )


__all__ = ["DistributedResult", "LivelockSuspected", "solve_distributed", "snapshot_of", "default_max_ticks"]
