"""Solver-independent views of blossom state.

Both solvers export their state in this shape so that one validator and one
certificate checker serve them both.  Blossoms are keyed by an integer handle
(a process address for the distributed solver, a blossom index for the serial
one).  Edges are ``(source_blossom, source_vertex_id, target_vertex_id,
target_blossom)``.
"""

from __future__ import annotations

from dataclasses import dataclass

from typing import Any

from .graph import ProblemGraph, format_weight, parse_weight, Weight

EdgeView = tuple[int, int, int, int]


@dataclass(frozen=True)
class BlossomView:
    key: int
    vertex: int | None
    members: tuple[int, ...]
    weight: Weight
    pistil: int | None
    petals: tuple[EdgeView, ...]
    parent: EdgeView | None
    children: tuple[EdgeView, ...]
    match: EdgeView | None
    positive: bool

    @property
    def is_macro(self) -> bool:
        return self.vertex is None

    def to_dict(self) -> dict[str, Any]:
        return {
            "key": self.key,
            "vertex": self.vertex,
            "members": list(self.members),
            "weight": format_weight(self.weight),
            "pistil": self.pistil,
            "petals": [list(e) for e in self.petals],
            "parent": list(self.parent) if self.parent else None,
            "children": [list(e) for e in self.children],
            "match": list(self.match) if self.match else None,
            "positive": self.positive,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BlossomView":
        def edge(e):
            return tuple(e) if e is not None else None

        return cls(
            key=d["key"],
            vertex=d["vertex"],
            members=tuple(d["members"]),
            weight=parse_weight(d["weight"]),
            pistil=d["pistil"],
            petals=tuple(tuple(e) for e in d["petals"]),
            parent=edge(d["parent"]),
            children=tuple(tuple(e) for e in d["children"]),
            match=edge(d["match"]),
            positive=d["positive"],
        )


@dataclass(frozen=True)
class StateSnapshot:
    """All live blossoms at one instant."""

    graph: ProblemGraph
    blossoms: dict[int, BlossomView]
    tick: int = 0

    def top_level(self) -> list[BlossomView]:
        return [b for b in self.blossoms.values() if b.pistil is None]

    def vertex_blossom(self) -> dict[int, int]:
        """Map vertex id to the key of its trivial blossom."""
        return {b.vertex: b.key for b in self.blossoms.values() if b.vertex is not None}

    def top_of(self) -> dict[int, int]:
        """Map vertex id to the key of its top-level blossom."""
        out = {}
        for b in self.blossoms.values():
            if b.pistil is None:
                for v in b.members:
                    out[v] = b.key
        return out

    def chain_weights(self) -> dict[int, Weight]:
        """Sum of internal weights of every blossom containing each vertex."""
        out = {v: Weight(0) for v in range(self.graph.n)}
        for b in self.blossoms.values():
            for v in b.members:
                out[v] += b.weight
        return out

    def to_dict(self) -> dict[str, Any]:
        return {"tick": self.tick, "blossoms": [self.blossoms[k].to_dict() for k in sorted(self.blossoms)]}

    @classmethod
    def from_dict(cls, graph: ProblemGraph, d: dict[str, Any]) -> "StateSnapshot":
        views = [BlossomView.from_dict(x) for x in d["blossoms"]]
        return cls(graph, {v.key: v for v in views}, d.get("tick", 0))
