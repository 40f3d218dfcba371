"""Complete weighted graphs, matchings and the plain-text instance format.

Weights are exact rationals (``gmpy2.mpq``, which behaves like
:class:`fractions.Fraction` but is several times faster).  Instance files only
ever carry integers or half-integers, but the solvers halve adjusted weights
when an edge joins two positive vertices of one tree, and several trees can
reweight concurrently, so intermediate values are kept exact rather than
scaled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from gmpy2 import mpq

Weight = mpq

ZERO = Weight(0)


class InstanceError(ValueError):
    """Raised for malformed or invalid problem instances.

    ``line`` is the 1-based line number for parse errors and ``None`` for
    validation errors, which instead name the violated invariant in
    ``invariant``.
    """

    def __init__(self, message: str, line: int | None = None, invariant: str | None = None):
        self.line = line
        self.invariant = invariant
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def parse_weight(text: str) -> Weight:
    """Parse a decimal such as ``3`` or ``3.5`` into an exact weight."""
    try:
        return Weight(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a number: {text!r}") from None


def format_weight(w) -> str:
    """Render a weight as ``3``, ``3.5`` or, for finer fractions, ``13/4``."""
    w = Fraction(w)
    if w.denominator == 1:
        return str(w.numerator)
    if w.denominator == 2:
        whole = abs(w.numerator) // 2
        sign = "-" if w < 0 else ""
        return f"{sign}{whole}.5"
    return f"{w.numerator}/{w.denominator}"


def halve(w: Weight) -> Weight:
    return w / 2


@dataclass(frozen=True)
class ProblemGraph:
    """A complete graph on vertices ``0..n-1`` with nonnegative edge weights.

    Use :meth:`from_weights` or :meth:`from_points` rather than the raw
    constructor; both validate the instance.
    """

    n: int
    table: tuple[tuple[Weight, ...], ...]
    points: tuple[tuple[Weight, Weight], ...] | None = None
    metric: str | None = None

    @classmethod
    def from_weights(cls, n: int, weights: dict[tuple[int, int], Weight] | Sequence[Sequence]) -> "ProblemGraph":
        """Build from ``{(u, v): w}`` (each unordered pair once) or a square matrix."""
        if n < 0:
            raise InstanceError("vertex count must be nonnegative", invariant="count")
        rows = [[ZERO] * n for _ in range(n)]
        if isinstance(weights, dict):
            seen: dict[tuple[int, int], Weight] = {}
            for (u, v), w in weights.items():
                _check_pair(n, u, v)
                w = Weight(w)
                key = (min(u, v), max(u, v))
                if key in seen and seen[key] != w:
                    raise InstanceError(f"weights of {u}-{v} differ", invariant="symmetry")
                seen[key] = w
            for u, v in combinations(range(n), 2):
                if (u, v) not in seen:
                    raise InstanceError(f"missing weight for {u}-{v}", invariant="complete")
                rows[u][v] = rows[v][u] = seen[(u, v)]
        else:
            if len(weights) != n or any(len(r) != n for r in weights):
                raise InstanceError("weight matrix must be n by n", invariant="complete")
            for u, v in combinations(range(n), 2):
                a, b = Weight(weights[u][v]), Weight(weights[v][u])
                if a != b:
                    raise InstanceError(f"weights of {u}-{v} differ", invariant="symmetry")
                rows[u][v] = rows[v][u] = a
        g = cls(n, tuple(tuple(r) for r in rows))
        g.validate()
        return g

    @classmethod
    def from_points(cls, points: Sequence[tuple], metric: str = "manhattan") -> "ProblemGraph":
        """Build the complete graph of a point set under ``manhattan`` or ``euclidean``.

        Euclidean distances are rounded to the nearest half unit.
        """
        pts = tuple((Weight(x), Weight(y)) for x, y in points)
        n = len(pts)
        rows = [[ZERO] * n for _ in range(n)]
        for u, v in combinations(range(n), 2):
            (x1, y1), (x2, y2) = pts[u], pts[v]
            if metric == "manhattan":
                d = abs(x1 - x2) + abs(y1 - y2)
            elif metric == "euclidean":
                d = Weight(math.floor(2 * math.hypot(x1 - x2, y1 - y2) + 0.5), 2)
            else:
                raise InstanceError(f"unknown metric {metric!r}", invariant="metric")
            rows[u][v] = rows[v][u] = d
        g = cls(n, tuple(tuple(r) for r in rows), pts, metric)
        g.validate()
        return g

    def validate(self) -> None:
        if self.n % 2:
            raise InstanceError(f"vertex count {self.n} is odd", invariant="even-count")
        for u in range(self.n):
            if self.table[u][u] != 0:
                raise InstanceError(f"self-loop weight at {u}", invariant="no-self-loops")
            for v in range(u + 1, self.n):
                if self.table[u][v] != self.table[v][u]:
                    raise InstanceError(f"weights of {u}-{v} differ", invariant="symmetry")
                if self.table[u][v] < 0:
                    raise InstanceError(f"negative weight on {u}-{v}", invariant="nonnegative")

    def edge_weight(self, u: int, v: int) -> Weight:
        if u == v:
            raise ValueError("no self-loops")
        return self.table[u][v]

    def edges(self) -> Iterable[tuple[int, int, Weight]]:
        for u, v in combinations(range(self.n), 2):
            yield u, v, self.table[u][v]

    def max_weight(self) -> Weight:
        return max((w for _, _, w in self.edges()), default=ZERO)


def _check_pair(n: int, u: int, v: int, line: int | None = None) -> None:
    if not (0 <= u < n and 0 <= v < n):
        raise InstanceError(f"vertex out of range in {u}-{v}", line=line)
    if u == v:
        raise InstanceError(f"self-loop at {u}", line=line)


@dataclass(frozen=True)
class Matching:
    """A set of vertex pairs, stored as sorted ``(low, high)`` tuples."""

    pairs: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "Matching":
        norm = sorted((min(a, b), max(a, b)) for a, b in pairs)
        return cls(tuple(norm))

    def mate(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for a, b in self.pairs:
            out[a] = b
            out[b] = a
        return out

    def is_matching(self) -> bool:
        seen: set[int] = set()
        for a, b in self.pairs:
            if a == b or a in seen or b in seen:
                return False
            seen.update((a, b))
        return True

    def is_perfect(self, n: int) -> bool:
        return self.is_matching() and len(self.pairs) * 2 == n and all(
            0 <= a < n and 0 <= b < n for p in self.pairs for a, b in [p]
        )

    def weight(self, graph: ProblemGraph) -> Weight:
        return sum((graph.edge_weight(a, b) for a, b in self.pairs), ZERO)

    def __len__(self) -> int:
        return len(self.pairs)


def format_matching(graph: ProblemGraph, matching: Matching) -> str:
    """One ``id_a id_b weight`` line per pair (sorted by smaller id) then ``total``."""
    lines = [f"{a} {b} {format_weight(graph.edge_weight(a, b))}" for a, b in matching.pairs]
    lines.append(f"total {format_weight(matching.weight(graph))}")
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> ProblemGraph:
    """Parse the instance text format.

    Either ``n``, then one ``w u v weight`` line per unordered pair, or ``n``,
    a ``metric`` line and one ``v id x y`` line per vertex.  ``#`` starts a
    comment.
    """
    n: int | None = None
    metric: str | None = None
    weights: dict[tuple[int, int], Weight] = {}
    points: dict[int, tuple[Weight, Weight]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        try:
            if head == "n":
                if n is not None:
                    raise InstanceError("repeated n line", line=lineno)
                if len(parts) != 2:
                    raise InstanceError("expected 'n <count>'", line=lineno)
                n = int(parts[1])
                if n < 0:
                    raise InstanceError("vertex count must be nonnegative", line=lineno)
            elif head == "metric":
                if len(parts) != 2 or parts[1] not in ("manhattan", "euclidean"):
                    raise InstanceError("expected 'metric manhattan|euclidean'", line=lineno)
                if metric is not None:
                    raise InstanceError("repeated metric line", line=lineno)
                metric = parts[1]
            elif head == "w":
                if n is None:
                    raise InstanceError("'w' before 'n'", line=lineno)
                if len(parts) != 4:
                    raise InstanceError("expected 'w u v weight'", line=lineno)
                u, v = int(parts[1]), int(parts[2])
                _check_pair(n, u, v, lineno)
                w = parse_weight(parts[3])
                if w.denominator not in (1, 2):
                    raise InstanceError("weights must be integers or halves", line=lineno)
                key = (min(u, v), max(u, v))
                if key in weights:
                    if weights[key] != w:
                        raise InstanceError(f"weights of {u}-{v} differ", line=lineno, invariant="symmetry")
                    raise InstanceError(f"pair {u}-{v} listed twice", line=lineno)
                if w < 0:
                    raise InstanceError(f"negative weight on {u}-{v}", line=lineno, invariant="nonnegative")
                weights[key] = w
            elif head == "v":
                if n is None:
                    raise InstanceError("'v' before 'n'", line=lineno)
                if len(parts) != 4:
                    raise InstanceError("expected 'v id x y'", line=lineno)
                i = int(parts[1])
                if not 0 <= i < n:
                    raise InstanceError(f"vertex {i} out of range", line=lineno)
                if i in points:
                    raise InstanceError(f"vertex {i} listed twice", line=lineno)
                points[i] = (parse_weight(parts[2]), parse_weight(parts[3]))
            else:
                raise InstanceError(f"unknown directive {head!r}", line=lineno)
        except ValueError as exc:
            if isinstance(exc, InstanceError):
                raise
            raise InstanceError(str(exc), line=lineno) from None
    if n is None:
        raise InstanceError("missing 'n' line", invariant="count")
    if n % 2:
        raise InstanceError(f"vertex count {n} is odd", invariant="even-count")
    if points or metric is not None:
        if weights:
            raise InstanceError("cannot mix 'w' and 'v' lines", invariant="format")
        if metric is None:
            raise InstanceError("coordinate input needs a metric line", invariant="metric")
        missing = [i for i in range(n) if i not in points]
        if missing:
            raise InstanceError(f"missing coordinates for vertex {missing[0]}", invariant="complete")
        return ProblemGraph.from_points([points[i] for i in range(n)], metric)
    return ProblemGraph.from_weights(n, weights)


def load_instance(path: str | Path) -> ProblemGraph:
    return parse_instance(Path(path).read_text())


def dump_instance(graph: ProblemGraph) -> str:
    lines = [f"n {graph.n}"]
    if graph.points is not None:
        lines.append(f"metric {graph.metric}")
        for i, (x, y) in enumerate(graph.points):
            lines.append(f"v {i} {format_weight(x)} {format_weight(y)}")
    else:
        lines.extend(f"w {u} {v} {format_weight(w)}" for u, v, w in graph.edges())
    return "\n".join(lines) + "\n"


def save_instance(graph: ProblemGraph, path: str | Path) -> None:
    Path(path).write_text(dump_instance(graph))


def random_instance(n: int, rng, max_weight: int = 100, halves: bool = False) -> ProblemGraph:
    """Uniform random integer (or half-integer) weights in ``[0, max_weight]``."""
    weights = {}
    for u, v in combinations(range(n), 2):
        if halves:
            weights[(u, v)] = Weight(rng.randint(0, 2 * max_weight), 2)
        else:
            weights[(u, v)] = Weight(rng.randint(0, max_weight))
    return ProblemGraph.from_weights(n, weights)


def triangle_inequality_holds(graph: ProblemGraph) -> bool:
    t = graph.table
    r = range(graph.n)
    return all(t[a][c] <= t[a][b] + t[b][c] for a in r for b in r for c in r if len({a, b, c}) == 3)
