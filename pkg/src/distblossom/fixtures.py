"""Small hand-checked instances used by tests, demos and the acceptance run."""

from __future__ import annotations

from .graph import ProblemGraph, Weight


def k4_with_heavy_diagonals() -> ProblemGraph:
    """Square r-s-u-t with unit sides and weight-2 diagonals.

    Vertices r, s, t, u are 0, 1, 2, 3.  Both side pairings cost 2.
    """
    r, s, t, u = range(4)
    return ProblemGraph.from_weights(
        4,
        {(r, s): 1, (r, t): 1, (s, u): 1, (t, u): 1, (s, t): 2, (r, u): 2},
    )


def four_point_line() -> ProblemGraph:
    """Points r, s, t, q at x = 0, 1, 3, 6 on a line (Manhattan metric).

    Consecutive gaps are 1, 2, 3 and the optimum pairs r-s and t-q for 4.
    The middle pair s-t is the shared edge two trees compete over.
    """
    return ProblemGraph.from_points([(0, 0), (1, 0), (3, 0), (6, 0)], "manhattan")


def six_point_manhattan() -> ProblemGraph:
    """r(0,0) u(1,0) v(2,0) s(0,-1) t(-1,-1) q(1,-1), ids 0..5 in that order.

    Optimum weight 4, e.g. t-s, u-v, r-q.  When r and q each graft a matched
    pair, the two trees hold each other's negative vertices and only a joint
    reweight of both makes progress.
    """
    pts = [(0, 0), (1, 0), (2, 0), (0, -1), (-1, -1), (1, -1)]
    return ProblemGraph.from_points(pts, "manhattan")


def six_path() -> ProblemGraph:
    """Path r-s-t-u-v-w with unit edges, all other pairs cost 10."""
    n = 6
    w = {}
    for a in range(n):
        for b in range(a + 1, n):
            w[(a, b)] = Weight(1) if b == a + 1 else Weight(10)
    return ProblemGraph.from_weights(n, w)


FIXTURE_OPTIMA = {
    "k4_with_heavy_diagonals": Weight(2),
    "four_point_line": Weight(4),
    "six_point_manhattan": Weight(4),
    "six_path": Weight(3),
}
