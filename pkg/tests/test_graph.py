import random

import pytest
from hypothesis import given, strategies as st

from distblossom.graph import (
    InstanceError,
    Matching,
    ProblemGraph,
    Weight,
    dump_instance,
    format_matching,
    format_weight,
    halve,
    load_instance,
    parse_instance,
    parse_weight,
    random_instance,
    save_instance,
    triangle_inequality_holds,
)


def test_weight_parsing_and_formatting():
    assert parse_weight("3") == 3
    assert parse_weight("3.5") == Weight(7, 2)
    assert format_weight(Weight(7, 2)) == "3.5"
    assert format_weight(Weight(-1, 2)) == "-0.5"
    assert format_weight(Weight(13, 4)) == "13/4"
    assert format_weight(Weight(4)) == "4"
    with pytest.raises(ValueError):
        parse_weight("abc")


def test_halve_is_exact():
    assert halve(Weight(3)) == Weight(3, 2)
    assert halve(halve(Weight(1))) == Weight(1, 4)


def test_manhattan_distance_between_points():
    g = ProblemGraph.from_points([(0, 0), (2, 3)], "manhattan")
    assert g.edge_weight(0, 1) == 5
    assert g.edge_weight(1, 0) == 5


def test_parse_weight_lines():
    g = parse_instance("n 2\nw 0 1 4.5  # a comment\n")
    assert g.n == 2 and g.edge_weight(0, 1) == Weight(9, 2)


def test_parse_coordinates():
    g = parse_instance("n 2\nmetric manhattan\nv 0 0 0\nv 1 1 1\n")
    assert g.edge_weight(0, 1) == 2


@pytest.mark.parametrize(
    "text, line",
    [
        ("n 2\nw 0 1 x\n", 2),
        ("n 2\nw 0 0 1\n", 2),
        ("n 2\nw 0 5 1\n", 2),
        ("n 2\nw 0 1 -1\n", 2),
        ("n 2\nw 0 1 1\nw 1 0 1\n", 3),
        ("n 2\nw 0 1 1\nw 1 0 2\n", 3),
        ("w 0 1 1\n", 1),
        ("n 2\nbogus\n", 2),
        ("n 2\nn 2\n", 2),
        ("n 2\nw 0 1 0.25\n", 2),
        ("n 2\nmetric chebyshev\n", 2),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(InstanceError) as info:
        parse_instance(text)
    assert info.value.line == line


@pytest.mark.parametrize(
    "text, invariant",
    [
        ("n 3\n", "even-count"),
        ("# nothing\n", "count"),
        ("n 2\nv 0 0 0\nv 1 1 1\n", "metric"),
        ("n 2\nmetric manhattan\nv 0 0 0\n", "complete"),
    ],
)
def test_validation_errors_name_the_invariant(text, invariant):
    with pytest.raises(InstanceError) as info:
        parse_instance(text)
    assert info.value.invariant == invariant


def test_missing_pairs_rejected():
    with pytest.raises(InstanceError):
        parse_instance("n 4\nw 0 1 1\n")


@given(st.integers(1, 5).map(lambda k: 2 * k), st.integers(0, 10_000), st.booleans())
def test_dump_parse_round_trip(n, seed, halves):
    g = random_instance(n, random.Random(seed), halves=halves)
    back = parse_instance(dump_instance(g))
    assert back.n == g.n
    assert all(back.edge_weight(u, v) == w for u, v, w in g.edges())


def test_save_and_load_are_inverse(tmp_path):
    g = ProblemGraph.from_points([(0, 0), (1, 0), (3, 0), (6, 0)], "manhattan")
    path = tmp_path / "line.graph"
    save_instance(g, path)
    back = load_instance(path)
    assert dump_instance(back) == dump_instance(g)


def test_matching_helpers():
    g = ProblemGraph.from_weights(4, {(0, 1): 1, (2, 3): 2, (0, 2): 5, (0, 3): 5, (1, 2): 5, (1, 3): 5})
    m = Matching.from_pairs([(1, 0), (3, 2)])
    assert m.is_perfect(4)
    assert m.weight(g) == 3
    assert format_matching(g, m) == "0 1 1\n2 3 2\ntotal 3\n"
    assert not Matching.from_pairs([(0, 1), (1, 2)]).is_matching()
    assert not Matching.from_pairs([(0, 1)]).is_perfect(4)


def test_metric_instances_satisfy_triangle_inequality():
    pts = [(random.Random(i).randint(-5, 5), random.Random(i + 100).randint(-5, 5)) for i in range(6)]
    assert triangle_inequality_holds(ProblemGraph.from_points(pts, "manhattan"))
