import dataclasses
import random

import pytest
from hypothesis import given, strategies as st

from distblossom.fixtures import k4_with_heavy_diagonals, six_point_manhattan
from distblossom.graph import Matching, Weight, random_instance
from distblossom.runtime import EventTrace, SchedulerConfig
from distblossom.serial import serial_mwpm
from distblossom.snapshot import StateSnapshot
from distblossom.solver import solve_distributed
from distblossom.verify import (
    ORACLE_LIMIT,
    OptimalityCertificate,
    OracleRefused,
    all_perfect_matchings,
    audit_trace,
    brute_max_bipartite,
    build_crown,
    certificate_from_trace,
    check_certificate,
    dump_report,
    oracle_mwpm,
    validate_quiescent_state,
)


def test_oracle_on_hand_checked_instances():
    assert oracle_mwpm(k4_with_heavy_diagonals())[0] == 2
    assert oracle_mwpm(six_point_manhattan())[0] == 4


def test_oracle_refuses_large_instances():
    g = random_instance(ORACLE_LIMIT + 2, random.Random(0))
    with pytest.raises(OracleRefused):
        oracle_mwpm(g)


def test_perfect_matching_enumeration_counts():
    # (n-1)!! perfect matchings
    assert [sum(1 for _ in all_perfect_matchings(n)) for n in (0, 2, 4, 6, 8)] == [1, 1, 3, 15, 105]


@given(st.integers(1, 4).map(lambda k: 2 * k), st.integers(0, 10**6))
def test_oracle_is_the_minimum_over_all_matchings(n, seed):
    g = random_instance(n, random.Random(seed), max_weight=30)
    best = min(sum(g.edge_weight(a, b) for a, b in m) for m in all_perfect_matchings(n))
    w, m = oracle_mwpm(g)
    assert w == best and m.weight(g) == best and m.is_perfect(n)


def test_brute_bipartite_small_cases():
    assert brute_max_bipartite([0, 1], [2, 3], [(0, 2), (1, 2)]) == 1
    assert brute_max_bipartite([0, 1], [2, 3], [(0, 2), (1, 3)]) == 2
    assert brute_max_bipartite([0], [1], []) == 0


# --- quiescent state validator ---------------------------------------------------


def contracted_state(seed=3):
    """A serial run's contracted state that contains at least one macrovertex."""
    rng = random.Random(seed)
    while True:
        g = random_instance(8, rng, max_weight=20)
        _, trace = serial_mwpm(g)
        cert = certificate_from_trace(g, trace)
        if any(b.is_macro for b in cert.contracted.blossoms.values()):
            return g, cert


def tweak(snap: StateSnapshot, key, **changes) -> StateSnapshot:
    views = dict(snap.blossoms)
    views[key] = dataclasses.replace(views[key], **changes)
    return StateSnapshot(snap.graph, views, snap.tick)


def test_clean_state_has_no_violations():
    _, cert = contracted_state()
    rep = validate_quiescent_state(cert.contracted)
    assert rep.ok, str(rep)


def test_raised_vertex_weight_breaks_dual_feasibility():
    _, cert = contracted_state()
    snap = cert.contracted
    v = next(b for b in snap.blossoms.values() if b.vertex is not None)
    rep = validate_quiescent_state(tweak(snap, v.key, weight=v.weight + 1000))
    assert not rep.ok
    assert any("negative" in x or "adjusted" in x for x in rep.violations)


def test_slack_match_edge_is_flagged():
    _, cert = contracted_state()
    snap = cert.contracted
    top = next(b for b in snap.top_level() if b.match is not None)
    rep = validate_quiescent_state(tweak(snap, top.key, weight=top.weight - 1))
    assert not rep.ok


def test_even_petal_cycle_is_flagged():
    _, cert = contracted_state()
    snap = cert.contracted
    mac = next(b for b in snap.blossoms.values() if b.is_macro)
    rep = validate_quiescent_state(tweak(snap, mac.key, petals=mac.petals[:-1]))
    assert not rep.ok


def test_negative_macro_weight_is_flagged():
    _, cert = contracted_state()
    snap = cert.contracted
    mac = next(b for b in snap.blossoms.values() if b.is_macro)
    rep = validate_quiescent_state(tweak(snap, mac.key, weight=Weight(-1)))
    assert not rep.ok
    assert dump_report(rep).strip()


# --- certificates -----------------------------------------------------------------


def test_certificate_accepts_optimal_runs():
    g, cert = contracted_state()
    rep = check_certificate(cert, detail=True)
    assert rep.passed, rep.failures
    assert rep.stages >= 1


def test_certificate_rejects_a_different_matching():
    g, cert = contracted_state()
    mates = cert.matching.pairs
    (a, b), (c, d) = mates[0], mates[1]
    worse = Matching.from_pairs([(a, c), (b, d)] + list(mates[2:]))
    assert worse.is_perfect(g.n)
    forged = OptimalityCertificate(g, worse, cert.contracted)
    assert not check_certificate(forged)


def test_certificate_rejects_altered_weights():
    g, cert = contracted_state()
    snap = cert.contracted
    v = next(b for b in snap.top_level() if b.vertex is not None and b.match is not None)
    forged = OptimalityCertificate(g, cert.matching, tweak(snap, v.key, weight=v.weight - Weight(1, 2)))
    assert not check_certificate(forged)


def test_distributed_certificate_round_trips_through_jsonl():
    g = six_point_manhattan()
    r = solve_distributed(g, SchedulerConfig(seed=4, latency=("uniform", 1, 2)))
    back = EventTrace.from_jsonl(r.trace.to_jsonl())
    assert check_certificate(certificate_from_trace(g, back))


# --- crown --------------------------------------------------------------------------


def test_crown_of_a_path():
    crown = build_crown(4, [(0, 1), (1, 2), (2, 3)])
    assert len(crown.vertices) == 12
    assert len(crown.edges) == 23
    assert crown.count_between("circlet", "circlet") == 3
    assert crown.count_between("arch", "circlet") == 4
    assert crown.count_between("arch", "monde") == 16
    assert len(crown.regal_matching) == 4


def test_crown_of_an_empty_graph():
    crown = build_crown(2, [])
    assert len(crown.vertices) == 6 and len(crown.edges) == 6


def test_crown_regal_matching_is_a_matching_of_crown_edges():
    crown = build_crown(5, [(0, 1), (1, 0), (2, 4)])
    edges = {frozenset(e) for e in crown.edges}
    assert len(crown.edges) == 2 + 5 + 25
    used = set()
    for x, y in crown.regal_matching:
        assert frozenset((x, y)) in edges
        assert x not in used and y not in used
        used |= {x, y}


# --- trace audit --------------------------------------------------------------------


def test_audit_passes_real_runs():
    r = solve_distributed(six_point_manhattan(), SchedulerConfig(seed=2, latency=("uniform", 1, 3)))
    audit = audit_trace(r.trace)
    assert audit.ok, audit.problems
    assert audit.message_count > 0


def test_audit_flags_an_unreleased_lock():
    t = EventTrace()
    t.add(1, 7, "lock", {"tree": 3, "addrs": [3, 4]})
    t.add(2, 7, "unlock", {"addrs": [3]})
    assert not audit_trace(t).ok


def test_audit_flags_reordered_delivery():
    t = EventTrace()
    t.add(3, 1, "deliver", [0, 1, 1, "note"])
    t.add(4, 1, "deliver", [0, 0, 2, "note"])
    assert not audit_trace(t).ok


def test_audit_flags_delivery_before_send():
    t = EventTrace()
    t.add(3, 1, "deliver", [0, 0, 3, "note"])
    assert not audit_trace(t).ok


def test_audit_flags_two_updates_by_one_supervisor():
    t = EventTrace()
    t.add(1, 9, "graft", {})
    t.add(2, 9, "augment", {})
    assert not audit_trace(t).ok


def bare_views(graph, weights):
    from distblossom.snapshot import BlossomView

    return {
        v: BlossomView(key=v, vertex=v, members=(v,), weight=Weight(w), pistil=None, petals=(),
                       parent=None, children=(), match=None, positive=True)
        for v, w in enumerate(weights)
    }


def test_hand_built_negative_edge_is_flagged():
    from distblossom.graph import ProblemGraph

    g = ProblemGraph.from_weights(2, {(0, 1): 5})
    assert validate_quiescent_state(StateSnapshot(g, bare_views(g, [2, 3]))).ok
    rep = validate_quiescent_state(StateSnapshot(g, bare_views(g, [3, 3])))
    assert not rep.ok and len(rep.violations) == 1


def test_crown_has_no_forbidden_layers():
    rng = random.Random(1)
    edges = [(u, v) for u in range(6) for v in range(u + 1, 6) if rng.random() < 0.5]
    crown = build_crown(6, edges)
    for a, b in [("arch", "arch"), ("monde", "monde"), ("circlet", "monde")]:
        assert crown.count_between(a, b) == 0


@given(st.integers(1, 4).map(lambda k: 2 * k), st.integers(0, 10**6), st.integers(0, 10**6))
def test_oracle_bounds_every_perfect_matching(n, seed, pick):
    g = random_instance(n, random.Random(seed))
    options = list(all_perfect_matchings(n))
    m = Matching.from_pairs(options[pick % len(options)])
    assert oracle_mwpm(g)[0] <= m.weight(g)


def test_verify_entry_point_exit_codes(tmp_path, capsys):
    from distblossom.graph import save_instance
    from distblossom.verify import main

    g = six_point_manhattan()
    inst = tmp_path / "six.graph"
    save_instance(g, inst)
    r = solve_distributed(g, SchedulerConfig(seed=1))
    good = tmp_path / "good.jsonl"
    good.write_text(r.trace.to_jsonl())
    assert main(["--input", str(inst), "--trace", str(good)]) == 0
    # drop the final unlock records: the audit must notice
    lines = r.trace.to_jsonl().splitlines()
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join(x for x in lines if '"unlock"' not in x) + "\n")
    assert main(["--input", str(inst), "--trace", str(bad)]) == 1
    assert '"ok": false' in capsys.readouterr().out
