"""Find the two kinds of conflict between trees by sweeping scheduler seeds.

    python3 demos/conflicts.py

1. On four points on a line, the two outer roots both try to absorb the
   middle edge at once.  Both reweight; the lower-priority tree notices the
   overshoot and takes its change back.
2. On six grid points, two trees that each grafted a matched pair end up
   holding each other's negative vertices.  Neither can move alone, so the
   cluster reweights jointly (a multireweight).
"""

from distblossom.fixtures import four_point_line, six_point_manhattan
from distblossom.graph import Matching, Weight, format_weight
from distblossom.runtime import SchedulerConfig
from distblossom.solver import solve_distributed
from distblossom.verify import audit_trace, priority_rewinds

VARIED = ("uniform", 1, 2)


def first(records, kinds):
    return [(t, k, p) for t, _, k, p in records if k in kinds]


def rewinds_on_the_line():
    g = four_point_line()
    for seed in range(100):
        r = solve_distributed(g, SchedulerConfig(seed=seed, latency=VARIED))
        found = priority_rewinds(r.trace)
        if found:
            print(f"four points on a line, seed {seed} (total {format_weight(r.weight)}):")
            for t, k, p in first(r.trace.records, ("reweight", "rewind", "augment")):
                extra = f" against priority {p['against']}" if k == "rewind" else ""
                amount = format_weight(p["delta"]) if "delta" in p else ""
                print(f"  tick {t:>3}  {k:<9} {amount:>4}  priority {p.get('priority', '-')}{extra}")
            print(f"  audit clean: {audit_trace(r.trace).ok}\n")
            return


def multireweight_on_the_grid():
    g = six_point_manhattan()
    start = (Matching.from_pairs([(3, 4), (1, 2)]), {1: Weight(1), 3: Weight(1)})
    hits = 0
    shown = False
    for seed in range(100):
        r = solve_distributed(g, SchedulerConfig(seed=seed), warm_start=start)
        if r.counts()["multireweight"]:
            hits += 1
            if not shown:
                shown = True
                print(f"six grid points from the stuck state, seed {seed}:")
                for t, k, p in first(r.trace.records, ("graft", "multireweight", "augment")):
                    if k == "multireweight":
                        print(f"  tick {t:>3}  {k:<13} trees {p['roots']} by {format_weight(p['delta'])}")
                    else:
                        print(f"  tick {t:>3}  {k}")
                print(f"  final pairs {list(r.matching.pairs)}, total {format_weight(r.weight)}")
    print(f"  {hits}/100 seeds needed a multireweight (fixed latency)\n")

    scratch = sum(
        1 for seed in range(100)
        if solve_distributed(g, SchedulerConfig(seed=seed, latency=VARIED)).counts()["multireweight"]
    )
    print(f"from the empty matching with uniform:1:2 latency: {scratch}/100 seeds")


if __name__ == "__main__":
    rewinds_on_the_line()
    multireweight_on_the_grid()
