"""Solve one small instance three ways and narrate the distributed run.

    python3 demos/walkthrough.py [instance] [seed]

Prints the operations the trees performed (in trace order), the final
matching, and the checks that back it up: serial and brute-force weights,
the optimality certificate and the trace audit.
"""

import sys
from pathlib import Path

from distblossom.graph import format_matching, format_weight, load_instance
from distblossom.runtime import SchedulerConfig
from distblossom.serial import serial_mwpm
from distblossom.solver import solve_distributed
from distblossom.verify import audit_trace, certificate_from_trace, check_certificate, oracle_mwpm

HERE = Path(__file__).resolve().parent
OPS = ("reweight", "rewind", "multireweight", "graft", "augment", "contract", "expand", "abort")


def describe(kind, payload):
    if kind in ("reweight", "multireweight"):
        return f"trees {payload['roots']} shift internal weight by {format_weight(payload['delta'])}"
    if kind == "rewind":
        return f"trees {payload['roots']} take back {format_weight(payload['delta'])} ({payload['reason']})"
    if kind in ("graft", "augment", "contract"):
        _, u, v, _ = payload["edge"]
        return f"along the edge between addresses {u} and {v}"
    if kind == "abort":
        return f"{payload['action']} abandoned: {payload['reason']}"
    return ", ".join(f"{k}={v}" for k, v in payload.items())


def main():
    path = Path(sys.argv[1]) if len(sys.argv) > 1 else HERE / "data" / "k4_heavy_diagonals.graph"
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
    graph = load_instance(path)
    print(f"{path.name}: {graph.n} vertices, seed {seed}, latency uniform:1:2\n")

    result = solve_distributed(graph, SchedulerConfig(seed=seed, latency=("uniform", 1, 2)))
    for tick, actor, kind, payload in result.trace.records:
        if kind in OPS:
            print(f"  tick {tick:>4}  {kind:<13} {describe(kind, payload)}")
    print(f"\nfinished at tick {result.ticks} after {result.messages} messages\n")
    print(format_matching(graph, result.matching), end="")

    serial_weight = serial_mwpm(graph)[0].weight(graph)
    print(f"\nserial blossom weight  {format_weight(serial_weight)}")
    if graph.n <= 12:
        print(f"brute-force weight     {format_weight(oracle_mwpm(graph)[0])}")
    report = check_certificate(certificate_from_trace(graph, result.trace), detail=True)
    print(f"certificate            {'holds' if report.passed else 'FAILS'} over {report.stages} contraction stage(s)")
    audit = audit_trace(result.trace)
    print(f"trace audit            {'clean' if audit.ok else audit.problems[:3]}")


if __name__ == "__main__":
    main()
