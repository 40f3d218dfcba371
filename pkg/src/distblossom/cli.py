"""Command line: ``distblossom solve`` and ``distblossom sweep``.

Exit codes: 0 success, 2 bad input or arguments, 3 tick budget exhausted,
4 a verification check failed.
"""

from __future__ import annotations

import argparse
import os
import statistics
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .graph import InstanceError, ProblemGraph, format_matching, format_weight, load_instance
from .runtime import EventTrace, LivelockSuspected, SchedulerConfig
from .serial import serial_mwpm
from .solver import solve_distributed
from .verify import ORACLE_LIMIT, certificate_from_trace, check_certificate, oracle_mwpm

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_CHECK = 4

DEFAULT_LATENCY = "uniform:1:2"
TRACE_DIR_ENV = "BLOSSOM_TRACE_DIR"


class UsageError(Exception):
    pass


def parse_seed_range(text: str) -> range:
    """``A..B`` inclusive."""
    try:
        a, b = text.split("..")
        lo, hi = int(a), int(b)
    except ValueError:
        raise UsageError(f"bad seed range {text!r}; expected A..B") from None
    if hi < lo:
        raise UsageError(f"empty seed range {text!r}")
    return range(lo, hi + 1)


def _config(args, seed: int) -> SchedulerConfig:
    try:
        latency = SchedulerConfig.parse_latency(args.latency)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.max_ticks is not None and args.max_ticks < 1:
        raise UsageError("--max-ticks must be positive")
    return SchedulerConfig(seed=seed, latency=latency, max_ticks=args.max_ticks)


def _load(path: str) -> ProblemGraph:
    try:
        return load_instance(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except InstanceError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _trace_path(args, graph_path: str, label: str) -> Path | None:
    if args.trace:
        return Path(args.trace)
    env = os.environ.get(TRACE_DIR_ENV)
    if env:
        return Path(env) / f"{Path(graph_path).stem}-{label}.jsonl"
    return None


def _write_trace(path: Path | None, trace: EventTrace | None) -> None:
    if path is None or trace is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(trace.to_jsonl())


def _oracle(graph: ProblemGraph):
    if graph.n > ORACLE_LIMIT:
        raise UsageError(f"the brute-force oracle refuses n = {graph.n} > {ORACLE_LIMIT}")
    return oracle_mwpm(graph)


def _checks_for(name: str) -> list[str]:
    return ["serial", "oracle", "certificate"] if name == "all" else ([] if name == "none" else [name])


def cmd_solve(args) -> int:
    graph = _load(args.input)
    checks = _checks_for(args.check)
    if "oracle" in checks and graph.n > ORACLE_LIMIT:
        if args.check == "all":
            checks.remove("oracle")
            print(f"note: skipping oracle check, n = {graph.n} > {ORACLE_LIMIT}", file=sys.stderr)
        else:
            _oracle(graph)
    if "certificate" in checks and args.solver == "oracle":
        raise UsageError("the certificate check needs the distributed or serial solver")

    trace: EventTrace | None = None
    if args.solver == "distributed":
        result = solve_distributed(graph, _config(args, args.seed))
        matching, trace = result.matching, result.trace
    elif args.solver == "serial":
        matching, trace = serial_mwpm(graph)
    else:
        _, matching = _oracle(graph)
    _write_trace(_trace_path(args, args.input, f"{args.solver}-seed{args.seed}"), trace)

    if not matching.is_perfect(graph.n):
        print("error: solver output is not a perfect matching", file=sys.stderr)
        return EXIT_CHECK
    print(format_matching(graph, matching), end="")

    weight = matching.weight(graph)
    failed = False
    for check in checks:
        if check == "certificate":
            report = check_certificate(certificate_from_trace(graph, trace), detail=True)
            ok = report.passed
            detail = "" if ok else "; ".join(report.failures[:5])
        else:
            ref = serial_mwpm(graph)[0].weight(graph) if check == "serial" else _oracle(graph)[0]
            ok = ref == weight
            detail = "" if ok else f"expected {format_weight(ref)}, got {format_weight(weight)}"
        print(f"check {check}: {'ok' if ok else 'FAILED'}{' (' + detail + ')' if detail else ''}", file=sys.stderr)
        failed |= not ok
    return EXIT_CHECK if failed else EXIT_OK


def _sweep_one(graph: ProblemGraph, config: SchedulerConfig):
    try:
        r = solve_distributed(graph, config)
    except LivelockSuspected as exc:
        return config.seed, None, exc.tick, None, None, None
    valid = r.matching.is_perfect(graph.n)
    return config.seed, r.weight if valid else None, r.ticks, r.messages, r.counts(), r.trace


def cmd_sweep(args) -> int:
    graph = _load(args.input)
    seeds = parse_seed_range(args.seeds)
    configs = [_config(args, s) for s in seeds]
    reference = None
    checks = [c for c in _checks_for(args.check) if c != "certificate"]
    if "oracle" in checks:
        reference = _oracle(graph)[0]
    elif "serial" in checks:
        reference = serial_mwpm(graph)[0].weight(graph)

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_one, [graph] * len(configs), configs))
    else:
        rows = [_sweep_one(graph, c) for c in configs]

    trace_dir = Path(args.trace) if args.trace else (Path(os.environ[TRACE_DIR_ENV]) if os.environ.get(TRACE_DIR_ENV) else None)
    totals: Counter = Counter()
    weights: Counter = Counter()
    print("seed  weight  ticks  messages  rewinds  aborts  multireweights")
    budget_hit = []
    for seed, weight, ticks, messages, counts, trace in rows:
        if weight is None and counts is None:
            budget_hit.append(seed)
            print(f"{seed:>4}  budget exhausted at tick {ticks}")
            continue
        if trace_dir is not None:
            _write_trace(trace_dir / f"{Path(args.input).stem}-seed{seed}.jsonl", trace)
        totals.update(counts)
        weights[weight] += 1
        w = format_weight(weight) if weight is not None else "invalid"
        print(f"{seed:>4}  {w:>6}  {ticks:>5}  {messages:>8}  {counts['rewind']:>7}  {counts['abort']:>6}  {counts['multireweight']:>14}")

    done = [r for r in rows if r[4] is not None]
    if done:
        ticks = [r[2] for r in done]
        msgs = [r[3] for r in done]
        print("weights: " + ", ".join(f"{format_weight(w) if w is not None else 'invalid'} x{c}" for w, c in sorted(weights.items(), key=lambda x: (x[0] is None, x[0] or 0))))
        print(f"ticks: min {min(ticks)} mean {statistics.mean(ticks):.1f} max {max(ticks)}")
        print(f"messages: min {min(msgs)} mean {statistics.mean(msgs):.1f} max {max(msgs)}")
        print("operations: " + " ".join(f"{k}={totals[k]}" for k in ("graft", "augment", "contract", "expand", "reweight", "multireweight", "rewind", "abort")))
        print(f"seeds with a multireweight: {sum(1 for r in done if r[4]['multireweight'])}")

    if budget_hit:
        print(f"error: tick budget exhausted for seed {budget_hit[0]}", file=sys.stderr)
        return EXIT_BUDGET
    expected = reference if reference is not None else done[0][1]
    for seed, weight, *_ in done:
        if weight is None or weight != expected:
            print(f"error: seed {seed} gives weight {format_weight(weight) if weight is not None else 'invalid'}, expected {format_weight(expected)}", file=sys.stderr)
            return EXIT_CHECK
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distblossom", description="Minimum-weight perfect matching by message-passing blossoms.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", required=True, help="instance file")
        p.add_argument("--latency", default=DEFAULT_LATENCY, help=f"fixed:K or uniform:LO:HI (default {DEFAULT_LATENCY})")
        p.add_argument("--max-ticks", type=int, default=None, help="tick budget (default grows as n^4)")
        p.add_argument("--trace", default=None, help=f"trace output (file for solve, directory for sweep; default ${TRACE_DIR_ENV})")

    p = sub.add_parser("solve", help="solve one instance")
    common(p)
    p.add_argument("--solver", choices=("distributed", "serial", "oracle"), default="distributed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check", choices=("none", "serial", "oracle", "certificate", "all"), default="none")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run the distributed solver over a range of seeds")
    common(p)
    p.add_argument("--seeds", required=True, help="inclusive range A..B")
    p.add_argument("--check", choices=("none", "serial", "oracle"), default="none", help="also compare against this reference weight")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except LivelockSuspected as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
