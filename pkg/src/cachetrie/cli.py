"""Command-line entry point: ``cachetrie {bench,stress,check,audit,analyze}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from contextlib import contextmanager

from cachetrie import analysis
from cachetrie.harness.audit import HASHES, run_audit
from cachetrie.harness.linearizability import check_linearizability
from cachetrie.harness.stress import OpRecord, run_stress
from cachetrie.harness.workload import (
    CONTENTIONS,
    CSV_HEADER,
    VARIANTS,
    WORKLOADS,
    ConfigError,
    WorkloadConfig,
    run_benchmark,
)


@contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _shared(p: argparse.ArgumentParser, *, workload: str, keys: int, ops: int | None, threads: int) -> None:
    p.add_argument("--threads", type=int, default=threads)
    p.add_argument("--keys", type=int, default=keys)
    p.add_argument("--ops", type=int, default=ops, help="total operations over all threads")
    p.add_argument("--workload", choices=WORKLOADS, default=workload)
    p.add_argument("--contention", choices=CONTENTIONS, default="shared")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variant", choices=VARIANTS, default="cached")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def _config(args) -> WorkloadConfig:
    return WorkloadConfig(threads=args.threads, keys=args.keys, ops=args.ops, workload=args.workload,
                          contention=args.contention, seed=args.seed, variant=args.variant)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cachetrie", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="throughput and node-visit benchmark")
    _shared(p, workload="insert", keys=100_000, ops=None, threads=1)
    p.add_argument("--no-header", action="store_true", help="omit the CSV header row")

    p = sub.add_parser("stress", help="record a concurrent history")
    _shared(p, workload="mixed", keys=64, ops=10_000, threads=4)
    p.add_argument("--yield-rate", type=float, default=0.3)

    p = sub.add_parser("check", help="check histories for per-key linearizability")
    _shared(p, workload="mixed", keys=64, ops=10_000, threads=4)
    p.add_argument("--history", default=None, help="check a recorded history (JSON) instead of generating")
    p.add_argument("--histories", type=int, default=1, help="number of seeded histories to generate")
    p.add_argument("--yield-rate", type=float, default=0.3)

    p = sub.add_parser("audit", help="audit invariants, cache coherence and depth distribution")
    _shared(p, workload="insert", keys=10_000, ops=None, threads=1)
    p.add_argument("--hash", choices=sorted(HASHES), default="uniform")
    p.add_argument("--expect-uniform", dest="expect_uniform", action="store_true", default=None,
                   help="compare the depth histogram with the uniform-hash distribution")
    p.add_argument("--no-expect-uniform", dest="expect_uniform", action="store_false")

    p = sub.add_parser("analyze", help="analytic depth distribution tables")
    p.add_argument("--n", type=float, default=1e6, help="number of keys")
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    return parser


def cmd_bench(args) -> int:
    report = run_benchmark(_config(args))
    with _output(args.out) as out:
        if args.format == "json":
            json.dump(report.to_dict(), out, indent=2)
            out.write("\n")
        else:
            if not args.no_header:
                out.write(CSV_HEADER + "\n")
            out.write(report.csv_row() + "\n")
    return 0


def _write_history(history: list[OpRecord], fmt: str, out) -> None:
    if fmt == "json":
        json.dump([r.to_dict() for r in history], out)
        out.write("\n")
        return
    fields = ["thread_id", "op", "key", "arg", "result", "invoke", "response"]
    w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in history:
        w.writerow({k: ("" if v is None else v) for k, v in r.to_dict().items()})


def read_history(path: str) -> list[OpRecord]:
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("["):
        return [OpRecord.from_dict(d) for d in json.loads(text)]
    rows = csv.DictReader(io.StringIO(text))

    def opt(v):
        return None if v == "" else int(v)

    return [OpRecord(int(r["thread_id"]), r["op"], int(r["key"]), opt(r["arg"]), opt(r["result"]),
                     int(r["invoke"]), int(r["response"])) for r in rows]


def cmd_stress(args) -> int:
    history = run_stress(_config(args), yield_rate=args.yield_rate)
    with _output(args.out) as out:
        _write_history(history, args.format, out)
    return 0


def cmd_check(args) -> int:
    results = []
    if args.history:
        verdict = check_linearizability(read_history(args.history))
        results.append({"source": args.history, "ok": verdict.ok, "detail": str(verdict)})
    else:
        base = _config(args)
        for i in range(args.histories):
            cfg = WorkloadConfig(base.threads, base.keys, base.ops, base.workload, base.contention,
                                 (base.seed + i) % 2**64, base.variant)
            verdict = check_linearizability(run_stress(cfg, yield_rate=args.yield_rate))
            results.append({"seed": cfg.seed, "ok": verdict.ok, "detail": str(verdict)})
    failed = [r for r in results if not r["ok"]]
    with _output(args.out) as out:
        if args.format == "json":
            json.dump({"histories": len(results), "failed": len(failed), "results": results}, out, indent=2)
            out.write("\n")
        else:
            out.write("history,ok\n")
            for r in results:
                out.write(f"{r.get('seed', r.get('source'))},{int(r['ok'])}\n")
    for r in failed:
        print(r["detail"], file=sys.stderr)
    return 1 if failed else 0


def cmd_audit(args) -> int:
    report = run_audit(args.keys, args.seed, hash=args.hash, variant=args.variant,
                       expect_uniform=args.expect_uniform)
    with _output(args.out) as out:
        if args.format == "json":
            json.dump(report.to_dict(), out, indent=2)
            out.write("\n")
        else:
            out.write("check,ok,detail\n")
            w = csv.writer(out, lineterminator="\n")
            for c in report.checks:
                w.writerow([c.name, int(c.ok), c.detail])
    for c in report.failures():
        print(c, file=sys.stderr)
    return report.exit_code


def cmd_analyze(args) -> int:
    n = args.n
    if n < 1:
        raise ConfigError("--n must be >= 1")
    max_depth = args.max_depth if args.max_depth is not None else analysis.depth_search_limit(n) + 4
    if max_depth < 0:
        raise ConfigError("--max-depth must be >= 0")
    table = analysis.depth_table(n, max_depth)
    summary = analysis.summary(n)
    with _output(args.out) as out:
        if args.format == "json":
            summary["table"] = [{"d": d, "p": p, "eta": eta} for d, p, eta in table]
            json.dump(summary, out, indent=2)
            out.write("\n")
        else:
            out.write("d,p,eta\n")
            for d, p, eta in table:
                out.write(f"{d},{p:.12g},{eta:.12g}\n")
            out.write(f"# n={n:g} mu={summary['mu']:.6f} argmax={summary['argmax_depth']} "
                      f"expected_depth={summary['expected_depth']:.6f}\n")
    return 0


COMMANDS = {"bench": cmd_bench, "stress": cmd_stress, "check": cmd_check, "audit": cmd_audit,
            "analyze": cmd_analyze}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        parser.error(str(e))
    return 2


if __name__ == "__main__":
    sys.exit(main())
