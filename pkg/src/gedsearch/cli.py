"""Command line front end.

Four subcommands: ``build`` turns a dataset file into an index file,
``query`` answers threshold queries from an index, ``stats`` reports
storage breakdowns and ``bench`` times the pipeline over a threshold
sweep. Data goes to stdout, diagnostics to stderr; query/stats support
table, csv and json-lines output.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

from .engine import build_index, query as run_query
from .ged import DEFAULT_BUDGET
from .graphs import LabelInterner, ParseError, load_dataset
from .storage import IndexFormatError, load_index, save_index
from .succinct import encoding_costs

FORMATS = ("table", "csv", "jsonl")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _emit_rows(rows: list[dict], fmt: str) -> None:
    """Uniform row output. Lists are space-joined in table/csv output."""
    if not rows:
        return
    if fmt == "jsonl":
        for row in rows:
            print(json.dumps(row, separators=(", ", ": ")))
        return
    flat = [
        {
            k: " ".join(map(str, v)) if isinstance(v, (list, tuple)) else v
            for k, v in row.items()
        }
        for row in rows
    ]
    if fmt == "csv":
        writer = csv.DictWriter(sys.stdout, fieldnames=list(flat[0]))
        writer.writeheader()
        writer.writerows(flat)
        return
    keys = list(flat[0])
    widths = {
        k: max(len(k), *(len(str(r[k])) for r in flat)) for k in keys
    }
    print("  ".join(k.ljust(widths[k]) for k in keys))
    for r in flat:
        print("  ".join(str(r[k]).ljust(widths[k]) for k in keys))


def cmd_build(args) -> int:
    t0 = time.perf_counter()
    interner = LabelInterner()
    graphs = load_dataset(args.dataset, interner)
    if not graphs:
        return _fail(f"{args.dataset}: no graphs")
    origin = tuple(args.origin) if args.origin else None
    index = build_index(
        graphs,
        interner,
        region_length=args.region_length,
        block_size=args.block,
        fanout=args.fanout,
        origin=origin,
    )
    save_index(index, args.output)
    elapsed = time.perf_counter() - t0

    sections = {"node_scalars": 0, "degree_side": 0, "label_side": 0}
    for tree in index.regions.values():
        for name, bits in tree.size_report().items():
            sections[name] += bits

    rows = [
        {"metric": "graphs", "value": index.n_graphs},
        {"metric": "degree_vocabulary", "value": len(index.vocab_d)},
        {"metric": "label_vocabulary", "value": len(index.vocab_l)},
        {"metric": "regions", "value": len(index.regions)},
        {"metric": "node_scalar_bytes", "value": sections["node_scalars"] // 8},
        {"metric": "degree_side_bytes", "value": sections["degree_side"] // 8},
        {"metric": "label_side_bytes", "value": sections["label_side"] // 8},
        {"metric": "index_bytes", "value": os.path.getsize(args.output)},
        {"metric": "build_seconds", "value": round(elapsed, 3)},
    ]
    _emit_rows(rows, args.format)
    return 0


def _load_queries(path, index):
    # reusing the index interner keeps label ids aligned; labels the index
    # has never seen get fresh ids and match nothing, as intended
    return load_dataset(path, index.interner)


def cmd_query(args) -> int:
    index = load_index(args.index)
    queries = _load_queries(args.queries, index)
    if not queries:
        return _fail(f"{args.queries}: no query graphs")
    threads = args.threads or os.cpu_count() or 1
    rows = []
    for qid, h in enumerate(queries):
        res = run_query(index, h, args.tau, budget=args.budget, threads=threads)
        rows.append(
            {
                "query": qid,
                "tau": args.tau,
                "candidates": len(res.candidates),
                "answers": list(res.answers),
                "unverified": list(res.unverified),
                "filter_ms": round(res.filter_seconds * 1e3, 3),
                "verify_ms": round(res.verify_seconds * 1e3, 3),
            }
        )
    _emit_rows(rows, args.format)
    return 0


def cmd_stats(args) -> int:
    index = load_index(args.index)
    sections = {"node_scalars": 0, "degree_side": 0, "label_side": 0}
    plain_bits = 0
    psi_entries = {"d": 0, "l": 0}
    psi_costs = {"d": [0, 0, 0], "l": [0, 0, 0]}
    for tree in index.regions.values():
        for name, bits in tree.size_report().items():
            sections[name] += bits
        plain_bits += tree.plain_size_bits()
        for side, seq in (("d", tree.psi_d), ("l", tree.psi_l)):
            values = list(seq)
            psi_entries[side] += len(values)
            for slot, cost in enumerate(encoding_costs(values, seq.block_size)):
                psi_costs[side][slot] += cost

    total_bits = sum(sections.values())
    rows = [
        {"metric": "graphs", "value": index.n_graphs},
        {"metric": "regions", "value": len(index.regions)},
        {"metric": "degree_vocabulary", "value": len(index.vocab_d)},
        {"metric": "label_vocabulary", "value": len(index.vocab_l)},
        {"metric": "node_scalar_bytes", "value": sections["node_scalars"] // 8},
        {"metric": "degree_side_bytes", "value": sections["degree_side"] // 8},
        {"metric": "label_side_bytes", "value": sections["label_side"] // 8},
        {"metric": "tree_bytes", "value": total_bits // 8},
        {"metric": "plain_tree_bytes", "value": plain_bits // 8},
        {
            "metric": "succinct_ratio",
            "value": round(total_bits / plain_bits, 4) if plain_bits else 0.0,
        },
    ]
    for side, label in (("d", "degree"), ("l", "label")):
        n = psi_entries[side]
        fixed, gamma, hybrid = psi_costs[side]
        for scheme, bits in (("fixed", fixed), ("gamma", gamma), ("hybrid", hybrid)):
            rows.append(
                {
                    "metric": f"psi_{label}_{scheme}_bits_per_entry",
                    "value": round(bits / n, 3) if n else 0.0,
                }
            )
    _emit_rows(rows, args.format)
    return 0


def cmd_bench(args) -> int:
    index = load_index(args.index)
    queries = _load_queries(args.queries, index)
    if not queries:
        return _fail(f"{args.queries}: no query graphs")
    try:
        taus = [int(t) for t in args.tau.split(",")]
    except ValueError:
        return _fail(f"bad --tau list {args.tau!r}")
    threads = args.threads or os.cpu_count() or 1

    writer = csv.writer(sys.stdout)
    writer.writerow(
        ["tau", "queries", "avg_candidates", "avg_filter_ms", "avg_verify_ms"]
    )
    for tau in taus:
        n_cand = filter_s = verify_s = 0.0
        for h in queries:
            res = run_query(index, h, tau, budget=args.budget, threads=threads)
            n_cand += len(res.candidates)
            filter_s += res.filter_seconds
            verify_s += res.verify_seconds
        n = len(queries)
        writer.writerow(
            [
                tau,
                n,
                round(n_cand / n, 2),
                round(filter_s / n * 1e3, 3),
                round(verify_s / n * 1e3, 3),
            ]
        )
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gedsearch",
        description="Graph similarity search under edit distance.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="index a dataset file")
    p.add_argument("dataset")
    p.add_argument("-o", "--output", required=True, help="index file to write")
    p.add_argument("--l", dest="region_length", type=int, default=4,
                   help="2D cell side length (default 4)")
    p.add_argument("--block", type=int, default=16,
                   help="compressed block size (default 16)")
    p.add_argument("--fanout", type=int, default=8,
                   help="tree fanout (default 8)")
    p.add_argument("--origin", type=int, nargs=2, metavar=("X0", "Y0"),
                   help="partition origin (default: database minima)")
    p.add_argument("--format", choices=FORMATS, default="table")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="run threshold queries against an index")
    p.add_argument("index")
    p.add_argument("queries", help="query graphs, same text format as datasets")
    p.add_argument("--tau", type=int, required=True, help="edit distance threshold")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                   help="verifier expansion budget per pair")
    p.add_argument("--threads", type=int, default=0,
                   help="verification threads (default: all cores)")
    p.add_argument("--format", choices=FORMATS, default="table")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("stats", help="storage and coding statistics of an index")
    p.add_argument("index")
    p.add_argument("--format", choices=FORMATS, default="table")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="time the pipeline over a threshold sweep")
    p.add_argument("index")
    p.add_argument("queries")
    p.add_argument("--tau", default="1,2,3,4",
                   help="comma-separated thresholds (default 1,2,3,4)")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--threads", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, IndexFormatError) as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
