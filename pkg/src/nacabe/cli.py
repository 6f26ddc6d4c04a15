"""Command-line entry point: ``nacabe run`` and ``nacabe bench``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .errors import NacAbeError
from .scenario.bench import bench_ckcache, bench_keysize
from .scenario.config import ConfigError, bundled_scenarios, load_config
from .scenario.runner import run_scenario

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2

_LEVELS = {"trace": logging.DEBUG, "debug": logging.DEBUG, "info": logging.INFO,
           "warning": logging.WARNING, "error": logging.ERROR}


def configure_logging(value: str | None = None):
    """``NACABE_LOG``: trace (packet level), debug, info, warning (default), error."""
    value = (value if value is not None else os.environ.get("NACABE_LOG", "warning")).strip().lower()
    level = _LEVELS.get(value, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger("nacabe").setLevel(level)
    # per-packet forwarder logs only at trace
    logging.getLogger("nacabe.ndn").setLevel(logging.DEBUG if value == "trace" else max(level, logging.INFO))


def _optional_int(text: str) -> int | None:
    return None if text.lower() in ("inf", "none", "unlimited") else int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nacabe", description="NAC-ABE scenario runner and benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config (path or bundled name)")
    run.add_argument("config")
    run.add_argument("--seed", type=int, default=None, help="override the config's seed")
    run.add_argument("--report", metavar="OUT.jsonl", help="write the JSON-lines report here")

    bench = sub.add_parser("bench", help="benchmarks")
    bsub = bench.add_subparsers(dest="bench", required=True)

    ks = bsub.add_parser("keysize", help="DKEY / CK size against comparison count")
    ks.add_argument("--abe", choices=["kp", "cp"], default="kp")
    ks.add_argument("--max-comparisons", type=int, default=5)
    ks.add_argument("--trials", type=int, default=20)
    ks.add_argument("--mss", type=int, default=1500)
    ks.add_argument("--seed", type=int, default=0)
    ks.add_argument("--json", action="store_true", help="print JSON instead of a table")

    ck = bsub.add_parser("ckcache", help="content-key caching against the per-item baseline")
    ck.add_argument("--items", type=int, required=True)
    ck.add_argument("--max-items", type=_optional_int, default=100)
    ck.add_argument("--max-age", type=_optional_int, default=3_600_000, metavar="MS")
    ck.add_argument("--tags", choices=["single", "alternate"], default="single")
    ck.add_argument("--interval", type=int, default=10, metavar="MS", help="virtual time between items")
    ck.add_argument("--seed", type=int, default=0)
    ck.add_argument("--json", action="store_true")
    return parser


def _resolve_config(arg: str):
    bundled = bundled_scenarios()
    if not os.path.exists(arg) and arg in bundled:
        return bundled[arg]
    return arg


def cmd_run(args) -> int:
    try:
        config = load_config(_resolve_config(args.config))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_scenario(config, args.seed, args.report)
    except NacAbeError as exc:
        print(f"config error: scenario could not be set up: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_MISMATCH


def cmd_keysize(args) -> int:
    table = bench_keysize(args.abe.upper(), args.max_comparisons, args.trials, args.mss, args.seed)
    if args.json:
        print(json.dumps({
            "abeType": table.abe_type.value, "slope": table.slope, "intercept": table.intercept,
            "rSquared": table.r_squared,
            "rows": [{"comparisons": r.comparisons, "leaves": r.leaves, "dkeyBytes": r.dkey_bytes,
                      "ckBytes": r.ck_bytes, "dkeySegments": r.dkey_segments} for r in table.rows],
        }, indent=2))
        return EXIT_OK
    print(f"{table.abe_type.value}, mean of {args.trials} random policies per row")
    print(f"{'comparisons':>11} {'leaves':>8} {'dkeyBytes':>10} {'ckBytes':>9} {'dkeySegments':>12}")
    for r in table.rows:
        print(f"{r.comparisons:>11} {r.leaves:>8.1f} {r.dkey_bytes:>10.1f} {r.ck_bytes:>9.1f} {r.dkey_segments:>12.2f}")
    column = "dkeyBytes" if table.abe_type.value == "KP" else "ckBytes"
    print(f"fit {column} = {table.slope:.1f} * c + {table.intercept:.1f}, R^2 = {table.r_squared:.4f}")
    return EXIT_OK


def cmd_ckcache(args) -> int:
    rows = bench_ckcache(args.items, args.max_items, args.max_age, args.tags, args.interval, args.seed)
    if args.json:
        print(json.dumps([{"label": r.label, "maxItems": r.max_items, "maxAgeMs": r.max_age_ms,
                           "items": r.items, "cksGenerated": r.cks_generated,
                           "abeEncryptions": r.abe_encryptions, "totalVirtualMs": r.total_virtual_ms}
                          for r in rows], indent=2))
        return EXIT_OK
    print(f"{'':>9} {'maxItems':>9} {'maxAgeMs':>9} {'items':>6} {'CKs':>6} {'ABE enc':>8} {'virtual ms':>11}")
    for r in rows:
        max_items = "inf" if r.max_items is None else r.max_items
        max_age = "inf" if r.max_age_ms is None else r.max_age_ms
        print(f"{r.label:>9} {max_items:>9} {max_age:>9} {r.items:>6} {r.cks_generated:>6} "
              f"{r.abe_encryptions:>8} {r.total_virtual_ms:>11}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    if args.command == "run":
        return cmd_run(args)
    if args.bench == "keysize":
        return cmd_keysize(args)
    if args.items < 1:
        print("--items must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    return cmd_ckcache(args)


if __name__ == "__main__":
    sys.exit(main())
