#!/usr/bin/env python3
"""Audit the micro-scene suite and print a per-profile pass-rate table."""

import argparse
import json
import sys
import tempfile
import time
from pathlib import Path

from affordcheck import microscenes
from affordcheck.cli import AUDIT_COLUMNS, main as cli_main


def fmt(v):
    return "   -  " if v is None else f"{100 * v:5.1f}%"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", help="keep scenes and summary here (default: temp dir)")
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    work = Path(args.workdir or tempfile.mkdtemp(prefix="affordcheck-"))
    manifest = microscenes.write_suite(work)
    out = work / "summary.json"

    start = time.perf_counter()
    code = cli_main(["audit", "--manifest", str(manifest), "--out", str(out), "--workers", str(args.workers)])
    elapsed = time.perf_counter() - start
    if code:
        return code
    summary = json.loads(out.read_text())
    expected = microscenes.expected_summary()

    print(f"{'profile':<11}" + "".join(f"{c[:12]:>13}" for c in AUDIT_COLUMNS))
    mismatch = 0
    for profile in microscenes.PROFILES:
        rates = summary["rates"][profile]
        print(f"{profile:<11}" + "".join(f"{fmt(rates[c]):>13}" for c in AUDIT_COLUMNS))
        got = {k: v for k, v in rates.items() if v is not None}
        mismatch += got != expected[profile]
    print(f"\n{len(summary['runs'])} runs, {summary['errors']} errors, {elapsed:.1f} s; "
          f"{'matches' if not mismatch else 'DIFFERS FROM'} hand-derived expectations")
    print(f"summary: {out}")
    return 1 if mismatch else 0


if __name__ == "__main__":
    sys.exit(main())
