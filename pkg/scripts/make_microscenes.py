#!/usr/bin/env python3
"""Write the 20 synthetic micro-scenes, their plans and an audit manifest."""

import argparse
import json

from affordcheck import microscenes


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", help="directory to populate")
    ap.add_argument("--expected", action="store_true", help="also write expected_summary.json")
    args = ap.parse_args()
    manifest = microscenes.write_suite(args.out_dir)
    if args.expected:
        (manifest.parent / "expected_summary.json").write_text(
            json.dumps(microscenes.expected_summary(), indent=2) + "\n")
    print(manifest)


if __name__ == "__main__":
    main()
