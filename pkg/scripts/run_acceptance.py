#!/usr/bin/env python3
"""Run the full acceptance battery and write the canonical JSON summary."""

import argparse
import sys
from pathlib import Path

from spacelike.report import write_report
from spacelike.suite import run_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="suite_out")
    ap.add_argument("--skip-determinism", action="store_true",
                    help="skip the 3x rerun that checks byte identity across thread counts")
    args = ap.parse_args()
    results = run_suite(seed=args.seed, threads=args.threads,
                        with_determinism=not args.skip_determinism)
    write_report(Path(args.out) / "suite.json", {"subcommand": "suite", **results})
    print(f"summary written to {Path(args.out) / 'suite.json'}")
    return 0 if results["all_passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
