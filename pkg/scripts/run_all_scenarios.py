"""Run every pinned scenario and print a one-line verdict per check.

Usage:
    python scripts/run_all_scenarios.py [--out DIR] [--only NAME ...]

With --out, each scenario writes its full JSON result into DIR.  Exit
status is the number of failed scenarios, so 0 means the whole suite
reproduced its expected behaviour.
"""

import argparse
import os
import sys
import time

from uldplab.scenarios import SCENARIO_NAMES, run


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="directory for per-scenario JSON results")
    ap.add_argument("--only", nargs="*", help="subset of scenario names")
    args = ap.parse_args(argv)

    names = args.only or sorted(SCENARIO_NAMES)
    unknown = set(names) - set(SCENARIO_NAMES)
    if unknown:
        ap.error(f"unknown scenarios: {sorted(unknown)}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)

    failures = 0
    for name in names:
        dest = os.path.join(args.out, f"{name}.json") if args.out else None
        t0 = time.perf_counter()
        result = run(name, out=dest)
        dt = time.perf_counter() - t0
        status = "PASS" if result.passed else "FAIL"
        print(f"[{status}] {name} ({dt:.1f}s)")
        for check in result.checks:
            mark = "ok" if check.passed else "FAIL"
            print(f"    {mark:4s} {check.name}: {check.detail}")
        failures += 0 if result.passed else 1
    print(f"{len(names) - failures}/{len(names)} scenarios passed")
    return failures


if __name__ == "__main__":
    sys.exit(main())
