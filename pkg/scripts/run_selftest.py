"""Run the acceptance criteria and write the report to a file as well as stdout."""
import argparse
import sys

from wclimit.selftest import format_report, run_selftest


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--only", type=int, nargs="+")
    ap.add_argument("--report", default="selftest_report.txt")
    args = ap.parse_args()
    results = run_selftest(args.only)
    text = format_report(results, with_time=True)
    print(text)
    with open(args.report, "w") as fh:
        fh.write(text + "\n")
    sys.exit(0 if all(r.passed for r in results) else 1)


if __name__ == "__main__":
    main()
