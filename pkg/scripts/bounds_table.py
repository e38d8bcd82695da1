"""Level bounds of the majorant series and their partial sums for given A, B, B'."""
import argparse

from wclimit import pule_bounds as pb


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--A", type=float, default=-0.7)
    ap.add_argument("--B", type=float, default=0.5)
    ap.add_argument("--B-prime", dest="Bp", type=float, default=0.5)
    ap.add_argument("--n-max", type=int, default=20)
    args = ap.parse_args()
    p = pb.BoundParameters(args.A, args.B, args.Bp)
    for r in pb.bound_table(p, args.n_max):
        print("  ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()))


if __name__ == "__main__":
    main()
