"""Weak-coupling sweep: pre-limit Dyson levels against the limit series, with Richardson estimates."""
import argparse

from wclimit import dyson as dy
from wclimit import limit_qsde as lq
from wclimit.correlation import ExponentialKernel
from wclimit.selftest import DEMO_AMPS, DEMO_PHI1, DEMO_PHI2, demo_system


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--lambda", dest="lams", type=float, nargs="+", default=[0.5, 0.25, 0.125])
    args = ap.parse_args()
    dy.validate_lambdas(args.lams)
    sys_, model = demo_system(), ExponentialKernel(1.0, 0.5)
    lim = lq.dyson_limit_levels(sys_, model, DEMO_AMPS, DEMO_PHI1, DEMO_PHI2, args.t, args.levels)
    print("n  lambda    |term - limit|")
    for n in range(1, args.levels + 1):
        vals = []
        for lam in args.lams:
            v = dy.dyson_term_matrix_element(sys_, DEMO_AMPS, model, n, args.t, lam, DEMO_PHI1, DEMO_PHI2, kind="I")
            vals.append(v)
            print(f"{n}  {lam:<8g}  {abs(v - lim[n]):.3e}")
        if len(vals) >= 3:
            print(f"{n}  richardson {abs(dy.richardson(args.lams, vals) - lim[n]):.3e}")


if __name__ == "__main__":
    main()
