"""Error of the slice simulator against the limit semigroup and ODE as dt halves."""
import argparse

import numpy as np

from wclimit import limit_qsde as lq
from wclimit import simulator as sim
from wclimit.correlation import ExponentialKernel
from wclimit.selftest import DEMO_AMPS, DEMO_PHI1, DEMO_PHI2, demo_system


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=1.0)
    # amplitude switch times should sit on the grid, else the first ratio is off
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--halvings", type=int, default=4)
    args = ap.parse_args()
    c = lq.limit_coefficients(demo_system(), ExponentialKernel(0.5, 0.0))
    dts = [args.dt / 2 ** k for k in range(args.halvings + 1)]
    X = np.diag([1.0, -1.0]).astype(complex)
    vac = sim.vacuum_heisenberg_errors(c, X, dts, args.t, lq.lindblad_semigroup(c, X, args.t))
    ode = lq.matrix_element_ode(c, DEMO_PHI1, DEMO_PHI2, DEMO_AMPS, args.t)
    coh = sim.coherent_errors(c, DEMO_AMPS, DEMO_PHI1, DEMO_PHI2, dts, args.t, ode)
    print("dt         vacuum     coherent")
    for h, a, b in zip(dts, vac, coh):
        print(f"{h:<10g} {a:.3e}  {b:.3e}")
    print("ratios vacuum  ", [round(r, 3) for r in sim.convergence_ratios(vac)])
    print("ratios coherent", [round(r, 3) for r in sim.convergence_ratios(coh)])


if __name__ == "__main__":
    main()
