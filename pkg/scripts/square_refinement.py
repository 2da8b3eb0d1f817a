"""Corner defects of the square's first eigen candidate under mesh halving, next to a non-eigen control."""
import argparse
import time

import numpy as np

from acoustoelastic import eigen as E
from acoustoelastic import meshing
from acoustoelastic.geometry import Materials

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def control_fields():
    def u(x):
        return np.column_stack([np.sin(x[:, 0] + 2 * x[:, 1]), np.cos(3 * x[:, 0] - x[:, 1])])

    def v(x):
        return 1.0 + x[:, 0] - x[:, 1] ** 2

    return u, v


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega0", type=float, default=4.711441962285562, help="starting frequency")
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--h0", type=float, default=1 / 8)
    args = ap.parse_args()
    mat = Materials()
    uc, vc = control_fields()
    w = args.omega0
    print("h        omega              sigma_min  scalar     bc         ctrl_scalar ctrl_bc    time")
    for k in range(args.levels):
        h = args.h0 / 2**k
        t0 = time.perf_counter()
        s = E.EigenSystem(meshing.polygon_mesh(SQUARE, h), mat)
        c = E.refine(s, [w], 2e-3 if k == 0 else 2e-4)[0]
        w = c.omega
        d = E.corner_report(c, s)
        ctrl = E.control_report(s, uc, vc)
        print(f"{h:<8.5f} {c.omega:<18.12f} {c.sigma_min:<10.3e} "
              f"{max(x.scalar_defect for x in d):<10.3e} {max(x.bc_defect for x in d):<10.3e} "
              f"{max(x.scalar_defect for x in ctrl):<11.3e} {max(x.bc_defect for x in ctrl):<10.3e} "
              f"{time.perf_counter() - t0:.0f}s")


if __name__ == "__main__":
    main()
