"""Coarse scan plus fine refinement on the unit disk, compared with the per-mode root oracle."""
import argparse

from acoustoelastic import eigen as E
from acoustoelastic import meshing
from acoustoelastic.geometry import Materials


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--coarse-h", type=float, default=1 / 16)
    ap.add_argument("--fine-h", type=float, default=1 / 64)
    ap.add_argument("--n-grid", type=int, default=180)
    ap.add_argument("--interval", type=float, nargs=2, default=(2.0, 5.6))
    args = ap.parse_args()
    mat = Materials()
    roots = E.disk_eigenvalues(tuple(args.interval), 1.0, mat)
    cands = E.scan(E.EigenSystem(meshing.disk_mesh(1.0, args.coarse_h), mat), tuple(args.interval), args.n_grid)
    print(f"coarse candidates: {[round(c.omega, 8) for c in cands]}")
    fine = E.refine(E.EigenSystem(meshing.disk_mesh(1.0, args.fine_h), mat), [c.omega for c in cands])
    print("n  mult  oracle         fem            rel")
    for c, r in zip(fine, roots):
        print(f"{r.n:<2d} {r.multiplicity:<5d} {r.omega:<14.10f} {c.omega:<14.10f} {abs(c.omega - r.omega) / r.omega:.2e}")


if __name__ == "__main__":
    main()
