"""Scattered-to-incident ratio for a fluid disk as k_s a -> 0, against the quasi-static prediction."""
import math

import numpy as np

from acoustoelastic import forward as F
from acoustoelastic.geometry import Materials


def static_ratio(mat: Materials, r: float) -> float:
    """|u_sc| / |u_inc| per unit k_s a at (r, 0), unit disk, quasi-static limit.

    The isotropic half of the remote strain sees a fluid of bulk modulus kappa,
    the deviatoric half a traction-free hole.
    """
    lam, mu, kap = mat.lam, mat.mu, mat.kappa
    iso = (lam + mu - kap) / (2 * (kap + mu)) / r
    kol = 3 - 4 * lam / (2 * (lam + mu))
    dev = 0.5 * ((kol + 1) / r - 1 / r**3)
    return (iso + dev) * math.sqrt(mu / (lam + 2 * mu))


def main():
    mat = Materials()
    r = 2.0
    for ka in (1e-1, 1e-2, 1e-3):
        om = ka * math.sqrt(mat.mu / mat.rho_e)
        f = F.solve_disk(F.ScatterScene(F.Disk((0.0, 0.0), 1.0), mat, F.IncidentWave.compressional(om, 0.0)))
        x = np.array([[r, 0.0]])
        ratio = np.max(np.abs(f.u_scattered(x))) / np.max(np.abs(f.u_incident(x)))
        print(f"k_s a = {ka:.0e}  ratio / k_s a = {ratio / ka:.5f}")
    print(f"quasi-static prediction: {static_ratio(mat, r):.5f}")


if __name__ == "__main__":
    main()
