"""Shedding location on extruded slabs against the closed-form balance.

For a constant section A on [r0, R] bonded along width w the balance at a cut
z is rho A omega^2 (R^2 - z^2) / 2 - sigma_c A - tau_a w (R - z). Prints the
search result, the analytic root and the error for a few parameter sets, plus
a case whose positive window falls between the first-pass planes.
"""
import numpy as np

from iceshed.quasi3d import ExtrusionSpec, extrude, rectangle_section
from iceshed.shedding import SheddingConfig, find_shedding
from iceshed.strength import constant_model

R = 1.18


def analytic_root(rho, A, w, omega, r0, sigma_c, tau_a, n=200_000):
    z = np.linspace(r0, R, n + 1)
    g = rho * A * omega ** 2 * (R ** 2 - z ** 2) / 2 - sigma_c * A - tau_a * w * (R - z)
    hit = np.flatnonzero((g[:-1] > 0) & (g[1:] <= 0))
    return None if not len(hit) else float(z[hit[-1]] + z[hit[-1] + 1]) / 2


def solve(rho, A, w, omega, r0, sigma_c, tau_a, fitting=True):
    sec = rectangle_section(w, A / w, r0, 4, 4, 4)
    mesh = extrude(ExtrusionSpec((sec,), 60, None, (r0, R)), rho)
    cfg = SheddingConfig(force_fitting=fitting)
    return find_shedding(mesh, omega, constant_model(sigma_c, tau_a), -8.0, cfg)


def main():
    cases = {
        "worked": (900.0, 1e-3, 0.02, 62.8319, 0.5 * R, 2e5, 1e5),
        "heavy": (910.0, 2.5e-3, 0.03, 55.0, 0.45 * R, 3e5, 1e5),
        "fast": (880.0, 8e-4, 0.015, 70.0, 0.55 * R, 9e5, 1e5),
    }
    # window case: balance is -a (z - z1)(z - z2), positive only on (0.83R, 0.86R)
    a = 900.0 * 1e-3 * 62.8319 ** 2 / 2
    z1, z2 = 0.83 * R, 0.86 * R
    cases["window"] = (900.0, 1e-3, 0.02, 62.8319, 0.4 * R,
                       a * (R - z1) * (R - z2) / 1e-3, a * (z1 + z2) / 0.02)

    print(f"{'case':>8} {'z_s/R':>8} {'root/R':>8} {'|err|/R':>9} {'fallback':>9} {'no-fit shed':>12}")
    for name, p in cases.items():
        res = solve(*p)
        plain = solve(*p, fitting=False)
        root = analytic_root(*p)
        nan = float("nan")
        zs = res.z_s / R if res.shed else nan
        rr = root / R if root is not None else nan
        print(f"{name:>8} {zs:>8.4f} {rr:>8.4f} {abs(zs - rr):>9.2e} {res.fallback_used!s:>9} "
              f"{plain.shed!s:>12}")


if __name__ == "__main__":
    main()
