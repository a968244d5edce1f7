"""Cone moment M(r) for constant apertures, including the facet control at pi/2.

Prints one row per (alpha, r) and the fitted log-log slope per aperture.
"""

import argparse

import numpy as np

from cornerprobe.geometry import constant_cone
from cornerprobe.probe import c0_lower_bound, cone_moment
from cornerprobe.recon import loglog_slope


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--kappa", type=float, default=2.0)
    p.add_argument("--alphas", type=float, nargs="+", default=[0.4, 0.8, 1.1, np.pi / 2 - 0.05, np.pi / 2])
    args = p.parse_args()
    rs = 2.0 ** -np.arange(4, 11)
    print("alpha,r,M,M_times_r")
    summary = []
    for alpha in args.alphas:
        M = np.array([cone_moment(constant_cone(alpha, 1.0), args.kappa, r) for r in rs])
        for r, m in zip(rs, M):
            print(f"{alpha:.6f},{r:.6e},{m:.10e},{m * r:.10e}")
        bound = c0_lower_bound(alpha, alpha) if alpha < np.pi / 2 else 0.0
        summary.append((alpha, loglog_slope(rs, np.abs(M)), (M * rs).min(), bound))
    print()
    for alpha, slope, mr, bound in summary:
        print(f"# alpha {alpha:.4f}: slope {slope:+.4f}, min M r {mr:+.4f}, c0 lower bound {bound:.4f}")


if __name__ == "__main__":
    main()
