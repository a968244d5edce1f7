"""Reconstruction error against data perturbation, for the log-log Lipschitz slope."""

import argparse

from cornerprobe.dtn import SphereGrid
from cornerprobe.forward import simulate_boundary
from cornerprobe.recon import plan_reconstruction, stability_sweep
from cornerprobe.scenefile import load_scene


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("scene", help="YAML scene file, e.g. scenes/two_cells.yaml")
    p.add_argument("--levels", type=float, nargs="+", default=[0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--band-limit", type=int, default=32)
    args = p.parse_args()
    scene, _ = load_scene(args.scene).ordered()
    grid = SphereGrid(scene.R, args.band_limit)
    plan = plan_reconstruction(scene, grid)
    result = stability_sweep(plan, simulate_boundary(scene, grid), sorted(args.levels), range(args.seeds))
    print(result.to_csv(), end="")


if __name__ == "__main__":
    main()
