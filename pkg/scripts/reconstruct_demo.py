"""Simulate a scene, reconstruct its amplitudes and print the report."""

import argparse

from cornerprobe.dtn import SphereGrid
from cornerprobe.forward import add_noise, simulate_boundary
from cornerprobe.recon import ProbeSchedule, reconstruct_scene
from cornerprobe.scenefile import load_scene


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("scene", help="YAML scene file, e.g. scenes/three_cells.yaml")
    p.add_argument("--band-limit", type=int, default=32)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--mode", choices=["single", "two-term"], default="two-term")
    p.add_argument("--moment", choices=["cell", "corner"], default="cell")
    args = p.parse_args()
    scene = load_scene(args.scene)
    field = add_noise(simulate_boundary(scene, SphereGrid(scene.R, args.band_limit)), args.noise, seed=0)
    schedule = ProbeSchedule(mode=args.mode, moment=args.moment,
                             fractions=(1 / 8,) if args.mode == "single" else ProbeSchedule().fractions)
    report, perm = reconstruct_scene(scene, field, schedule, reference=scene.amplitudes)
    print(f"# probing order {perm}")
    print(report.to_csv(), end="")


if __name__ == "__main__":
    main()
