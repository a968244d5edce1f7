"""Regenerate the YAML files under ``scenes/`` from :mod:`cornerprobe.scenes`."""

from pathlib import Path

import yaml

from cornerprobe import scenes
from cornerprobe.geometry import Scene
from cornerprobe.scenefile import save_scene

OUT = Path(__file__).resolve().parent.parent / "scenes"


def main() -> None:
    OUT.mkdir(exist_ok=True)
    save_scene(scenes.tetra_scene(), OUT / "tetra.yaml")
    save_scene(scenes.cube_scene(), OUT / "cube.yaml")
    save_scene(scenes.two_cell_scene(), OUT / "two_cells.yaml")
    save_scene(scenes.three_cell_scene(), OUT / "three_cells.yaml")
    save_scene(Scene(2.0, 1.0, 0.05, ()), OUT / "empty.yaml")
    ball = {"kappa": 2.0, "R": 1.0, "r0": 0.1,
            "cells": [{"name": "ball", "icosphere": {"radius": 0.5, "level": 3, "centre": [0.0, 0.0, 0.0]},
                       "amplitude": [1.0, 0.5]}]}
    (OUT / "ball.yaml").write_text(yaml.safe_dump(ball, sort_keys=False, default_flow_style=None))
    print("wrote", ", ".join(sorted(p.name for p in OUT.glob("*.yaml"))))


if __name__ == "__main__":
    main()
