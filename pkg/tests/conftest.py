"""Session fixtures: simulated data and reconstruction plans are expensive, so build each once."""

from dataclasses import dataclass

import pytest

from cornerprobe.dtn import SphereGrid
from cornerprobe.forward import BoundaryField, simulate_boundary
from cornerprobe.geometry import Scene
from cornerprobe.recon import ReconstructionPlan, plan_reconstruction
from cornerprobe.scenes import one_cube_scene, three_cell_scene, two_cell_scene

BAND = 32


@dataclass
class Case:
    scene: Scene
    field: BoundaryField
    plan: ReconstructionPlan


def _case(scene: Scene) -> Case:
    scene, _ = scene.ordered()
    grid = SphereGrid(scene.R, BAND)
    return Case(scene, simulate_boundary(scene, grid), plan_reconstruction(scene, grid))


@pytest.fixture(scope="session")
def three_cells() -> Case:
    return _case(three_cell_scene())


@pytest.fixture(scope="session")
def two_cells() -> Case:
    return _case(two_cell_scene())


@pytest.fixture(scope="session")
def one_cube() -> Case:
    return _case(one_cube_scene())
