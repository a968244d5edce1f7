"""Reference scenes shared by the tests, the experiment scripts and ``scenes/*.yaml``."""

from __future__ import annotations

from .geometry import Cell, ConvexPolyhedron, Scene, icosphere

TETRA_VERTICES = ([0.1, 0.05, -0.1], [0.55, 0.05, 0.0], [0.15, 0.45, 0.1], [0.2, 0.1, 0.5])


def tetra_scene(kappa: float = 2.0, amplitude: complex = 1 + 0.5j) -> Scene:
    """One tetrahedron well inside the unit sphere (``r0 = 0.1``)."""
    return Scene(kappa, 1.0, 0.1, (Cell(ConvexPolyhedron.tetrahedron(*TETRA_VERTICES), amplitude, name="tetra"),))


def cube_scene(kappa: float = 2.0, amplitude: complex = -0.8 + 0.3j) -> Scene:
    cube = ConvexPolyhedron.box([-0.35, -0.2, -0.25], [0.05, 0.2, 0.15])
    return Scene(kappa, 1.0, 0.1, (Cell(cube, amplitude, name="cube"),))


def _left_cube() -> ConvexPolyhedron:
    return ConvexPolyhedron.box([-0.6, -0.15, -0.15], [-0.3, 0.15, 0.15])


def _lower_cube() -> ConvexPolyhedron:
    return ConvexPolyhedron.box([0.1, -0.55, -0.15], [0.4, -0.25, 0.15])


def _small_tetra() -> ConvexPolyhedron:
    return ConvexPolyhedron.tetrahedron([0.05, 0.2, -0.1], [0.4, 0.2, -0.05], [0.1, 0.5, 0.0], [0.15, 0.3, 0.3])


def three_cell_scene(kappa: float = 2.0, amplitudes=(1 + 0.5j, -0.7 + 0.2j, 0.5 - 1.0j)) -> Scene:
    """Two cubes and a tetrahedron, pairwise gaps above ``6 r0`` with ``r0 = 0.05``."""
    cells = (Cell(_left_cube(), amplitudes[0], name="left"),
             Cell(_lower_cube(), amplitudes[1], name="lower"),
             Cell(_small_tetra(), amplitudes[2], name="tetra"))
    return Scene(kappa, 1.0, 0.05, cells, A=1.0, E=2.0)


def two_cell_scene(kappa: float = 2.0, amplitudes=(1 + 0.5j, 0.5 - 1.0j)) -> Scene:
    cells = (Cell(_left_cube(), amplitudes[0], name="left"), Cell(_small_tetra(), amplitudes[1], name="tetra"))
    return Scene(kappa, 1.0, 0.05, cells, A=1.0, E=2.0)


def one_cube_scene(kappa: float = 2.0, amplitude: complex = 1 + 0.5j) -> Scene:
    return Scene(kappa, 1.0, 0.05, (Cell(_left_cube(), amplitude, name="left"),), A=1.0, E=2.0)


def ball_scene(level: int = 3, radius: float = 0.5, kappa: float = 2.0, amplitude: complex = 1 + 0.5j) -> Scene:
    return Scene(kappa, 1.0, 0.1, (Cell(icosphere(radius, level), amplitude, name="ball"),))
