"""YAML scene files.

Schema (unknown keys are rejected at every level)::

    kappa: 2.0            # wavenumber, > 0
    R: 1.0                # measurement radius
    r0: 0.05              # separation radius
    A: 1.0                # optional volume bound (default: unbounded)
    E: 2.0                # optional amplitude bound (default: unbounded)
    cells:
      - name: left        # optional label
        vertices: [[x, y, z], ...]
        faces: [[i, j, k, ...], ...]     # vertex index cycles
        amplitude: [re, im]
        probe_vertex: 0                  # optional; chosen by order_cells if absent
      - icosphere: {radius: 0.5, level: 3, centre: [0, 0, 0]}
        amplitude: [1.0, 0.0]

An ``icosphere`` entry replaces ``vertices``/``faces`` with a polyhedral ball
approximation, used by the closed-form validation scene.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import yaml

from .geometry import Cell, ConvexPolyhedron, GeometryError, Scene, icosphere

TOP_KEYS = {"kappa", "R", "r0", "A", "E", "cells"}
CELL_KEYS = {"name", "vertices", "faces", "amplitude", "probe_vertex", "icosphere"}
ICO_KEYS = {"radius", "level", "centre"}


class SceneFormatError(ValueError):
    pass


def _reject_unknown(where: str, got: dict, allowed: set) -> None:
    extra = set(got) - allowed
    if extra:
        raise SceneFormatError(f"{where}: unknown key(s) {sorted(extra)}")


def _amplitude(value, where: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise SceneFormatError(f"{where}: amplitude must be a number or [re, im]")


def cell_from_dict(d: dict, where: str = "cell") -> Cell:
    if not isinstance(d, dict):
        raise SceneFormatError(f"{where}: expected a mapping")
    _reject_unknown(where, d, CELL_KEYS)
    if "amplitude" not in d:
        raise SceneFormatError(f"{where}: missing amplitude")
    if "icosphere" in d:
        if "vertices" in d or "faces" in d:
            raise SceneFormatError(f"{where}: icosphere excludes vertices/faces")
        ico = d["icosphere"]
        _reject_unknown(f"{where}.icosphere", ico, ICO_KEYS)
        poly = icosphere(float(ico["radius"]), int(ico.get("level", 3)), ico.get("centre", (0.0, 0.0, 0.0)))
    else:
        if "vertices" not in d or "faces" not in d:
            raise SceneFormatError(f"{where}: needs vertices and faces")
        poly = ConvexPolyhedron.from_faces(np.asarray(d["vertices"], float), d["faces"])
    pv = d.get("probe_vertex")
    if pv is not None and not 0 <= int(pv) < len(poly.vertices):
        raise SceneFormatError(f"{where}: probe_vertex {pv} out of range")
    return Cell(poly, _amplitude(d["amplitude"], where), None if pv is None else int(pv), str(d.get("name", "")))


def scene_from_dict(d: dict) -> Scene:
    if not isinstance(d, dict):
        raise SceneFormatError("scene: expected a mapping at top level")
    _reject_unknown("scene", d, TOP_KEYS)
    for key in ("kappa", "R", "r0"):
        if key not in d:
            raise SceneFormatError(f"scene: missing {key}")
    cells = [cell_from_dict(c, f"cells[{i}]") for i, c in enumerate(d.get("cells") or [])]
    return Scene(kappa=float(d["kappa"]), R=float(d["R"]), r0=float(d["r0"]), cells=tuple(cells),
                 A=float(d.get("A", np.inf)), E=float(d.get("E", np.inf)))


def load_scene(path) -> Scene:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise SceneFormatError(f"{path}: {exc}") from exc
    try:
        return scene_from_dict(doc)
    except GeometryError as exc:
        raise SceneFormatError(f"{path}: {exc}") from exc


def scene_to_dict(scene: Scene) -> dict:
    out: dict = {"kappa": float(scene.kappa), "R": float(scene.R), "r0": float(scene.r0)}
    if np.isfinite(scene.A):
        out["A"] = float(scene.A)
    if np.isfinite(scene.E):
        out["E"] = float(scene.E)
    cells = []
    for c in scene.cells:
        d: dict = {}
        if c.name:
            d["name"] = c.name
        d["vertices"] = [[float(v) for v in p] for p in c.poly.vertices]
        d["faces"] = [list(map(int, f.vertices)) for f in c.poly.faces]
        d["amplitude"] = [float(c.amplitude.real), float(c.amplitude.imag)]
        if c.probe_vertex is not None:
            d["probe_vertex"] = int(c.probe_vertex)
        cells.append(d)
    out["cells"] = cells
    return out


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(yaml.safe_dump(scene_to_dict(scene), sort_keys=False, default_flow_style=None))


def ball_cell_info(scene: Scene, path) -> dict | None:
    """``{radius, amplitude}`` when the file describes a single origin-centred icosphere."""
    doc = yaml.safe_load(Path(path).read_text())
    cells = doc.get("cells") or []
    if len(cells) != 1 or "icosphere" not in cells[0]:
        return None
    ico = cells[0]["icosphere"]
    if np.linalg.norm(ico.get("centre", (0.0, 0.0, 0.0))) > 0:
        return None
    return {"radius": float(ico["radius"]), "amplitude": scene.cells[0].amplitude}
