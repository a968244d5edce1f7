"""``corner-probe`` command line.

Exit codes: 0 success, 2 validation failure, 3 numerical-check failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .dtn import BandLimitWarning, SphereGrid
from .forward import (
    FieldFormatError,
    add_noise,
    ball_field,
    default_band_limit,
    export_csv,
    h1_norm,
    load_field,
    save_field,
    simulate_boundary,
)
from .geometry import GeometryError, Scene, constant_cone, validate_assumptions, vertex_cone
from .probe import boundary_functional, c0_lower_bound, cone_moment, volume_moment
from .quadrature import QuadratureBudgetError, QuadratureSpec
from .recon import VERSION, ProbeSchedule, ReconstructionError, loglog_slope, plan_reconstruction, reconstruct, \
    stability_sweep
from .scenefile import SceneFormatError, ball_cell_info, load_scene

EXIT_OK, EXIT_INVALID, EXIT_CHECK, EXIT_IO = 0, 2, 3, 4
THREADS_ENV = "CORNER_PROBE_THREADS"
HEADER = f"# corner-probe v{VERSION}"
DEFAULT_SCAN = tuple(2.0 ** -k for k in range(4, 11))


@dataclass
class RunConfig:
    command: str
    scene: Path | None = None
    data: Path | None = None
    out: Path = Path(".")
    tol: float = 1e-7
    band_limit: int | None = None
    noise: list[float] = field(default_factory=list)
    seed: int = 0
    repeats: int = 5
    radii: list[float] | None = None
    reference: bool = False
    threads: int | None = None
    alpha: float | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("--tol must be positive")
        if self.band_limit is not None and self.band_limit < 1:
            raise ValueError("--band-limit must be >= 1")

    @property
    def quad(self) -> QuadratureSpec:
        return QuadratureSpec(rtol=self.tol)


def _floats(text: str) -> list[float]:
    return [float(Fraction(t.strip())) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="corner-probe", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scene", type=Path)
    common.add_argument("--data", type=Path, help="boundary-field container (.cpbf)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--tol", type=float, default=1e-7, help="quadrature relative tolerance")
    common.add_argument("--band-limit", type=int, dest="band_limit")
    common.add_argument("--noise", type=_floats, default=[], help="comma-separated noise levels")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--radii", type=_floats, help="probe radii as fractions of r0, e.g. 1/8,1/16,1/32")
    common.add_argument("--reference", action="store_true", help="report errors against scene amplitudes")
    common.add_argument("--threads", type=int)
    sub.add_parser("simulate", parents=[common], help="simulate boundary data")
    sub.add_parser("verify", parents=[common], help="Green's identity, DtN and cone-exponent checks")
    scan = sub.add_parser("cone-scan", parents=[common], help="cone moments against probe offset")
    scan.add_argument("--alpha", type=float, help="constant aperture (radians) instead of scene corners")
    sub.add_parser("reconstruct", parents=[common], help="recover cell amplitudes")
    sweep = sub.add_parser("sweep", parents=[common], help="noise sweep of the reconstruction error")
    sweep.add_argument("--repeats", type=int, default=5, help="seeds per level, starting at --seed")
    return p


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(command=args.command, scene=args.scene, data=args.data, out=args.out, tol=args.tol,
                     band_limit=args.band_limit, noise=args.noise, seed=args.seed,
                     repeats=getattr(args, "repeats", 5), radii=args.radii, reference=args.reference,
                     threads=args.threads, alpha=getattr(args, "alpha", None))


def _set_threads(requested: int | None) -> None:
    if requested is None:
        env = os.environ.get(THREADS_ENV)
        requested = int(env) if env else None
    if requested is None:
        return
    import numba
    numba.set_num_threads(max(1, min(int(requested), numba.config.NUMBA_NUM_THREADS)))


def _require(path: Path | None, flag: str) -> Path:
    if path is None:
        raise ValueError(f"{flag} is required for this command")
    return path


def _scene(cfg: RunConfig) -> Scene:
    return load_scene(_require(cfg.scene, "--scene"))


def _valid_scene(cfg: RunConfig, corners: bool = True) -> Scene:
    """Load and validate; without ``corners`` only the placement checks apply (simulation)."""
    scene = _scene(cfg)
    if corners and scene.cells and any(c.probe_vertex is None for c in scene.cells):
        scene, _ = scene.ordered()
    report = validate_assumptions(scene)
    failed = [c for c in report.failed() if corners or not c.name.startswith("corner")]
    if failed:
        raise GeometryError("scene assumptions failed:\n" + str(report))
    return scene


def _grid(cfg: RunConfig, scene: Scene) -> SphereGrid:
    return SphereGrid(scene.R, cfg.band_limit or default_band_limit(scene.kappa, scene.R))


def _load_data(cfg: RunConfig, scene: Scene):
    data = load_field(_require(cfg.data, "--data"))
    if abs(data.kappa - scene.kappa) > 1e-12 * scene.kappa or abs(data.R - scene.R) > 1e-12 * scene.R:
        raise GeometryError(f"data header (kappa={data.kappa}, R={data.R}) does not match scene "
                            f"(kappa={scene.kappa}, R={scene.R})")
    return data


def _schedule(cfg: RunConfig) -> ProbeSchedule:
    return ProbeSchedule(tuple(cfg.radii)) if cfg.radii else ProbeSchedule()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> int:
    scene = _valid_scene(cfg, corners=False)
    grid = _grid(cfg, scene)
    field_ = simulate_boundary(scene, grid, cfg.quad)
    if cfg.noise:
        field_ = add_noise(field_, cfg.noise[0], cfg.seed)
    cfg.out.mkdir(parents=True, exist_ok=True)
    save_field(field_, cfg.out / "boundary.cpbf")
    export_csv(field_, cfg.out / "boundary.csv", [HEADER])
    norm = h1_norm(field_)
    print(f"eps = {norm.value:.12g}  (tail fraction {norm.tail_fraction:.3g})")
    if not norm.band_limited:
        print("warning: band limit too low for these data")
    ball = ball_cell_info(scene, cfg.scene)
    if ball is not None:
        exact = ball_field(scene.kappa, ball["radius"], ball["amplitude"], grid.nodes)
        err = np.max(np.abs(field_.u - exact)) / np.max(np.abs(exact))
        print(f"ball closed form: max relative nodal error {err:.3e}")
    return EXIT_OK


def shell_points(scene: Scene, n: int = 20, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    return d * rng.uniform(scene.R + scene.r0 / 2, scene.R + scene.r0, n)[:, None]


def green_check(scene: Scene, data, quad: QuadratureSpec, n: int = 20, seed: int = 0) -> float:
    """Worst discrepancy of the boundary pairing against the volume integral, scaled by ``|value| + E vol``."""
    if not scene.cells:
        return 0.0
    frame = vertex_cone(scene.cells[0].poly, scene.cells[0].probe_vertex, scene.r0).frame
    E = max(abs(c.amplitude) for c in scene.cells)
    vol = sum(c.poly.volume for c in scene.cells)
    worst = 0.0
    for y in shell_points(scene, n, seed):
        b = complex(boundary_functional(data, scene.kappa, frame, y))
        v = sum(c.amplitude * volume_moment(c.poly, scene.kappa, frame, y, quad) for c in scene.cells)
        worst = max(worst, abs(b - v) / (abs(v) + E * vol))
    return worst


def cmd_verify(cfg: RunConfig) -> int:
    scene = _valid_scene(cfg)
    data = _load_data(cfg, scene)
    ok = True
    g = green_check(scene, data, cfg.quad)
    passed = g <= 1e-4
    ok &= passed
    print(f"[{'PASS' if passed else 'FAIL'}] green identity: max scaled discrepancy {g:.3e} (limit 1e-4)")
    if data.neumann == 1:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BandLimitWarning)
            dtn = data.with_dtn_neumann()
        scale = np.max(np.abs(data.dnu)) or 1.0
        err = np.max(np.abs(dtn.dnu - data.dnu)) / scale
        passed = err <= 1e-5
        ok &= passed
        print(f"[{'PASS' if passed else 'FAIL'}] dtn consistency: max relative error {err:.3e} (limit 1e-5)")
    else:
        print("[SKIP] dtn consistency: Neumann data already DtN-derived")
    for j, cell in enumerate(scene.cells):
        cone = vertex_cone(cell.poly, cell.probe_vertex, scene.r0)
        rs = scene.r0 * np.array(DEFAULT_SCAN)
        M = np.array([cone_moment(cone, scene.kappa, r) for r in rs])
        slope = loglog_slope(rs, M) if np.all(M > 0) else float("nan")
        passed = -1.1 <= slope <= -0.9
        ok &= passed
        print(f"[{'PASS' if passed else 'FAIL'}] cone exponent cell {j}: slope {slope:.4f} (want [-1.1, -0.9])")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_cone_scan(cfg: RunConfig) -> int:
    fractions = np.array(cfg.radii or DEFAULT_SCAN)
    if np.any(fractions <= 0) or np.any(fractions >= 0.25):
        raise ValueError("cone-scan radii must lie in (0, 1/4) as fractions of r0")
    if cfg.alpha is not None:
        cones = [("alpha", constant_cone(cfg.alpha, 1.0))]
        kappa = 1.0
    else:
        scene = _scene(cfg)
        if any(c.probe_vertex is None for c in scene.cells):
            scene, _ = scene.ordered()
        kappa = scene.kappa
        cones = []
        for j, c in enumerate(scene.cells):
            try:
                cones.append((f"cell{j}", vertex_cone(c.poly, c.probe_vertex, scene.r0)))
            except GeometryError as exc:
                print(f"FLAG cell{j}: {exc}")
                return EXIT_CHECK
    lines = [HEADER, "cone,r,M,M_times_r,slope"]
    status = EXIT_OK
    for name, cone in cones:
        rs = cone.r0 * fractions
        M = np.array([cone_moment(cone, kappa, r) for r in rs])
        slope = loglog_slope(rs, np.abs(M))
        for r, m in zip(rs, M):
            lines.append(f"{name},{float(r)!r},{float(m)!r},{float(m * r)!r},{slope!r}")
        bound = c0_lower_bound(cone.alpha_min, cone.alpha_max) if cone.alpha_max < np.pi / 2 else 0.0
        facet = not (-1.1 <= slope <= -0.9)
        print(f"{name}: slope {slope:.4f}, min M*r {np.min(M * rs):.4g}, c0 bound {bound:.4g}")
        if facet:
            print(f"FLAG {name}: no r^-1 blow-up (facet-like geometry)")
            status = EXIT_CHECK
    _write(cfg.out / "cone_scan.csv", "\n".join(lines) + "\n")
    return status


def cmd_reconstruct(cfg: RunConfig) -> int:
    scene = _valid_scene(cfg)
    data = _load_data(cfg, scene)
    plan = plan_reconstruction(scene, data.grid, _schedule(cfg), cfg.quad)
    report = reconstruct(plan, data, scene.amplitudes if cfg.reference else None)
    _write(cfg.out / "report.yaml", report.to_text())
    _write(cfg.out / "report.csv", report.to_csv())
    for c in report.cells:
        extra = f"  rel.err {abs(c.amplitude - c.reference) / abs(c.reference):.3e}" if c.reference else ""
        print(f"cell {c.index}: c = {c.amplitude.real:+.8f} {c.amplitude.imag:+.8f}i{extra}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    if not cfg.noise:
        raise ValueError("--noise needs at least one level")
    scene = _valid_scene(cfg)
    clean = _load_data(cfg, scene) if cfg.data else simulate_boundary(scene, _grid(cfg, scene), cfg.quad)
    plan = plan_reconstruction(scene, clean.grid, _schedule(cfg), cfg.quad)
    seeds = list(range(cfg.seed, cfg.seed + cfg.repeats))
    result = stability_sweep(plan, clean, sorted(cfg.noise), seeds)
    _write(cfg.out / "sweep.csv", result.to_csv())
    print(f"log-log slope of error against eps: {result.slope:.4f}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "cone-scan": cmd_cone_scan,
            "reconstruct": cmd_reconstruct, "sweep": cmd_sweep}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        _set_threads(cfg.threads)
        return COMMANDS[cfg.command](cfg)
    except (FieldFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ReconstructionError, QuadratureBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (SceneFormatError, GeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
