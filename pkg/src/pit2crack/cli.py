"""``pit2crack`` command line.

Exit codes: 0 success, 1 failed check (validate-intact), 2 user or config
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from . import CALIBRATED_SURFACE_FACTOR, __version__
from .exceptions import ConfigError, ConvergenceError, MorrowDomainError, Pit2CrackError
from .fatigue import INTACT_BAND, AnalysisSettings, life_field, validate_intact
from .history import parse_history_csv
from .material import load_material
from .mesh import field_to_mesh, write_stl
from .pitgen import (DEFAULT_DEPTH_THRESHOLD, DEFAULT_SPACING, RNG_ALGORITHM, HierarchySpec,
                     batch_generate, caps_to_csv, ellipsoid_field, field_to_bytes, field_to_csv,
                     generate_pit, grid_count, measure, read_field)

SEED_ENV = "PIT2CRACK_SEED"
LIFE_COLUMNS = ("location_id", "Nf", "log10_life", "theta", "phi", "psi", "damage_per_pass")


class UsageError(Pit2CrackError):
    pass


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Run:
    """Collects outputs and writes the run manifest."""

    def __init__(self, command: str, out_dir: Path, config: dict):
        self.command = command
        self.out_dir = Path(out_dir)
        self.config = config
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.seeds: list[int] = []
        self.start = time.perf_counter()
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def add_input(self, path: Path | str, data: bytes):
        self.inputs[str(path)] = sha256(data)

    def write(self, name: str, data: bytes | str) -> Path:
        if isinstance(data, str):
            data = data.encode("utf-8")
        path = self.out_dir / name
        path.write_bytes(data)
        self.outputs[name] = sha256(data)
        return path

    def finish(self) -> Path:
        manifest = {
            "tool": "pit2crack",
            "version": __version__,
            "command": self.command,
            "config": self.config,
            "seeds": self.seeds,
            "rng": RNG_ALGORITHM,
            "inputs": self.inputs,
            "outputs": [{"file": k, "sha256": v} for k, v in sorted(self.outputs.items())],
            "wall_time_s": time.perf_counter() - self.start,
            "finished_at": datetime.now(timezone.utc).isoformat(),
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2) + "\n")
        return path


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_config(path):
    if path is None:
        return {}, None
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read config {p}: {exc.strerror}") from None
    try:
        return json.loads(raw), raw
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", str(p)) from None


def resolve_seed(cli_seed, config: dict) -> int:
    """Seed precedence: command line, config file, environment, then 0."""
    if cli_seed is not None:
        return cli_seed
    if "seed" in config:
        return config["seed"]
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env, 0)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env!r} is not an integer", SEED_ENV) from None
    return 0


def _spec_from_args(args) -> tuple[HierarchySpec, Run]:
    config, raw = _load_config(args.config)
    seed = resolve_seed(args.seed, config)
    spec = HierarchySpec.from_dict(config, seed=seed)
    run = Run(args.command, args.out_dir, spec.to_dict())
    if raw is not None:
        run.add_input(args.config, raw)
    return spec, run


def cmd_generate(args) -> int:
    spec, run = _spec_from_args(args)
    run.seeds.append(spec.seed)
    field, caps = generate_pit(spec)
    metrics = measure(field, args.load_axis, args.depth_threshold)
    run.config.update(load_axis=args.load_axis, depth_threshold=args.depth_threshold)
    run.write("heightfield.csv", field_to_csv(field))
    run.write("heightfield.grid", field_to_bytes(field))
    run.write("caps.csv", caps_to_csv(caps))
    run.write("metrics.json", _dumps(metrics.to_dict()))
    run.finish()
    print(f"generated pit: d={metrics.d:.1f} um, w={metrics.w:.1f} um, l={metrics.l:.1f} um, "
          f"Ra={metrics.Ra:.2f} um ({len(caps)} caps) -> {run.out_dir}")
    return 0


def cmd_batch(args) -> int:
    spec, run = _spec_from_args(args)
    stream = args.seed_stream if args.seed_stream is not None else spec.seed
    summary = batch_generate(spec, args.n_samples, stream, jobs=args.jobs,
                             load_axis=args.load_axis, depth_threshold=args.depth_threshold)
    run.seeds.extend(summary.seeds)
    run.config.update(n_samples=args.n_samples, seed_stream=stream, load_axis=args.load_axis,
                      depth_threshold=args.depth_threshold)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("sample", "seed") + tuple(summary.mean))
    for i, (s, m) in enumerate(zip(summary.seeds, summary.samples)):
        w.writerow([i, s] + [repr(float(v)) for v in m.as_array()])
    run.write("samples.csv", buf.getvalue())
    run.write("summary.json", _dumps(summary.to_dict()))
    run.finish()
    for name in summary.mean:
        print(f"{name:>15}: mean={summary.mean[name]:.4g} std={summary.std[name]:.4g} "
              f"min={summary.min[name]:.4g} max={summary.max[name]:.4g}")
    return 0


def cmd_idealize(args) -> int:
    if args.source is not None:
        src = Path(args.source)
        data = src.read_bytes()
        base = read_field(src)
        m = measure(base, args.load_axis, args.depth_threshold)
        d, D = m.d, m.w
        nx, ny, dx, dy = base.nx, base.ny, base.dx, base.dy
    else:
        if args.depth is None or args.width is None:
            raise UsageError("give --depth and --width, or --from an existing heightfield")
        d, D = args.depth, args.width
        dx = dy = args.spacing
        side = args.patch if args.patch is not None else 2.0 * D
        nx = ny = grid_count(side, dx)
    field = ellipsoid_field(d, D, nx, ny, dx, dy)
    config = {"d": d, "D": D, "nx": nx, "ny": ny, "dx": dx, "dy": dy, "load_axis": args.load_axis,
              "depth_threshold": args.depth_threshold}
    run = Run("idealize", args.out_dir, config)
    if args.source is not None:
        run.add_input(args.source, data)
    run.write("ellipsoid.csv", field_to_csv(field))
    run.write("ellipsoid.grid", field_to_bytes(field))
    metrics = measure(field, args.load_axis, args.depth_threshold)
    run.write("metrics.json", _dumps(metrics.to_dict()))
    run.finish()
    print(f"ellipsoidal pit d={d:.1f} um, D={D:.1f} um on {nx}x{ny} grid -> {run.out_dir}")
    return 0


def cmd_mesh(args) -> int:
    src = Path(args.field)
    data = src.read_bytes()
    field = read_field(src)
    mesh = field_to_mesh(field, thickness=args.slab)
    binary = args.stl == "binary"
    run = Run("mesh", args.out_dir, {"field": str(src), "stl": args.stl, "slab": args.slab})
    run.add_input(src, data)
    name = args.name or (src.stem + ".stl")
    run.write(name, write_stl(mesh, binary=binary, name=src.stem))
    run.finish()
    print(f"{mesh.n_triangles} triangles ({args.stl} STL) -> {run.out_dir / name}")
    return 0


def _settings(args, default_factor=1.0) -> AnalysisSettings:
    factor = args.surface_factor if args.surface_factor is not None else default_factor
    return AnalysisSettings(
        plane_step=args.plane_step, psi_step=args.psi_step, surface_factor=factor,
        mean_stress_correction=args.mean_stress, plane_criterion=args.criterion,
        refine=not args.no_refine,
    )


def _sample_history_bytes() -> bytes:
    return (resources.files("pit2crack") / "data" / "uniaxial_sample.csv").read_bytes()


def life_rows_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LIFE_COLUMNS)
    for r in results:
        row = r.to_row()
        w.writerow([row["location_id"]] + [repr(float(row[k])) for k in LIFE_COLUMNS[1:]])
    return buf.getvalue()


def cmd_life(args) -> int:
    if args.sample:
        src, data = "builtin:uniaxial_sample.csv", _sample_history_bytes()
    elif args.history:
        src = args.history
        try:
            data = Path(src).read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read {src}: {exc.strerror}") from None
    else:
        raise UsageError("give a history CSV or --sample")
    histories = sorted(parse_history_csv(data), key=lambda h: h.location_id)
    if not histories:
        raise UsageError(f"{src}: no data rows")
    material = load_material(args.material)
    settings = _settings(args)
    results, worst = life_field(histories, material, settings, jobs=args.jobs)
    run = Run("life", args.out_dir, {"history": str(src), "material": material.to_dict(),
                                     "settings": settings.to_dict(), "jobs": args.jobs})
    run.add_input(src, data)
    run.write("life.csv", life_rows_csv(results))
    report = {
        "material": material.to_dict(),
        "settings": settings.to_dict(),
        "n_locations": len(results),
        "worst": worst.to_dict(),
    }
    run.write("report.json", _dumps(report))
    run.finish()
    nf = "inf" if math.isinf(worst.Nf) else f"{worst.Nf:.6g}"
    print(f"worst location {worst.location_id}: Nf = {nf} cycles (log10 = {worst.log10_life:.4f})")
    return 0


def cmd_validate_intact(args) -> int:
    material = load_material(args.material)
    settings = _settings(args, default_factor=CALIBRATED_SURFACE_FACTOR)
    report = validate_intact(material, settings)
    verdict = "PASS" if report["passed"] else "FAIL"
    print(f"intact specimen {INTACT_BAND[0]:.3g}-{INTACT_BAND[1]:.3g} cycles, "
          f"Ksur={settings.surface_factor:g}: Nf = {report['Nf']:.6g} -> {verdict}")
    if args.out_dir is not None:
        run = Run("validate-intact", args.out_dir, {"material": material.to_dict(),
                                                    "settings": settings.to_dict()})
        run.write("validation.json", _dumps(report))
        run.finish()
    return 0 if report["passed"] else 1


def cmd_validate_history(args) -> int:
    histories = parse_history_csv(Path(args.history).read_bytes())
    n = sum(len(h) for h in histories)
    print(f"{args.history}: OK, {len(histories)} location(s), {n} sample(s)")
    return 0


def _add_generator_args(p):
    p.add_argument("--config", help="hierarchy JSON config (defaults apply when omitted)")
    p.add_argument("--seed", type=int, help=f"seed override (fallback: config, then ${SEED_ENV})")
    p.add_argument("--load-axis", choices=("x", "y"), default="x")
    p.add_argument("--depth-threshold", type=float, default=DEFAULT_DEPTH_THRESHOLD)
    p.add_argument("--out-dir", type=Path, default=Path("out"))


def _add_life_args(p):
    p.add_argument("--material", default="Q235", help="built-in name or JSON file")
    p.add_argument("--plane-step", type=float, default=10.0)
    p.add_argument("--psi-step", type=float, default=10.0)
    p.add_argument("--surface-factor", type=float, default=None)
    p.add_argument("--mean-stress", choices=("morrow", "none"), default="morrow")
    p.add_argument("--criterion", choices=("max_shear", "max_damage"), default="max_shear")
    p.add_argument("--no-refine", action="store_true", help="keep the grid plane, skip local refinement")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pit2crack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="grow one stochastic pit")
    _add_generator_args(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("batch", help="Monte Carlo statistics of pit metrics")
    _add_generator_args(p)
    p.add_argument("--n-samples", type=int, default=10)
    p.add_argument("--seed-stream", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("idealize", help="ellipsoidal pit of given depth and surface diameter")
    p.add_argument("--depth", type=float, help="maximum depth d (um)")
    p.add_argument("--width", type=float, help="surface diameter D (um)")
    p.add_argument("--from", dest="source", help="take d and w from an existing heightfield")
    p.add_argument("--spacing", type=float, default=DEFAULT_SPACING)
    p.add_argument("--patch", type=float, default=None, help="square patch side (default 2*D)")
    p.add_argument("--load-axis", choices=("x", "y"), default="x")
    p.add_argument("--depth-threshold", type=float, default=DEFAULT_DEPTH_THRESHOLD)
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.set_defaults(func=cmd_idealize)

    p = sub.add_parser("mesh", help="heightfield to STL")
    p.add_argument("field", help="heightfield .csv or .grid file")
    p.add_argument("--stl", choices=("binary", "ascii"), default="binary")
    p.add_argument("--slab", type=float, default=None, help="closed slab thickness (um)")
    p.add_argument("--name", default=None, help="output file name")
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("life", help="critical-plane fatigue life per location")
    p.add_argument("history", nargs="?", help="history CSV")
    p.add_argument("--sample", action="store_true", help="use the packaged uniaxial sample history")
    _add_life_args(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.set_defaults(func=cmd_life)

    p = sub.add_parser("validate-intact", help="check the intact-specimen life band")
    _add_life_args(p)
    p.add_argument("--out-dir", type=Path, default=None)
    p.set_defaults(func=cmd_validate_intact)

    p = sub.add_parser("validate-history", help="check a history CSV against the schema")
    p.add_argument("history")
    p.set_defaults(func=cmd_validate_history)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConvergenceError, MorrowDomainError) as exc:
        print(f"pit2crack: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (Pit2CrackError, ValueError, OSError) as exc:
        print(f"pit2crack: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
