"""Stochastic pit morphology generator.

A pit is grown on a heightfield by cutting spherical caps from the surface,
level by level: the first level cuts large pits from the intact surface,
every further level cuts smaller sub-pits whose centres sit inside the
already corroded footprint.  Depth is measured downward from the intact
surface plane, so an untouched column has depth 0.
"""

from __future__ import annotations

import csv
import io
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import ConfigError, DimensionError, GenerationError

RNG_ALGORITHM = f"numpy.random.PCG64 via SeedSequence (numpy {np.__version__})"
DEFAULT_SPACING = 20.0
DEFAULT_DEPTH_THRESHOLD = 0.5

ANYWHERE = "anywhere-in-patch"
IN_FOOTPRINT = "within-existing-pit-footprint"
CENTER_RULES = (ANYWHERE, IN_FOOTPRINT)

GRID_MAGIC = b"P2CH"
GRID_HEADER = struct.Struct("<4sIIddI")  # 32 bytes
UNIT_CODES = {1: 1.0, 2: 1000.0}  # code -> factor to micrometres (um, mm)


@dataclass(frozen=True, eq=False)
class HeightField:
    """Depth map sampled at ``x = i*dx``, ``y = j*dy``; ``depth[i, j]`` in um."""

    depth: np.ndarray
    dx: float = DEFAULT_SPACING
    dy: float = DEFAULT_SPACING

    def __post_init__(self):
        depth = np.array(self.depth, dtype=float)
        if depth.ndim != 2 or depth.shape[0] < 2 or depth.shape[1] < 2:
            raise DimensionError(f"depth must be an nx x ny array with nx, ny >= 2, got {depth.shape}")
        if not (self.dx > 0 and self.dy > 0):
            raise DimensionError(f"grid spacing must be > 0, got dx={self.dx}, dy={self.dy}")
        if not np.all(np.isfinite(depth)):
            raise DimensionError("depth values must be finite")
        if np.any(depth < 0):
            raise DimensionError("depth values must be >= 0")
        depth.setflags(write=False)
        object.__setattr__(self, "depth", depth)

    @classmethod
    def flat(cls, nx: int, ny: int, dx: float = DEFAULT_SPACING, dy: float = DEFAULT_SPACING):
        return cls(np.zeros((nx, ny)), dx, dy)

    @classmethod
    def for_patch(cls, Lx: float, Ly: float, dx: float = DEFAULT_SPACING, dy: float | None = None):
        dy = dx if dy is None else dy
        return cls.flat(grid_count(Lx, dx), grid_count(Ly, dy), dx, dy)

    @property
    def nx(self) -> int:
        return self.depth.shape[0]

    @property
    def ny(self) -> int:
        return self.depth.shape[1]

    @property
    def extent(self) -> tuple[float, float]:
        return (self.nx - 1) * self.dx, (self.ny - 1) * self.dy

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.ny) * self.dy

    def with_depth(self, depth) -> "HeightField":
        return HeightField(depth, self.dx, self.dy)

    def depth_at(self, x: float, y: float) -> float:
        """Bilinear interpolation of the depth, clamped to the patch."""
        fx = min(max(x / self.dx, 0.0), self.nx - 1.0)
        fy = min(max(y / self.dy, 0.0), self.ny - 1.0)
        i0, j0 = min(int(fx), self.nx - 2), min(int(fy), self.ny - 2)
        tx, ty = fx - i0, fy - j0
        d = self.depth
        return float(
            (1 - tx) * (1 - ty) * d[i0, j0] + tx * (1 - ty) * d[i0 + 1, j0]
            + (1 - tx) * ty * d[i0, j0 + 1] + tx * ty * d[i0 + 1, j0 + 1]
        )

    def __eq__(self, other):
        if not isinstance(other, HeightField):
            return NotImplemented
        return (self.dx, self.dy) == (other.dx, other.dy) and np.array_equal(self.depth, other.depth)


def grid_count(length: float, spacing: float) -> int:
    n = int(round(length / spacing)) + 1
    if n < 2:
        raise DimensionError(f"patch length {length} is smaller than one grid cell of {spacing}")
    return n


@dataclass(frozen=True)
class SphericalCap:
    """Sphere of radius ``r`` centred at ``(cx, cy)``, depth ``cz`` (negative is above the surface)."""

    cx: float
    cy: float
    cz: float
    r: float
    level: int = 1

    def __post_init__(self):
        if not self.r > 0:
            raise GenerationError(f"cap radius must be > 0, got {self.r}")


def cut_cap(field: HeightField, cap: SphericalCap) -> HeightField:
    """Remove the part of the sphere that is open to the current surface.

    A column is cut only when the top of the sphere at that column lies at or
    above the current surface; buried spheres leave the field unchanged.
    """
    X, Y = np.meshgrid(field.x, field.y, indexing="ij")
    rho2 = (X - cap.cx) ** 2 + (Y - cap.cy) ** 2
    inside = rho2 <= cap.r * cap.r
    half = np.sqrt(np.where(inside, cap.r * cap.r - rho2, 0.0))
    old = field.depth
    open_to_surface = inside & (cap.cz - half <= old)
    new = np.where(open_to_surface, np.maximum(old, cap.cz + half), old)
    return field.with_depth(np.maximum(new, 0.0))


# -- stochastic recipe -------------------------------------------------------

@dataclass(frozen=True)
class RadiusDist:
    """Sphere radius distribution in um: ``fixed``, ``uniform`` or ``lognormal``."""

    kind: str = "lognormal"
    value: float | None = None
    low: float | None = None
    high: float | None = None
    median: float | None = None
    sigma_log: float | None = None

    def validate(self, path: str):
        if self.kind == "fixed":
            if self.value is None or not self.value > 0:
                raise ConfigError(f"fixed radius must be > 0, got {self.value}", path)
        elif self.kind == "uniform":
            if self.low is None or self.high is None or not 0 < self.low <= self.high:
                raise ConfigError(
                    f"uniform radius needs 0 < low <= high, got low={self.low}, high={self.high}", path)
        elif self.kind == "lognormal":
            if self.median is None or not self.median > 0:
                raise ConfigError(f"lognormal median must be > 0, got {self.median}", path)
            if self.sigma_log is None or not self.sigma_log >= 0:
                raise ConfigError(f"lognormal sigma_log must be >= 0, got {self.sigma_log}", path)
        else:
            raise ConfigError(f"unknown radius distribution kind {self.kind!r}", path)

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "fixed":
            return float(self.value)
        if self.kind == "uniform":
            return float(rng.uniform(self.low, self.high))
        return float(self.median * math.exp(self.sigma_log * rng.standard_normal()))

    @property
    def typical(self) -> float:
        if self.kind == "fixed":
            return float(self.value)
        if self.kind == "uniform":
            return 0.5 * (self.low + self.high)
        return float(self.median)


@dataclass(frozen=True)
class LevelSpec:
    pit_count: int | tuple[int, int] = 1
    radius_dist: RadiusDist = field(default_factory=RadiusDist)
    center_rule: str = ANYWHERE
    center_depth_fraction: float = 0.0
    center: tuple[float, float] | None = None

    def validate(self, path: str):
        count = self.pit_count
        if isinstance(count, tuple):
            if len(count) != 2 or not 0 <= count[0] <= count[1]:
                raise ConfigError(f"pit_count range must satisfy 0 <= low <= high, got {count}",
                                  f"{path}.pit_count")
        elif not count >= 0:
            raise ConfigError(f"pit_count must be >= 0, got {count}", f"{path}.pit_count")
        self.radius_dist.validate(f"{path}.radius_dist")
        if self.center_rule not in CENTER_RULES:
            raise ConfigError(f"center_rule must be one of {CENTER_RULES}, got {self.center_rule!r}",
                              f"{path}.center_rule")
        if not -1.0 <= self.center_depth_fraction <= 1.0:
            raise ConfigError(f"center_depth_fraction must lie in [-1, 1], got {self.center_depth_fraction}",
                              f"{path}.center_depth_fraction")
        if self.center is not None and self.center_rule != ANYWHERE:
            raise ConfigError("a fixed center is only allowed with the anywhere-in-patch rule",
                              f"{path}.center")

    def draw_count(self, rng: np.random.Generator) -> int:
        if isinstance(self.pit_count, tuple):
            return int(rng.integers(self.pit_count[0], self.pit_count[1], endpoint=True))
        return int(self.pit_count)


def default_levels(n_levels: int = 3, median: float = 1000.0, sigma_log: float = 0.3,
                   counts: Sequence[tuple[int, int]] = ((1, 2), (5, 15), (15, 40))) -> list[LevelSpec]:
    """Out-of-the-box hierarchy; each sub-level median is 0.3x its parent's."""
    levels = []
    for k in range(n_levels):
        levels.append(LevelSpec(
            pit_count=tuple(counts[min(k, len(counts) - 1)]),
            radius_dist=RadiusDist("lognormal", median=median * 0.3 ** k, sigma_log=sigma_log),
            center_rule=ANYWHERE if k == 0 else IN_FOOTPRINT,
        ))
    return levels


@dataclass(frozen=True)
class HierarchySpec:
    levels: tuple[LevelSpec, ...] = field(default_factory=lambda: tuple(default_levels()))
    patch_size: tuple[float, float] = (4000.0, 4000.0)
    spacing: tuple[float, float] = (DEFAULT_SPACING, DEFAULT_SPACING)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        self.validate()

    def validate(self):
        if not self.levels:
            raise ConfigError("at least one level is required", "levels")
        for k, level in enumerate(self.levels):
            level.validate(f"levels[{k}]")
            if k == 0 and level.center_rule != ANYWHERE:
                raise ConfigError("the first level must use the anywhere-in-patch rule",
                                  "levels[0].center_rule")
            if k > 0 and level.center_rule != IN_FOOTPRINT:
                raise ConfigError("levels after the first must use the within-existing-pit-footprint rule",
                                  f"levels[{k}].center_rule")
        if len(self.patch_size) != 2 or min(self.patch_size) <= 0:
            raise ConfigError(f"patch_size must be two positive lengths, got {self.patch_size}", "patch_size")
        if len(self.spacing) != 2 or min(self.spacing) <= 0:
            raise ConfigError(f"spacing must be two positive lengths, got {self.spacing}", "spacing")
        for name, L, h in zip("xy", self.patch_size, self.spacing):
            if L < h:
                raise ConfigError(f"patch length along {name} is below one grid cell", "patch_size")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}", "seed")

    @property
    def grid(self) -> tuple[int, int]:
        return (grid_count(self.patch_size[0], self.spacing[0]),
                grid_count(self.patch_size[1], self.spacing[1]))

    def blank_field(self) -> HeightField:
        nx, ny = self.grid
        return HeightField.flat(nx, ny, *self.spacing)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rng"] = RNG_ALGORITHM
        return out

    @classmethod
    def from_dict(cls, data: dict, seed: int | None = None) -> "HierarchySpec":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {"levels", "patch_size", "spacing", "grid", "seed", "rng"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}")
        raw_levels = data.get("levels")
        if raw_levels is None:
            levels = default_levels()
        elif not isinstance(raw_levels, list) or not raw_levels:
            raise ConfigError("must be a non-empty list", "levels")
        else:
            levels = [_level_from_dict(lv, f"levels[{k}]") for k, lv in enumerate(raw_levels)]
        patch = _pair(data.get("patch_size", (4000.0, 4000.0)), "patch_size")
        if "grid" in data and "spacing" in data:
            raise ConfigError("give either grid or spacing, not both", "grid")
        if "grid" in data:
            nx, ny = _pair(data["grid"], "grid")
            if nx < 2 or ny < 2 or nx != int(nx) or ny != int(ny):
                raise ConfigError(f"grid counts must be integers >= 2, got {data['grid']}", "grid")
            spacing = (patch[0] / (nx - 1), patch[1] / (ny - 1))
        else:
            raw = data.get("spacing", DEFAULT_SPACING)
            spacing = _pair(raw if isinstance(raw, (list, tuple)) else (raw, raw), "spacing")
        if seed is None:
            seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError(f"seed must be an integer, got {seed!r}", "seed")
        return cls(levels=tuple(levels), patch_size=patch, spacing=spacing, seed=seed)


def _pair(value, path) -> tuple[float, float]:
    try:
        a, b = value
        return float(a), float(b)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a pair of numbers, got {value!r}", path) from None


def _level_from_dict(data, path) -> LevelSpec:
    if not isinstance(data, dict):
        raise ConfigError("level must be a JSON object", path)
    known = {"pit_count", "radius_dist", "center_rule", "center_depth_fraction", "center"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", path)
    count = data.get("pit_count", 1)
    if isinstance(count, list):
        if len(count) != 2 or not all(isinstance(c, int) for c in count):
            raise ConfigError(f"pit_count range must be two integers, got {count}", f"{path}.pit_count")
        count = (count[0], count[1])
    elif isinstance(count, bool) or not isinstance(count, int):
        raise ConfigError(f"pit_count must be an integer or [low, high], got {count!r}", f"{path}.pit_count")
    rd = data.get("radius_dist", {"kind": "lognormal", "median": 1000.0, "sigma_log": 0.3})
    rpath = f"{path}.radius_dist"
    if isinstance(rd, (int, float)) and not isinstance(rd, bool):
        rd = {"kind": "fixed", "value": rd}
    if not isinstance(rd, dict):
        raise ConfigError(f"expected an object or a number, got {rd!r}", rpath)
    try:
        radius = RadiusDist(**rd)
    except TypeError as exc:
        raise ConfigError(str(exc), rpath) from None
    for key in ("value", "low", "high", "median", "sigma_log"):
        v = getattr(radius, key)
        if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
            raise ConfigError(f"{key} must be a number, got {v!r}", rpath)
    center = data.get("center")
    if center is not None:
        center = _pair(center, f"{path}.center")
    frac = data.get("center_depth_fraction", 0.0)
    if isinstance(frac, bool) or not isinstance(frac, (int, float)):
        raise ConfigError(f"must be a number, got {frac!r}", f"{path}.center_depth_fraction")
    level = LevelSpec(
        pit_count=count,
        radius_dist=radius,
        center_rule=data.get("center_rule", ANYWHERE if path == "levels[0]" else IN_FOOTPRINT),
        center_depth_fraction=float(frac),
        center=center,
    )
    level.validate(path)
    return level


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def generate_pit(spec: HierarchySpec) -> tuple[HeightField, list[SphericalCap]]:
    """Grow one irregular pit; returns the field and the log of applied caps."""
    rng = make_rng(spec.seed)
    field = spec.blank_field()
    Lx, Ly = field.extent
    caps: list[SphericalCap] = []
    for k, level in enumerate(spec.levels, start=1):
        n = level.draw_count(rng)
        for _ in range(n):
            r = level.radius_dist.sample(rng)
            if level.center_rule == ANYWHERE:
                if level.center is not None:
                    cx, cy = level.center
                else:
                    cx, cy = rng.uniform(0.0, Lx), rng.uniform(0.0, Ly)
                local = field.depth_at(cx, cy)
            else:
                cols = np.flatnonzero(field.depth > 0)
                if cols.size == 0:
                    raise GenerationError(
                        f"level {k} places sub-pits inside existing pits but the surface is still intact")
                i, j = np.unravel_index(cols[rng.integers(cols.size)], field.depth.shape)
                cx, cy = i * field.dx, j * field.dy
                local = float(field.depth[i, j])
            cap = SphericalCap(float(cx), float(cy), local + level.center_depth_fraction * r, r, level=k)
            field = cut_cap(field, cap)
            caps.append(cap)
    return field, caps


# -- metrics -----------------------------------------------------------------

@dataclass(frozen=True)
class PitMetrics:
    d: float
    w: float
    l: float
    Ra: float
    footprint_area: float

    FIELDS = ("d", "w", "l", "Ra", "footprint_area")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in self.FIELDS])

    def to_dict(self) -> dict:
        return {f: float(getattr(self, f)) for f in self.FIELDS}


def footprint_mask(field: HeightField, depth_threshold: float = DEFAULT_DEPTH_THRESHOLD) -> np.ndarray:
    return field.depth > depth_threshold


def measure(field: HeightField, load_axis: str = "x",
            depth_threshold: float = DEFAULT_DEPTH_THRESHOLD) -> PitMetrics:
    """Depth, width, length and roughness of the pit on ``field``.

    Extents count footprint cells, so a single-column footprint is one
    grid spacing wide.  Width is transverse to ``load_axis``.
    """
    if load_axis not in ("x", "y"):
        raise ValueError(f"load_axis must be 'x' or 'y', got {load_axis!r}")
    mask = footprint_mask(field, depth_threshold)
    if not mask.any():
        return PitMetrics(0.0, 0.0, 0.0, 0.0, 0.0)
    ii = np.flatnonzero(mask.any(axis=1))
    jj = np.flatnonzero(mask.any(axis=0))
    ext_x = (ii[-1] - ii[0] + 1) * field.dx
    ext_y = (jj[-1] - jj[0] + 1) * field.dy
    length, width = (ext_x, ext_y) if load_axis == "x" else (ext_y, ext_x)
    vals = field.depth[mask]
    Ra = float(np.mean(np.abs(vals - vals.mean())))
    return PitMetrics(
        d=float(field.depth.max()),
        w=float(width),
        l=float(length),
        Ra=Ra,
        footprint_area=float(mask.sum() * field.dx * field.dy),
    )


def ellipsoid_field(d: float, D: float, nx: int, ny: int,
                    dx: float = DEFAULT_SPACING, dy: float = DEFAULT_SPACING) -> HeightField:
    """Half-ellipsoid of revolution, surface diameter ``D`` and depth ``d``, centred in the patch."""
    if not (d > 0 and D > 0):
        raise DimensionError(f"d and D must be > 0, got d={d}, D={D}")
    blank = HeightField.flat(nx, ny, dx, dy)
    Lx, Ly = blank.extent
    if D > min(Lx, Ly):
        raise DimensionError(f"pit diameter {D} does not fit in the {Lx} x {Ly} patch")
    if D < 2 * max(dx, dy):
        raise DimensionError(f"pit diameter {D} is below two grid cells and cannot be resolved")
    X, Y = np.meshgrid(blank.x, blank.y, indexing="ij")
    rho = np.hypot(X - Lx / 2, Y - Ly / 2)
    depth = d * np.sqrt(np.maximum(0.0, 1.0 - (2.0 * rho / D) ** 2))
    return blank.with_depth(depth)


def idealize(field: HeightField, load_axis: str = "x",
             depth_threshold: float = DEFAULT_DEPTH_THRESHOLD) -> HeightField:
    """Ellipsoidal counterpart sharing the maximum depth and the width of ``field``'s pit."""
    m = measure(field, load_axis, depth_threshold)
    if m.d == 0:
        raise DimensionError("field has no pit to idealize")
    return ellipsoid_field(m.d, m.w, field.nx, field.ny, field.dx, field.dy)


# -- Monte Carlo -------------------------------------------------------------

def sample_seed(seed_stream: int, index: int) -> int:
    """Independent 64-bit seed for sample ``index`` of a stream."""
    ss = np.random.SeedSequence(int(seed_stream), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _one_sample(args):
    spec, seed, load_axis, depth_threshold = args
    try:
        field, _ = generate_pit(replace(spec, seed=seed))
    except GenerationError as exc:
        raise GenerationError(f"seed {seed}: {exc}") from None
    return measure(field, load_axis, depth_threshold)


@dataclass
class BatchSummary:
    n_samples: int
    seed_stream: int
    seeds: list[int]
    mean: dict
    std: dict
    min: dict
    max: dict
    samples: list[PitMetrics] = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("n_samples", "seed_stream", "seeds", "mean", "std", "min", "max")}
        out["rng"] = RNG_ALGORITHM
        return out


def batch_generate(spec: HierarchySpec, n_samples: int, seed_stream: int, jobs: int = 1,
                   load_axis: str = "x",
                   depth_threshold: float = DEFAULT_DEPTH_THRESHOLD) -> BatchSummary:
    """Per-metric mean, std (population), min and max over ``n_samples`` pits."""
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    seeds = [sample_seed(seed_stream, i) for i in range(n_samples)]
    tasks = [(spec, s, load_axis, depth_threshold) for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            metrics = list(pool.map(_one_sample, tasks))
    else:
        metrics = [_one_sample(t) for t in tasks]
    arr = np.array([m.as_array() for m in metrics])
    names = PitMetrics.FIELDS

    def stat(fn):
        return {n: float(v) for n, v in zip(names, fn(arr, axis=0))}

    return BatchSummary(n_samples, int(seed_stream), seeds, stat(np.mean), stat(np.std),
                        stat(np.min), stat(np.max), metrics)


# -- persistence -------------------------------------------------------------

def field_to_csv(field: HeightField) -> str:
    buf = io.StringIO()
    buf.write(f"# nx={field.nx} ny={field.ny} dx={field.dx!r} dy={field.dy!r} unit=um\n")
    for row in field.depth:
        buf.write(",".join(repr(float(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()


def field_from_csv(text: str) -> HeightField:
    dx = dy = DEFAULT_SPACING
    lines = text.splitlines()
    if lines and lines[0].startswith("#"):
        meta = dict(tok.split("=", 1) for tok in lines[0][1:].split() if "=" in tok)
        dx, dy = float(meta.get("dx", dx)), float(meta.get("dy", dy))
    rows = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    try:
        depth = np.array([[float(v) for v in ln.split(",")] for ln in rows])
    except ValueError as exc:
        raise DimensionError(f"bad heightfield CSV: {exc}") from None
    return HeightField(depth, dx, dy)


def field_to_bytes(field: HeightField) -> bytes:
    header = GRID_HEADER.pack(GRID_MAGIC, field.nx, field.ny, field.dx, field.dy, 1)
    return header + np.ascontiguousarray(field.depth, dtype="<f8").tobytes()


def field_from_bytes(data: bytes) -> HeightField:
    if len(data) < GRID_HEADER.size:
        raise DimensionError("grid file shorter than its 32-byte header")
    magic, nx, ny, dx, dy, unit = GRID_HEADER.unpack_from(data)
    if magic != GRID_MAGIC:
        raise DimensionError(f"bad grid file magic {magic!r}")
    if unit not in UNIT_CODES:
        raise DimensionError(f"unknown unit code {unit}")
    body = data[GRID_HEADER.size:]
    if len(body) != 8 * nx * ny:
        raise DimensionError(f"grid body has {len(body)} bytes, expected {8 * nx * ny}")
    scale = UNIT_CODES[unit]
    depth = np.frombuffer(body, dtype="<f8").reshape(nx, ny) * scale
    return HeightField(depth, dx * scale, dy * scale)


def read_field(path: str | Path) -> HeightField:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == GRID_MAGIC:
        return field_from_bytes(data)
    return field_from_csv(data.decode("utf-8"))


def caps_to_csv(caps: Sequence[SphericalCap]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "cx", "cy", "cz", "r"])
    for c in caps:
        w.writerow([c.level, repr(c.cx), repr(c.cy), repr(c.cz), repr(c.r)])
    return buf.getvalue()


def caps_from_csv(text: str) -> list[SphericalCap]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [SphericalCap(float(r["cx"]), float(r["cy"]), float(r["cz"]), float(r["r"]), int(r["level"]))
            for r in rows]
