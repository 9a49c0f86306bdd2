"""Stress/strain tensor histories and rainflow cycle counting.

Tensors are stored in Voigt order ``(xx, yy, zz, xy, xz, yz)``.  Shear
strains are ENGINEERING shears (gamma = 2 * tensor shear) everywhere: in
files, in :class:`StrainHistory`, and in the helpers below.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .exceptions import ParseError
from .material import MaterialRecord

STRAIN_COLUMNS = ("exx", "eyy", "ezz", "gxy", "gxz", "gyz")
STRESS_COLUMNS = ("sxx", "syy", "szz", "txy", "txz", "tyz")
CSV_COLUMNS = ("location_id", "step") + STRAIN_COLUMNS + STRESS_COLUMNS

# Voigt component -> tensor index pair
_VOIGT = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


@dataclass(frozen=True, eq=False)
class StrainHistory:
    """Time-ordered strain (engineering shears) and stress (MPa) at one location.

    ``repeat_count`` is the number of load cycles one pass of the history
    stands for; lives are reported in those cycles.
    """

    location_id: str
    strain: np.ndarray  # (T, 6)
    stress: np.ndarray  # (T, 6)
    repeat_count: float = 1.0

    def __post_init__(self):
        strain = np.array(self.strain, dtype=float).reshape(-1, 6)
        stress = np.array(self.stress, dtype=float).reshape(-1, 6)
        if len(strain) < 2:
            raise ValueError(f"history {self.location_id!r} needs at least 2 samples")
        if strain.shape != stress.shape:
            raise ValueError(f"history {self.location_id!r}: strain and stress lengths differ")
        if not (np.all(np.isfinite(strain)) and np.all(np.isfinite(stress))):
            raise ValueError(f"history {self.location_id!r} has non-finite values")
        if not self.repeat_count > 0:
            raise ValueError(f"repeat_count must be > 0, got {self.repeat_count}")
        strain.setflags(write=False)
        stress.setflags(write=False)
        object.__setattr__(self, "location_id", str(self.location_id))
        object.__setattr__(self, "strain", strain)
        object.__setattr__(self, "stress", stress)

    def __len__(self):
        return len(self.strain)

    def strain_tensors(self) -> np.ndarray:
        """(T, 3, 3) tensor strains; off-diagonals are half the engineering shears."""
        return voigt_to_tensor(self.strain, shear_factor=0.5)

    def stress_tensors(self) -> np.ndarray:
        return voigt_to_tensor(self.stress)

    def scaled(self, strain_factor: float = 1.0, stress_factor: float = 1.0,
               location_id: str | None = None) -> "StrainHistory":
        return StrainHistory(location_id or self.location_id, self.strain * strain_factor,
                             self.stress * stress_factor, self.repeat_count)

    def rotated(self, R: np.ndarray) -> "StrainHistory":
        """Same physical state expressed in a frame rotated by ``R``."""
        R = np.asarray(R, dtype=float)
        eps = np.einsum("ik,tkl,jl->tij", R, self.strain_tensors(), R)
        sig = np.einsum("ik,tkl,jl->tij", R, self.stress_tensors(), R)
        return StrainHistory(self.location_id, tensor_to_voigt(eps, shear_factor=2.0),
                             tensor_to_voigt(sig), self.repeat_count)


def voigt_to_tensor(v: np.ndarray, shear_factor: float = 1.0) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    for k, (i, j) in enumerate(_VOIGT):
        val = v[..., k] * (shear_factor if i != j else 1.0)
        out[..., i, j] = val
        out[..., j, i] = val
    return out


def tensor_to_voigt(t: np.ndarray, shear_factor: float = 1.0) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return np.stack([t[..., i, j] * (shear_factor if i != j else 1.0) for i, j in _VOIGT], axis=-1)


# -- CSV ---------------------------------------------------------------------

def parse_history_csv(data: bytes | str) -> list[StrainHistory]:
    """Group CSV rows into histories, ordered by step within each location.

    Row numbers in errors count the header as row 1.
    """
    text = data.decode("utf-8-sig") if isinstance(data, (bytes, bytearray)) else data
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("empty file, expected a header row", row=1) from None
    missing = [c for c in CSV_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"missing column(s) {', '.join(missing)}", row=1)
    col = {name: header.index(name) for name in CSV_COLUMNS}
    groups: dict[str, dict[float, tuple[np.ndarray, int]]] = {}
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise ParseError(f"expected {len(header)} cells, got {len(row)}", row=rownum)
        loc = row[col["location_id"]].strip()
        if not loc:
            raise ParseError("empty location_id", row=rownum)
        values = []
        for name in ("step",) + STRAIN_COLUMNS + STRESS_COLUMNS:
            cell = row[col[name]].strip()
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(f"non-numeric value {cell!r} in column {name}", row=rownum) from None
            if not np.isfinite(values[-1]):
                raise ParseError(f"non-finite value {cell!r} in column {name}", row=rownum)
        step = values[0]
        steps = groups.setdefault(loc, {})
        if step in steps:
            raise ParseError(
                f"duplicate (location_id, step) = ({loc}, {row[col['step']].strip()}), "
                f"first seen at row {steps[step][1]}", row=rownum)
        steps[step] = (np.array(values[1:]), rownum)
    histories = []
    for loc, steps in groups.items():
        ordered = [steps[s][0] for s in sorted(steps)]
        if len(ordered) < 2:
            raise ParseError(f"location {loc!r} has a single sample, at least 2 are needed",
                             row=next(iter(steps.values()))[1])
        arr = np.array(ordered)
        histories.append(StrainHistory(loc, arr[:, :6], arr[:, 6:]))
    return histories


def histories_to_csv(histories) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for h in histories:
        for step, (e, s) in enumerate(zip(h.strain, h.stress)):
            w.writerow([h.location_id, step] + [repr(float(v)) for v in e] + [repr(float(v)) for v in s])
    return buf.getvalue()


# -- synthetic drivers -------------------------------------------------------

class UnsupportedRegimeError(ValueError):
    """The elastic uniaxial driver was asked for a load beyond yield."""


def uniaxial_history(sigma_max: float, sigma_min: float, material: MaterialRecord,
                     points_per_cycle: int = 20, n_cycles: int = 1,
                     location_id: str = "uniaxial") -> StrainHistory:
    """Elastic constant-amplitude uniaxial history along x.

    Triangular wave starting at ``sigma_min``; each cycle rises to
    ``sigma_max`` and returns.  ``repeat_count`` is set to ``n_cycles`` so
    the computed life is in load cycles.
    """
    if sigma_max < sigma_min:
        raise ValueError(f"sigma_max ({sigma_max}) must not be below sigma_min ({sigma_min})")
    sy = material.monotonic.yield_strength
    if max(abs(sigma_max), abs(sigma_min)) > sy:
        raise UnsupportedRegimeError(
            f"peak stress {max(abs(sigma_max), abs(sigma_min))} MPa exceeds the yield strength "
            f"{sy} MPa; the uniaxial driver is elastic only")
    if points_per_cycle < 2 or points_per_cycle % 2:
        raise ValueError(f"points_per_cycle must be an even integer >= 2, got {points_per_cycle}")
    if n_cycles < 1:
        raise ValueError(f"n_cycles must be >= 1, got {n_cycles}")
    half = points_per_cycle // 2
    up = np.linspace(0.0, 1.0, half + 1)
    one = np.concatenate([up, up[-2::-1]])[:-1]  # one period without its closing point
    phase = np.concatenate([np.tile(one, n_cycles), [0.0]])
    s = sigma_min + (sigma_max - sigma_min) * phase
    E, nu = material.E, material.elastic.poisson_elastic
    stress = np.zeros((len(s), 6))
    stress[:, 0] = s
    strain = np.zeros((len(s), 6))
    strain[:, 0] = s / E
    strain[:, 1] = strain[:, 2] = -nu * s / E
    return StrainHistory(location_id, strain, stress, repeat_count=n_cycles)


# -- rainflow ----------------------------------------------------------------

@dataclass(frozen=True)
class RainflowCycle:
    range: float
    mean: float
    weight: float
    i_start: int
    i_end: int
    companion_range: tuple = ()
    companion_mean: tuple = ()


def reversals(series) -> np.ndarray:
    """Indices of the turning points of ``series``, endpoints included.

    Plateaus are represented by their first sample.
    """
    x = np.asarray(series, dtype=float)
    if len(x) == 0:
        return np.array([], dtype=int)
    keep = np.concatenate([[True], np.diff(x) != 0])
    idx = np.flatnonzero(keep)
    if len(idx) < 3:
        return idx
    d = np.diff(x[idx])
    turn = np.sign(d[1:]) != np.sign(d[:-1])
    return np.concatenate([[idx[0]], idx[1:-1][turn], [idx[-1]]])


def rainflow(series, *companions) -> list[RainflowCycle]:
    """Four-point rainflow count of ``series``; the residue counts as half cycles.

    For every cycle each companion series reports its range and mid-range
    (``(max + min) / 2``) over the sample window ``[i_start, i_end]``.
    """
    x = np.asarray(series, dtype=float)
    if len(x) < 2:
        raise ValueError("rainflow needs at least 2 points")
    comps = [np.asarray(c, dtype=float) for c in companions]
    for c in comps:
        if len(c) != len(x):
            raise ValueError("companion series must match the counted series in length")
    rev = reversals(x)
    if len(rev) < 2:
        return []

    found: list[tuple[int, int, float]] = []
    stack: list[int] = []
    for i in rev:
        stack.append(int(i))
        while len(stack) >= 4:
            a, b, c, d = x[stack[-4]], x[stack[-3]], x[stack[-2]], x[stack[-1]]
            inner = abs(b - c)
            if inner <= abs(a - b) and inner <= abs(c - d):
                found.append((stack[-3], stack[-2], 1.0))
                del stack[-3:-1]
            else:
                break
    found.extend((p, q, 0.5) for p, q in zip(stack[:-1], stack[1:]))

    cycles = []
    for p, q, w in found:
        lo, hi = min(p, q), max(p, q)
        cr, cm = [], []
        for c in comps:
            win = c[lo:hi + 1]
            cmax, cmin = float(win.max()), float(win.min())
            cr.append(cmax - cmin)
            cm.append(0.5 * (cmax + cmin))
        cycles.append(RainflowCycle(
            range=float(abs(x[p] - x[q])),
            mean=0.5 * float(x[p] + x[q]),
            weight=w,
            i_start=lo,
            i_end=hi,
            companion_range=tuple(cr),
            companion_mean=tuple(cm),
        ))
    return cycles
