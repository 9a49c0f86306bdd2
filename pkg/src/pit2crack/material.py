"""Material constants and constitutive curves.

Units throughout the package: stresses in MPa, strains dimensionless,
lengths in micrometres.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .exceptions import ConvergenceError, MaterialError


@dataclass(frozen=True)
class ElasticConstants:
    youngs_modulus: float
    poisson_elastic: float = 0.3
    poisson_plastic: float = 0.5

    def __post_init__(self):
        if not self.youngs_modulus > 0:
            raise MaterialError(f"youngs_modulus must be > 0, got {self.youngs_modulus}")
        if not 0 <= self.poisson_elastic < 0.5:
            raise MaterialError(
                f"poisson_elastic must satisfy 0 <= nu < 0.5, got {self.poisson_elastic}"
            )
        if not 0 < self.poisson_plastic <= 0.5:
            raise MaterialError(
                f"poisson_plastic must satisfy 0 < nu <= 0.5, got {self.poisson_plastic}"
            )


@dataclass(frozen=True)
class TrilinearCurve:
    """Monotonic elastic / plateau / hardening curve.

    ``knee_strain`` is where hardening towards the ultimate point begins.
    When left as ``None`` it defaults to the yield strain, i.e. no plateau.
    """

    youngs_modulus: float
    yield_strength: float
    ultimate_strength: float
    elongation: float
    knee_strain: float | None = None

    def __post_init__(self):
        E, sy, su = self.youngs_modulus, self.yield_strength, self.ultimate_strength
        if not E > 0:
            raise MaterialError(f"youngs_modulus must be > 0, got {E}")
        if not 0 < sy:
            raise MaterialError(f"yield_strength must be > 0, got {sy}")
        if not sy < su:
            raise MaterialError(
                f"ultimate_strength must exceed yield_strength ({su} <= {sy})"
            )
        eps_y = sy / E
        if not self.elongation > eps_y:
            raise MaterialError(
                f"elongation must exceed the yield strain {eps_y:.6g}, got {self.elongation}"
            )
        if self.knee_strain is None:
            object.__setattr__(self, "knee_strain", eps_y)
        elif not eps_y <= self.knee_strain < self.elongation:
            raise MaterialError(
                f"knee_strain must lie in [yield strain {eps_y:.6g}, elongation), "
                f"got {self.knee_strain}"
            )

    @property
    def yield_strain(self) -> float:
        return self.yield_strength / self.youngs_modulus


@dataclass(frozen=True)
class CyclicCurve:
    K_prime: float
    n_prime: float

    def __post_init__(self):
        if not self.K_prime > 0:
            raise MaterialError(f"K_prime must be > 0, got {self.K_prime}")
        if not 0 < self.n_prime < 1:
            raise MaterialError(f"n_prime must satisfy 0 < n' < 1, got {self.n_prime}")


@dataclass(frozen=True)
class StrainLifeProps:
    sigma_f_prime: float
    b: float
    epsilon_f_prime: float
    c: float

    def __post_init__(self):
        if not self.sigma_f_prime > 0:
            raise MaterialError(f"sigma_f_prime must be > 0, got {self.sigma_f_prime}")
        if not self.epsilon_f_prime > 0:
            raise MaterialError(f"epsilon_f_prime must be > 0, got {self.epsilon_f_prime}")
        if not self.b < 0:
            raise MaterialError(f"b must be < 0, got {self.b}")
        if not self.c < 0:
            raise MaterialError(f"c must be < 0, got {self.c}")
        if not self.c < self.b:
            raise MaterialError(f"c must be < b (plastic line steeper), got c={self.c}, b={self.b}")


@dataclass(frozen=True)
class MaterialRecord:
    name: str
    elastic: ElasticConstants
    monotonic: TrilinearCurve
    cyclic: CyclicCurve
    strain_life: StrainLifeProps
    composition: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.monotonic.youngs_modulus != self.elastic.youngs_modulus:
            raise MaterialError(
                "monotonic.youngs_modulus must equal elastic.youngs_modulus "
                f"({self.monotonic.youngs_modulus} != {self.elastic.youngs_modulus})"
            )

    @property
    def E(self) -> float:
        return self.elastic.youngs_modulus

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "MaterialRecord":
        try:
            return cls(
                name=str(data["name"]),
                elastic=ElasticConstants(**data["elastic"]),
                monotonic=TrilinearCurve(**data["monotonic"]),
                cyclic=CyclicCurve(**data["cyclic"]),
                strain_life=StrainLifeProps(**data["strain_life"]),
                composition={str(k): float(v) for k, v in data.get("composition", {}).items()},
            )
        except KeyError as exc:
            raise MaterialError(f"material record is missing field {exc}") from None
        except TypeError as exc:
            raise MaterialError(f"bad material record: {exc}") from None


def load_material(source: str | Path) -> MaterialRecord:
    """Load a material by built-in name (e.g. ``"Q235"``) or JSON file path."""
    name = str(source)
    builtin = resources.files("pit2crack") / "data" / f"{name.lower()}.json"
    if not Path(name).suffix and builtin.is_file():
        return MaterialRecord.from_dict(json.loads(builtin.read_text()))
    path = Path(source)
    if not path.is_file():
        raise MaterialError(f"unknown material {name!r}: no built-in record and no such file")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MaterialError(f"{path}: invalid JSON ({exc})") from None
    return MaterialRecord.from_dict(data)


def q235() -> MaterialRecord:
    return load_material("Q235")


def trilinear_stress(curve: TrilinearCurve, strain):
    """Stress (MPa) on the monotonic trilinear curve; clamps at the ultimate strength."""
    strain = np.asarray(strain, dtype=float)
    if np.any(strain < 0):
        raise ValueError("strain must be >= 0")
    eps_y = curve.yield_strain
    xs = [0.0, eps_y]
    ys = [0.0, curve.yield_strength]
    if curve.knee_strain > eps_y:
        xs.append(curve.knee_strain)
        ys.append(curve.yield_strength)
    xs.append(curve.elongation)
    ys.append(curve.ultimate_strength)
    out = np.interp(strain, xs, ys)
    return float(out) if out.ndim == 0 else out


def cyclic_strain_amplitude(curve: CyclicCurve, E: float, stress_amplitude):
    """Ramberg-Osgood cyclic curve: elastic plus power-law plastic strain."""
    s = np.asarray(stress_amplitude, dtype=float)
    return s / E + (s / curve.K_prime) ** (1.0 / curve.n_prime)


def cyclic_stress_amplitude(curve: CyclicCurve, E: float, strain_amplitude: float,
                            max_iter: int = 200) -> float:
    """Invert the cyclic Ramberg-Osgood curve for the stress amplitude.

    Newton iterations on a bracket that is shrunk at every step, so the
    iteration falls back to bisection whenever a Newton step leaves it.
    """
    ea = float(strain_amplitude)
    if not ea >= 0:
        raise ValueError(f"strain_amplitude must be >= 0, got {strain_amplitude}")
    if ea == 0:
        return 0.0
    K, m = curve.K_prime, 1.0 / curve.n_prime
    tol = 1e-12 + 1e-9 * ea

    def resid(s):
        return s / E + (s / K) ** m - ea

    lo, hi = 0.0, min(E * ea, K * ea ** curve.n_prime)
    # both terms are individually bounded by ea, so hi is a valid upper bracket
    s = hi
    for _ in range(max_iter):
        r = resid(s)
        if r == 0:
            return s
        if r > 0:
            hi = s
        else:
            lo = s
        deriv = 1.0 / E + m / K * (s / K) ** (m - 1)
        s_new = s - r / deriv
        if not lo < s_new < hi:
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) <= 4 * np.finfo(float).eps * s and abs(r) < tol:
            return s_new
        s = s_new
    r = resid(s)
    if abs(r) < tol:
        return s
    raise ConvergenceError(
        f"cyclic stress amplitude did not converge for strain amplitude {ea}: residual {r:.3e}"
    )
