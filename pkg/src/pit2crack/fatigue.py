"""Brown-Miller critical-plane fatigue life with Morrow mean-stress correction.

Damage on a material plane is driven by the engineering shear strain range
along the plane and the normal strain range across it:

    Ksur * (dgamma/2 + deps_n/2) = C1 (sf' - sn_mean)/E (2N)^b + C2 ef' (2N)^c

Planes are addressed by ``theta`` (angle between the normal and the x axis),
``phi`` (azimuth of the normal around x) and ``psi`` (shear direction inside
the plane).  All three range over [0, 180).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .exceptions import ConfigError, ConvergenceError, GeometryError, MaterialError, MorrowDomainError
from .history import StrainHistory, rainflow, uniaxial_history
from .material import MaterialRecord, StrainLifeProps

NF_BRACKET = (0.25, 1e12)
INTACT_TARGET_LIFE = 6.73e6
INTACT_BAND = (6.08e6, 7.55e6)
INTACT_LOADS = (260.0, 26.0)


@dataclass(frozen=True)
class BrownMillerConstants:
    C1: float
    C2: float

    def __post_init__(self):
        if not (self.C1 > 0 and self.C2 > 0):
            raise MaterialError(f"C1 and C2 must be > 0, got ({self.C1}, {self.C2})")


def brown_miller_constants(nu_elastic: float, nu_plastic: float) -> BrownMillerConstants:
    """Constants that make the uniaxial reduction match the plain strain-life curve.

    Under uniaxial stress the max-shear plane carries an engineering shear
    (1 + nu) * eps1 and a normal strain (1 - nu) * eps1 / 2.
    """
    if not 0 <= nu_elastic < 0.5:
        raise MaterialError(f"elastic Poisson ratio must satisfy 0 <= nu < 0.5, got {nu_elastic}")
    if not 0 < nu_plastic <= 0.5:
        raise MaterialError(f"plastic Poisson ratio must satisfy 0 < nu <= 0.5, got {nu_plastic}")
    return BrownMillerConstants(
        C1=(1.0 + nu_elastic) + (1.0 - nu_elastic) / 2.0,
        C2=(1.0 + nu_plastic) + (1.0 - nu_plastic) / 2.0,
    )


def material_constants(material: MaterialRecord) -> BrownMillerConstants:
    el = material.elastic
    return brown_miller_constants(el.poisson_elastic, el.poisson_plastic)


def life_curve(reversals, props: StrainLifeProps, E: float,
               consts: BrownMillerConstants, sigma_mean: float = 0.0):
    """Right-hand side of the criterion at ``reversals = 2 Nf``."""
    r = np.asarray(reversals, dtype=float)
    return (consts.C1 * (props.sigma_f_prime - sigma_mean) / E * r ** props.b
            + consts.C2 * props.epsilon_f_prime * r ** props.c)


def strain_life_nf(lhs_amplitude: float, sigma_mean: float, props: StrainLifeProps, E: float,
                   consts: BrownMillerConstants, ksur: float = 1.0,
                   bracket: tuple[float, float] = NF_BRACKET) -> float:
    """Cycles to crack initiation for one damage-parameter amplitude.

    Returns ``inf`` when the amplitude sits below the curve at the upper
    bracket (no damage within the modelled life range) and the lower bracket
    when it sits above the curve at the lower one.
    """
    if not lhs_amplitude >= 0:
        raise ValueError(f"lhs_amplitude must be >= 0, got {lhs_amplitude}")
    if sigma_mean >= props.sigma_f_prime:
        raise MorrowDomainError(
            f"mean normal stress {sigma_mean} MPa is not below sigma_f' = {props.sigma_f_prime} MPa")
    if not ksur > 0:
        raise ValueError(f"ksur must be > 0, got {ksur}")
    target = ksur * lhs_amplitude
    nmin, nmax = bracket
    if target == 0 or target <= life_curve(2 * nmax, props, E, consts, sigma_mean):
        return math.inf
    if target >= life_curve(2 * nmin, props, E, consts, sigma_mean):
        return float(nmin)

    def resid(log_rev):
        return float(life_curve(10.0 ** log_rev, props, E, consts, sigma_mean)) - target

    lo, hi = math.log10(2 * nmin), math.log10(2 * nmax)
    try:
        root = optimize.brentq(resid, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceError(f"strain-life root not found for amplitude {lhs_amplitude}: {exc}") from None
    return 0.5 * 10.0 ** root


def strain_life_basic(strain_amplitude: float, props: StrainLifeProps, E: float) -> float:
    """Plain Basquin / Coffin-Manson life, no mean stress."""
    return strain_life_nf(strain_amplitude, 0.0, props, E, BrownMillerConstants(1.0, 1.0))


# -- plane geometry ----------------------------------------------------------

@dataclass(frozen=True)
class PlaneOrientation:
    theta: float
    phi: float
    psi: float

    @property
    def normal(self) -> np.ndarray:
        return plane_normal(self.theta, self.phi)

    @property
    def direction(self) -> np.ndarray:
        return shear_direction(self.theta, self.phi, self.psi)

    def angle_to_axis(self, axis=(1.0, 0.0, 0.0)) -> float:
        """Angle in degrees between the plane normal and a line, in [0, 90]."""
        a = np.asarray(axis, dtype=float)
        cosang = abs(float(self.normal @ a)) / np.linalg.norm(a)
        return math.degrees(math.acos(min(1.0, cosang)))


def plane_normal(theta, phi) -> np.ndarray:
    t, p = np.radians(theta), np.radians(phi)
    return np.stack(np.broadcast_arrays(np.cos(t), np.sin(t) * np.cos(p), np.sin(t) * np.sin(p)), axis=-1)


def _in_plane_basis(theta, phi):
    t, p = np.radians(theta), np.radians(phi)
    e1 = np.stack(np.broadcast_arrays(-np.sin(t), np.cos(t) * np.cos(p), np.cos(t) * np.sin(p)), axis=-1)
    e2 = np.stack(np.broadcast_arrays(np.zeros_like(p), -np.sin(p), np.cos(p)), axis=-1)
    return e1, e2


def shear_direction(theta, phi, psi) -> np.ndarray:
    e1, e2 = _in_plane_basis(theta, phi)
    s = np.radians(np.asarray(psi, dtype=float))[..., None]
    return np.cos(s) * e1 + np.sin(s) * e2


def canonical_orientation(n, u) -> PlaneOrientation:
    """Angles in [0, 180) for the plane with normal ``n`` and shear direction ``u``."""
    n = np.asarray(n, dtype=float) / np.linalg.norm(n)
    u = np.asarray(u, dtype=float) / np.linalg.norm(u)
    if n[2] < 0 or (n[2] == 0 and n[1] < 0):
        n = -n
    theta = math.degrees(math.acos(max(-1.0, min(1.0, n[0]))))
    phi = math.degrees(math.atan2(n[2], n[1])) if np.hypot(n[1], n[2]) > 1e-15 else 0.0
    e1, e2 = _in_plane_basis(theta, phi)
    psi = math.degrees(math.atan2(float(u @ e2), float(u @ e1))) % 180.0
    return PlaneOrientation(theta % 180.0, phi % 180.0, 0.0 if math.isclose(psi, 180.0) else psi)


def _check_frame(n, u):
    n, u = np.asarray(n, dtype=float), np.asarray(u, dtype=float)
    if abs(np.linalg.norm(n) - 1) > 1e-10 or abs(np.linalg.norm(u) - 1) > 1e-10 or abs(n @ u) > 1e-10:
        raise GeometryError("plane normal and shear direction must be orthonormal")
    return n, u


def plane_histories(history: StrainHistory, n, u):
    """Engineering shear along ``u``, normal strain and normal stress on the plane ``n``."""
    n, u = _check_frame(n, u)
    eps = history.strain_tensors()
    sig = history.stress_tensors()
    eps_n = np.einsum("i,tij,j->t", n, eps, n)
    gamma = 2.0 * np.einsum("i,tij,j->t", u, eps, n)
    sig_n = np.einsum("i,tij,j->t", n, sig, n)
    return gamma, eps_n, sig_n


def _all_plane_histories(eps, sig, N, U):
    eps_n = np.einsum("pi,tij,pj->pt", N, eps, N)
    gamma = 2.0 * np.einsum("pi,tij,pj->pt", U, eps, N)
    sig_n = np.einsum("pi,tij,pj->pt", N, sig, N)
    return gamma, eps_n, sig_n


# -- analysis ----------------------------------------------------------------

@dataclass(frozen=True)
class AnalysisSettings:
    """Knobs of the critical-plane analysis.

    ``plane_criterion`` selects how the critical plane is picked:
    ``"max_shear"`` takes the plane of largest shear strain range (Brown-Miller),
    ``"max_damage"`` the grid plane of largest damage.  ``refine`` polishes
    the max-shear plane with a local search started from the best grid point.
    """

    plane_step: float = 10.0
    psi_step: float = 10.0
    surface_factor: float = 1.0
    mean_stress_correction: str = "morrow"
    plane_criterion: str = "max_shear"
    refine: bool = True
    nf_bracket: tuple[float, float] = NF_BRACKET

    def __post_init__(self):
        for name in ("plane_step", "psi_step"):
            step = getattr(self, name)
            if not step > 0 or not math.isclose(180.0 / step, round(180.0 / step), abs_tol=1e-9):
                raise ConfigError(f"must divide 180 degrees, got {step}", name)
        if not self.surface_factor >= 1.0:
            raise ConfigError(f"must be >= 1, got {self.surface_factor}", "surface_factor")
        if self.mean_stress_correction not in ("morrow", "none"):
            raise ConfigError(f"must be 'morrow' or 'none', got {self.mean_stress_correction!r}",
                              "mean_stress_correction")
        if self.plane_criterion not in ("max_shear", "max_damage"):
            raise ConfigError(f"must be 'max_shear' or 'max_damage', got {self.plane_criterion!r}",
                              "plane_criterion")
        lo, hi = self.nf_bracket
        if not 0 < lo < hi:
            raise ConfigError(f"needs 0 < low < high, got {self.nf_bracket}", "nf_bracket")
        object.__setattr__(self, "nf_bracket", (float(lo), float(hi)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["damage_rule"] = "miner-linear"
        d["nf_bracket"] = list(self.nf_bracket)
        return d


@dataclass(frozen=True)
class CycleDamage:
    delta_gamma: float
    delta_eps_n: float
    sigma_n_mean: float
    weight: float
    Nf: float
    damage: float


@dataclass(frozen=True)
class LifeResult:
    location_id: str
    Nf: float
    critical_plane: PlaneOrientation
    damage_per_pass: float
    delta_gamma_max: float
    cycle_table: tuple = field(default=(), repr=False)
    log10_cap: float = NF_BRACKET[1]

    @property
    def log10_life(self) -> float:
        """log10 of the life; infinite lives report the upper bracket."""
        return math.log10(min(self.Nf, self.log10_cap))

    def to_row(self) -> dict:
        return {
            "location_id": self.location_id,
            "Nf": self.Nf,
            "log10_life": self.log10_life,
            "theta": self.critical_plane.theta,
            "phi": self.critical_plane.phi,
            "psi": self.critical_plane.psi,
            "damage_per_pass": self.damage_per_pass,
        }

    def to_dict(self) -> dict:
        out = self.to_row()
        out["Nf"] = None if math.isinf(self.Nf) else self.Nf
        out["delta_gamma_max"] = self.delta_gamma_max
        out["cycles"] = [
            {**asdict(c), "Nf": None if math.isinf(c.Nf) else c.Nf} for c in self.cycle_table
        ]
        return out


def _plane_damage(gamma, eps_n, sig_n, material, consts, settings):
    props, E = material.strain_life, material.E
    morrow = settings.mean_stress_correction == "morrow"
    table = []
    total = 0.0
    for cyc in rainflow(gamma, eps_n, sig_n):
        d_en = cyc.companion_range[0]
        s_mean = cyc.companion_mean[1] if morrow else 0.0
        lhs = cyc.range / 2.0 + d_en / 2.0
        nf = strain_life_nf(lhs, s_mean, props, E, consts, settings.surface_factor, settings.nf_bracket)
        dmg = cyc.weight / nf
        total += dmg
        table.append(CycleDamage(cyc.range, d_en, s_mean, cyc.weight, nf, dmg))
    return total, table


def _grid(settings):
    thetas = np.arange(0.0, 180.0, settings.plane_step)
    phis = np.arange(0.0, 180.0, settings.plane_step)
    psis = np.arange(0.0, 180.0, settings.psi_step)
    T, P, S = np.meshgrid(thetas, phis, psis, indexing="ij")
    return T.ravel(), P.ravel(), S.ravel()


def _refine_max_shear(eps, theta, phi, psi):
    def neg_range(x):
        n = plane_normal(x[0], x[1])
        u = shear_direction(x[0], x[1], x[2])
        g = 2.0 * np.einsum("i,tij,j->t", u, eps, n)
        return -(g.max() - g.min())

    start = np.array([theta, phi, psi], dtype=float)
    f0 = neg_range(start)
    scale = max(abs(f0), 1e-300)
    res = optimize.minimize(
        lambda x: neg_range(x) / scale, start, method="Nelder-Mead",
        options={"xatol": 1e-9, "fatol": 1e-15, "maxiter": 4000,
                 "initial_simplex": start + np.vstack([np.zeros(3), 2.0 * np.eye(3)])},
    )
    if res.fun * scale <= f0:
        return res.x
    return start


def critical_plane_life(history: StrainHistory, material: MaterialRecord,
                        settings: AnalysisSettings | None = None) -> LifeResult:
    """Life of one location on its critical plane.

    With the default ``max_shear`` criterion the critical plane is the plane
    of largest engineering shear strain range; grid ties go to the larger
    damage, then to the smaller ``(theta, phi, psi)``.
    """
    settings = settings or AnalysisSettings()
    consts = material_constants(material)
    eps = history.strain_tensors()
    sig = history.stress_tensors()
    th, ph, ps = _grid(settings)
    N = plane_normal(th, ph)
    U = shear_direction(th, ph, ps)
    gamma, eps_n, sig_n = _all_plane_histories(eps, sig, N, U)
    ranges = gamma.max(axis=1) - gamma.min(axis=1)
    gmax = float(ranges.max())

    if settings.plane_criterion == "max_shear":
        candidates = np.flatnonzero(ranges >= gmax * (1 - 1e-9))
    else:
        candidates = np.arange(len(th))

    # candidates are in lexicographic (theta, phi, psi) order; strict > keeps the first
    best, best_damage, best_table = None, -1.0, None
    for k in candidates:
        dmg, table = _plane_damage(gamma[k], eps_n[k], sig_n[k], material, consts, settings)
        if dmg > best_damage * (1 + 1e-12) or best is None:
            best, best_damage, best_table = k, dmg, table
    angles = (float(th[best]), float(ph[best]), float(ps[best]))
    plane = PlaneOrientation(*angles)
    dgamma = float(ranges[best])

    if settings.plane_criterion == "max_shear" and settings.refine and gmax > 0:
        x = _refine_max_shear(eps, *angles)
        n = plane_normal(x[0], x[1])
        u = shear_direction(x[0], x[1], x[2])
        g, en, sn = plane_histories(history, n, u)
        if g.max() - g.min() >= dgamma:
            best_damage, best_table = _plane_damage(g, en, sn, material, consts, settings)
            plane = canonical_orientation(n, u)
            dgamma = float(g.max() - g.min())

    nf = history.repeat_count / best_damage if best_damage > 0 else math.inf
    return LifeResult(
        location_id=history.location_id,
        Nf=nf,
        critical_plane=plane,
        damage_per_pass=best_damage,
        delta_gamma_max=dgamma,
        cycle_table=tuple(best_table),
        log10_cap=settings.nf_bracket[1],
    )


def _life_task(args):
    return critical_plane_life(*args)


def life_field(histories, material: MaterialRecord, settings: AnalysisSettings | None = None,
               jobs: int = 1) -> tuple[list[LifeResult], LifeResult]:
    """Per-location lives and the worst (shortest-life) location.

    Results keep the input order; equal lives resolve to the location that
    sorts first by id, whatever the value of ``jobs``.
    """
    histories = list(histories)
    if not histories:
        raise ValueError("life_field needs at least one history")
    settings = settings or AnalysisSettings()
    tasks = [(h, material, settings) for h in histories]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_life_task, tasks))
    else:
        results = [_life_task(t) for t in tasks]
    worst = min(results, key=lambda r: (r.Nf, r.location_id))
    return results, worst


# -- intact-specimen validation ----------------------------------------------

def intact_history(material: MaterialRecord, sigma_max: float = INTACT_LOADS[0],
                   sigma_min: float = INTACT_LOADS[1], points_per_cycle: int = 20) -> StrainHistory:
    return uniaxial_history(sigma_max, sigma_min, material, points_per_cycle, 1, location_id="intact")


def calibrate_surface_factor(history: StrainHistory, material: MaterialRecord, target_life: float,
                             settings: AnalysisSettings | None = None,
                             bounds: tuple[float, float] = (1.0, 10.0), xtol: float = 1e-10) -> float:
    """Surface factor that brings the life of ``history`` to ``target_life``, by bisection."""
    settings = settings or AnalysisSettings()
    if settings.plane_criterion == "max_shear":
        # the max-shear plane does not depend on the factor: reuse its cycles
        base = critical_plane_life(history, material, settings)
        consts = material_constants(material)
        props, E = material.strain_life, material.E

        def excess(k):
            damage = sum(
                c.weight / strain_life_nf(c.delta_gamma / 2 + c.delta_eps_n / 2, c.sigma_n_mean,
                                          props, E, consts, k, settings.nf_bracket)
                for c in base.cycle_table)
            if damage == 0:
                return math.inf
            return math.log(history.repeat_count / damage) - math.log(target_life)
    else:
        def excess(k):
            s = AnalysisSettings(**{**asdict(settings), "surface_factor": k})
            return math.log(critical_plane_life(history, material, s).Nf) - math.log(target_life)

    lo, hi = bounds
    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo < 0 or f_hi > 0:
        raise ConvergenceError(
            f"target life {target_life:g} is not reachable with a surface factor in [{lo}, {hi}]")
    return float(optimize.bisect(excess, lo, hi, xtol=xtol, maxiter=200))


def in_band(nf: float, band: tuple[float, float] = INTACT_BAND) -> bool:
    """Closed-interval band check."""
    return band[0] <= nf <= band[1]


def validate_intact(material: MaterialRecord, settings: AnalysisSettings | None = None,
                    band: tuple[float, float] = INTACT_BAND) -> dict:
    settings = settings or AnalysisSettings()
    result = critical_plane_life(intact_history(material), material, settings)
    return {
        "Nf": result.Nf,
        "log10_life": result.log10_life,
        "surface_factor": settings.surface_factor,
        "band": list(band),
        "passed": in_band(result.Nf, band),
        "critical_plane": asdict(result.critical_plane),
        "angle_to_load_axis": result.critical_plane.angle_to_axis(),
    }
