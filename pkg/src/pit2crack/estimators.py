"""scikit-learn compatible wrappers.

:class:`CriticalPlaneLife` is a regressor from strain histories to lives
whose ``fit`` calibrates the surface factor against observed lives;
:class:`PitMetricsTransformer` and :class:`EllipsoidIdealizer` turn
heightfields into features or idealized fields inside a pipeline.
"""

from __future__ import annotations

from dataclasses import asdict

import numpy as np
from scipy import optimize
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .fatigue import AnalysisSettings, calibrate_surface_factor, critical_plane_life, life_field
from .material import MaterialRecord, load_material
from .pitgen import DEFAULT_DEPTH_THRESHOLD, idealize, measure
from .validation import check_fields, check_histories


class CriticalPlaneLife(RegressorMixin, BaseEstimator):
    """Brown-Miller / Morrow life prediction as an estimator.

    ``X`` is a :class:`~pit2crack.history.StrainHistory`, a list of them, or
    an array of shape ``(n_locations, n_steps, 12)`` holding six strains
    (engineering shears) followed by six stresses.  ``predict`` returns
    lives in cycles.

    ``fit`` with ``y`` calibrates ``surface_factor_`` so the predicted lives
    match ``y`` (exactly for a single history, in the least-squares log
    sense otherwise).  Without ``y`` the given ``surface_factor`` is kept.
    """

    def __init__(self, material="Q235", plane_step=10.0, psi_step=10.0, surface_factor=1.0,
                 mean_stress_correction="morrow", plane_criterion="max_shear", refine=True,
                 n_jobs=1):
        self.material = material
        self.plane_step = plane_step
        self.psi_step = psi_step
        self.surface_factor = surface_factor
        self.mean_stress_correction = mean_stress_correction
        self.plane_criterion = plane_criterion
        self.refine = refine
        self.n_jobs = n_jobs

    def _settings(self, surface_factor):
        return AnalysisSettings(
            plane_step=self.plane_step, psi_step=self.psi_step, surface_factor=surface_factor,
            mean_stress_correction=self.mean_stress_correction,
            plane_criterion=self.plane_criterion, refine=self.refine,
        )

    def _material(self) -> MaterialRecord:
        if isinstance(self.material, MaterialRecord):
            return self.material
        return load_material(self.material)

    def fit(self, X, y=None):
        histories = check_histories(X)
        self.material_ = self._material()
        self.n_features_in_ = 12
        if y is None:
            self.surface_factor_ = float(self.surface_factor)
        else:
            y = np.atleast_1d(np.asarray(y, dtype=float))
            if y.shape != (len(histories),):
                raise ValueError(f"y must hold one life per history, got shape {y.shape}")
            if np.any(y <= 0):
                raise ValueError("target lives must be > 0")
            if len(histories) == 1:
                self.surface_factor_ = calibrate_surface_factor(
                    histories[0], self.material_, float(y[0]), self._settings(1.0))
            else:
                self.surface_factor_ = self._fit_many(histories, y)
        self.settings_ = self._settings(self.surface_factor_)
        return self

    def _fit_many(self, histories, y):
        def loss(k):
            lives = np.array([critical_plane_life(h, self.material_, self._settings(k)).Nf
                              for h in histories])
            return float(np.sum((np.log10(np.minimum(lives, 1e300)) - np.log10(y)) ** 2))

        res = optimize.minimize_scalar(loss, bounds=(1.0, 10.0), method="bounded",
                                       options={"xatol": 1e-8})
        return float(res.x)

    def life_results(self, X):
        check_is_fitted(self, "settings_")
        results, _ = life_field(check_histories(X), self.material_, self.settings_, jobs=self.n_jobs)
        return results

    def predict(self, X):
        return np.array([r.Nf for r in self.life_results(X)])

    def score(self, X, y, sample_weight=None):
        """R^2 of log10 lives; infinite predictions are capped at the upper bracket."""
        from sklearn.metrics import r2_score

        cap = self.settings_.nf_bracket[1] if hasattr(self, "settings_") else 1e12
        pred = np.log10(np.minimum(self.predict(X), cap))
        return r2_score(np.log10(np.asarray(y, dtype=float)), pred, sample_weight=sample_weight)

    def get_settings(self) -> dict:
        check_is_fitted(self, "settings_")
        return asdict(self.settings_)


class PitMetricsTransformer(TransformerMixin, BaseEstimator):
    """Heightfields to rows of ``(d, w, l, Ra, footprint_area)``."""

    feature_names = ("d", "w", "l", "Ra", "footprint_area")

    def __init__(self, load_axis="x", depth_threshold=DEFAULT_DEPTH_THRESHOLD):
        self.load_axis = load_axis
        self.depth_threshold = depth_threshold

    def fit(self, X, y=None):
        check_fields(X)
        if self.load_axis not in ("x", "y"):
            raise ValueError(f"load_axis must be 'x' or 'y', got {self.load_axis!r}")
        self.n_features_out_ = len(self.feature_names)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_out_")
        fields = check_fields(X)
        return np.array([measure(f, self.load_axis, self.depth_threshold).as_array() for f in fields])

    def get_feature_names_out(self, input_features=None):
        return np.array(self.feature_names, dtype=object)


class EllipsoidIdealizer(TransformerMixin, BaseEstimator):
    """Replace each irregular pit by the half-ellipsoid with the same depth and width."""

    def __init__(self, load_axis="x", depth_threshold=DEFAULT_DEPTH_THRESHOLD):
        self.load_axis = load_axis
        self.depth_threshold = depth_threshold

    def fit(self, X, y=None):
        check_fields(X)
        self.fitted_ = True
        return self

    def transform(self, X):
        check_is_fitted(self, "fitted_")
        return [idealize(f, self.load_axis, self.depth_threshold) for f in check_fields(X)]

