"""scikit-learn style wrappers so batches of drawings fit into pipelines."""

from __future__ import annotations

from dataclasses import asdict

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import ClockError
from .geometry import GeometryConfig, extract_features
from .reader import read_time
from .rubric import DEFAULT_WEIGHT_TABLE, RubricConfig, ScoreReport, score_document
from .scene import parse_drawing
from .validation import check_documents


class ClockDrawingScorer(TransformerMixin, BaseEstimator):
    """Score vector clock drawings on the 13-item rubric.

    ``transform`` yields an ``(n, 13)`` integer item matrix; ``predict`` yields
    weighted raw scores.  Fitting only validates the parameters, since the
    rubric has nothing to learn.
    """

    def __init__(self, target_time=(9, 10), angle_tolerance=15.0, prop_clear_ratio=0.80,
                 prop_marginal_ratio=0.95, loc_radial_band=(0.55, 1.02),
                 accommodation_margin=1.02, center_loc_tolerance=0.10, closure_tolerance=0.05,
                 symmetry_min_axis_ratio=0.85, symmetry_max_rms=0.10, weight_table=None,
                 geometry=None):
        self.target_time = target_time
        self.angle_tolerance = angle_tolerance
        self.prop_clear_ratio = prop_clear_ratio
        self.prop_marginal_ratio = prop_marginal_ratio
        self.loc_radial_band = loc_radial_band
        self.accommodation_margin = accommodation_margin
        self.center_loc_tolerance = center_loc_tolerance
        self.closure_tolerance = closure_tolerance
        self.symmetry_min_axis_ratio = symmetry_min_axis_ratio
        self.symmetry_max_rms = symmetry_max_rms
        self.weight_table = weight_table
        self.geometry = geometry

    def fit(self, X=None, y=None):
        params = self.get_params()
        params["weight_table"] = params["weight_table"] or dict(DEFAULT_WEIGHT_TABLE)
        params["geometry"] = params["geometry"] or {}
        if isinstance(params["geometry"], GeometryConfig):
            params["geometry"] = asdict(params["geometry"])
        self.config_ = RubricConfig.from_mapping(params)
        return self

    def score_reports(self, X) -> list[ScoreReport]:
        check_is_fitted(self, "config_")
        return [score_document(doc, self.config_) for doc in check_documents(X)]

    def transform(self, X):
        return np.array([r.items.as_tuple() for r in self.score_reports(X)], dtype=int)

    def predict(self, X):
        return np.array([r.weighted_raw for r in self.score_reports(X)], dtype=int)


class ClockReader(BaseEstimator):
    """Read the displayed time off vector clock drawings.

    ``predict`` returns ``(n, 2)`` rows of ``(hour, minute)``; drawings whose
    hands cannot be resolved get ``(-1, -1)`` unless ``errors="raise"``.
    """

    def __init__(self, errors="coerce"):
        self.errors = errors

    def fit(self, X=None, y=None):
        if self.errors not in ("coerce", "raise"):
            raise ValueError("errors must be 'coerce' or 'raise'")
        self.is_fitted_ = True
        return self

    def read(self, X):
        check_is_fitted(self, "is_fitted_")
        out = []
        for doc in check_documents(X):
            try:
                out.append(read_time(extract_features(parse_drawing(doc))))
            except ClockError:
                if self.errors == "raise":
                    raise
                out.append(None)
        return out

    def predict(self, X):
        return np.array([(r.hour, r.minute) if r else (-1, -1) for r in self.read(X)], dtype=int)

    def score(self, X, y):
        """Fraction of drawings read exactly as ``y``."""
        pred = self.predict(X)
        y = np.asarray(y, dtype=int)
        return float(np.mean(np.all(pred % [12, 60] == y % [12, 60], axis=1)))
