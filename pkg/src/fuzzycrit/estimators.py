"""Estimator-style wrappers: ``fit`` a knowledge library, then apply it to records."""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._checks import check_library, check_records, check_unit_interval
from .engine import EngineConfig, analyze_patient
from .knowledge import library_hash
from .reasoner import evaluate_concept
from .report import report_to_dict


class ComplianceCritic(BaseEstimator):
    """Critique patient records against a guideline library.

    ``fit`` takes the library (object or JSON path); ``predict`` returns one
    :class:`CritiqueReport` per record and ``transform`` the same reports as
    plain dicts.
    """

    def __init__(self, acceptance_threshold=0.5, compliance_threshold=0.8, wrong_path_margin=0.1, debug=False):
        self.acceptance_threshold = acceptance_threshold
        self.compliance_threshold = compliance_threshold
        self.wrong_path_margin = wrong_path_margin
        self.debug = debug

    def fit(self, library, y=None):
        self.library_ = check_library(library)
        self.config_ = EngineConfig(
            acceptance_threshold=check_unit_interval(self.acceptance_threshold, "acceptance_threshold"),
            compliance_threshold=check_unit_interval(self.compliance_threshold, "compliance_threshold"),
            wrong_path_margin=check_unit_interval(self.wrong_path_margin, "wrong_path_margin"),
            debug=bool(self.debug),
        )
        self.n_path_plans_ = len(self.library_.path_plans)
        self.library_hash_ = library_hash(self.library_)
        return self

    def predict(self, records):
        check_is_fitted(self, "library_")
        return [
            analyze_patient(r, self.library_, self.config_, content_hash=self.library_hash_)
            for r in check_records(records)
        ]

    def transform(self, records):
        return [report_to_dict(r) for r in self.predict(records)]


class ConceptAbstractor(BaseEstimator):
    """Scored intervals of one abstract concept for each record.

    ``fit`` takes the library rather than the records, so there is no
    ``fit_transform`` shortcut.
    """

    def __init__(self, concept=None, window=None):
        self.concept = concept
        self.window = window

    def fit(self, library, y=None):
        self.library_ = check_library(library)
        if self.concept is None:
            raise ValueError("concept must be set before fit")
        self.concept_ = self.library_.concept(self.concept)
        return self

    def transform(self, records):
        check_is_fitted(self, "concept_")
        return [
            (r.patient_id, evaluate_concept(self.concept_, r, self.library_, self.window))
            for r in check_records(records)
        ]
