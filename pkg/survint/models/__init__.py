"""Survival models: ground-truth hazards and fitted Cox models."""

from survint.models.coxph import CoxModel, coxph_survival, fit_coxph
from survint.models.ground_truth import (
    GroundTruthModel, RiskScoreSpec, RiskTerm, eval_risk_score, eval_target, load_model_spec)

__all__ = (
    'CoxModel',
    'coxph_survival',
    'fit_coxph',
    'GroundTruthModel',
    'RiskScoreSpec',
    'RiskTerm',
    'eval_risk_score',
    'eval_target',
    'load_model_spec',
)
