"""Simulated-annealing design-space exploration."""

from carbonpath.sa.anneal import TEMPLATES, AnnealResult, AnnealSchedule, CostWeights, anneal, sa_cost
from carbonpath.sa.config import SystemConfig, integration_for, validate
from carbonpath.sa.evaluate import Evaluation, Evaluator, SimCache
from carbonpath.sa.moves import propose_move, random_valid_config
from carbonpath.sa.normalize import Normalizer, calibrate_normalizer

__all__ = [
    "TEMPLATES", "AnnealResult", "AnnealSchedule", "CostWeights", "anneal", "sa_cost",
    "SystemConfig", "integration_for", "validate", "Evaluation", "Evaluator", "SimCache",
    "propose_move", "random_valid_config", "Normalizer", "calibrate_normalizer",
]
