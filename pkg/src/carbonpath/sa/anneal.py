"""Weighted cost and the Metropolis annealing loop."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable

from carbonpath.metrics import MetricsBundle
from carbonpath.sa.config import SystemConfig
from carbonpath.sa.moves import propose_move, random_valid_config
from carbonpath.sa.normalize import Normalizer


@dataclass(frozen=True)
class CostWeights:
    """Weights in metric order: energy, area, latency, cost, embodied, operational."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    theta: float = 1.0
    zeta: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        if any(w < 0 for w in self.as_tuple()):
            raise ValueError("cost weights must be non-negative")
        if not any(self.as_tuple()):
            raise ValueError("at least one cost weight must be positive")

    def as_tuple(self) -> tuple[float, ...]:
        return self.alpha, self.beta, self.gamma, self.theta, self.zeta, self.eta

    @classmethod
    def parse(cls, text: str) -> "CostWeights":
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 6:
            raise ValueError(f"expected 6 comma-separated weights, got {len(parts)}")
        return cls(*(float(p) for p in parts))


TEMPLATES = {
    "T1": CostWeights(1, 1, 1, 1, 1, 1),
    "T2": CostWeights(0.8, 0.2, 0.1, 0.1, 0.2, 0.7),
    "T3": CostWeights(0.1, 0.1, 0.7, 0.7, 0.1, 0.1),
    "T4": CostWeights(0.6, 0.6, 0.1, 0.1, 0.6, 0.6),
}


def sa_cost(metrics: MetricsBundle, weights: CostWeights, normalizer: Normalizer) -> float:
    return sum(w * x for w, x in zip(weights.as_tuple(), normalizer.normalize(metrics)))


@dataclass(frozen=True)
class AnnealSchedule:
    t_initial: float = 4000.0
    t_final: float = 0.001
    cooling_rate: float = 0.99
    moves_per_temperature: int = 50

    def __post_init__(self):
        if not 0 < self.t_final < self.t_initial:
            raise ValueError("need 0 < t_final < t_initial")
        if not 0 < self.cooling_rate < 1:
            raise ValueError("cooling_rate must be in (0, 1)")
        if self.moves_per_temperature < 1:
            raise ValueError("moves_per_temperature must be at least 1")

    @property
    def temperature_steps(self) -> int:
        steps, t = 0, self.t_initial
        while t > self.t_final:
            steps += 1
            t *= self.cooling_rate
        return steps

    @property
    def iterations(self) -> int:
        return self.temperature_steps * self.moves_per_temperature


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    temperature: float
    cost: float
    accepted: bool
    move_type: str


@dataclass
class AnnealResult:
    best_config: SystemConfig
    best_metrics: MetricsBundle
    best_cost: float
    initial_config: SystemConfig
    trace: list[TraceRow] = field(default_factory=list)


def metropolis_accept(delta: float, temperature: float, rng: random.Random) -> bool:
    if delta <= 0:
        return True
    return rng.random() < math.exp(-delta / temperature)


def anneal(evaluator, weights: CostWeights, normalizer: Normalizer, schedule: AnnealSchedule = AnnealSchedule(),
           seed: int = 0, initial: SystemConfig | None = None,
           on_evaluate: Callable[[SystemConfig], None] | None = None) -> AnnealResult:
    """Anneal from ``initial`` (or a seeded random valid system) and keep the best system seen."""
    rng = random.Random(seed)
    catalog, tables = evaluator.catalog, evaluator.tables

    def cost_of(cfg: SystemConfig) -> tuple[MetricsBundle, float]:
        if on_evaluate is not None:
            on_evaluate(cfg)
        m = evaluator.evaluate(cfg)
        return m, sa_cost(m, weights, normalizer)

    current = initial if initial is not None else random_valid_config(rng, catalog, tables)
    cur_metrics, cur_cost = cost_of(current)
    result = AnnealResult(current, cur_metrics, cur_cost, current)
    temperature, iteration = schedule.t_initial, 0
    while temperature > schedule.t_final:
        for _ in range(schedule.moves_per_temperature):
            candidate, move = propose_move(current, rng, catalog, tables)
            metrics, cost = cost_of(candidate)
            accepted = metropolis_accept(cost - cur_cost, temperature, rng)
            if accepted:
                current, cur_cost = candidate, cost
            if cost < result.best_cost:
                result.best_config, result.best_metrics, result.best_cost = candidate, metrics, cost
            iteration += 1
            result.trace.append(TraceRow(iteration, temperature, cost, accepted, move))
        temperature *= schedule.cooling_rate
    return result
