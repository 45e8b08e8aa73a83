"""Metric normalization calibrated on random valid systems."""

from __future__ import annotations

import json
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from carbonpath.metrics import METRIC_NAMES, MetricsBundle

EPSILON = 1e-12
CHUNK = 100


@dataclass(frozen=True)
class Normalizer:
    """Per-metric ``(x - min) / median`` scaling.

    ``mode="median"`` divides by the median of the raw sample;
    ``mode="shifted"`` divides by the median of ``x - min`` instead, which
    is ``median - min``.
    """

    mins: tuple[float, ...]
    medians: tuple[float, ...]
    sample_size: int
    mode: str = "median"
    workload: str = ""

    def scale(self, i: int) -> float:
        d = self.medians[i] if self.mode == "median" else self.medians[i] - self.mins[i]
        return max(d, EPSILON)

    def normalize(self, m: MetricsBundle) -> tuple[float, ...]:
        return tuple((x - self.mins[i]) / self.scale(i) for i, x in enumerate(m.as_tuple()))

    def to_dict(self) -> dict:
        return {"workload": self.workload, "sample_size": self.sample_size, "mode": self.mode,
                "min": dict(zip(METRIC_NAMES, self.mins)), "median": dict(zip(METRIC_NAMES, self.medians))}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(tuple(d["min"][n] for n in METRIC_NAMES), tuple(d["median"][n] for n in METRIC_NAMES),
                   d["sample_size"], d.get("mode", "median"), d.get("workload", ""))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Normalizer":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def from_sample(sample: list[MetricsBundle], mode: str = "median", workload: str = "") -> Normalizer:
    columns = list(zip(*(m.as_tuple() for m in sample)))
    mins = tuple(min(c) for c in columns)
    medians = tuple(statistics.median(c) for c in columns)
    return Normalizer(mins, medians, len(sample), mode, workload)


def chunk_rng(seed: int, chunk: int) -> random.Random:
    """Independent deterministic stream for one calibration chunk."""
    return random.Random(f"calibrate:{seed}:{chunk}")


def sample_chunk(evaluator, seed: int, chunk: int, size: int) -> list[MetricsBundle]:
    from carbonpath.sa.moves import random_valid_config

    rng = chunk_rng(seed, chunk)
    return [evaluator.evaluate(random_valid_config(rng, evaluator.catalog, evaluator.tables)) for _ in range(size)]


def _worker(args):
    tables_path, workload, seed, chunk, size = args
    from carbonpath.library import build_catalog, load_tables
    from carbonpath.sa.evaluate import Evaluator

    tables = load_tables(tables_path)
    return sample_chunk(Evaluator(tables, build_catalog(tables), workload), seed, chunk, size)


def calibration_sample(evaluator, n: int, seed: int, workers: int = 1, tables_path=None) -> list[MetricsBundle]:
    """Evaluate ``n`` random valid systems.

    The sample is split into fixed-size chunks with their own RNG streams, so
    the result does not depend on how many workers run them.
    """
    sizes = [min(CHUNK, n - start) for start in range(0, n, CHUNK)]
    if workers <= 1:
        out = []
        for chunk, size in enumerate(sizes):
            out += sample_chunk(evaluator, seed, chunk, size)
        return out
    jobs = [(tables_path, evaluator.workload, seed, chunk, size) for chunk, size in enumerate(sizes)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [m for part in pool.map(_worker, jobs) for m in part]


def calibrate_normalizer(evaluator, n: int = 10_000, seed: int = 0, mode: str = "median", workers: int = 1,
                         tables_path=None) -> Normalizer:
    if n < 100:
        raise ValueError("calibration needs at least 100 samples")
    sample = calibration_sample(evaluator, n, seed, workers, tables_path)
    return from_sample(sample, mode, evaluator.workload.name)
