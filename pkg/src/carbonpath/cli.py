"""Command-line entry point: ``carbonpath run|sweep|enumerate|calibrate|validate-config``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from carbonpath.errors import CarbonPathError
from carbonpath.interconnect import PackageConfig
from carbonpath.library import (COMPATIBILITY, MEMORY_TYPES, build_catalog, default_tables_dir, load_tables,
                                resolve_tables_dir)
from carbonpath.mapping import MappingStrategy, WorkloadSpec, all_strategies
from carbonpath.metrics import METRIC_NAMES, MetricsBundle, perf_si
from carbonpath.sa.anneal import TEMPLATES, AnnealSchedule, CostWeights, anneal
from carbonpath.sa.config import SystemConfig, validate
from carbonpath.sa.evaluate import Evaluator
from carbonpath.sa.moves import enumerate_package_options
from carbonpath.sa.normalize import Normalizer, calibrate_normalizer

log = logging.getLogger("carbonpath")

BUILTIN_WORKLOADS = ("WL1", "WL2", "WL3", "WL4", "WL5", "WL6")


# --- inputs -------------------------------------------------------------------------

def load_workload(ref: str) -> WorkloadSpec:
    """A workload JSON path, or a built-in name such as ``WL1``."""
    path = Path(ref)
    if not path.exists() and ref.upper() in BUILTIN_WORKLOADS:
        path = default_tables_dir() / "workloads" / f"{ref.lower()}.json"
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CarbonPathError(f"workload {ref!r}: no such file or built-in name") from None
    except json.JSONDecodeError as exc:
        raise CarbonPathError(f"{path}: parse error at line {exc.lineno}: {exc.msg}") from None
    unknown = set(doc) - {"name", "M", "K", "N", "bytes_per_element"}
    if unknown:
        raise CarbonPathError(f"{path}: unknown workload keys {sorted(unknown)}")
    try:
        return WorkloadSpec(doc["M"], doc["K"], doc["N"], doc.get("bytes_per_element", 1),
                            doc.get("name", path.stem))
    except KeyError as exc:
        raise CarbonPathError(f"{path}: missing workload field {exc.args[0]}") from None


def resolve_weights(args) -> tuple[str, CostWeights]:
    if args.weights:
        try:
            return "custom", CostWeights.parse(args.weights)
        except ValueError as exc:
            raise CarbonPathError(f"--weights: {exc}") from None
    return args.template, TEMPLATES[args.template]


def _setup(args):
    tables = load_tables(args.tables)
    catalog = build_catalog(tables)
    return tables, catalog


# --- report ---------------------------------------------------------------------------

@dataclass
class RunReport:
    workload: str
    template: str
    weights: tuple[float, ...]
    seed: int
    config: SystemConfig
    metrics: MetricsBundle
    normalized: tuple[float, ...]
    cost: float
    perf_si: float
    runtime_s: float
    cache_hit_rate: float

    def to_dict(self, run_stats: bool = True) -> dict:
        """Serialize; without ``run_stats`` the output depends only on the inputs."""
        d = {"workload": self.workload, "template": self.template, "weights": list(self.weights),
             "seed": self.seed, "config": self.config.to_dict(), "metrics": self.metrics.to_dict(),
             "normalized": dict(zip(METRIC_NAMES, self.normalized)), "cost": self.cost,
             "perf_si": self.perf_si}
        if run_stats:
            d["runtime_s"] = self.runtime_s
            d["cache_hit_rate"] = self.cache_hit_rate
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(d["workload"], d["template"], tuple(d["weights"]), d["seed"], SystemConfig.from_dict(d["config"]),
                   MetricsBundle(**d["metrics"]), tuple(d["normalized"][n] for n in METRIC_NAMES), d["cost"],
                   d["perf_si"], d.get("runtime_s", 0.0), d.get("cache_hit_rate", 0.0))


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# --- commands ---------------------------------------------------------------------------

def _normalizer_for(args, evaluator: Evaluator, out: Path | None) -> Normalizer:
    if getattr(args, "normalizer", None):
        return Normalizer.load(args.normalizer)
    cached = out / "normalizer.json" if out else None
    if cached and cached.exists():
        norm = Normalizer.load(cached)
        if norm.workload == evaluator.workload.name and norm.sample_size == args.samples and norm.mode == args.norm_mode:
            log.info("reusing %s", cached)
            return norm
    log.info("calibrating normalizer on %d random systems", args.samples)
    norm = calibrate_normalizer(evaluator, args.samples, args.seed, args.norm_mode, args.workers,
                                resolve_tables_dir(args.tables))
    if cached:
        norm.save(cached)
    return norm


def cmd_run(args) -> int:
    tables, catalog = _setup(args)
    workload = load_workload(args.workload)
    template, weights = resolve_weights(args)
    schedule = AnnealSchedule(args.t_initial, args.t_final, args.cooling, args.moves_per_temp)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    evaluator = Evaluator(tables, catalog, workload, use_cache=not args.no_cache)
    normalizer = _normalizer_for(args, Evaluator(tables, catalog, workload, use_cache=not args.no_cache), out)

    start = time.perf_counter()
    result = anneal(evaluator, weights, normalizer, schedule, seed=args.seed)
    runtime = time.perf_counter() - start
    m = result.best_metrics
    report = RunReport(workload.name, template, weights.as_tuple(), args.seed, result.best_config, m,
                       normalizer.normalize(m), result.best_cost, perf_si(m.latency_s, m.total_cfp), runtime,
                       evaluator.cache.hit_rate)
    (out / "best.json").write_text(_dump(report.to_dict(run_stats=False)), encoding="utf-8")
    with open(out / "trace.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("iteration", "temperature", "cost", "accepted", "move_type"))
        for row in result.trace:
            writer.writerow((row.iteration, repr(row.temperature), repr(row.cost), int(row.accepted), row.move_type))
    sys.stdout.write(_dump(report.to_dict()))
    log.info("best %s cost %.6g after %d iterations (%.1f s, cache hit rate %.1f%%)", result.best_config.label(),
             result.best_cost, len(result.trace), runtime, 100 * evaluator.cache.hit_rate)
    return 0


def cmd_calibrate(args) -> int:
    tables, catalog = _setup(args)
    workload = load_workload(args.workload)
    evaluator = Evaluator(tables, catalog, workload)
    norm = calibrate_normalizer(evaluator, args.samples, args.seed, args.norm_mode, args.workers,
                                resolve_tables_dir(args.tables))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    norm.save(out / "normalizer.json")
    sys.stdout.write(_dump(norm.to_dict()))
    return 0


def _sweep_package(args, default: PackageConfig) -> PackageConfig:
    integration = args.integration or default.integration
    ic25 = p25 = ic3 = p3 = None
    if integration in ("2.5D", "2.5D+3D"):
        ic25 = args.interconnect_25d or default.interconnect_25d or "EMIB"
        p25 = args.protocol_25d or COMPATIBILITY.get(ic25, (None,))[0]
    if integration in ("3D", "2.5D+3D"):
        ic3 = args.interconnect_3d or default.interconnect_3d or "HybridBond"
        p3 = args.protocol_3d or "UCIe-3D"
    package = PackageConfig(integration, args.memory, ic25, p25, ic3, p3)
    problems = package.violations()
    if problems:
        raise CarbonPathError("; ".join(problems))
    return package


def parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(".."))
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must look like 2..8, got {text!r}") from None
    return lo, hi


def cmd_sweep(args) -> int:
    from carbonpath import report, svg

    tables, catalog = _setup(args)
    workload = load_workload(args.workload)
    evaluator = Evaluator(tables, catalog, workload, use_cache=not args.no_cache)
    mapping = MappingStrategy.from_key(args.mapping)
    if args.axis == "chiplet_count":
        default = PackageConfig("3D", args.memory, interconnect_3d="HybridBond", protocol_3d="UCIe-3D")
        chiplets = (args.chiplet,)
    else:
        default = PackageConfig("2.5D", args.memory, "EMIB", "UCIe-A")
        chiplets = report.family(args.system)
    spec = report.SweepSpec(args.axis, chiplets, _sweep_package(args, default), mapping, args.range)
    rows = report.run_sweep(spec, evaluator)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(report.rows_to_csv(rows), encoding="utf-8")
    if args.svg:
        if args.axis in ("package_protocol", "all_pairs_scatter"):
            xs = report.normalized(rows, "cost_usd")
            y_col = "latency_s" if args.axis == "all_pairs_scatter" else "perf_si"
            doc = svg.scatter(xs, report.normalized(rows, y_col), [r["label"] for r in rows],
                              [r["integration"] for r in rows], f"{workload.name}: {y_col} vs cost",
                              "normalized cost", f"normalized {y_col}")
        elif args.axis == "mapping":
            doc = svg.bars(report.normalized(rows, "perf_si"), [r["mapping"] for r in rows],
                           f"{workload.name}: Perf-SI by mapping", "normalized Perf-SI")
        else:
            doc = svg.bars(report.normalized(rows, "perf_si"), [str(r["n_chiplets"]) for r in rows],
                           f"{workload.name}: Perf-SI by chiplet count", "normalized Perf-SI")
        (out / "sweep.svg").write_text(doc, encoding="utf-8")
    log.info("wrote %d rows to %s", len(rows), out / "sweep.csv")
    sys.stdout.write(f"rows: {len(rows)}\n")
    return 0


def design_space_summary(tables, catalog) -> dict:
    options = enumerate_package_options(tables)
    by_type = {k: sum(1 for o in options if o[0] == k) for k in ("2.5D", "3D", "2.5D+3D")}
    return {"catalog": len(catalog), "pairs": len(options), "pairs_25d": by_type["2.5D"],
            "pairs_3d": by_type["3D"], "pairs_hybrid": by_type["2.5D+3D"], "mappings": len(all_strategies()),
            "memories": len(tables.memories)}


def cmd_enumerate(args) -> int:
    tables, catalog = _setup(args)
    s = design_space_summary(tables, catalog)
    print(f"catalog: {s['catalog']}")
    print(f"pairs: {s['pairs']} (2.5D: {s['pairs_25d']}, 3D: {s['pairs_3d']}, hybrid: {s['pairs_hybrid']})")
    print(f"mappings: {s['mappings']}")
    print(f"memories: {s['memories']}")
    return 0


def cmd_validate_config(args) -> int:
    tables, catalog = _setup(args)
    if not args.config:
        print("tables: ok")
        return 0
    try:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        config = SystemConfig.from_dict(doc.get("config", doc))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, CarbonPathError) as exc:
        raise CarbonPathError(f"{args.config}: cannot read system config ({exc})") from None
    problems = validate(config, catalog, tables)
    for p in problems:
        print(f"violation: {p}")
    if not problems:
        print("config: ok")
    return 1 if problems else 0


# --- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tables", help="table directory or bundle file (default: $CARBONPATH_TABLES, then built-in)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="carbonpath", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def workload_flags(p):
        p.add_argument("--workload", default="WL1", help="workload JSON path or built-in name WL1..WL6")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="results")
        p.add_argument("--samples", type=int, default=10_000, help="calibration sample size")
        p.add_argument("--norm-mode", choices=("median", "shifted"), default="median")
        p.add_argument("--workers", type=int, default=1, help="processes for calibration sampling")

    run = sub.add_parser("run", parents=[common], help="anneal one workload")
    workload_flags(run)
    run.add_argument("--template", choices=sorted(TEMPLATES), default="T1")
    run.add_argument("--weights", help="six comma-separated weights; overrides --template")
    run.add_argument("--normalizer", help="use this normalizer.json instead of calibrating")
    run.add_argument("--no-cache", action="store_true", help="disable the simulation cache")
    run.add_argument("--t-initial", type=float, default=4000.0)
    run.add_argument("--t-final", type=float, default=0.001)
    run.add_argument("--cooling", type=float, default=0.99)
    run.add_argument("--moves-per-temp", type=int, default=50)
    run.set_defaults(func=cmd_run)

    cal = sub.add_parser("calibrate", parents=[common], help="sample random systems and write normalizer.json")
    workload_flags(cal)
    cal.set_defaults(func=cmd_calibrate)

    sw = sub.add_parser("sweep", parents=[common], help="evaluate a fixed system family along one axis")
    sw.add_argument("--axis", required=True, choices=("chiplet_count", "package_protocol", "mapping",
                                                      "all_pairs_scatter"))
    sw.add_argument("--workload", default="WL1")
    sw.add_argument("--out", default="results")
    sw.add_argument("--system", choices=("identical", "different"), default="different")
    sw.add_argument("--chiplet", default="128-7-1024", help="die used by the chiplet_count axis")
    sw.add_argument("--range", type=parse_range, default=(2, 8), help="chiplet counts, e.g. 2..8")
    sw.add_argument("--mapping", default="0-OS-1", help="order-dataflow-splitK, e.g. 0-OS-1")
    sw.add_argument("--memory", choices=MEMORY_TYPES, default="DDR5")
    sw.add_argument("--integration", choices=("2.5D", "3D", "2.5D+3D"))
    sw.add_argument("--interconnect-25d")
    sw.add_argument("--protocol-25d")
    sw.add_argument("--interconnect-3d")
    sw.add_argument("--protocol-3d")
    sw.add_argument("--svg", action="store_true", help="also write sweep.svg")
    sw.add_argument("--no-cache", action="store_true")
    sw.set_defaults(func=cmd_sweep)

    en = sub.add_parser("enumerate", parents=[common], help="print design-space counts")
    en.set_defaults(func=cmd_enumerate)

    vc = sub.add_parser("validate-config", parents=[common], help="check tables and optionally a system config")
    vc.add_argument("--config", help="system config JSON (a best.json works)")
    vc.set_defaults(func=cmd_validate_config)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CarbonPathError, ValueError) as exc:
        print(f"carbonpath: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
