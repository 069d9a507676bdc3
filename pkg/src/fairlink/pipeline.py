"""End-to-end experiment pipeline and report generation.

One seeded run: split the graph, build per-group candidate pools (test
positives plus sampled non-edges), score them with the configured
scorer, produce both the exposure-aware greedy ranking and the naive
raw-score merge, and evaluate every metric at every requested cutoff.
Reports are plain dataclasses with lossless JSON round-trips; every
number is reproducible from (inputs, seed).
"""

from __future__ import annotations

import csv
import hashlib
import json
import statistics
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ConfigError
from .fairness import (
    INTER,
    INTRA,
    DyadicGrouping,
    Ranking,
    delta_dp_score,
    delta_dp_selection,
    delta_max,
    ndkl,
    ndkl_upper_bound,
    top_k_proportions,
)
from .graphs import (
    GroupDistribution,
    SensitiveGraph,
    SplitResult,
    empirical_distribution,
    load_graph,
    sample_negatives,
    stratified_split,
    write_split,
)
from .rank_metrics import (
    RelevanceVector,
    average_precision,
    hits_at_k,
    ndcg_at_k,
    precision_at_k,
)
from .rerank import (
    kl_greedy_merge,
    kl_greedy_merge_weighted,
    merge_by_score,
    pool_statistics,
    write_ranking,
)
from .scorers import GroupedCandidateSet, load_embeddings, score_candidates

GREEDY = "greedy"
NAIVE = "naive"


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run depends on, except the wall clock."""

    edges_path: str
    attrs_path: str
    out_dir: str = "runs"
    seed: int = 0
    repeats: int = 3
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)
    scorer: str = "adamic_adar"
    decoupled: bool = True
    embeddings_path: str | None = None
    target: str | dict[str, float] = "empirical"
    k_list: tuple[int, ...] = (100, 1000)
    lam: float = 1.0
    smoothing: bool = False
    negatives_per_positive: float = 1.0
    output_size: int | None = None

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        # An empty k_list is allowed: reports then carry global metrics only.
        if any(k < 1 for k in self.k_list):
            raise ConfigError("k_list cutoffs must be positive")
        object.__setattr__(self, "k_list", tuple(sorted(self.k_list)))
        object.__setattr__(self, "ratios", tuple(self.ratios))
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.negatives_per_positive < 0:
            raise ConfigError("negatives_per_positive must be >= 0")
        if isinstance(self.target, dict):
            total = sum(self.target.values())
            if abs(total - 1.0) > 1e-9:
                raise ConfigError(f"explicit target sums to {total}, expected 1")

    @classmethod
    def from_dict(cls, data: Mapping) -> "RunConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        coerced = dict(data)
        for key in ("ratios", "k_list"):
            if key in coerced:
                coerced[key] = tuple(coerced[key])
        return cls(**coerced)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["ratios"] = list(self.ratios)
        data["k_list"] = list(self.k_list)
        return data

    def config_hash(self) -> str:
        """Hash of everything that determines the numbers; out_dir is not."""
        payload = self.to_dict()
        payload.pop("out_dir")
        canonical = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class MetricsAtK:
    k: int
    ndkl: float
    precision: float
    hits: float
    ndcg: float
    proportions: dict[str, float]


@dataclass(frozen=True)
class EvalReport:
    """All fairness and utility metrics for one ranking."""

    method: str
    per_k: tuple[MetricsAtK, ...]
    ap: float
    delta_dp_selection: float
    delta_dp_score: float
    delta_max: float
    target: dict[str, float]
    bound: float

    def __post_init__(self):
        for row in self.per_k:
            if row.ndkl > self.bound + 1e-9:
                raise ConfigError(
                    f"ndkl@{row.k}={row.ndkl} exceeds the bound {self.bound}; metric bug"
                )

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "per_k": [asdict(row) for row in self.per_k],
            "ap": self.ap,
            "delta_dp_selection": self.delta_dp_selection,
            "delta_dp_score": self.delta_dp_score,
            "delta_max": self.delta_max,
            "target": self.target,
            "bound": self.bound,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "EvalReport":
        return cls(
            method=data["method"],
            per_k=tuple(MetricsAtK(**row) for row in data["per_k"]),
            ap=data["ap"],
            delta_dp_selection=data["delta_dp_selection"],
            delta_dp_score=data["delta_dp_score"],
            delta_max=data["delta_max"],
            target=dict(data["target"]),
            bound=data["bound"],
        )

    def at_k(self, k: int) -> MetricsAtK:
        for row in self.per_k:
            if row.k == k:
                return row
        raise KeyError(f"no metrics at k={k}")


@dataclass(frozen=True)
class SeedRunResult:
    """One seed's rankings and reports, plus enough context to re-check."""

    seed: int
    config_hash: str
    target: GroupDistribution
    reports: dict[str, EvalReport]
    rankings: dict[str, Ranking] = field(repr=False)
    split: SplitResult | None = field(repr=False, default=None)

    def report_payload(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "target": self.target.as_label_dict(),
            "methods": {name: report.to_dict() for name, report in sorted(self.reports.items())},
        }


def resolve_target(
    config: RunConfig, graph: SensitiveGraph, train_edges
) -> GroupDistribution:
    """Training-edge empirical proportions, or the explicit config target."""
    if config.target == "empirical":
        return empirical_distribution(graph, train_edges)
    if isinstance(config.target, dict):
        return GroupDistribution.from_label_dict(config.target)
    raise ConfigError(f"unsupported target spec {config.target!r}")


def build_candidates(
    config: RunConfig,
    graph: SensitiveGraph,
    train_edges,
    test_edges,
    seed: int,
) -> GroupedCandidateSet:
    """Per-group pools: test positives plus sampled non-edge negatives."""
    positives = frozenset(test_edges)
    per_group = {
        g: round(len(edges) * config.negatives_per_positive)
        for g, edges in graph.edges_by_group(positives).items()
    }
    negatives = sample_negatives(graph, per_group, seed=seed)
    train_graph = graph.subgraph_with_edges(train_edges)
    embeddings = load_embeddings(config.embeddings_path) if config.embeddings_path else None
    return score_candidates(
        train_graph,
        sorted(positives | negatives),
        config.scorer,
        decoupled=config.decoupled,
        positives=positives,
        embeddings=embeddings,
    )


def evaluate_ranking(
    method: str,
    ranking: Ranking,
    candidates: GroupedCandidateSet,
    target: GroupDistribution,
    k_list: Sequence[int],
    *,
    smoothing: bool = False,
) -> EvalReport:
    """Score one ranking against the shared candidate pool statistics.

    Cutoffs beyond the ranking length are clamped. The parity
    diagnostics are pool-level where the definition demands it
    (score-mean forms), and top-k based for the selection-rate form.
    """
    pool_sizes, class_scores, group_scores = pool_statistics(candidates)
    grouping = DyadicGrouping.from_groups(candidates.groups())
    total_positives = sum(
        1 for cand in candidates.all_candidates() if cand.relevance
    )
    rel = RelevanceVector.from_ranking(ranking, total_positives)

    rows = []
    seen_ks = set()
    for k in k_list:
        k = min(k, len(ranking))
        if k in seen_ks:
            continue
        seen_ks.add(k)
        rows.append(
            MetricsAtK(
                k=k,
                ndkl=ndkl(ranking, target, k_max=k, smoothing=smoothing),
                precision=precision_at_k(rel, k),
                hits=hits_at_k(rel, k),
                ndcg=ndcg_at_k(rel, k),
                proportions=top_k_proportions(ranking, k).as_label_dict(),
            )
        )

    # With no cutoffs requested the parity gap is taken over the whole ranking.
    k_top = rows[-1].k if rows else len(ranking)
    bound_target = target.smoothed() if smoothing else target.positive()
    return EvalReport(
        method=method,
        per_k=tuple(rows),
        ap=average_precision(rel),
        delta_dp_selection=delta_dp_selection(ranking, k_top, pool_sizes, grouping),
        delta_dp_score=delta_dp_score(class_scores[INTRA], class_scores[INTER]),
        delta_max=delta_max(group_scores),
        target=target.as_label_dict(),
        bound=ndkl_upper_bound(bound_target),
    )


def run_single(config: RunConfig, seed: int, graph: SensitiveGraph | None = None) -> SeedRunResult:
    """One fully deterministic pipeline pass for the given seed."""
    if graph is None:
        graph = load_graph(config.edges_path, config.attrs_path)
    split = stratified_split(graph, config.ratios, seed=seed)
    target = resolve_target(config, graph, split.train)
    candidates = build_candidates(config, graph, split.train, split.test, seed)

    n = config.output_size or min(candidates.total(), max(config.k_list, default=candidates.total()))
    if config.lam >= 1.0:
        greedy_ranking, _ = kl_greedy_merge(candidates, target, n, smoothing=config.smoothing)
    else:
        greedy_ranking, _ = kl_greedy_merge_weighted(
            candidates, target, n, config.lam, smoothing=config.smoothing
        )
    naive_ranking = merge_by_score(candidates, n)

    reports = {
        name: evaluate_ranking(
            name, ranking, candidates, target, config.k_list, smoothing=config.smoothing
        )
        for name, ranking in ((GREEDY, greedy_ranking), (NAIVE, naive_ranking))
    }
    return SeedRunResult(
        seed=seed,
        config_hash=config.config_hash(),
        target=target,
        reports=reports,
        rankings={GREEDY: greedy_ranking, NAIVE: naive_ranking},
        split=split,
    )


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def emit_seed_report(result: SeedRunResult, out_dir: str | Path) -> dict[str, Path]:
    """Write one seed's ranking files and JSON report atomically.

    The timestamp lives in a single provenance key so reproducibility
    checks can strip it and compare everything else byte for byte.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    for name, ranking in sorted(result.rankings.items()):
        paths[f"ranking_{name}"] = out / f"ranking_{name}.tsv"
        write_ranking(paths[f"ranking_{name}"], ranking)
    payload = result.report_payload()
    payload["provenance"] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    report_path = out / "report.json"
    _atomic_write_text(report_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    paths["report"] = report_path
    return paths


def load_seed_report(path: str | Path) -> dict[str, EvalReport]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {name: EvalReport.from_dict(d) for name, d in data["methods"].items()}


@dataclass(frozen=True)
class PipelineSummary:
    config: RunConfig
    seeds: tuple[int, ...]
    results: tuple[SeedRunResult, ...]
    out_dir: Path


def _summary_rows(results: Sequence[SeedRunResult]) -> list[dict]:
    """Aggregate per-seed metrics into (method, metric, k, mean, std) rows."""
    values: dict[tuple[str, str, int | str], list[float]] = {}
    for result in results:
        for method, report in sorted(result.reports.items()):
            for row in report.per_k:
                for metric in ("ndkl", "precision", "hits", "ndcg"):
                    values.setdefault((method, metric, row.k), []).append(getattr(row, metric))
            for metric in ("ap", "delta_dp_selection", "delta_dp_score", "delta_max"):
                values.setdefault((method, metric, "global"), []).append(getattr(report, metric))
    def sort_key(item):
        (method, metric, k), _ = item
        return (method, metric, k == "global", k if isinstance(k, int) else 0)

    rows = []
    for (method, metric, k), series in sorted(values.items(), key=sort_key):
        rows.append(
            {
                "method": method,
                "metric": metric,
                "k": k,
                "mean": statistics.fmean(series),
                "std": statistics.pstdev(series) if len(series) > 1 else 0.0,
            }
        )
    return rows


def _proportion_rows(results: Sequence[SeedRunResult]) -> list[dict]:
    rows = []
    for result in results:
        for method, report in sorted(result.reports.items()):
            for per_k in report.per_k:
                for label, fraction in sorted(per_k.proportions.items()):
                    rows.append(
                        {
                            "seed": result.seed,
                            "method": method,
                            "k": per_k.k,
                            "group": label,
                            "fraction": fraction,
                            "target_fraction": report.target.get(label, 0.0),
                        }
                    )
    return rows


def _write_csv(path: Path, rows: list[dict], fieldnames: list[str]) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    tmp.replace(path)


def run_pipeline(config: RunConfig, *, write_outputs: bool = True) -> PipelineSummary:
    """Run ``config.repeats`` seeded passes and aggregate the reports.

    Seeds are config.seed, config.seed + 1, ... so a summary is exactly
    reproducible from the config alone. Outputs per seed live under
    ``out_dir/seed_<s>/``; aggregate CSVs sit at the top level.
    """
    out_dir = Path(config.out_dir)
    seeds = tuple(config.seed + i for i in range(config.repeats))
    graph = load_graph(config.edges_path, config.attrs_path)
    results = []
    for seed in seeds:
        result = run_single(config, seed, graph)
        results.append(result)
        if write_outputs:
            seed_dir = out_dir / f"seed_{seed}"
            emit_seed_report(result, seed_dir)
            write_split(seed_dir / "split", graph, result.split)

    if write_outputs:
        out_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write_text(
            out_dir / "config.json", json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
        )
        _write_csv(
            out_dir / "summary.csv",
            _summary_rows(results),
            ["method", "metric", "k", "mean", "std"],
        )
        _write_csv(
            out_dir / "proportions.csv",
            _proportion_rows(results),
            ["seed", "method", "k", "group", "fraction", "target_fraction"],
        )
    return PipelineSummary(config=config, seeds=seeds, results=tuple(results), out_dir=out_dir)


def with_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Functional update that re-runs validation."""
    return replace(config, **overrides)
