"""Command-line interface.

Subcommands mirror the pipeline stages: split, score, rerank, eval, gap,
oracle, and pipeline (all stages end to end). Every subcommand accepts
--seed and --config (a JSON file supplying defaults; explicit flags win).
FAIRLINK_OUTPUT_DIR overrides output directories, nothing else.

Exit codes: 0 success, 2 configuration error, 3 data error,
4 infeasible experiment.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import ConfigError, DataError, FairlinkError, InfeasibleError
from .fairness import ndkl, ndkl_upper_bound
from .graphs import (
    GroupDistribution,
    GroupId,
    load_graph,
    read_edge_list,
    stratified_split,
    write_split,
)
from .oracle import MultisetSpec, enumerate_ndkl_extremes
from .pipeline import (
    GREEDY,
    RunConfig,
    build_candidates,
    evaluate_ranking,
    run_pipeline,
)
from .rerank import (
    gap_experiment,
    kl_greedy_merge,
    kl_greedy_merge_weighted,
    merge_by_score,
    read_ranking,
    write_ranking,
)
from .scorers import GroupedCandidateSet, ingest_scores, write_scores

OUTPUT_DIR_ENV = "FAIRLINK_OUTPUT_DIR"


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def _pick(args, config: dict, name: str, default=None):
    """CLI flag if given, else config file value, else default."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    return config.get(name, default)


def _require(args, config: dict, name: str):
    value = _pick(args, config, name)
    if value is None:
        raise ConfigError(f"missing required option --{name.replace('_', '-')}")
    return value


def _out_dir(value: str) -> str:
    return os.environ.get(OUTPUT_DIR_ENV, value)


def parse_group_map(text: str) -> dict[GroupId, float]:
    """Parse `0-0=0.5,0-1=0.2,...` into a group -> number mapping."""
    out: dict[GroupId, float] = {}
    for item in text.split(","):
        label, _, value = item.partition("=")
        if not value:
            raise ConfigError(f"expected LABEL=VALUE, got {item!r}")
        try:
            out[GroupId.parse(label.strip())] = float(value)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {item!r}: {exc}") from exc
    return out


def parse_target(text: str) -> str | GroupDistribution:
    if text == "empirical":
        return "empirical"
    return GroupDistribution(parse_group_map(text))


def _resolve_file_target(args, config, graph, train_path_name="train"):
    spec = _pick(args, config, "target", "empirical")
    if isinstance(spec, str) and spec != "empirical":
        spec = parse_target(spec)
    if isinstance(spec, GroupDistribution):
        return spec
    if isinstance(spec, dict):
        return GroupDistribution.from_label_dict(spec)
    train_path = _pick(args, config, train_path_name)
    if train_path is None:
        raise ConfigError("empirical target needs --train (or an explicit --target)")
    from .graphs import empirical_distribution

    return empirical_distribution(graph, read_edge_list(train_path))


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(path)


# --- subcommands -------------------------------------------------------------


def cmd_split(args) -> int:
    config = _load_config(args.config)
    graph = load_graph(_require(args, config, "edges"), _require(args, config, "attrs"))
    ratios = tuple(_pick(args, config, "ratios", (0.7, 0.1, 0.2)))
    seed = _pick(args, config, "seed", 0)
    split = stratified_split(graph, ratios, seed=seed)
    out = Path(_out_dir(_require(args, config, "out")))
    paths = write_split(out, graph, split)
    print(f"wrote {', '.join(str(p) for p in paths.values())}")
    return 0


def cmd_score(args) -> int:
    config = _load_config(args.config)
    run = RunConfig(
        edges_path=_require(args, config, "edges"),
        attrs_path=_require(args, config, "attrs"),
        seed=_pick(args, config, "seed", 0),
        scorer=_pick(args, config, "scorer", "adamic_adar"),
        decoupled=_pick(args, config, "decoupled", True),
        embeddings_path=_pick(args, config, "embeddings"),
        negatives_per_positive=_pick(args, config, "negatives_per_positive", 1.0),
    )
    graph = load_graph(run.edges_path, run.attrs_path)
    train = read_edge_list(_require(args, config, "train"))
    test = read_edge_list(_require(args, config, "test"))
    candidates = build_candidates(run, graph, train, test, run.seed)
    write_scores(_require(args, config, "out"), candidates)
    print(f"scored {candidates.total()} candidates across {len(candidates.groups())} groups")
    return 0


def cmd_rerank(args) -> int:
    config = _load_config(args.config)
    graph = load_graph(_require(args, config, "edges"), _require(args, config, "attrs"))
    test = read_edge_list(_require(args, config, "test"))
    candidates = ingest_scores(_require(args, config, "scores"), graph, test)
    target = _resolve_file_target(args, config, graph)
    n = _pick(args, config, "n") or candidates.total()
    lam = _pick(args, config, "lam", 1.0)
    smoothing = bool(_pick(args, config, "smoothing", False))
    if lam >= 1.0:
        ranking, _ = kl_greedy_merge(candidates, target, n, smoothing=smoothing)
    else:
        ranking, _ = kl_greedy_merge_weighted(candidates, target, n, lam, smoothing=smoothing)
    out = _require(args, config, "out")
    write_ranking(out, ranking)
    value = ndkl(ranking, target, smoothing=smoothing)
    print(f"wrote {out} ({len(ranking)} entries, ndkl={value:.4f})")
    return 0


def cmd_eval(args) -> int:
    config = _load_config(args.config)
    graph = load_graph(_require(args, config, "edges"), _require(args, config, "attrs"))
    ranking = read_ranking(_require(args, config, "ranking"))
    target = _resolve_file_target(args, config, graph)
    k_list = tuple(_pick(args, config, "k", (100,)))
    smoothing = bool(_pick(args, config, "smoothing", False))
    pool = GroupedCandidateSet.from_candidates(ranking.entries)
    naive = merge_by_score(pool, len(ranking))
    reports = {
        "ranked": evaluate_ranking("ranked", ranking, pool, target, k_list, smoothing=smoothing),
        "naive": evaluate_ranking("naive", naive, pool, target, k_list, smoothing=smoothing),
    }
    payload = {
        "target": target.as_label_dict(),
        "bound": ndkl_upper_bound(target.smoothed() if smoothing else target.positive()),
        "methods": {name: rep.to_dict() for name, rep in sorted(reports.items())},
    }
    out = Path(_require(args, config, "out"))
    _write_json(out, payload)
    for name, rep in sorted(reports.items()):
        if rep.per_k:
            top = rep.per_k[-1]
            print(f"{name}: ndkl@{top.k}={top.ndkl:.4f} prec@{top.k}={top.precision:.4f}")
        else:
            print(f"{name}: ap={rep.ap:.4f}")
    return 0


def cmd_gap(args) -> int:
    config = _load_config(args.config)
    target = parse_target(str(_require(args, config, "target")))
    if not isinstance(target, GroupDistribution):
        raise ConfigError("gap needs an explicit --target distribution")
    k_grid = tuple(_pick(args, config, "k_grid", (10, 50, 100, 500, 1000)))
    pools_spec = _pick(args, config, "pools")
    if pools_spec:
        pools = {g: int(c) for g, c in parse_group_map(str(pools_spec)).items()}
    else:
        scale = 2 * max(k_grid)
        pools = {
            g: max(1, round(scale * p)) for g, p in target.items() if p > 0
        }
    curve = gap_experiment(target, pools, k_grid)
    out = Path(_require(args, config, "out"))
    out.parent.mkdir(parents=True, exist_ok=True)
    curve.write_csv(out)
    print(f"wrote {out} ({len(k_grid)} grid points)")
    return 0


def cmd_oracle(args) -> int:
    config = _load_config(args.config)
    counts = {g: int(c) for g, c in parse_group_map(str(_require(args, config, "counts"))).items()}
    target = parse_target(str(_require(args, config, "target")))
    if not isinstance(target, GroupDistribution):
        raise ConfigError("oracle needs an explicit --target distribution")
    guard = _pick(args, config, "guard", 14)
    result = enumerate_ndkl_extremes(MultisetSpec(counts), target, guard=guard)
    payload = result.as_dict()
    payload["bound"] = ndkl_upper_bound(target.positive())
    out = Path(_require(args, config, "out"))
    _write_json(out, payload)
    print(
        f"examined {result.permutations_examined} orderings: "
        f"min={result.min_value:.6f} max={result.max_value:.6f} bound={payload['bound']:.6f}"
    )
    return 0


_PIPELINE_ALIASES = {
    "edges": "edges_path",
    "attrs": "attrs_path",
    "embeddings": "embeddings_path",
    "out": "out_dir",
    "k": "k_list",
}


def cmd_pipeline(args) -> int:
    config = _load_config(args.config)
    known = set(RunConfig.__dataclass_fields__)  # type: ignore[attr-defined]
    fields: dict = {}
    for key, value in config.items():
        name = _PIPELINE_ALIASES.get(key, key)
        if name not in known:
            raise ConfigError(f"unknown pipeline config key {key!r}")
        fields[name] = value
    cli_values = {
        "edges_path": args.edges,
        "attrs_path": args.attrs,
        "seed": args.seed,
        "repeats": args.repeats,
        "scorer": args.scorer,
        "decoupled": args.decoupled,
        "embeddings_path": args.embeddings,
        "target": args.target,
        "k_list": tuple(args.k) if args.k else None,
        "lam": args.lam,
        "smoothing": args.smoothing,
        "negatives_per_positive": args.negatives_per_positive,
        "output_size": args.output_size,
        "out_dir": args.out,
    }
    fields.update({k: v for k, v in cli_values.items() if v is not None})
    fields["out_dir"] = _out_dir(fields.get("out_dir", "runs"))
    if isinstance(fields.get("target"), str) and fields["target"] != "empirical":
        fields["target"] = GroupDistribution(
            parse_group_map(fields["target"])
        ).as_label_dict()
    if "edges_path" not in fields or "attrs_path" not in fields:
        raise ConfigError("pipeline needs --edges and --attrs (or config equivalents)")
    run = RunConfig.from_dict(fields)
    summary = run_pipeline(run)
    for result in summary.results:
        report = result.reports[GREEDY]
        if report.per_k:
            top = report.per_k[-1]
            print(
                f"seed {result.seed}: greedy ndkl@{top.k}={top.ndkl:.4f} "
                f"prec@{top.k}={top.precision:.4f} (bound {report.bound:.4f})"
            )
        else:
            print(f"seed {result.seed}: greedy ap={report.ap:.4f} (bound {report.bound:.4f})")
    print(f"outputs under {summary.out_dir}")
    return 0


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairlink",
        description="Group-exposure fairness evaluation and re-ranking for link prediction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--seed", type=int, default=None, help="random seed")
        p.add_argument("--config", default=None, help="JSON file with option defaults")

    p = sub.add_parser("split", help="stratified train/valid/test edge split")
    common(p)
    p.add_argument("--edges", help="edge list file")
    p.add_argument("--attrs", help="node attribute file")
    p.add_argument("--ratios", type=float, nargs=3, default=None, metavar=("TRAIN", "VALID", "TEST"))
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("score", help="build and score per-group candidate pools")
    common(p)
    p.add_argument("--edges")
    p.add_argument("--attrs")
    p.add_argument("--train", help="training edge file (heuristics read only these)")
    p.add_argument("--test", help="held-out positive edge file")
    p.add_argument("--scorer", choices=["common_neighbors", "adamic_adar", "embedding"])
    p.add_argument("--decoupled", action=argparse.BooleanOptionalAction, default=None,
                   help="restrict heuristics to same-group edges")
    p.add_argument("--embeddings", help="embedding file for the embedding scorer")
    p.add_argument("--negatives-per-positive", dest="negatives_per_positive", type=float)
    p.add_argument("--out", help="output score file (u v score)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("rerank", help="exposure-aware greedy merge of scored candidates")
    common(p)
    p.add_argument("--edges")
    p.add_argument("--attrs")
    p.add_argument("--test", help="held-out positives (sets relevance flags)")
    p.add_argument("--scores", help="score file to ingest")
    p.add_argument("--train", help="training edges for the empirical target")
    p.add_argument("--target", help="'empirical' or e.g. '0-0=0.6,0-1=0.2,1-1=0.2'")
    p.add_argument("--n", type=int, help="output length (default: all candidates)")
    p.add_argument("--lam", "--lambda", dest="lam", type=float,
                   help="fairness weight in [0,1]; 1 = pure divergence greedy")
    p.add_argument("--smoothing", action="store_true", default=None,
                   help="epsilon-smooth zero target masses instead of erroring")
    p.add_argument("--out", help="output ranking file")
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("eval", help="evaluate a ranking file (with naive comparator)")
    common(p)
    p.add_argument("--edges")
    p.add_argument("--attrs")
    p.add_argument("--ranking", help="ranking file to evaluate")
    p.add_argument("--train", help="training edges for the empirical target")
    p.add_argument("--target")
    p.add_argument("--k", type=int, nargs="+", help="cutoffs (ascending)")
    p.add_argument("--smoothing", action="store_true", default=None)
    p.add_argument("--out", help="output report JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gap", help="greedy vs worst-case divergence at parity-optimal proportions")
    common(p)
    p.add_argument("--target", help="explicit target, e.g. '0-0=0.61,0-1=0.2,1-1=0.19'")
    p.add_argument("--pools", help="per-group pool sizes, e.g. '0-0=1200,0-1=400,1-1=400'")
    p.add_argument("--k-grid", dest="k_grid", type=int, nargs="+")
    p.add_argument("--out", help="output CSV")
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("oracle", help="exact divergence extremes by enumeration")
    common(p)
    p.add_argument("--counts", help="group counts, e.g. '0-0=5,0-1=3,1-1=2'")
    p.add_argument("--target")
    p.add_argument("--guard", type=int, help="enumeration size guard (default 14)")
    p.add_argument("--out", help="output JSON report")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("pipeline", help="split + score + rerank + eval, repeated over seeds")
    common(p)
    p.add_argument("--edges")
    p.add_argument("--attrs")
    p.add_argument("--repeats", type=int)
    p.add_argument("--scorer", choices=["common_neighbors", "adamic_adar", "embedding"])
    p.add_argument("--decoupled", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--embeddings")
    p.add_argument("--target")
    p.add_argument("--k", type=int, nargs="+")
    p.add_argument("--lam", "--lambda", dest="lam", type=float)
    p.add_argument("--smoothing", action="store_true", default=None)
    p.add_argument("--negatives-per-positive", dest="negatives_per_positive", type=float)
    p.add_argument("--output-size", dest="output_size", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible experiment: {exc}", file=sys.stderr)
        return 4
    except (DataError, FairlinkError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
