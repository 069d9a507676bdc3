"""Attributed undirected graphs, edge groups, splits, and negative sampling.

Every node carries a small categorical sensitive attribute. An unordered
node pair belongs to exactly one *group*: the canonical (sorted) pair of
its endpoint attribute values. Group proportions over an edge set are the
fairness reference used throughout the package.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import (
    ConfigError,
    EmptyEdgeSetError,
    GroupTooSmallError,
    MalformedLineError,
    MissingAttributeError,
    NotEnoughNonEdgesError,
    SelfLoopError,
    UnknownNodeError,
)

Edge = tuple[int, int]

SUM_TOLERANCE = 1e-12


class GroupId(NamedTuple):
    """Canonical unordered pair of sensitive attribute values."""

    lo: int
    hi: int

    @classmethod
    def of(cls, a: int, b: int) -> "GroupId":
        return cls(a, b) if a <= b else cls(b, a)

    @property
    def is_intra(self) -> bool:
        return self.lo == self.hi

    def label(self) -> str:
        return f"{self.lo}-{self.hi}"

    @classmethod
    def parse(cls, text: str) -> "GroupId":
        lo, _, hi = text.partition("-")
        return cls.of(int(lo), int(hi))


def canonical_edge(u: int, v: int) -> Edge:
    return (u, v) if u <= v else (v, u)


class SensitiveGraph:
    """Undirected graph with a categorical sensitive attribute per node.

    Instances are immutable after construction and safe to share across
    concurrent readers; adjacency is precomputed once.
    """

    __slots__ = ("node_count", "edges", "sensitive", "_adjacency")

    def __init__(
        self,
        node_count: int,
        edges: Iterable[Edge],
        sensitive: Mapping[int, int],
    ):
        self.node_count = int(node_count)
        self.sensitive = dict(sensitive)
        for node, value in self.sensitive.items():
            if not (0 <= node < self.node_count):
                raise UnknownNodeError(node)
            if value < 0:
                raise ConfigError(f"attribute for node {node} must be non-negative")

        canonical: set[Edge] = set()
        adjacency: dict[int, set[int]] = {}
        for u, v in edges:
            if u == v:
                raise SelfLoopError(u)
            for node in (u, v):
                if not (0 <= node < self.node_count):
                    raise UnknownNodeError(node)
                if node not in self.sensitive:
                    raise MissingAttributeError(node)
            e = canonical_edge(u, v)
            if e in canonical:
                continue
            canonical.add(e)
            adjacency.setdefault(e[0], set()).add(e[1])
            adjacency.setdefault(e[1], set()).add(e[0])
        self.edges = frozenset(canonical)
        self._adjacency = adjacency

    def __repr__(self) -> str:
        return (
            f"SensitiveGraph(nodes={self.node_count}, edges={len(self.edges)}, "
            f"groups={len(self.group_universe())})"
        )

    def attribute(self, v: int) -> int:
        try:
            return self.sensitive[v]
        except KeyError:
            if 0 <= v < self.node_count:
                raise MissingAttributeError(v) from None
            raise UnknownNodeError(v) from None

    def neighbors(self, v: int) -> set[int]:
        """Neighbor set of ``v``; treat as read-only."""
        if not (0 <= v < self.node_count):
            raise UnknownNodeError(v)
        return self._adjacency.get(v, set())

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def has_edge(self, u: int, v: int) -> bool:
        return canonical_edge(u, v) in self.edges

    def attribute_values(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.sensitive.values())))

    def group_universe(self) -> tuple[GroupId, ...]:
        """All groups expressible with this graph's attribute values."""
        values = self.attribute_values()
        return tuple(
            GroupId.of(a, b) for a, b in itertools.combinations_with_replacement(values, 2)
        )

    def nodes_with_attribute(self, value: int) -> list[int]:
        return sorted(v for v, s in self.sensitive.items() if s == value)

    def group_pair_capacity(self, group: GroupId) -> int:
        """Number of unordered node pairs (edges or not) in ``group``."""
        na = len(self.nodes_with_attribute(group.lo))
        if group.is_intra:
            return na * (na - 1) // 2
        nb = len(self.nodes_with_attribute(group.hi))
        return na * nb

    def edges_by_group(self, edges: Iterable[Edge] | None = None) -> dict[GroupId, list[Edge]]:
        grouped: dict[GroupId, list[Edge]] = {}
        for u, v in self.edges if edges is None else edges:
            grouped.setdefault(edge_group(self, u, v), []).append(canonical_edge(u, v))
        for bucket in grouped.values():
            bucket.sort()
        return grouped

    def subgraph_with_edges(self, edges: Iterable[Edge]) -> "SensitiveGraph":
        """Same nodes and attributes, restricted to the given edges."""
        return SensitiveGraph(self.node_count, edges, self.sensitive)


def edge_group(graph: SensitiveGraph, u: int, v: int) -> GroupId:
    """Group of the unordered pair (u, v); symmetric in its arguments."""
    if u == v:
        raise SelfLoopError(u)
    return GroupId.of(graph.attribute(u), graph.attribute(v))


@dataclass(frozen=True)
class GroupDistribution:
    """Probability vector over groups; entries sum to 1 and are >= 0.

    Groups with zero probability stay listed so downstream code has to
    face the zero-mass case explicitly instead of silently dropping it.
    """

    probabilities: Mapping[GroupId, float]

    def __post_init__(self):
        probs = dict(self.probabilities)
        total = math.fsum(probs.values())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ConfigError(f"probabilities sum to {total!r}, expected 1")
        for group, p in probs.items():
            if p < 0:
                raise ConfigError(f"negative probability {p!r} for group {group}")
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def from_counts(cls, counts: Mapping[GroupId, int]) -> "GroupDistribution":
        total = sum(counts.values())
        if total <= 0:
            raise EmptyEdgeSetError()
        return cls({g: c / total for g, c in counts.items()})

    def mass(self, group: GroupId) -> float:
        return self.probabilities.get(group, 0.0)

    def groups(self) -> tuple[GroupId, ...]:
        return tuple(sorted(self.probabilities))

    def items(self) -> list[tuple[GroupId, float]]:
        return sorted(self.probabilities.items())

    def positive(self) -> "GroupDistribution":
        """Restriction to strictly positive entries (mass is unchanged)."""
        return GroupDistribution({g: p for g, p in self.probabilities.items() if p > 0})

    def smoothed(self, eps: float = 1e-9) -> "GroupDistribution":
        """Add ``eps`` to every listed entry and renormalize."""
        bumped = {g: p + eps for g, p in self.probabilities.items()}
        norm = math.fsum(bumped.values())
        return GroupDistribution({g: p / norm for g, p in bumped.items()})

    def as_label_dict(self) -> dict[str, float]:
        return {g.label(): p for g, p in self.items()}

    @classmethod
    def from_label_dict(cls, mapping: Mapping[str, float]) -> "GroupDistribution":
        return cls({GroupId.parse(label): float(p) for label, p in mapping.items()})


def empirical_distribution(graph: SensitiveGraph, edges: Iterable[Edge]) -> GroupDistribution:
    """Fraction of the given edges in each group of the graph's universe.

    Groups that receive no edges are kept with probability 0.
    """
    counts = {g: 0 for g in graph.group_universe()}
    total = 0
    for u, v in edges:
        counts[edge_group(graph, u, v)] += 1
        total += 1
    if total == 0:
        raise EmptyEdgeSetError()
    return GroupDistribution({g: c / total for g, c in counts.items()})


# --- stratified splitting ---------------------------------------------------


def apportion(
    total: int,
    weights: Sequence[float],
    caps: Sequence[int] | None = None,
) -> list[int]:
    """Split ``total`` into integer parts proportional to ``weights``.

    Largest-remainder rounding; remainder ties go to the earlier index.
    With ``caps``, no part exceeds its cap and overflow is redistributed
    to positive-weight entries with spare capacity.
    """
    if total < 0:
        raise ValueError("total must be >= 0")
    if caps is not None and sum(caps) < total:
        raise ValueError(f"caps sum to {sum(caps)}, cannot hold {total}")
    weight_sum = math.fsum(weights)
    if weight_sum <= 0:
        raise ValueError("weights must have positive sum")

    quotas = [total * w / weight_sum for w in weights]
    parts = [math.floor(q) for q in quotas]
    if caps is not None:
        parts = [min(p, c) for p, c in zip(parts, caps)]
    remainder = total - sum(parts)
    # Hand out the leftover units by descending fractional remainder.
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - math.floor(quotas[i])), i))
    while remainder > 0:
        progressed = False
        for i in order:
            if remainder == 0:
                break
            if weights[i] <= 0:
                continue
            if caps is not None and parts[i] >= caps[i]:
                continue
            parts[i] += 1
            remainder -= 1
            progressed = True
        if not progressed:
            # Positive-weight entries are all capped; spill anywhere legal.
            for i in order:
                if remainder == 0:
                    break
                if caps is None or parts[i] < caps[i]:
                    parts[i] += 1
                    remainder -= 1
    return parts


@dataclass(frozen=True)
class SplitResult:
    """Disjoint train/valid/test edge subsets covering the input edge set."""

    train: frozenset[Edge]
    valid: frozenset[Edge]
    test: frozenset[Edge]
    seed: int
    ratios: tuple[float, float, float]

    def subsets(self) -> dict[str, frozenset[Edge]]:
        return {"train": self.train, "valid": self.valid, "test": self.test}


MIN_GROUP_EDGES = 3


def stratified_split(
    graph: SensitiveGraph,
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2),
    seed: int = 0,
) -> SplitResult:
    """Per-group random split of the graph's edges into train/valid/test.

    Each group's edges are shuffled and cut independently so every subset
    preserves the graph's group proportions to within one edge per group.
    Deterministic for a fixed seed.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise ConfigError(f"ratios must be three positive numbers, got {ratios}")
    if abs(math.fsum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must sum to 1, got {ratios}")

    rng = random.Random(seed)
    buckets: dict[str, set[Edge]] = {"train": set(), "valid": set(), "test": set()}
    for group, group_edges in sorted(graph.edges_by_group().items()):
        if len(group_edges) < MIN_GROUP_EDGES:
            raise GroupTooSmallError(group, len(group_edges), MIN_GROUP_EDGES)
        rng.shuffle(group_edges)
        n_train, n_valid, n_test = apportion(len(group_edges), ratios)
        buckets["train"].update(group_edges[:n_train])
        buckets["valid"].update(group_edges[n_train : n_train + n_valid])
        buckets["test"].update(group_edges[n_train + n_valid :])
        assert n_train + n_valid + n_test == len(group_edges)

    return SplitResult(
        train=frozenset(buckets["train"]),
        valid=frozenset(buckets["valid"]),
        test=frozenset(buckets["test"]),
        seed=seed,
        ratios=tuple(ratios),
    )


# --- negative sampling ------------------------------------------------------

_ENUMERATION_LIMIT = 2_000_000


def sample_negatives(
    graph: SensitiveGraph,
    per_group: Mapping[GroupId, int],
    seed: int = 0,
) -> frozenset[Edge]:
    """Uniformly sample the requested number of non-edges for each group.

    No duplicates, deterministic per seed. Rejection sampling is used when
    the request is a small fraction of the available non-edges; otherwise
    the group's non-edges are enumerated and sampled directly.
    """
    rng = random.Random(seed)
    chosen: set[Edge] = set()
    group_edge_counts = {g: len(es) for g, es in graph.edges_by_group().items()}

    for group, requested in sorted(per_group.items()):
        if requested < 0:
            raise ConfigError(f"negative request {requested} for group {group}")
        if requested == 0:
            continue
        capacity = graph.group_pair_capacity(group)
        available = capacity - group_edge_counts.get(group, 0)
        if requested > available:
            raise NotEnoughNonEdgesError(group, available, requested)

        bucket_lo = graph.nodes_with_attribute(group.lo)
        bucket_hi = bucket_lo if group.is_intra else graph.nodes_with_attribute(group.hi)

        if capacity <= _ENUMERATION_LIMIT and requested * 3 > available:
            pool = _enumerate_non_edges(graph, group, bucket_lo, bucket_hi)
            chosen.update(rng.sample(pool, requested))
            continue

        picked: set[Edge] = set()
        attempts = 0
        max_attempts = 100 * requested + 10_000
        while len(picked) < requested and attempts < max_attempts:
            attempts += 1
            if group.is_intra:
                u, v = rng.sample(bucket_lo, 2)
            else:
                u, v = rng.choice(bucket_lo), rng.choice(bucket_hi)
            pair = canonical_edge(u, v)
            if pair in graph.edges or pair in picked:
                continue
            picked.add(pair)
        if len(picked) < requested:
            # Rejection stalled against a dense group; fall back to enumeration.
            pool = [
                p
                for p in _enumerate_non_edges(graph, group, bucket_lo, bucket_hi)
                if p not in picked
            ]
            picked.update(rng.sample(pool, requested - len(picked)))
        chosen.update(picked)

    return frozenset(chosen)


def _enumerate_non_edges(
    graph: SensitiveGraph,
    group: GroupId,
    bucket_lo: Sequence[int],
    bucket_hi: Sequence[int],
) -> list[Edge]:
    if group.is_intra:
        pairs = itertools.combinations(bucket_lo, 2)
    else:
        pairs = itertools.product(bucket_lo, bucket_hi)
    return [canonical_edge(u, v) for u, v in pairs if canonical_edge(u, v) not in graph.edges]


# --- file formats -----------------------------------------------------------


def _parse_int_pair(path, line_no: int, line: str) -> tuple[int, int]:
    tokens = line.replace(",", " ").split()
    if len(tokens) != 2:
        raise MalformedLineError(path, line_no, f"expected two fields, got {len(tokens)}")
    try:
        return int(tokens[0]), int(tokens[1])
    except ValueError:
        raise MalformedLineError(path, line_no, f"non-integer field in {line.strip()!r}") from None


def _data_lines(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield line_no, stripped


def read_edge_list(path: str | Path) -> list[Edge]:
    """Read `u<TAB>v` (or comma-separated) edge lines, canonicalized.

    Comment lines starting with ``#`` and blank lines are skipped;
    duplicates are collapsed, input order otherwise preserved.
    """
    path = Path(path)
    seen: set[Edge] = set()
    edges: list[Edge] = []
    for line_no, line in _data_lines(path):
        u, v = _parse_int_pair(path, line_no, line)
        if u < 0 or v < 0:
            raise MalformedLineError(path, line_no, "negative node id")
        if u == v:
            raise SelfLoopError(u, line_no)
        e = canonical_edge(u, v)
        if e not in seen:
            seen.add(e)
            edges.append(e)
    return edges


def read_attributes(path: str | Path) -> dict[int, int]:
    path = Path(path)
    attrs: dict[int, int] = {}
    for line_no, line in _data_lines(path):
        node, value = _parse_int_pair(path, line_no, line)
        if node < 0:
            raise MalformedLineError(path, line_no, "negative node id")
        if value < 0:
            raise MalformedLineError(path, line_no, "negative attribute value")
        if node in attrs and attrs[node] != value:
            raise MalformedLineError(path, line_no, f"conflicting attribute for node {node}")
        attrs[node] = value
    return attrs


def load_graph(edge_file: str | Path, attribute_file: str | Path) -> SensitiveGraph:
    """Build a graph from an edge list file and a node attribute file.

    The attribute file defines the node set; node_count is one past the
    largest attributed id. Every edge endpoint must carry an attribute.
    """
    attrs = read_attributes(attribute_file)
    if not attrs:
        raise EmptyEdgeSetError()
    node_count = max(attrs) + 1
    edges = read_edge_list(edge_file)
    return SensitiveGraph(node_count, edges, attrs)


def write_edge_list(path: str | Path, edges: Iterable[Edge]) -> None:
    """Write edges as sorted `u<TAB>v` lines, atomically."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for u, v in sorted(edges):
            fh.write(f"{u}\t{v}\n")
    tmp.replace(path)


def write_split(
    out_dir: str | Path,
    graph: SensitiveGraph,
    split: SplitResult,
) -> dict[str, Path]:
    """Write train/valid/test edge files plus a JSON manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    per_group: dict[str, dict[str, int]] = {}
    for name, subset in split.subsets().items():
        paths[name] = out / f"{name}.tsv"
        write_edge_list(paths[name], subset)
        for group, group_edges in sorted(graph.edges_by_group(subset).items()):
            per_group.setdefault(group.label(), {})[name] = len(group_edges)
    manifest = {
        "seed": split.seed,
        "ratios": list(split.ratios),
        "per_group_counts": per_group,
    }
    manifest_path = out / "split.json"
    tmp = manifest_path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(manifest_path)
    paths["manifest"] = manifest_path
    return paths
