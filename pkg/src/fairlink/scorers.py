"""Per-group scored candidate lists.

Candidates are node pairs scored either by built-in topological
heuristics, by dot products over ingested embeddings, or by scores read
from an external file. Each candidate is routed to the list of its edge
group; lists are kept sorted by descending score. Scores from different
groups are never assumed comparable: with per-group ("decoupled")
scoring each group's statistics come from that group's edges alone, so
the scales are incommensurable by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

from .errors import (
    ConfigError,
    DimensionMismatchError,
    DuplicatePairError,
    MalformedLineError,
    MissingEmbeddingError,
    SelfLoopError,
)
from .graphs import Edge, GroupId, SensitiveGraph, canonical_edge, edge_group

HEURISTIC_SCORERS = ("common_neighbors", "adamic_adar")
SCORERS = HEURISTIC_SCORERS + ("embedding",)


class ScoredCandidate(NamedTuple):
    u: int
    v: int
    score: float
    group: GroupId
    relevance: bool

    @property
    def pair(self) -> Edge:
        return (self.u, self.v)


def _sort_key(candidate: ScoredCandidate):
    # Descending score, ties broken by lexicographic pair for determinism.
    return (-candidate.score, candidate.pair)


@dataclass
class GroupedCandidateSet:
    """Score-sorted candidate lists, one per group.

    Within each list scores are non-increasing; a pair appears at most
    once across all lists.
    """

    lists: dict[GroupId, list[ScoredCandidate]] = field(default_factory=dict)

    def __post_init__(self):
        seen: set[Edge] = set()
        for group, candidates in self.lists.items():
            previous = math.inf
            for cand in candidates:
                if cand.group != group:
                    raise ConfigError(f"candidate {cand.pair} routed to wrong group {group}")
                if not math.isfinite(cand.score):
                    raise ConfigError(f"non-finite score for {cand.pair}")
                if cand.score > previous:
                    raise ConfigError(f"list for group {group} is not sorted by score")
                previous = cand.score
                if cand.pair in seen:
                    raise DuplicatePairError(cand.pair)
                seen.add(cand.pair)

    @classmethod
    def from_candidates(cls, candidates: Iterable[ScoredCandidate]) -> "GroupedCandidateSet":
        lists: dict[GroupId, list[ScoredCandidate]] = {}
        for cand in candidates:
            lists.setdefault(cand.group, []).append(cand)
        for bucket in lists.values():
            bucket.sort(key=_sort_key)
        return cls(lists)

    def groups(self) -> tuple[GroupId, ...]:
        return tuple(sorted(self.lists))

    def total(self) -> int:
        return sum(len(bucket) for bucket in self.lists.values())

    def all_candidates(self) -> list[ScoredCandidate]:
        out: list[ScoredCandidate] = []
        for group in self.groups():
            out.extend(self.lists[group])
        return out


# --- topological heuristics --------------------------------------------------


def _check_pair(graph: SensitiveGraph, u: int, v: int) -> None:
    graph.attribute(u)
    graph.attribute(v)
    if u == v:
        raise SelfLoopError(u)


def common_neighbors(graph: SensitiveGraph, u: int, v: int) -> float:
    """Number of shared neighbors of u and v."""
    _check_pair(graph, u, v)
    return float(len(graph.neighbors(u) & graph.neighbors(v)))


def adamic_adar(graph: SensitiveGraph, u: int, v: int) -> float:
    """Sum of 1/ln(deg(w)) over shared neighbors w of u and v.

    A shared neighbor is adjacent to both endpoints, so its degree is at
    least 2 and the logarithm is strictly positive.
    """
    _check_pair(graph, u, v)
    return math.fsum(
        1.0 / math.log(graph.degree(w)) for w in graph.neighbors(u) & graph.neighbors(v)
    )


def _restricted_adjacency(graph: SensitiveGraph, group: GroupId) -> dict[int, set[int]]:
    """Adjacency using only this group's edges."""
    adjacency: dict[int, set[int]] = {}
    for u, v in graph.edges:
        if edge_group(graph, u, v) == group:
            adjacency.setdefault(u, set()).add(v)
            adjacency.setdefault(v, set()).add(u)
    return adjacency


def _heuristic_on_adjacency(
    scorer: str, adjacency: Mapping[int, set[int]], u: int, v: int
) -> float:
    shared = adjacency.get(u, set()) & adjacency.get(v, set())
    if scorer == "common_neighbors":
        return float(len(shared))
    return math.fsum(1.0 / math.log(len(adjacency[w])) for w in shared)


# --- embedding scoring --------------------------------------------------------


def embedding_dot(embeddings: Mapping[int, Sequence[float]], u: int, v: int) -> float:
    """Inner product of the two node embeddings."""
    for node in (u, v):
        if node not in embeddings:
            raise MissingEmbeddingError(node)
    a, b = embeddings[u], embeddings[v]
    if len(a) != len(b):
        raise DimensionMismatchError(len(a), len(b))
    return math.fsum(x * y for x, y in zip(a, b))


def load_embeddings(path: str | Path) -> dict[int, tuple[float, ...]]:
    """Read embeddings: header `n dim`, then `node_id v1 ... vdim` rows."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise MalformedLineError(path, 1, "expected header `n dim`")
        try:
            n, dim = int(header[0]), int(header[1])
        except ValueError:
            raise MalformedLineError(path, 1, "non-integer header") from None
        embeddings: dict[int, tuple[float, ...]] = {}
        for line_no, line in enumerate(fh, start=2):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != dim + 1:
                raise MalformedLineError(path, line_no, f"expected {dim + 1} fields")
            try:
                node = int(tokens[0])
                vector = tuple(float(t) for t in tokens[1:])
            except ValueError:
                raise MalformedLineError(path, line_no, "non-numeric field") from None
            embeddings[node] = vector
    if len(embeddings) != n:
        raise MalformedLineError(path, 1, f"header declares {n} rows, found {len(embeddings)}")
    return embeddings


# --- candidate set construction ----------------------------------------------


def score_candidates(
    graph: SensitiveGraph,
    candidates: Iterable[Edge],
    scorer: str = "adamic_adar",
    *,
    decoupled: bool = False,
    positives: frozenset[Edge] | set[Edge] = frozenset(),
    embeddings: Mapping[int, Sequence[float]] | None = None,
) -> GroupedCandidateSet:
    """Score candidate pairs and route each to its group's sorted list.

    ``graph`` supplies the structure the heuristics read (pass the
    training graph to avoid leakage). With ``decoupled=True`` a heuristic
    sees only edges of the candidate's own group, mirroring one scorer
    per group; embedding scores are unaffected by the flag because the
    vectors are ingested as-is.
    """
    if scorer not in SCORERS:
        raise ConfigError(f"unknown scorer {scorer!r}; choose one of {SCORERS}")
    if scorer == "embedding" and embeddings is None:
        raise ConfigError("scorer 'embedding' requires embeddings")

    positives = {canonical_edge(u, v) for u, v in positives}
    restricted: dict[GroupId, dict[int, set[int]]] = {}
    scored: list[ScoredCandidate] = []
    seen: set[Edge] = set()

    for u, v in candidates:
        pair = canonical_edge(u, v)
        if pair in seen:
            raise DuplicatePairError(pair)
        seen.add(pair)
        group = edge_group(graph, *pair)
        if scorer == "embedding":
            value = embedding_dot(embeddings, *pair)
        elif decoupled:
            if group not in restricted:
                restricted[group] = _restricted_adjacency(graph, group)
            value = _heuristic_on_adjacency(scorer, restricted[group], *pair)
        elif scorer == "common_neighbors":
            value = common_neighbors(graph, *pair)
        else:
            value = adamic_adar(graph, *pair)
        scored.append(ScoredCandidate(pair[0], pair[1], value, group, pair in positives))

    return GroupedCandidateSet.from_candidates(scored)


def ingest_scores(
    score_file: str | Path,
    graph: SensitiveGraph,
    test_edges: Iterable[Edge],
) -> GroupedCandidateSet:
    """Read `u<TAB>v<TAB>score` lines into a grouped candidate set.

    Relevance is membership in ``test_edges``. Duplicate pairs are an
    error: externally produced score files must be unambiguous.
    """
    path = Path(score_file)
    relevant = {canonical_edge(u, v) for u, v in test_edges}
    seen: set[Edge] = set()
    scored: list[ScoredCandidate] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.replace(",", " ").split()
            if len(tokens) != 3:
                raise MalformedLineError(path, line_no, f"expected 3 fields, got {len(tokens)}")
            try:
                u, v, value = int(tokens[0]), int(tokens[1]), float(tokens[2])
            except ValueError:
                raise MalformedLineError(path, line_no, "non-numeric field") from None
            if not math.isfinite(value):
                raise MalformedLineError(path, line_no, "non-finite score")
            if u == v:
                raise SelfLoopError(u, line_no)
            pair = canonical_edge(u, v)
            if pair in seen:
                raise DuplicatePairError(pair, line_no)
            seen.add(pair)
            group = edge_group(graph, *pair)
            scored.append(ScoredCandidate(pair[0], pair[1], value, group, pair in relevant))
    return GroupedCandidateSet.from_candidates(scored)


def write_scores(path: str | Path, candidates: GroupedCandidateSet) -> None:
    """Write candidates as `u<TAB>v<TAB>score` lines (atomic)."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for cand in sorted(candidates.all_candidates(), key=lambda c: c.pair):
            fh.write(f"{cand.u}\t{cand.v}\t{cand.score!r}\n")
    tmp.replace(path)
