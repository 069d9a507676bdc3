"""Exposure-aware aggregation of per-group candidate lists.

``kl_greedy_merge`` builds one ranking out of per-group score-sorted
lists: at each position it tentatively places the head of every
non-exhausted list, measures the KL divergence of the resulting prefix
proportions from the target distribution, and commits the head whose
group attains the minimum. Because only heads are ever taken, the
relative order within a group is preserved, and raw scores are never
compared across groups (their scales are not assumed commensurable).

The weighted variant trades the per-step divergence against the head's
within-group normalized score; weight 1 reduces exactly to the pure
merge, weight 0 to per-step score greediness.

Also here: the exact integer solver for the dyadic-parity-optimal
intra/inter selection split, the block-ordered worst-case ranking
(rarest target mass first), and the gap experiment that contrasts the
greedy and worst-case rankings at identical group proportions.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, NamedTuple, Sequence

from .errors import (
    ConfigError,
    EmptyInputError,
    InfeasibleKError,
    LambdaOutOfRangeError,
    MalformedLineError,
    ZeroTargetMassError,
)
from .fairness import INTER, INTRA, DyadicGrouping, Ranking, kl_divergence, ndkl
from .graphs import GroupDistribution, GroupId, apportion
from .rank_metrics import RelevanceVector, precision_at_k
from .scorers import GroupedCandidateSet, ScoredCandidate

logger = logging.getLogger(__name__)


class TraceStep(NamedTuple):
    position: int
    chosen_group: GroupId
    tentative_kl: dict[GroupId, float]
    chosen: ScoredCandidate
    tie_break_used: bool


@dataclass(frozen=True)
class AggregationTrace:
    """Per-step record of the greedy merge, for independent re-checking."""

    steps: tuple[TraceStep, ...]
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.steps)


def _normalized_scores(candidates: Sequence[ScoredCandidate]) -> list[float]:
    """Min-max normalize a group's scores to [0, 1]; 1.0 when all equal."""
    if not candidates:
        return []
    high = candidates[0].score
    low = candidates[-1].score
    if high == low:
        return [1.0] * len(candidates)
    return [(c.score - low) / (high - low) for c in candidates]


def _check_target(candidates: GroupedCandidateSet, target, smoothing: bool):
    masses = target.smoothed() if smoothing else target
    for group in candidates.groups():
        if candidates.lists[group] and masses.mass(group) <= 0.0:
            raise ZeroTargetMassError(group)
    return masses


def _greedy_merge(
    candidates: GroupedCandidateSet,
    target: GroupDistribution,
    n: int,
    lam: float,
    smoothing: bool,
) -> tuple[Ranking, AggregationTrace]:
    if not 0.0 <= lam <= 1.0:
        raise LambdaOutOfRangeError(lam)
    if n < 1:
        raise ConfigError(f"output size must be >= 1, got {n}")
    if candidates.total() == 0:
        raise EmptyInputError("candidate set")
    masses = _check_target(candidates, target, smoothing)

    groups = candidates.groups()
    lists = {g: candidates.lists[g] for g in groups}
    normalized = {g: _normalized_scores(lists[g]) for g in groups}
    heads = {g: 0 for g in groups}
    counts: dict[GroupId, int] = {g: 0 for g in groups}

    entries: list[ScoredCandidate] = []
    steps: list[TraceStep] = []
    for t in range(1, n + 1):
        available = [g for g in groups if heads[g] < len(lists[g])]
        if not available:
            break
        tentative: dict[GroupId, float] = {}
        objectives: dict[GroupId, float] = {}
        for g in available:
            # counts sum to t-1, so incrementing one group makes the
            # tentative fractions a proper distribution over t items.
            fractions = {
                h: (c + (1 if h == g else 0)) / t
                for h, c in counts.items()
                if c > 0 or h == g
            }
            kl = kl_divergence(fractions, masses)
            tentative[g] = kl
            shat = normalized[g][heads[g]]
            objectives[g] = lam * kl + (1.0 - lam) * (1.0 - shat)
        # Ties on the objective prefer the better-scored head, then the
        # lower group id, keeping the merge fully deterministic.
        best_group = min(available, key=lambda g: (objectives[g], -normalized[g][heads[g]], g))
        tie = sum(1 for g in available if objectives[g] == objectives[best_group]) > 1
        chosen = lists[best_group][heads[best_group]]
        heads[best_group] += 1
        counts[best_group] += 1
        entries.append(chosen)
        steps.append(TraceStep(t, best_group, tentative, chosen, tie))

    truncated = len(entries) < n
    if truncated:
        logger.warning("candidates exhausted at %d of %d requested positions", len(entries), n)
    return Ranking(tuple(entries)), AggregationTrace(tuple(steps), truncated)


def kl_greedy_merge(
    candidates: GroupedCandidateSet,
    target: GroupDistribution,
    n: int,
    *,
    smoothing: bool = False,
) -> tuple[Ranking, AggregationTrace]:
    """Merge per-group lists, minimizing prefix KL to target at each rank.

    Ties on the divergence prefer the head with the higher within-group
    normalized score, then the lower group id. Returns the ranking
    (length min(n, total candidates)) and the per-step trace.
    """
    return _greedy_merge(candidates, target, n, lam=1.0, smoothing=smoothing)


def kl_greedy_merge_weighted(
    candidates: GroupedCandidateSet,
    target: GroupDistribution,
    n: int,
    lam: float,
    *,
    smoothing: bool = False,
) -> tuple[Ranking, AggregationTrace]:
    """Per-step objective lam*KL + (1-lam)*(1 - normalized head score).

    lam=1 reproduces ``kl_greedy_merge`` exactly; lam=0 picks the highest
    normalized head each step. Scores are normalized within each group
    list, so no cross-group score comparison is introduced.
    """
    return _greedy_merge(candidates, target, n, lam=lam, smoothing=smoothing)


def merge_by_score(candidates: GroupedCandidateSet, n: int | None = None) -> Ranking:
    """Naive single ranking: all groups merged by raw score.

    The reference point the greedy merge is compared against; comparing
    raw scores across groups is exactly what it does.
    """
    merged = sorted(candidates.all_candidates(), key=lambda c: (-c.score, c.pair))
    if n is not None:
        merged = merged[:n]
    return Ranking(tuple(merged))


# --- parity-optimal proportions ------------------------------------------------


def optimal_dp_proportions(k: int, pool_intra: int, pool_inter: int) -> tuple[int, float]:
    """Intra-count x in the top-k minimizing the selection-rate gap.

    Exhaustive over the feasible x range; ties go to the smaller x.
    Returns (x, gap) where gap = |x/pool_intra - (k-x)/pool_inter| with a
    zero-sized pool contributing rate 0.
    """
    if k < 0 or pool_intra < 0 or pool_inter < 0:
        raise ConfigError("counts must be non-negative")
    if k > pool_intra + pool_inter:
        raise InfeasibleKError(k, pool_intra + pool_inter)
    if k == 0:
        return 0, 0.0
    best_x = None
    best_gap = math.inf
    for x in range(max(0, k - pool_inter), min(k, pool_intra) + 1):
        rate_intra = x / pool_intra if pool_intra > 0 else 0.0
        rate_inter = (k - x) / pool_inter if pool_inter > 0 else 0.0
        gap = abs(rate_intra - rate_inter)
        if gap < best_gap:
            best_gap = gap
            best_x = x
    return best_x, best_gap


# --- synthetic candidates and worst-case construction ---------------------------


def synthetic_candidate_set(
    group_counts: Mapping[GroupId, int],
    *,
    relevant: bool = True,
) -> GroupedCandidateSet:
    """Fabricated candidates with the requested count per group.

    Pairs are fresh synthetic node ids; scores descend within each group.
    Useful wherever only the group labels matter (worst-case rankings,
    gap experiments, enumeration cross-checks).
    """
    lists: dict[GroupId, list[ScoredCandidate]] = {}
    next_node = 0
    for group in sorted(group_counts):
        count = group_counts[group]
        if count < 0:
            raise ConfigError(f"negative count for group {group}")
        bucket = []
        for i in range(count):
            u, v = next_node, next_node + 1
            next_node += 2
            bucket.append(ScoredCandidate(u, v, 1.0 - i / (count + 1), group, relevant))
        lists[group] = bucket
    return GroupedCandidateSet(lists)


def ranking_from_groups(
    labels: Sequence[GroupId],
    *,
    relevant: bool = True,
) -> Ranking:
    """Ranking with the given group label sequence and synthetic pairs."""
    entries = []
    for i, group in enumerate(labels):
        entries.append(ScoredCandidate(2 * i, 2 * i + 1, 1.0 - i / (len(labels) + 1), group, relevant))
    return Ranking(tuple(entries))


def worst_case_ranking(
    group_counts: Mapping[GroupId, int],
    target: GroupDistribution,
    candidates: GroupedCandidateSet | None = None,
) -> Ranking:
    """Block ordering that maximizes prefix divergence at fixed proportions.

    Emits each group as a contiguous block, rarest target mass first, so
    early prefixes are dominated by the most over-exposed group. This is
    a heuristic maximizer; on small instances it is certified against
    exhaustive enumeration in the oracle module.
    """
    positive_counts = {g: c for g, c in group_counts.items() if c > 0}
    for group in positive_counts:
        if target.mass(group) <= 0.0:
            raise ZeroTargetMassError(group)
    order = sorted(positive_counts, key=lambda g: (target.mass(g), g))
    entries: list[ScoredCandidate] = []
    if candidates is None:
        candidates = synthetic_candidate_set(positive_counts)
    for group in order:
        bucket = candidates.lists.get(group, [])
        if len(bucket) < positive_counts[group]:
            raise InfeasibleKError(positive_counts[group], len(bucket))
        entries.extend(bucket[: positive_counts[group]])
    return Ranking(tuple(entries))


# --- gap experiment --------------------------------------------------------------


@dataclass(frozen=True)
class GapPoint:
    """One cutoff of the gap experiment: both rankings, shared statistics."""

    k: int
    group_counts: dict[GroupId, int]
    intra_selected: int
    delta_dp: float
    greedy: Ranking
    worst: Ranking


@dataclass(frozen=True)
class GapCurve:
    """Greedy-vs-worst divergence at parity-optimal group proportions."""

    k_grid: tuple[int, ...]
    greedy_ndkl: tuple[float, ...]
    worst_ndkl: tuple[float, ...]
    delta_dp: tuple[float, ...]
    prec: tuple[float, ...]

    def __post_init__(self):
        for greedy, worst in zip(self.greedy_ndkl, self.worst_ndkl):
            if greedy > worst + 1e-12:
                raise ConfigError(
                    f"greedy divergence {greedy} above worst-case {worst}; "
                    f"the worst-case construction is broken"
                )

    def rows(self) -> list[dict[str, float]]:
        return [
            {
                "k": k,
                "greedy_ndkl": g,
                "worst_ndkl": w,
                "delta_dp": d,
                "prec": p,
            }
            for k, g, w, d, p in zip(
                self.k_grid, self.greedy_ndkl, self.worst_ndkl, self.delta_dp, self.prec
            )
        ]

    def write_csv(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["k", "greedy_ndkl", "worst_ndkl", "delta_dp", "prec"]
            )
            writer.writeheader()
            for row in self.rows():
                writer.writerow(row)
        tmp.replace(path)


def _split_by_class(pools: Mapping[GroupId, int]) -> tuple[dict[GroupId, int], dict[GroupId, int]]:
    intra = {g: c for g, c in pools.items() if g.is_intra}
    inter = {g: c for g, c in pools.items() if not g.is_intra}
    return intra, inter


def gap_point(target: GroupDistribution, pools: Mapping[GroupId, int], k: int) -> GapPoint:
    """Build the greedy and worst-case rankings for one cutoff.

    The intra/inter split of the top-k comes from the exact parity
    solver; within each dyadic class the count is apportioned across
    groups proportionally to the target, capped by the pools. Candidates
    are synthetic and all relevant, isolating exposure from utility.
    """
    for group, pool in pools.items():
        if pool < 0:
            raise ConfigError(f"negative pool for group {group}")
        if pool > 0 and target.mass(group) <= 0.0:
            raise ZeroTargetMassError(group)
    capacity = sum(pools.values())
    if k < 1 or k > capacity:
        raise InfeasibleKError(k, capacity)

    intra_pools, inter_pools = _split_by_class(pools)
    x, gap = optimal_dp_proportions(k, sum(intra_pools.values()), sum(inter_pools.values()))

    group_counts: dict[GroupId, int] = {}
    for class_pools, class_total in ((intra_pools, x), (inter_pools, k - x)):
        groups = sorted(class_pools)
        if not groups:
            continue
        parts = apportion(
            class_total,
            [target.mass(g) for g in groups],
            caps=[class_pools[g] for g in groups],
        )
        for group, part in zip(groups, parts):
            if part > 0:
                group_counts[group] = part

    candidates = synthetic_candidate_set(group_counts)
    greedy, _ = kl_greedy_merge(candidates, target, n=k)
    worst = worst_case_ranking(group_counts, target, candidates=candidates)
    return GapPoint(
        k=k,
        group_counts=group_counts,
        intra_selected=x,
        delta_dp=gap,
        greedy=greedy,
        worst=worst,
    )


def gap_experiment(
    target: GroupDistribution,
    pools: Mapping[GroupId, int],
    k_grid: Sequence[int],
) -> GapCurve:
    """Trace the greedy-vs-worst divergence gap across cutoffs.

    Both rankings at each cutoff carry identical group counts, so their
    dyadic parity gap is identical by construction, and all candidates
    are relevant, so precision is 1 throughout; only the exposure order
    differs.
    """
    greedy_values = []
    worst_values = []
    gaps = []
    precs = []
    for k in k_grid:
        point = gap_point(target, pools, k)
        greedy_values.append(ndkl(point.greedy, target))
        worst_values.append(ndkl(point.worst, target))
        gaps.append(point.delta_dp)
        precs.append(precision_at_k(RelevanceVector.from_ranking(point.greedy), k))
    return GapCurve(
        k_grid=tuple(k_grid),
        greedy_ndkl=tuple(greedy_values),
        worst_ndkl=tuple(worst_values),
        delta_dp=tuple(gaps),
        prec=tuple(precs),
    )


# --- ranking file format ----------------------------------------------------------


def write_ranking(path: str | Path, ranking: Ranking) -> None:
    """Write `rank u v group score relevance` tab-separated lines (atomic)."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for rank, cand in enumerate(ranking, start=1):
            fh.write(
                f"{rank}\t{cand.u}\t{cand.v}\t{cand.group.label()}\t"
                f"{cand.score!r}\t{int(cand.relevance)}\n"
            )
    tmp.replace(path)


def read_ranking(path: str | Path) -> Ranking:
    path = Path(path)
    entries: list[ScoredCandidate] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            tokens = stripped.split("\t")
            if len(tokens) != 6:
                raise MalformedLineError(path, line_no, f"expected 6 fields, got {len(tokens)}")
            try:
                rank = int(tokens[0])
                u, v = int(tokens[1]), int(tokens[2])
                group = GroupId.parse(tokens[3])
                score = float(tokens[4])
                relevance = bool(int(tokens[5]))
            except ValueError:
                raise MalformedLineError(path, line_no, "cannot parse fields") from None
            if rank != len(entries) + 1:
                raise MalformedLineError(path, line_no, f"rank {rank} out of order")
            entries.append(ScoredCandidate(u, v, score, group, relevance))
    return Ranking(tuple(entries))


def pool_statistics(
    candidates: GroupedCandidateSet,
) -> tuple[dict[str, int], dict[str, list[float]], dict[GroupId, list[float]]]:
    """Dyadic pool sizes, per-class score lists, and per-group score lists."""
    grouping = DyadicGrouping.from_groups(candidates.groups())
    sizes = {INTRA: 0, INTER: 0}
    class_scores: dict[str, list[float]] = {INTRA: [], INTER: []}
    group_scores: dict[GroupId, list[float]] = {}
    for group in candidates.groups():
        cls = grouping.of(group)
        bucket = candidates.lists[group]
        sizes[cls] += len(bucket)
        class_scores[cls].extend(c.score for c in bucket)
        group_scores[group] = [c.score for c in bucket]
    return sizes, class_scores, group_scores
