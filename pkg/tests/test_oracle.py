import math
import random
from collections import Counter

import pytest

from fairlink import (
    GroupDistribution,
    MultisetSpec,
    enumerate_ndkl_extremes,
    kl_greedy_merge,
    kl_greedy_merge_weighted,
    multiset_permutations,
    ndkl,
    ndkl_upper_bound,
    ranking_from_groups,
    sequence_ndkl,
    synthetic_candidate_set,
    verify_trace,
)
from fairlink.errors import ConfigError, TooLargeError, ZeroTargetMassError
from fairlink.rerank import AggregationTrace, TraceStep

from conftest import G00, G01, G11


class TestMultisetPermutations:
    def test_count_matches_multinomial(self):
        counts = {G00: 3, G01: 2, G11: 2}
        sequences = list(multiset_permutations(counts))
        expected = math.factorial(7) // (6 * 2 * 2)
        assert len(sequences) == expected
        assert len(set(sequences)) == expected
        for seq in sequences:
            assert Counter(seq) == counts

    def test_lexicographic_first(self):
        first = next(multiset_permutations({G01: 1, G00: 2}))
        assert first == (G00, G00, G01)

    def test_zero_counts_skipped(self):
        sequences = list(multiset_permutations({G00: 2, G01: 0}))
        assert sequences == [(G00, G00)]


class TestSequenceNdkl:
    def test_agrees_with_incremental_metric(self, three_group_target):
        rnd = random.Random(41)
        groups = [G00, G01, G11]
        for _ in range(300):
            labels = tuple(rnd.choice(groups) for _ in range(rnd.randint(1, 12)))
            direct = sequence_ndkl(labels, three_group_target)
            incremental = ndkl(ranking_from_groups(labels), three_group_target)
            assert direct == pytest.approx(incremental, abs=1e-12)

    def test_zero_mass_rejected(self):
        target = GroupDistribution({G00: 1.0, G01: 0.0})
        with pytest.raises(ZeroTargetMassError):
            sequence_ndkl((G01,), target)

    def test_empty_rejected(self, three_group_target):
        with pytest.raises(ConfigError):
            sequence_ndkl((), three_group_target)


class TestEnumerateExtremes:
    def test_two_singletons_symmetric(self, uniform_pair_target):
        result = enumerate_ndkl_extremes(MultisetSpec({G00: 1, G01: 1}), uniform_pair_target)
        assert result.permutations_examined == 2
        assert result.min_value == pytest.approx(result.max_value, abs=1e-15)
        assert result.min_value == pytest.approx(0.4250, abs=1e-4)

    def test_block_ordering_is_argmax(self, uniform_pair_target):
        result = enumerate_ndkl_extremes(MultisetSpec({G00: 2, G01: 2}), uniform_pair_target)
        assert result.argmax in ((G00, G00, G01, G01), (G01, G01, G00, G00))

    def test_extremes_within_bound(self):
        rnd = random.Random(43)
        for _ in range(25):
            counts = {g: rnd.randint(0, 3) for g in (G00, G01, G11)}
            if sum(counts.values()) == 0:
                counts[G00] = 1
            raw = [rnd.random() + 0.05 for _ in range(3)]
            total = sum(raw)
            target = GroupDistribution(dict(zip((G00, G01, G11), (r / total for r in raw))))
            result = enumerate_ndkl_extremes(MultisetSpec(counts), target)
            assert 0.0 <= result.min_value <= result.max_value
            assert result.max_value <= ndkl_upper_bound(target) + 1e-12
            assert result.permutations_examined == MultisetSpec(counts).permutation_count()

    def test_argmin_argmax_round_trip_through_metric(self, three_group_target):
        result = enumerate_ndkl_extremes(MultisetSpec({G00: 3, G01: 2, G11: 1}), three_group_target)
        assert ndkl(ranking_from_groups(result.argmin), three_group_target) == pytest.approx(
            result.min_value, abs=1e-12
        )
        assert ndkl(ranking_from_groups(result.argmax), three_group_target) == pytest.approx(
            result.max_value, abs=1e-12
        )

    def test_guard(self, uniform_pair_target):
        with pytest.raises(TooLargeError):
            enumerate_ndkl_extremes(MultisetSpec({G00: 10, G01: 10}), uniform_pair_target)
        # Explicit override allows slightly larger runs.
        result = enumerate_ndkl_extremes(
            MultisetSpec({G00: 8, G01: 7}), uniform_pair_target, guard=15
        )
        assert result.permutations_examined == math.comb(15, 7)


class TestVerifyTrace:
    def test_clean_trace_passes(self, three_group_target):
        cands = synthetic_candidate_set({G00: 5, G01: 4, G11: 3})
        _, trace = kl_greedy_merge(cands, three_group_target, 12)
        report = verify_trace(trace, three_group_target)
        assert report.ok
        assert report.steps_checked == 12

    def test_planted_fault_detected(self, three_group_target):
        cands = synthetic_candidate_set({G00: 5, G01: 4, G11: 3})
        _, trace = kl_greedy_merge(cands, three_group_target, 12)
        # Swap one step's choice to a group that did not attain the minimum.
        victim = next(
            i
            for i, s in enumerate(trace.steps)
            if len(s.tentative_kl) > 1
            and max(s.tentative_kl.values()) - min(s.tentative_kl.values()) > 1e-6
        )
        step = trace.steps[victim]
        wrong = max(step.tentative_kl, key=step.tentative_kl.get)
        corrupted = AggregationTrace(
            trace.steps[:victim]
            + (TraceStep(step.position, wrong, step.tentative_kl, step.chosen, step.tie_break_used),)
            + trace.steps[victim + 1 :],
            trace.truncated,
        )
        report = verify_trace(corrupted, three_group_target)
        assert not report.ok
        assert report.first_violation.position == step.position
        assert report.first_violation.chosen_group == wrong

    def test_score_greedy_trace_fails_fairness_rule(self):
        # A pure-score run checked against the divergence rule must be
        # flagged exactly where score and fairness disagreed.
        target = GroupDistribution({G00: 0.1, G01: 0.9})
        cands = synthetic_candidate_set({G00: 3, G01: 3})
        pure, _ = kl_greedy_merge(cands, target, 4)
        score_first, trace0 = kl_greedy_merge_weighted(cands, target, 4, 0.0)
        assert pure.group_sequence() != score_first.group_sequence()
        report = verify_trace(trace0, target)
        assert not report.ok
        disagreements = {
            step.position
            for step in trace0.steps
            if step.chosen_group
            != min(step.tentative_kl, key=lambda g: (step.tentative_kl[g], g))
        }
        assert {v.position for v in report.violations} == disagreements
