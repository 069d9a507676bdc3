import itertools
import json
import math
import random

import pytest

from fairlink import (
    GroupDistribution,
    GroupId,
    SensitiveGraph,
    edge_group,
    empirical_distribution,
    load_graph,
    read_edge_list,
    sample_negatives,
    stratified_split,
    write_split,
)
from fairlink.errors import (
    ConfigError,
    EmptyEdgeSetError,
    GroupTooSmallError,
    MalformedLineError,
    MissingAttributeError,
    NotEnoughNonEdgesError,
    SelfLoopError,
)
from fairlink.graphs import apportion

from conftest import G00, G01, G11, graph_with_group_edge_counts


class TestGroupId:
    def test_canonical_order(self):
        assert GroupId.of(3, 1) == GroupId.of(1, 3) == GroupId(1, 3)

    def test_label_roundtrip(self):
        assert GroupId.parse(GroupId.of(2, 0).label()) == GroupId.of(0, 2)

    def test_intra_flag(self):
        assert G00.is_intra and G11.is_intra and not G01.is_intra


class TestLoadGraph:
    def write(self, tmp_path, edge_lines, attr_lines):
        edges = tmp_path / "edges.tsv"
        attrs = tmp_path / "attrs.tsv"
        edges.write_text("\n".join(edge_lines) + "\n")
        attrs.write_text("\n".join(attr_lines) + "\n")
        return edges, attrs

    def test_triangle(self, tmp_path):
        edges, attrs = self.write(
            tmp_path, ["0\t1", "1\t2", "0\t2"], ["0\t1", "1\t1", "2\t0"]
        )
        graph = load_graph(edges, attrs)
        assert graph.node_count == 3
        assert len(graph.edges) == 3

    def test_comments_commas_duplicates(self, tmp_path):
        edges, attrs = self.write(
            tmp_path,
            ["# header", "0,1", "1\t0", "1 2"],
            ["0\t0", "1\t0", "2\t1"],
        )
        graph = load_graph(edges, attrs)
        assert graph.edges == frozenset({(0, 1), (1, 2)})

    def test_self_loop_rejected(self, tmp_path):
        edges, attrs = self.write(tmp_path, ["1\t1"], ["0\t0", "1\t0"])
        with pytest.raises(SelfLoopError) as exc:
            load_graph(edges, attrs)
        assert exc.value.line_no == 1

    def test_missing_attribute(self, tmp_path):
        edges, attrs = self.write(tmp_path, ["0\t5"], ["0\t0", "5\t1", "7\t0"])
        graph = load_graph(edges, attrs)
        assert graph.node_count == 8
        edges2, attrs2 = self.write(tmp_path, ["0\t6"], ["0\t0", "7\t0"])
        with pytest.raises(MissingAttributeError):
            load_graph(edges2, attrs2)

    def test_malformed_line(self, tmp_path):
        edges, attrs = self.write(tmp_path, ["0\t1\t2"], ["0\t0", "1\t0"])
        with pytest.raises(MalformedLineError) as exc:
            load_graph(edges, attrs)
        assert exc.value.line_no == 1

    def test_read_edge_list_rejects_negatives(self, tmp_path):
        path = tmp_path / "edges.tsv"
        path.write_text("-1\t2\n")
        with pytest.raises(MalformedLineError):
            read_edge_list(path)


class TestEdgeGroup:
    def test_by_definition(self, triangle_graph):
        assert edge_group(triangle_graph, 0, 1) == G11
        assert edge_group(triangle_graph, 1, 2) == G01

    def test_symmetry_random_pairs(self):
        rnd = random.Random(5)
        attrs = {i: rnd.randint(0, 3) for i in range(30)}
        graph = SensitiveGraph(30, [], attrs)
        for _ in range(200):
            u, v = rnd.sample(range(30), 2)
            assert edge_group(graph, u, v) == edge_group(graph, v, u)

    def test_partition_of_all_pairs(self):
        rnd = random.Random(6)
        attrs = {i: rnd.randint(0, 2) for i in range(12)}
        graph = SensitiveGraph(12, [], attrs)
        sizes = {g: 0 for g in graph.group_universe()}
        for u, v in itertools.combinations(range(12), 2):
            sizes[edge_group(graph, u, v)] += 1
        assert sum(sizes.values()) == 12 * 11 // 2

    def test_capacity_matches_enumeration(self):
        rnd = random.Random(7)
        attrs = {i: rnd.randint(0, 2) for i in range(15)}
        graph = SensitiveGraph(15, [], attrs)
        for group in graph.group_universe():
            brute = sum(
                1
                for u, v in itertools.combinations(range(15), 2)
                if edge_group(graph, u, v) == group
            )
            assert graph.group_pair_capacity(group) == brute


class TestEmpiricalDistribution:
    def test_point_mass(self):
        graph = SensitiveGraph(3, [(0, 1), (1, 2)], {0: 1, 1: 1, 2: 1})
        dist = empirical_distribution(graph, graph.edges)
        assert dist.mass(G11) == 1.0

    def test_direct_count(self):
        graph = graph_with_group_edge_counts({G00: 5, G01: 3, G11: 2})
        dist = empirical_distribution(graph, graph.edges)
        assert dist.mass(G00) == pytest.approx(0.5)
        assert dist.mass(G01) == pytest.approx(0.3)
        assert dist.mass(G11) == pytest.approx(0.2)

    def test_absent_group_stays_listed_with_zero(self):
        graph = SensitiveGraph(3, [(0, 1)], {0: 0, 1: 0, 2: 1})
        dist = empirical_distribution(graph, graph.edges)
        assert dist.mass(G01) == 0.0
        assert G01 in dist.groups() and G11 in dist.groups()

    def test_empty_edges(self, triangle_graph):
        with pytest.raises(EmptyEdgeSetError):
            empirical_distribution(triangle_graph, [])


class TestGroupDistribution:
    def test_must_sum_to_one(self):
        with pytest.raises(ConfigError):
            GroupDistribution({G00: 0.5, G01: 0.6})

    def test_no_negative_mass(self):
        with pytest.raises(ConfigError):
            GroupDistribution({G00: 1.2, G01: -0.2})

    def test_smoothed_keeps_sum(self):
        dist = GroupDistribution({G00: 1.0, G01: 0.0})
        smoothed = dist.smoothed()
        assert math.fsum(smoothed.probabilities.values()) == pytest.approx(1.0, abs=1e-15)
        assert smoothed.mass(G01) > 0


class TestApportion:
    def test_exact_total(self):
        assert sum(apportion(97, [0.5, 0.3, 0.2])) == 97

    def test_largest_remainder(self):
        assert apportion(10, [0.5, 0.3, 0.2]) == [5, 3, 2]
        assert apportion(4, [0.5, 0.5]) == [2, 2]

    def test_caps_respected(self):
        parts = apportion(10, [0.9, 0.1], caps=[4, 10])
        assert parts[0] <= 4 and sum(parts) == 10


class TestStratifiedSplit:
    def test_single_group_sizes(self):
        graph = graph_with_group_edge_counts({G00: 100})
        split = stratified_split(graph, (0.7, 0.1, 0.2), seed=1)
        assert (len(split.train), len(split.valid), len(split.test)) == (70, 10, 20)

    def test_deterministic(self):
        graph = graph_with_group_edge_counts({G00: 40, G01: 25, G11: 15})
        a = stratified_split(graph, (0.7, 0.1, 0.2), seed=9)
        b = stratified_split(graph, (0.7, 0.1, 0.2), seed=9)
        assert a == b
        c = stratified_split(graph, (0.7, 0.1, 0.2), seed=10)
        assert a != c

    def test_disjoint_and_covering(self):
        graph = graph_with_group_edge_counts({G00: 33, G01: 21, G11: 11})
        split = stratified_split(graph, (0.7, 0.1, 0.2), seed=3)
        union = split.train | split.valid | split.test
        assert union == graph.edges
        assert len(split.train) + len(split.valid) + len(split.test) == len(graph.edges)

    def test_group_proportions_preserved(self):
        # Exhaustively recount the test subset's per-group proportions.
        graph = graph_with_group_edge_counts({G00: 500, G01: 300, G11: 200})
        split = stratified_split(graph, (0.7, 0.1, 0.2), seed=4)
        target = empirical_distribution(graph, graph.edges)
        for subset in (split.train, split.valid, split.test):
            by_group = graph.edges_by_group(subset)
            for group in graph.group_universe():
                got = len(by_group.get(group, []))
                want = target.mass(group) * len(subset)
                assert abs(got - want) <= 1.0

    def test_group_too_small(self):
        graph = graph_with_group_edge_counts({G00: 10, G01: 2})
        with pytest.raises(GroupTooSmallError):
            stratified_split(graph, (0.7, 0.1, 0.2), seed=0)

    def test_bad_ratios(self, triangle_graph):
        with pytest.raises(ConfigError):
            stratified_split(triangle_graph, (0.5, 0.5, 0.5), seed=0)


class TestSampleNegatives:
    def test_complete_graph_has_no_non_edges(self):
        nodes = {i: 0 for i in range(5)}
        graph = SensitiveGraph(5, list(itertools.combinations(range(5), 2)), nodes)
        with pytest.raises(NotEnoughNonEdgesError):
            sample_negatives(graph, {G00: 1}, seed=0)

    def test_only_candidate_pair(self):
        graph = SensitiveGraph(4, [], {0: 1, 1: 1, 2: 0, 3: 0})
        got = sample_negatives(graph, {G11: 1}, seed=0)
        assert got == frozenset({(0, 1)})

    def test_membership_recheck_oracle(self):
        # Every returned pair re-verified non-edge and group-correct by lookup.
        rnd = random.Random(11)
        attrs = {i: rnd.randint(0, 1) for i in range(1000)}
        edges = set()
        while len(edges) < 3000:
            u, v = rnd.sample(range(1000), 2)
            edges.add((min(u, v), max(u, v)))
        graph = SensitiveGraph(1000, edges, attrs)
        request = {G00: 500, G01: 500, G11: 500}
        got = sample_negatives(graph, request, seed=21)
        assert len(got) == 1500
        counts = {g: 0 for g in request}
        for u, v in got:
            assert u < v
            assert (u, v) not in graph.edges
            counts[edge_group(graph, u, v)] += 1
        assert counts == request

    def test_deterministic(self):
        graph = graph_with_group_edge_counts({G00: 20, G01: 10})
        a = sample_negatives(graph, {G00: 7, G11: 3}, seed=5)
        b = sample_negatives(graph, {G00: 7, G11: 3}, seed=5)
        assert a == b

    def test_exhaustive_request_succeeds(self):
        # Request every available non-edge; forces the enumeration path.
        graph = SensitiveGraph(6, [(0, 1)], {i: 0 for i in range(6)})
        available = 6 * 5 // 2 - 1
        got = sample_negatives(graph, {G00: available}, seed=2)
        assert len(got) == available


class TestSplitFiles:
    def test_roundtrip_and_manifest(self, tmp_path):
        graph = graph_with_group_edge_counts({G00: 30, G01: 12, G11: 8})
        split = stratified_split(graph, (0.7, 0.1, 0.2), seed=13)
        paths = write_split(tmp_path, graph, split)
        for name in ("train", "valid", "test"):
            edges = frozenset(read_edge_list(paths[name]))
            assert edges == getattr(split, name)
        manifest = json.loads(paths["manifest"].read_text())
        assert manifest["seed"] == 13
        assert manifest["ratios"] == [0.7, 0.1, 0.2]
        total = sum(sum(v.values()) for v in manifest["per_group_counts"].values())
        assert total == len(graph.edges)
