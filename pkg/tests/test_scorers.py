import math

import pytest

from fairlink import (
    GroupId,
    SensitiveGraph,
    adamic_adar,
    common_neighbors,
    embedding_dot,
    ingest_scores,
    load_embeddings,
    score_candidates,
)
from fairlink.errors import (
    ConfigError,
    DimensionMismatchError,
    DuplicatePairError,
    MalformedLineError,
    MissingEmbeddingError,
    UnknownNodeError,
)

from conftest import G00, G01, G11


class TestCommonNeighbors:
    def test_triangle_pair(self, triangle_graph):
        assert common_neighbors(triangle_graph, 0, 1) == 1.0

    def test_disconnected_pair(self):
        graph = SensitiveGraph(4, [(0, 1)], {i: 0 for i in range(4)})
        assert common_neighbors(graph, 2, 3) == 0.0

    def test_star_graph(self, star_graph):
        assert common_neighbors(star_graph, 0, 1) == 0.0  # center-leaf
        assert common_neighbors(star_graph, 1, 2) == 1.0  # leaf-leaf via hub

    def test_unknown_node(self, triangle_graph):
        with pytest.raises(UnknownNodeError):
            common_neighbors(triangle_graph, 0, 99)


class TestAdamicAdar:
    def test_no_shared_neighbors(self, star_graph):
        assert adamic_adar(star_graph, 0, 1) == 0.0

    def test_single_shared_neighbor_degree_two(self):
        # Path 0-1-2: node 1 has degree 2.
        graph = SensitiveGraph(3, [(0, 1), (1, 2)], {i: 0 for i in range(3)})
        assert adamic_adar(graph, 0, 2) == pytest.approx(1.4427, abs=1e-4)

    def test_two_shared_neighbors_degrees_two_three(self):
        # Shared neighbors of (0, 1): node 2 with degree 2, node 3 with degree 3.
        graph = SensitiveGraph(
            5, [(0, 2), (1, 2), (0, 3), (1, 3), (3, 4)], {i: 0 for i in range(5)}
        )
        expected = 1 / math.log(2) + 1 / math.log(3)
        assert adamic_adar(graph, 0, 1) == pytest.approx(expected, abs=1e-12)
        assert adamic_adar(graph, 0, 1) == pytest.approx(2.3530, abs=1e-3)


class TestEmbeddingDot:
    def test_basis_vectors(self):
        emb = {0: (1.0, 0.0), 1: (1.0, 0.0), 2: (0.0, 1.0)}
        assert embedding_dot(emb, 0, 1) == 1.0
        assert embedding_dot(emb, 0, 2) == 0.0

    def test_hand_arithmetic(self):
        emb = {0: (1.0, 2.0), 1: (3.0, -1.0)}
        assert embedding_dot(emb, 0, 1) == 1.0

    def test_missing_and_mismatch(self):
        emb = {0: (1.0,), 1: (1.0, 2.0)}
        with pytest.raises(MissingEmbeddingError):
            embedding_dot(emb, 0, 9)
        with pytest.raises(DimensionMismatchError):
            embedding_dot(emb, 0, 1)

    def test_load_embeddings(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("2 3\n0 1.0 0.0 2.0\n1 0.5 0.5 0.5\n")
        emb = load_embeddings(path)
        assert emb[0] == (1.0, 0.0, 2.0)
        bad = tmp_path / "bad.txt"
        bad.write_text("2 3\n0 1.0\n")
        with pytest.raises(MalformedLineError):
            load_embeddings(bad)


def mixed_graph() -> SensitiveGraph:
    """Two attribute-1 nodes and two attribute-0 nodes, plus bridges.

    Edges: (0,1) in G11, (2,3) in G00, (0,2) and (1,3) in G01.
    """
    return SensitiveGraph(
        4, [(0, 1), (2, 3), (0, 2), (1, 3)], {0: 1, 1: 1, 2: 0, 3: 0}
    )


class TestScoreCandidates:
    def test_empty_candidates(self, triangle_graph):
        result = score_candidates(triangle_graph, [])
        assert result.total() == 0

    def test_routing_and_sorting(self):
        graph = mixed_graph()
        result = score_candidates(
            graph, [(0, 1), (2, 3), (0, 3)], scorer="common_neighbors"
        )
        for group, bucket in result.lists.items():
            scores = [c.score for c in bucket]
            assert scores == sorted(scores, reverse=True)
            assert all(c.group == group for c in bucket)

    def test_decoupled_noop_when_groups_disconnected(self):
        # Components per attribute: no cross-group edges at all.
        graph = SensitiveGraph(
            6, [(0, 1), (1, 2), (3, 4), (4, 5)], {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1}
        )
        pairs = [(0, 2), (3, 5)]
        plain = score_candidates(graph, pairs, "common_neighbors", decoupled=False)
        restricted = score_candidates(graph, pairs, "common_neighbors", decoupled=True)
        for group in plain.groups():
            assert [c.score for c in plain.lists[group]] == [
                c.score for c in restricted.lists[group]
            ]

    def test_decoupled_counts_same_group_edges_only(self):
        # Hand-restricted subgraph: keeping only G11 edges of this graph
        # leaves 4-5 and 5-6, so (4, 6) has exactly one shared neighbor;
        # the full graph adds a second path through node 0.
        graph = SensitiveGraph(
            7,
            [(4, 5), (5, 6), (4, 0), (0, 6), (0, 1)],
            {0: 0, 1: 0, 4: 1, 5: 1, 6: 1, 2: 0, 3: 0},
        )
        plain = score_candidates(graph, [(4, 6)], "common_neighbors", decoupled=False)
        restricted = score_candidates(graph, [(4, 6)], "common_neighbors", decoupled=True)
        assert plain.lists[G11][0].score == 2.0
        assert restricted.lists[G11][0].score == 1.0

    def test_decoupled_inter_pairs_have_no_mono_attribute_paths(self):
        # With a binary attribute a shared neighbor cannot be reached from
        # both endpoints of an inter pair using inter edges alone.
        graph = mixed_graph()
        restricted = score_candidates(graph, [(0, 3), (1, 2)], "adamic_adar", decoupled=True)
        assert all(c.score == 0.0 for c in restricted.lists[G01])

    def test_relevance_flags(self):
        graph = mixed_graph()
        result = score_candidates(
            graph, [(0, 1), (0, 3)], positives=frozenset({(0, 3)})
        )
        flags = {c.pair: c.relevance for c in result.all_candidates()}
        assert flags == {(0, 1): False, (0, 3): True}

    def test_purity(self):
        graph = mixed_graph()
        pairs = [(0, 1), (2, 3), (0, 3), (1, 2)]
        first = score_candidates(graph, pairs, "adamic_adar", decoupled=True)
        second = score_candidates(graph, pairs, "adamic_adar", decoupled=True)
        assert first.all_candidates() == second.all_candidates()

    def test_unknown_scorer(self, triangle_graph):
        with pytest.raises(ConfigError):
            score_candidates(triangle_graph, [(0, 1)], scorer="katz")

    def test_duplicate_candidates_rejected(self, triangle_graph):
        with pytest.raises(DuplicatePairError):
            score_candidates(triangle_graph, [(0, 1), (1, 0)])

    def test_tie_break_is_lexicographic(self):
        graph = SensitiveGraph(5, [], {i: 0 for i in range(5)})
        result = score_candidates(graph, [(2, 3), (0, 1), (1, 4)], "common_neighbors")
        pairs = [c.pair for c in result.lists[G00]]
        assert pairs == [(0, 1), (1, 4), (2, 3)]  # all scores 0, sorted by pair


class TestIngestScores:
    def test_single_line_with_relevance(self, tmp_path, triangle_graph):
        path = tmp_path / "scores.tsv"
        path.write_text("0\t1\t0.9\n")
        result = ingest_scores(path, triangle_graph, [(0, 1)])
        (cand,) = result.all_candidates()
        assert cand.relevance and cand.score == 0.9 and cand.group == G11

    def test_duplicate_pair(self, tmp_path, triangle_graph):
        path = tmp_path / "scores.tsv"
        path.write_text("0\t1\t0.9\n1\t0\t0.3\n")
        with pytest.raises(DuplicatePairError):
            ingest_scores(path, triangle_graph, [])

    def test_groups_partition_file(self, tmp_path):
        graph = mixed_graph()
        path = tmp_path / "scores.tsv"
        lines = ["0\t1\t0.9", "2\t3\t0.8", "0\t2\t0.7", "0\t3\t0.6", "1\t2\t0.5", "1\t3\t0.4"]
        path.write_text("\n".join(lines) + "\n")
        result = ingest_scores(path, graph, [])
        assert sum(len(b) for b in result.lists.values()) == 6
        assert set(result.groups()) == {G00, G01, G11}

    def test_malformed_and_unknown(self, tmp_path, triangle_graph):
        bad = tmp_path / "bad.tsv"
        bad.write_text("0\t1\n")
        with pytest.raises(MalformedLineError):
            ingest_scores(bad, triangle_graph, [])
        unknown = tmp_path / "unknown.tsv"
        unknown.write_text("0\t42\t1.0\n")
        with pytest.raises(UnknownNodeError):
            ingest_scores(unknown, triangle_graph, [])
