import math

import numpy as np
import pytest
from conftest import community_cosine_gap, planted_partition_table, table_from_counts

from mrex.embedding import (
    EmbeddingConfig,
    EntityVectors,
    first_order_gradients,
    first_order_objective,
    first_order_prob,
    first_order_step,
    init_tables,
    mutual_relation,
    second_order_gradients,
    second_order_step,
    second_order_term,
    train_embeddings,
)
from mrex.numerics import ParamStore, finite_diff_check
from mrex.proximity import AliasSampler, build_graph, noise_distribution


class TestFirstOrderProb:
    def test_zero_vectors(self):
        assert first_order_prob(np.zeros(3), np.zeros(3)) == 0.5

    def test_unit_overlap(self):
        p = first_order_prob(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        assert p == pytest.approx(1.0 / (1.0 + math.exp(-1.0)), abs=1e-12)

    def test_orthogonal(self):
        assert first_order_prob(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.5

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            first_order_prob(np.zeros(2), np.zeros(3))


class TestFirstOrderStep:
    def test_zero_lr_no_change(self):
        rng = np.random.default_rng(0)
        first = rng.normal(size=(4, 3))
        before = first.copy()
        first_order_step(first, 0, 1, 0.8, np.array([2, 3]), lr=0.0)
        np.testing.assert_array_equal(first, before)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(1)
        d, k = 4, 3
        store = ParamStore()
        u_i = store.add("u_i", rng.normal(size=d))
        u_j = store.add("u_j", rng.normal(size=d))
        u_n = store.add("u_n", rng.normal(size=(k, d)))
        weight = 0.6

        def objective(s):
            return first_order_objective(s.value("u_i"), s.value("u_j"), s.value("u_n"), weight)

        g_i, g_j, g_n = first_order_gradients(u_i, u_j, u_n, weight)
        store.grad("u_i")[...] = g_i
        store.grad("u_j")[...] = g_j
        store.grad("u_n")[...] = g_n
        assert finite_diff_check(objective, store, eps=1e-5) <= 1e-3

    def test_two_cliques_separate(self):
        # Two disjoint linked pairs; negatives push the pairs apart.
        graph = build_graph(table_from_counts({("A", "B"): 5, ("C", "D"): 5}), 2)
        rng = np.random.default_rng(3)
        first = rng.uniform(-0.125, 0.125, size=(4, 4))
        edge_sampler = AliasSampler(graph.edge_weights())
        noise = AliasSampler(noise_distribution(graph, 0.75))
        for step in range(10_000):
            e = graph.edges[edge_sampler.draw(rng)]
            i, j = (e.i, e.j) if rng.random() < 0.5 else (e.j, e.i)
            negs = []
            while len(negs) < 2:
                n = noise.draw(rng)
                if n not in (i, j):
                    negs.append(n)
            first_order_step(first, i, j, e.weight, np.array(negs), lr=0.05)
        idx = {v: k for k, v in enumerate(graph.vertices)}
        intra = first[idx["A"]] @ first[idx["B"]]
        inter = max(
            first[idx["A"]] @ first[idx["C"]],
            first[idx["A"]] @ first[idx["D"]],
        )
        assert intra > inter


class TestSecondOrderTerm:
    def test_zero_vectors_k1(self):
        val = second_order_term(np.zeros(2), np.zeros(2), np.zeros((1, 2)))
        assert val == pytest.approx(2.0 * math.log(0.5), abs=1e-12)

    def test_zero_vectors_k5(self):
        val = second_order_term(np.zeros(2), np.zeros(2), np.zeros((5, 2)))
        assert val == pytest.approx(6.0 * math.log(0.5), abs=1e-12)

    def test_hand_vectors_no_negatives(self):
        val = second_order_term(
            np.array([1.0, 0.0]), np.array([1.0, 0.0]), np.zeros((0, 2))
        )
        assert val == pytest.approx(math.log(1.0 / (1.0 + math.exp(-1.0))), abs=1e-12)


class TestSecondOrderStep:
    def test_zero_lr_no_change(self):
        rng = np.random.default_rng(5)
        vertex = rng.normal(size=(4, 3))
        context = rng.normal(size=(4, 3))
        vb, cb = vertex.copy(), context.copy()
        second_order_step(vertex, context, 0, 1, np.array([2, 3]), lr=0.0)
        np.testing.assert_array_equal(vertex, vb)
        np.testing.assert_array_equal(context, cb)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(6)
        d, k = 4, 3
        store = ParamStore()
        u_i = store.add("u_i", rng.normal(size=d))
        c_j = store.add("c_j", rng.normal(size=d))
        c_n = store.add("c_n", rng.normal(size=(k, d)))

        def objective(s):
            return second_order_term(s.value("u_i"), s.value("c_j"), s.value("c_n"))

        g_i, g_j, g_n = second_order_gradients(u_i, c_j, c_n)
        store.grad("u_i")[...] = g_i
        store.grad("c_j")[...] = g_j
        store.grad("c_n")[...] = g_n
        assert finite_diff_check(objective, store, eps=1e-5) <= 1e-3

    def test_star_leaves_align(self):
        # Leaves share the hub as context; an isolated pair does not.
        counts = {("HUB", f"L{i}"): 5 for i in range(4)}
        counts[("X", "Y")] = 5
        graph = build_graph(table_from_counts(counts), 2)
        idx = {v: k for k, v in enumerate(graph.vertices)}
        rng = np.random.default_rng(7)
        vertex = rng.uniform(-0.0625, 0.0625, size=(graph.n_vertices, 8))
        context = np.zeros((graph.n_vertices, 8))
        edge_sampler = AliasSampler(graph.edge_weights())
        noise = AliasSampler(noise_distribution(graph, 0.75))
        for step in range(20_000):
            e = graph.edges[edge_sampler.draw(rng)]
            i, j = (e.i, e.j) if rng.random() < 0.5 else (e.j, e.i)
            negs = []
            while len(negs) < 2:
                n = noise.draw(rng)
                if n not in (i, j):
                    negs.append(n)
            second_order_step(vertex, context, i, j, np.array(negs), lr=0.05)

        def cos(a, b):
            return vertex[idx[a]] @ vertex[idx[b]] / (
                np.linalg.norm(vertex[idx[a]]) * np.linalg.norm(vertex[idx[b]])
            )

        leaf_cos = np.mean([cos(f"L{i}", f"L{j}") for i in range(4) for j in range(i + 1, 4)])
        stranger_cos = np.mean([cos(f"L{i}", "X") for i in range(4)])
        assert leaf_cos > stranger_cos


class TestTrainEmbeddings:
    def test_zero_samples_equals_initialization(self):
        graph = build_graph(table_from_counts({("A", "B"): 4, ("B", "C"): 3}), 2)
        config = EmbeddingConfig(d1=8, d2=8, total_samples=0, seed=11)
        table = train_embeddings(graph, config)
        rng = np.random.default_rng(11)
        first, second, context = init_tables(graph, config, rng)
        np.testing.assert_array_equal(table.first, first)
        np.testing.assert_array_equal(table.second_vertex, second)
        np.testing.assert_array_equal(table.second_context, context)
        assert np.all(np.abs(table.first) <= 0.5 / 8)
        assert np.all(table.second_context == 0.0)

    def test_fixed_seed_bit_identical(self):
        graph = build_graph(
            table_from_counts({("A", "B"): 4, ("B", "C"): 3, ("A", "C"): 6}), 2
        )
        config = EmbeddingConfig(d1=4, d2=4, total_samples=500, seed=13)
        t1 = train_embeddings(graph, config)
        t2 = train_embeddings(graph, config)
        np.testing.assert_array_equal(t1.first, t2.first)
        np.testing.assert_array_equal(t1.second_vertex, t2.second_vertex)
        np.testing.assert_array_equal(t1.second_context, t2.second_context)

    def test_planted_partition_gap(self):
        table, comm_a, comm_b = planted_partition_table(seed=0)
        graph = build_graph(table, threshold=2)
        config = EmbeddingConfig(d1=32, d2=32, total_samples=30_000, initial_lr=0.05, seed=1)
        vectors = train_embeddings(graph, config).export()
        assert community_cosine_gap(vectors, comm_a, comm_b) >= 0.2

    def test_multi_worker_planted_partition_gap(self):
        table, comm_a, comm_b = planted_partition_table(seed=0)
        graph = build_graph(table, threshold=2)
        config = EmbeddingConfig(
            d1=32, d2=32, total_samples=30_000, initial_lr=0.05, seed=1, workers=4
        )
        vectors = train_embeddings(graph, config).export()
        assert community_cosine_gap(vectors, comm_a, comm_b) >= 0.2

    def test_second_order_objective_trend(self):
        table, _, _ = planted_partition_table(seed=2)
        graph = build_graph(table, threshold=2)
        total = 20_000
        values = []
        config = EmbeddingConfig(d1=16, d2=16, total_samples=total, initial_lr=0.05, seed=3)

        def monitor(phase, step, value):
            if phase == "second":
                values.append(value)

        train_embeddings(graph, config, monitor=monitor)
        window = total // 10
        means = [np.mean(values[k * window : (k + 1) * window]) for k in range(10)]
        non_decreasing = sum(1 for a, b in zip(means, means[1:]) if b >= a)
        assert non_decreasing >= 8

    def test_exported_halves_unit_or_zero(self):
        graph = build_graph(table_from_counts({("A", "B"): 4, ("B", "C"): 3}), 2)
        config = EmbeddingConfig(d1=8, d2=8, total_samples=200, seed=4)
        vectors = train_embeddings(graph, config).export()
        for entity in vectors.entities:
            vec = vectors.vector(entity)
            for half in (vec[:8], vec[8:]):
                norm = np.linalg.norm(half)
                assert norm == pytest.approx(1.0, abs=1e-9) or norm == 0.0


class TestMutualRelation:
    @staticmethod
    def _vectors():
        matrix = np.zeros((2, 4))
        matrix[0, 0] = 1.0
        matrix[1, 1] = 1.0
        return EntityVectors(["P", "Q"], matrix)

    def test_self_is_zero(self):
        vectors = self._vectors()
        mr, flag = mutual_relation(vectors, "P", "P")
        np.testing.assert_array_equal(mr, np.zeros(4))
        assert not flag

    def test_antisymmetry(self):
        vectors = self._vectors()
        ab, _ = mutual_relation(vectors, "P", "Q")
        ba, _ = mutual_relation(vectors, "Q", "P")
        np.testing.assert_array_equal(ab, -ba)

    def test_hand_subtraction(self):
        mr, _ = mutual_relation(self._vectors(), "P", "Q")
        np.testing.assert_array_equal(mr, [-1.0, 1.0, 0.0, 0.0])

    def test_out_of_graph_flag(self):
        vectors = self._vectors()
        mr, flag = mutual_relation(vectors, "P", "MISSING")
        assert flag
        np.testing.assert_array_equal(mr, [-1.0, 0.0, 0.0, 0.0])

    def test_norm_bound(self):
        table, comm_a, comm_b = planted_partition_table(seed=5, community_size=5)
        graph = build_graph(table, threshold=2)
        config = EmbeddingConfig(d1=8, d2=8, total_samples=2000, seed=5)
        vectors = train_embeddings(graph, config).export()
        bound = 2.0 * math.sqrt(2.0) + 1e-12
        for a in comm_a:
            for b in comm_b:
                mr, _ = mutual_relation(vectors, a, b)
                assert np.linalg.norm(mr) <= bound


class TestEntityVectorsIO:
    def test_round_trip_within_tolerance(self, tmp_path):
        graph = build_graph(
            table_from_counts({("A", "B"): 4, ("B", "C"): 3, ("A", "C"): 6}), 2
        )
        config = EmbeddingConfig(d1=8, d2=8, total_samples=500, seed=21)
        vectors = train_embeddings(graph, config).export()
        path = tmp_path / "entemb.txt"
        vectors.save(path)
        first_line = path.read_text().splitlines()[0]
        assert first_line == f"#entemb v1 {len(vectors.entities)} 16"
        loaded = EntityVectors.load(path)
        for entity in vectors.entities:
            np.testing.assert_allclose(
                loaded.vector(entity), vectors.vector(entity), atol=1e-8
            )

    def test_bad_header(self, tmp_path):
        path = tmp_path / "entemb.txt"
        path.write_text("#other v2 1 4\n")
        with pytest.raises(ValueError):
            EntityVectors.load(path)

    def test_save_is_deterministic(self, tmp_path):
        matrix = np.array([[0.123456789123, -1.0], [0.5, 0.25]])
        vectors = EntityVectors(["b", "a"], matrix)
        p1, p2 = tmp_path / "v1.txt", tmp_path / "v2.txt"
        vectors.save(p1)
        vectors.save(p2)
        assert p1.read_bytes() == p2.read_bytes()
