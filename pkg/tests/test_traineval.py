import numpy as np
import pytest
from conftest import catalog_from_dataset, mini_synthetic

from mrex.corpus import assemble_bags, build_vocab, parse_instances
from mrex.model import ModelConfig, ModelParams
from mrex.traineval import (
    FeatureResolver,
    Prediction,
    PRPoint,
    RelationCatalog,
    TrainConfig,
    auc,
    evaluate_predictions,
    gold_facts_from_bags,
    max_f1,
    p_at_n,
    pr_curve,
    predict,
    train,
)

MINI_MODEL = dict(word_dim=6, pos_dim=2, n_filters=8, type_dim=4, entity_dim=8, max_len=16)


def pipeline_pieces(seed=0):
    ds = mini_synthetic(seed)
    train_parsed = parse_instances(ds.train_lines)
    test_parsed = parse_instances(ds.test_lines)
    train_bags = assemble_bags(train_parsed.instances, mode="train")
    test_bags = assemble_bags(test_parsed.instances, mode="test")
    vocab = build_vocab(train_parsed.instances, min_count=1)
    relations = RelationCatalog.from_bags(train_bags)
    config = ModelConfig(n_relations=relations.size, vocab_size=vocab.size, **MINI_MODEL)
    resolver = FeatureResolver(vectors=None, types=catalog_from_dataset(ds), entity_dim=8)
    return ds, train_bags, test_bags, vocab, relations, config, resolver


def fact_predictions(pattern, base_conf=0.9):
    """Build a ranked prediction list; pattern[i] says rank i+1 is correct."""
    preds, gold = [], set()
    for i, correct in enumerate(pattern):
        pred = Prediction(f"h{i}", f"t{i}", "r", base_conf * 0.97**i)
        preds.append(pred)
        if correct:
            gold.add(pred.fact)
    return preds, gold


class TestConfigsAndCatalog:
    def test_train_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=1, batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=1, lr=0.0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=1, dropout=1.0)

    def test_relation_catalog_na_first(self):
        _, train_bags, _, _, relations, _, _ = pipeline_pieces()[:7]
        assert relations.labels[0] == "NA"
        assert relations.index("NA") == 0
        with pytest.raises(ValueError):
            relations.index("not_a_relation")

    def test_prediction_rejects_na(self):
        with pytest.raises(ValueError):
            Prediction("h", "t", "NA", 0.5)
        with pytest.raises(ValueError):
            Prediction("h", "t", "r", 1.5)


class TestTrain:
    def test_zero_epochs_keeps_initialization(self):
        _, bags, _, vocab, relations, config, resolver = pipeline_pieces()
        params = ModelParams.init(config, np.random.default_rng(1))
        reference = ModelParams.init(config, np.random.default_rng(1))
        train(bags, resolver, params, relations, vocab, TrainConfig(epochs=0, seed=0))
        for name, value, _ in params.store.items():
            np.testing.assert_array_equal(value, reference.store.value(name))

    def test_fixed_seed_reproducible(self):
        _, bags, _, vocab, relations, config, resolver = pipeline_pieces()
        tc = TrainConfig(epochs=2, batch_size=16, lr=0.3, dropout=0.5, seed=7)
        params1 = ModelParams.init(config, np.random.default_rng(2))
        _, hist1 = train(bags, resolver, params1, relations, vocab, tc)
        params2 = ModelParams.init(config, np.random.default_rng(2))
        _, hist2 = train(bags, resolver, params2, relations, vocab, tc)
        assert hist1 == hist2
        for name, value, _ in params1.store.items():
            np.testing.assert_array_equal(value, params2.store.value(name))

    def test_loss_decreases_over_epochs(self):
        _, bags, _, vocab, relations, config, resolver = pipeline_pieces(seed=3)
        params = ModelParams.init(config, np.random.default_rng(3))
        tc = TrainConfig(epochs=5, batch_size=16, lr=0.3, dropout=0.5, seed=3)
        _, history = train(bags, resolver, params, relations, vocab, tc)
        assert len(history) == 5
        assert history[4] < history[0]

    def test_empty_training_set_rejected(self):
        _, _, _, vocab, relations, config, resolver = pipeline_pieces()
        params = ModelParams.init(config, np.random.default_rng(0))
        with pytest.raises(ValueError):
            train([], resolver, params, relations, vocab, TrainConfig(epochs=1))

    def test_frozen_parameter_untouched(self):
        _, bags, _, vocab, relations, config, resolver = pipeline_pieces()
        params = ModelParams.init(config, np.random.default_rng(4))
        params.fusion_alpha[0] = 0.0
        tc = TrainConfig(epochs=1, batch_size=16, lr=0.3, dropout=0.0, seed=1)
        train(bags, resolver, params, relations, vocab, tc, frozen=("fusion_alpha",))
        assert params.fusion_alpha[0] == 0.0


class TestPredict:
    def test_empty_test_set(self):
        _, bags, _, vocab, relations, config, resolver = pipeline_pieces()
        params = ModelParams.init(config, np.random.default_rng(0))
        assert predict([], params, relations, vocab, resolver) == []

    def test_sorted_and_counted(self):
        _, bags, test_bags, vocab, relations, config, resolver = pipeline_pieces()
        params = ModelParams.init(config, np.random.default_rng(5))
        preds = predict(test_bags, params, relations, vocab, resolver)
        assert len(preds) == len(test_bags) * (relations.size - 1)
        for a, b in zip(preds, preds[1:]):
            assert a.confidence >= b.confidence
        assert all(p.relation != "NA" for p in preds)

    def test_uniform_attention_switch_changes_nothing_for_single_sentence_bags(self):
        _, bags, test_bags, vocab, relations, config, resolver = pipeline_pieces()
        single = [b for b in test_bags if len(b.instances) == 1][:3]
        params = ModelParams.init(config, np.random.default_rng(6))
        p1 = predict(single, params, relations, vocab, resolver, uniform_attention=False)
        p2 = predict(single, params, relations, vocab, resolver, uniform_attention=True)
        assert [(p.fact, p.confidence) for p in p1] == [(p.fact, p.confidence) for p in p2]


class TestPRCurve:
    def test_all_correct(self):
        preds, gold = fact_predictions([1, 1, 1])
        extra_gold = gold | {("x", "y", "r")}
        points = pr_curve(preds, extra_gold)
        assert all(pt.precision == 1.0 for pt in points)
        assert points[-1].recall == pytest.approx(min(1.0, 3 / 4))

    def test_hand_pattern(self):
        preds, gold = fact_predictions([1, 0, 1, 0])
        points = pr_curve(preds, gold)
        expected = [(1.0, 0.5), (0.5, 0.5), (2 / 3, 1.0), (0.5, 1.0)]
        for pt, (p, r) in zip(points, expected):
            assert pt.precision == pytest.approx(p, abs=1e-12)
            assert pt.recall == pytest.approx(r, abs=1e-12)

    def test_single_correct(self):
        preds, gold = fact_predictions([1])
        assert pr_curve(preds, gold) == [PRPoint(1.0, 1.0)]

    def test_empty_gold_rejected(self):
        preds, _ = fact_predictions([0])
        with pytest.raises(ValueError):
            pr_curve(preds, set())

    def test_recall_non_decreasing(self):
        rng = np.random.default_rng(8)
        pattern = list(rng.integers(0, 2, size=50))
        if not any(pattern):
            pattern[0] = 1
        preds, gold = fact_predictions(pattern, base_conf=0.99)
        points = pr_curve(preds, gold)
        recalls = [pt.recall for pt in points]
        assert recalls == sorted(recalls)


class TestAuc:
    def test_perfect_curve(self):
        preds, gold = fact_predictions([1, 1])
        assert auc(pr_curve(preds, gold)) == pytest.approx(1.0)

    def test_hand_pattern_matches_numeric_integration(self):
        preds, gold = fact_predictions([1, 0, 1, 0])
        points = pr_curve(preds, gold)
        got = auc(points)
        recalls = [0.0] + [pt.recall for pt in points]
        precisions = [points[0].precision] + [pt.precision for pt in points]
        want = float(np.trapezoid(precisions, recalls))
        assert got == pytest.approx(want, abs=1e-12)
        assert got == pytest.approx(19 / 24, abs=1e-12)

    def test_single_point(self):
        assert auc([PRPoint(0.8, 0.4)]) == pytest.approx(0.32)

    def test_bounded(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            pattern = list(rng.integers(0, 2, size=int(rng.integers(1, 30))))
            if not any(pattern):
                pattern[0] = 1
            preds, gold = fact_predictions(pattern, base_conf=0.99)
            value = auc(pr_curve(preds, gold))
            assert 0.0 <= value <= 1.0


class TestPAtN:
    def test_top_three_all_correct(self):
        preds, gold = fact_predictions([1, 1, 1])
        assert p_at_n(preds, gold, 3) == 1.0

    def test_partial(self):
        preds, gold = fact_predictions([1, 0, 1])
        assert p_at_n(preds, gold, 3) == pytest.approx(2 / 3)

    def test_n_clamped_to_length(self):
        preds, gold = fact_predictions([1, 0])
        assert p_at_n(preds, gold, 50) == pytest.approx(0.5)

    def test_matches_final_curve_precision(self):
        preds, gold = fact_predictions([1, 0, 1, 1, 0])
        points = pr_curve(preds, gold)
        assert p_at_n(preds, gold, len(preds)) == pytest.approx(points[-1].precision)

    def test_invalid_n(self):
        preds, gold = fact_predictions([1])
        with pytest.raises(ValueError):
            p_at_n(preds, gold, 0)


class TestMaxF1:
    def test_perfect(self):
        preds, gold = fact_predictions([1, 1])
        assert max_f1(pr_curve(preds, gold)) == (1.0, 1.0, 1.0)

    def test_hand_pattern(self):
        preds, gold = fact_predictions([1, 0, 1, 0])
        precision, recall, f1 = max_f1(pr_curve(preds, gold))
        assert f1 == pytest.approx(0.8, abs=1e-12)
        assert (precision, recall) == (pytest.approx(2 / 3), pytest.approx(1.0))

    def test_single_point(self):
        assert max_f1([PRPoint(0.5, 0.5)])[2] == pytest.approx(0.5)

    def test_tie_takes_first(self):
        points = [PRPoint(0.5, 0.5), PRPoint(0.5, 0.5)]
        assert max_f1(points) == (0.5, 0.5, 0.5)


class TestBruteForceAgreement:
    @staticmethod
    def brute_force_metrics(preds, gold):
        """Recompute precision/recall at every k from scratch (O(N^2))."""
        points = []
        for k in range(1, len(preds) + 1):
            correct = sum(1 for p in preds[:k] if p.fact in gold)
            points.append(PRPoint(correct / k, correct / len(gold)))
        return points

    def test_random_sets(self):
        rng = np.random.default_rng(10)
        for trial in range(200):
            n = int(rng.integers(1, 40))
            pattern = list(rng.integers(0, 2, size=n))
            if not any(pattern):
                pattern[int(rng.integers(n))] = 1
            preds, gold = fact_predictions(pattern, base_conf=0.999)
            # brute-force gold can be a superset: add unreachable facts
            for extra in range(int(rng.integers(0, 3))):
                gold.add((f"zz{trial}", f"qq{extra}", "r"))
            expected = self.brute_force_metrics(preds, gold)
            got = pr_curve(preds, gold)
            assert len(expected) == len(got)
            for a, b in zip(got, expected):
                assert a.precision == pytest.approx(b.precision, abs=1e-12)
                assert a.recall == pytest.approx(b.recall, abs=1e-12)
            recalls = [0.0] + [pt.recall for pt in expected]
            precisions = [expected[0].precision] + [pt.precision for pt in expected]
            assert auc(got) == pytest.approx(float(np.trapezoid(precisions, recalls)), abs=1e-12)


class TestEvaluatePredictions:
    def test_keys_and_values(self):
        preds, gold = fact_predictions([1, 0, 1, 0])
        metrics = evaluate_predictions(preds, gold, p_at=(2, 4))
        assert set(metrics) == {"auc", "precision", "recall", "f1", "p_at"}
        assert metrics["f1"] == pytest.approx(0.8)
        assert metrics["p_at"]["2"] == pytest.approx(0.5)
        assert metrics["p_at"]["4"] == pytest.approx(0.5)

    def test_gold_facts_from_bags_excludes_na(self):
        _, _, test_bags, _, _, _, _ = pipeline_pieces()
        facts = gold_facts_from_bags(test_bags)
        assert all(rel != "NA" for (_, _, rel) in facts)
        assert facts
