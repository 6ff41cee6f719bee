"""Mini-batch SGD over bags and held-out evaluation.

Evaluation ranks (head, tail, relation) facts by confidence and sweeps the
ranked list into a precision-recall curve; reported numbers are AUC, P@N
and the operating point maximizing F1.  NA never enters the ranking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import NA_RELATION, Bag, Vocabulary
from .embedding import EntityVectors, mutual_relation
from .model import (
    ModelParams,
    TypeCatalog,
    accumulate_bag_gradients,
    bag_loss,
    forward_bag,
)
from .numerics import sgd_step


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 160
    lr: float = 0.3
    dropout: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


@dataclass(frozen=True)
class Prediction:
    head_entity: str
    tail_entity: str
    relation: str
    confidence: float

    def __post_init__(self):
        if self.relation == NA_RELATION:
            raise ValueError("predictions never carry the NA relation")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")

    @property
    def fact(self) -> tuple[str, str, str]:
        return (self.head_entity, self.tail_entity, self.relation)


@dataclass(frozen=True)
class PRPoint:
    precision: float
    recall: float


@dataclass(frozen=True)
class RelationCatalog:
    """Relation label <-> dense index mapping with NA pinned at index 0."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if self.labels[0] != NA_RELATION:
            raise ValueError("NA must be the first relation")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate relation labels")

    @classmethod
    def from_bags(cls, bags: list[Bag]) -> "RelationCatalog":
        seen = {label for bag in bags for label in bag.labels}
        seen.discard(NA_RELATION)
        return cls(labels=(NA_RELATION, *sorted(seen)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown relation label {label!r}") from None


@dataclass
class FeatureResolver:
    """Per-bag auxiliary features: the MR vector and the entity type sets.

    Missing coverage degrades to zeros / empty sets and is counted.
    """

    vectors: EntityVectors | None
    types: TypeCatalog | None
    entity_dim: int
    missing_mr: int = 0
    typeless_entities: int = 0
    _typeless_seen: set = field(default_factory=set)

    def mr(self, head: str, tail: str) -> np.ndarray:
        if self.vectors is None:
            return np.zeros(self.entity_dim)
        vec, out_of_graph = mutual_relation(self.vectors, head, tail)
        if out_of_graph:
            self.missing_mr += 1
        return vec

    def type_sets(self, head: str, tail: str) -> tuple[frozenset[int], frozenset[int]]:
        if self.types is None:
            return frozenset(), frozenset()
        out = []
        for entity in (head, tail):
            tset = self.types.types_for(entity)
            if not tset and entity not in self._typeless_seen:
                self._typeless_seen.add(entity)
                self.typeless_entities += 1
            out.append(tset)
        return out[0], out[1]


def train(
    bags: list[Bag],
    resolver: FeatureResolver,
    params: ModelParams,
    relations: RelationCatalog,
    vocab: Vocabulary,
    config: TrainConfig,
    frozen: tuple[str, ...] = (),
) -> tuple[ModelParams, list[float]]:
    """Epochs of shuffled mini-batches with mean-gradient SGD steps.

    Returns the params (trained in place) and the mean bag loss per epoch.
    Parameters named in ``frozen`` keep their initial values.
    """
    if not bags:
        raise ValueError("empty training set")
    for bag in bags:
        bag.single_label  # raises unless every bag carries exactly one label
    rng = np.random.default_rng(config.seed)
    history: list[float] = []
    for _ in range(config.epochs):
        order = rng.permutation(len(bags))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            scale = 1.0 / len(batch)
            for idx in batch:
                bag = bags[idx]
                gold = relations.index(bag.single_label)
                trace = forward_bag(
                    bag,
                    resolver.mr(bag.head_entity, bag.tail_entity),
                    resolver.type_sets(bag.head_entity, bag.tail_entity),
                    params,
                    vocab,
                    mode="train",
                    gold_index=gold,
                    dropout_p=config.dropout,
                    rng=rng,
                )
                epoch_loss += bag_loss(trace, gold)
                accumulate_bag_gradients(trace, gold, params, scale=scale)
            for name in frozen:
                params.store.grad(name)[...] = 0.0
            sgd_step(params.store, config.lr)
        history.append(epoch_loss / len(bags))
    return params, history


def predict(
    test_bags: list[Bag],
    params: ModelParams,
    relations: RelationCatalog,
    vocab: Vocabulary,
    resolver: FeatureResolver,
    uniform_attention: bool = False,
) -> list[Prediction]:
    """Score every (bag, non-NA relation) and rank by descending confidence.

    Ties are broken by (head, tail, relation) so the ranking is
    deterministic.  Gold labels are never consulted.
    """
    predictions: list[Prediction] = []
    for bag in test_bags:
        conf = forward_bag(
            bag,
            resolver.mr(bag.head_entity, bag.tail_entity),
            resolver.type_sets(bag.head_entity, bag.tail_entity),
            params,
            vocab,
            mode="infer",
            uniform_attention=uniform_attention,
        )
        for r in range(1, relations.size):
            predictions.append(
                Prediction(
                    head_entity=bag.head_entity,
                    tail_entity=bag.tail_entity,
                    relation=relations.labels[r],
                    confidence=float(conf[r]),
                )
            )
    predictions.sort(key=lambda p: (-p.confidence, p.head_entity, p.tail_entity, p.relation))
    return predictions


def gold_facts_from_bags(test_bags: list[Bag]) -> set[tuple[str, str, str]]:
    """The non-NA (head, tail, relation) facts attached to the test bags."""
    return {
        (bag.head_entity, bag.tail_entity, label)
        for bag in test_bags
        for label in bag.labels
        if label != NA_RELATION
    }


def pr_curve(
    predictions: list[Prediction], gold_facts: set[tuple[str, str, str]]
) -> list[PRPoint]:
    """Precision and recall at every prefix of the ranked prediction list."""
    if not gold_facts:
        raise ValueError("empty gold fact set")
    points = []
    correct = 0
    for k, pred in enumerate(predictions, start=1):
        if pred.fact in gold_facts:
            correct += 1
        points.append(PRPoint(precision=correct / k, recall=correct / len(gold_facts)))
    return points


def auc(points: list[PRPoint]) -> float:
    """Trapezoidal area under the PR curve.

    The curve is anchored at recall 0 with the first point's precision and
    integrated up to the maximum recall reached.
    """
    if not points:
        raise ValueError("no PR points")
    area = points[0].precision * points[0].recall
    for prev, cur in zip(points, points[1:]):
        if cur.recall < prev.recall:
            raise ValueError("recall must be non-decreasing")
        area += (cur.recall - prev.recall) * (cur.precision + prev.precision) / 2.0
    return area


def p_at_n(
    predictions: list[Prediction], gold_facts: set[tuple[str, str, str]], n: int
) -> float:
    """Fraction of the top min(n, total) predictions that are gold facts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    top = predictions[: min(n, len(predictions))]
    if not top:
        return 0.0
    return sum(1 for p in top if p.fact in gold_facts) / len(top)


def max_f1(points: list[PRPoint]) -> tuple[float, float, float]:
    """(precision, recall, f1) at the prefix maximizing F1; first on ties."""
    if not points:
        raise ValueError("no PR points")
    best = (0.0, 0.0, -1.0)
    for pt in points:
        denom = pt.precision + pt.recall
        f1 = 2.0 * pt.precision * pt.recall / denom if denom > 0 else 0.0
        if f1 > best[2]:
            best = (pt.precision, pt.recall, f1)
    return best


def evaluate_predictions(
    predictions: list[Prediction],
    gold_facts: set[tuple[str, str, str]],
    p_at: tuple[int, ...] = (100, 200),
) -> dict:
    """All held-out metrics for one ranked prediction list."""
    points = pr_curve(predictions, gold_facts)
    precision, recall, f1 = max_f1(points)
    return {
        "auc": auc(points),
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "p_at": {str(n): p_at_n(predictions, gold_facts, n) for n in p_at},
    }
