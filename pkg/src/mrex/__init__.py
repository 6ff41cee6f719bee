"""Relation extraction with mutual-relation entity embeddings.

The library mines an entity proximity graph from unlabeled co-occurrence
counts, embeds it with first- and second-order objectives, and fuses the
resulting mutual-relation vectors with entity-type features and a PCNN
attention classifier trained on distantly supervised bags.
"""

from .corpus import (
    Bag,
    CooccurrenceTable,
    ParsedCorpus,
    SentenceInstance,
    Vocabulary,
    assemble_bags,
    build_vocab,
    count_cooccurrences,
    parse_instances,
)
from .embedding import (
    EmbeddingConfig,
    EmbeddingTable,
    EntityVectors,
    mutual_relation,
    train_embeddings,
)
from .model import (
    ModelConfig,
    ModelParams,
    TypeCatalog,
    bag_loss,
    forward_bag,
    load_checkpoint,
    pcnn_encode,
    save_checkpoint,
)
from .numerics import ParamStore, finite_diff_check, sgd_step, sigmoid, softmax
from .proximity import AliasSampler, ProximityGraph, build_graph, edge_weight, noise_distribution
from .traineval import (
    FeatureResolver,
    Prediction,
    RelationCatalog,
    TrainConfig,
    auc,
    evaluate_predictions,
    max_f1,
    p_at_n,
    pr_curve,
    predict,
    train,
)

__version__ = "0.1.0"
