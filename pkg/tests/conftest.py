"""Shared test fixtures: tiny co-occurrence tables, planted graphs, and a
small synthetic dataset wired through the full pipeline."""

import numpy as np

from mrex.corpus import CooccurrenceTable
from mrex.model import TypeCatalog
from mrex.synthetic import SyntheticConfig, SyntheticDataset, generate


def table_from_counts(counts: dict) -> CooccurrenceTable:
    table = CooccurrenceTable()
    for (a, b), c in counts.items():
        table.increment(a, b, c)
    return table


def planted_partition_table(seed: int = 0, community_size: int = 20):
    """Two dense communities with a handful of weak cross links.

    Returns (table, community_a, community_b).
    """
    rng = np.random.default_rng(seed)
    comm_a = [f"A{i:02d}" for i in range(community_size)]
    comm_b = [f"B{i:02d}" for i in range(community_size)]
    table = CooccurrenceTable()
    for members in (comm_a, comm_b):
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                table.increment(members[i], members[j], int(rng.integers(3, 21)))
    for _ in range(4):
        a = comm_a[int(rng.integers(community_size))]
        b = comm_b[int(rng.integers(community_size))]
        table.increment(a, b, 2)
    return table, comm_a, comm_b


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(u @ v / (nu * nv))


def community_cosine_gap(vectors, comm_a, comm_b) -> float:
    """Mean intra-community cosine minus mean inter-community cosine."""
    intra, inter = [], []
    for group in (comm_a, comm_b):
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                u, v = vectors.vector(group[i]), vectors.vector(group[j])
                if u is not None and v is not None:
                    intra.append(cosine(u, v))
    for a in comm_a:
        for b in comm_b:
            u, v = vectors.vector(a), vectors.vector(b)
            if u is not None and v is not None:
                inter.append(cosine(u, v))
    return float(np.mean(intra) - np.mean(inter))


def mini_synthetic(seed: int = 0) -> SyntheticDataset:
    """A scaled-down synthetic dataset for fast pipeline tests."""
    return generate(
        SyntheticConfig(
            n_entities=48,
            n_clusters=4,
            seed=seed,
            unlabeled_sentences=600,
            uncapped_pairs_per_relation=3,
            capped_pairs_per_relation=1,
            na_pairs_per_cluster=3,
            uncapped_sentences=(2, 4),
            capped_sentences=(1, 2),
            na_sentences=(1, 2),
            test_sentences=(1, 2),
        )
    )


def tiny_two_cluster(seed: int = 0) -> SyntheticDataset:
    """Two clusters, three relations: a fast-converging CLI smoke fixture."""
    return generate(
        SyntheticConfig(
            n_entities=32,
            n_clusters=2,
            seed=seed,
            unlabeled_sentences=500,
            uncapped_pairs_per_relation=10,
            capped_pairs_per_relation=3,
            na_pairs_per_cluster=5,
            uncapped_sentences=(3, 6),
            capped_sentences=(1, 2),
            na_sentences=(2, 3),
            test_sentences=(1, 2),
        )
    )


def catalog_from_dataset(dataset: SyntheticDataset) -> TypeCatalog:
    entity_types = {}
    for line in dataset.type_catalog_lines:
        entity, name = line.split("\t")
        entity_types[entity] = frozenset({dataset.type_inventory.index(name)})
    return TypeCatalog(dataset.type_inventory, entity_types)
