"""Offline synthetic fixture: clustered entities with planted relations.

Entities live in latent clusters; the relation of a pair is a deterministic
function of the (head-cluster, tail-cluster) pair, same-cluster pairs are
NA.  Sentence text carries only the cluster-difference class of the
relation (plus entity surface tokens), with label noise, so infrequent
pairs are hard to classify from text alone while the unlabeled corpus
induces intra-cluster co-occurrence that entity embeddings can exploit.

A fixed fraction of the relation-bearing training pairs is capped at two
sentences and drawn from rarely-mentioned entities; those pairs are the
evaluation subset for the few-shot comparison.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import NA_RELATION

# Coarse type inventory (fixed size expected by the catalog loader).
TYPE_INVENTORY = [
    "person", "location", "organization", "event", "art", "building",
    "product", "food", "language", "religion", "law", "disease",
    "symptom", "medicine", "body_part", "animal", "plant", "chemical",
    "material", "currency", "award", "title", "field_of_study", "sport",
    "game", "vehicle", "weapon", "software", "website", "broadcast",
    "music", "film", "written_work", "play", "time", "color",
    "shape", "unit",
]


@dataclass(frozen=True)
class SyntheticConfig:
    n_entities: int = 200
    n_clusters: int = 4
    seed: int = 0
    unlabeled_sentences: int = 4000
    mentions_per_sentence: tuple[int, int] = (2, 4)
    cross_cluster_prob: float = 0.1
    uncapped_pairs_per_relation: int = 14
    capped_pairs_per_relation: int = 6
    na_pairs_per_cluster: int = 12
    uncapped_sentences: tuple[int, int] = (4, 8)
    capped_sentences: tuple[int, int] = (1, 2)
    na_sentences: tuple[int, int] = (2, 4)
    test_sentences: tuple[int, int] = (2, 3)
    indicator_noise: float = 0.3
    filler_vocab: int = 30
    frequent_fraction: float = 0.4


@dataclass
class SyntheticDataset:
    unlabeled_lines: list[str]
    train_lines: list[str]
    test_lines: list[str]
    type_inventory: list[str]
    type_catalog_lines: list[str]
    relations: list[str]
    cluster_of: dict[str, int]
    capped_pairs: set[tuple[str, str]] = field(default_factory=set)
    train_pairs: list[tuple[str, str, str]] = field(default_factory=list)


def _relation_name(a: int, b: int) -> str:
    return f"rel_{a}{b}"


def _labeled_line(tokens, head, head_pos, tail, tail_pos, relation) -> str:
    return json.dumps(
        {
            "tokens": tokens,
            "head": {"id": head, "pos": head_pos},
            "tail": {"id": tail, "pos": tail_pos},
            "relation": relation,
        },
        sort_keys=True,
    )


def _unlabeled_line(tokens, mentions) -> str:
    return json.dumps(
        {"tokens": tokens, "entities": [{"id": e, "pos": p} for e, p in mentions]},
        sort_keys=True,
    )


class _Generator:
    def __init__(self, config: SyntheticConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        n, k = config.n_entities, config.n_clusters
        self.entities = [f"E{i:03d}" for i in range(n)]
        self.cluster_of = {e: i * k // n for i, e in enumerate(self.entities)}
        self.clusters = [[e for e in self.entities if self.cluster_of[e] == c] for c in range(k)]
        self.frequent = []
        self.rare = []
        for members in self.clusters:
            cut = max(2, int(len(members) * config.frequent_fraction))
            self.frequent.append(members[:cut])
            self.rare.append(members[cut:])
        self.fillers = [f"w{i:02d}" for i in range(config.filler_vocab)]
        # Indicator tokens disambiguate only the cluster-difference class.
        self.diff_classes = list(range(1, k))
        self.indicators = {d: [f"verb{d}a", f"verb{d}b"] for d in self.diff_classes}

    def _rand_int(self, lo: int, hi: int) -> int:
        return int(self.rng.integers(lo, hi + 1))

    def _choice(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def _surface(self, entity: str) -> str:
        return entity.lower()

    def _indicator_for(self, relation: str) -> str:
        k = self.config.n_clusters
        if relation == NA_RELATION:
            d = self._choice(self.diff_classes)
        else:
            a, b = int(relation[4]), int(relation[5])
            d = (b - a) % k
            if self.rng.random() < self.config.indicator_noise:
                others = [x for x in self.diff_classes if x != d]
                if others:
                    d = self._choice(others)
        return self._choice(self.indicators[d])

    def _sentence(self, head: str, tail: str, relation: str):
        first, second = (head, tail) if self.rng.random() < 0.5 else (tail, head)
        tokens: list[str] = []
        positions: dict[str, int] = {}

        def fill(upper):
            tokens.extend(self._choice(self.fillers) for _ in range(self._rand_int(0, upper)))

        fill(1)
        positions[first] = len(tokens)
        tokens.append(self._surface(first))
        fill(2)
        tokens.append(self._indicator_for(relation))
        fill(2)
        positions[second] = len(tokens)
        tokens.append(self._surface(second))
        fill(1)
        return tokens, positions[head], positions[tail]

    def _unlabeled(self):
        config = self.config
        lines = []
        k = config.n_clusters
        for _ in range(config.unlabeled_sentences):
            c = int(self.rng.integers(k))
            count = self._rand_int(*config.mentions_per_sentence)
            mentioned = []
            for _ in range(count):
                if self.rng.random() < config.cross_cluster_prob:
                    pool = self.clusters[int(self.rng.integers(k))]
                else:
                    pool = self.clusters[c]
                mentioned.append(self._choice(pool))
            tokens, mentions = [], []
            for e in mentioned:
                tokens.append(self._choice(self.fillers))
                mentions.append((e, len(tokens)))
                tokens.append(self._surface(e))
            tokens.append(self._choice(self.fillers))
            lines.append(_unlabeled_line(tokens, mentions))
        return lines

    def _sample_pairs(self, head_pool, tail_pool, count, taken):
        pairs = []
        attempts = 0
        while len(pairs) < count and attempts < 50 * count:
            attempts += 1
            h, t = self._choice(head_pool), self._choice(tail_pool)
            if h != t and (h, t) not in taken:
                taken.add((h, t))
                pairs.append((h, t))
        return pairs

    def build(self) -> SyntheticDataset:
        config = self.config
        k = config.n_clusters
        relations = [NA_RELATION] + sorted(
            _relation_name(a, b) for a in range(k) for b in range(k) if a != b
        )
        taken: set[tuple[str, str]] = set()
        train_pairs: list[tuple[str, str, str]] = []
        capped: set[tuple[str, str]] = set()
        for a in range(k):
            for b in range(k):
                if a == b:
                    continue
                rel = _relation_name(a, b)
                for h, t in self._sample_pairs(
                    self.frequent[a], self.frequent[b], config.uncapped_pairs_per_relation, taken
                ):
                    train_pairs.append((h, t, rel))
                for h, t in self._sample_pairs(
                    self.rare[a], self.rare[b], config.capped_pairs_per_relation, taken
                ):
                    train_pairs.append((h, t, rel))
                    capped.add((h, t))
        for c in range(k):
            for h, t in self._sample_pairs(
                self.clusters[c], self.clusters[c], config.na_pairs_per_cluster, taken
            ):
                train_pairs.append((h, t, NA_RELATION))

        train_lines, test_lines = [], []
        for h, t, rel in train_pairs:
            if (h, t) in capped:
                lo, hi = config.capped_sentences
            elif rel == NA_RELATION:
                lo, hi = config.na_sentences
            else:
                lo, hi = config.uncapped_sentences
            for _ in range(self._rand_int(lo, hi)):
                tokens, hp, tp = self._sentence(h, t, rel)
                train_lines.append(_labeled_line(tokens, h, hp, t, tp, rel))
            for _ in range(self._rand_int(*config.test_sentences)):
                tokens, hp, tp = self._sentence(h, t, rel)
                test_lines.append(_labeled_line(tokens, h, hp, t, tp, rel))

        # Types narrow candidates without pinning the cluster pair: one
        # coarse type per half of the cluster range.
        catalog_lines = []
        for e in self.entities:
            group = 0 if self.cluster_of[e] < k / 2 else 1
            catalog_lines.append(f"{e}\t{TYPE_INVENTORY[group]}")

        return SyntheticDataset(
            unlabeled_lines=self._unlabeled(),
            train_lines=train_lines,
            test_lines=test_lines,
            type_inventory=list(TYPE_INVENTORY),
            type_catalog_lines=catalog_lines,
            relations=relations,
            cluster_of=dict(self.cluster_of),
            capped_pairs=capped,
            train_pairs=train_pairs,
        )


def generate(config: SyntheticConfig = SyntheticConfig()) -> SyntheticDataset:
    """Build the synthetic dataset for the given configuration."""
    return _Generator(config).build()


def write_dataset(dataset: SyntheticDataset, outdir) -> dict[str, str]:
    """Write all fixture files under outdir; returns name -> path."""
    import os

    os.makedirs(outdir, exist_ok=True)
    paths = {}

    def write(name, lines):
        path = os.path.join(outdir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in lines:
                fh.write(line + "\n")
        paths[name] = path

    write("unlabeled.jsonl", dataset.unlabeled_lines)
    write("train.jsonl", dataset.train_lines)
    write("test.jsonl", dataset.test_lines)
    write("type_inventory.txt", dataset.type_inventory)
    write("types.tsv", dataset.type_catalog_lines)
    return paths
