"""Corpus handling: JSONL parsing, vocabulary, sentence-level entity
co-occurrence counting, and bag assembly.

Input formats (one JSON object per line, UTF-8):

* labeled corpus: ``{"tokens": [...], "head": {"id", "pos"},
  "tail": {"id", "pos"}, "relation": "..."}`` with relation ``"NA"`` for
  no relation;
* unlabeled corpus: ``{"tokens": [...], "entities": [{"id", "pos"}, ...]}``.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

MAX_SENTENCE_LENGTH = 120

PAD_TOKEN = "<PAD>"
UNK_TOKEN = "<UNK>"
PAD_ID = 0
UNK_ID = 1

NA_RELATION = "NA"


class ParseError(ValueError):
    """A malformed corpus line; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class SentenceInstance:
    """One tokenized sentence mentioning a (head, tail) entity pair."""

    tokens: tuple[str, ...]
    head_entity: str
    tail_entity: str
    head_pos: int
    tail_pos: int
    relation: str | None = None

    def __post_init__(self):
        n = len(self.tokens)
        if not (0 <= self.head_pos < n and 0 <= self.tail_pos < n):
            raise ValueError("entity position outside the sentence")
        if self.head_entity == self.tail_entity:
            raise ValueError("head and tail must be distinct entities")
        if n > MAX_SENTENCE_LENGTH:
            raise ValueError("sentence exceeds the maximum length")


@dataclass(frozen=True)
class Bag:
    """All sentences for one (head, tail) pair plus its label set."""

    head_entity: str
    tail_entity: str
    instances: tuple[SentenceInstance, ...]
    labels: frozenset[str]

    def __post_init__(self):
        if not self.instances:
            raise ValueError("a bag must hold at least one instance")
        for inst in self.instances:
            if (inst.head_entity, inst.tail_entity) != (
                self.head_entity,
                self.tail_entity,
            ):
                raise ValueError("bag instance mentions a different entity pair")

    @property
    def single_label(self) -> str:
        if len(self.labels) != 1:
            raise ValueError("bag does not carry exactly one label")
        return next(iter(self.labels))


@dataclass
class ParsedCorpus:
    """parse_instances result: kept instances plus rejection counters."""

    instances: list[SentenceInstance] = field(default_factory=list)
    truncated: int = 0
    dropped: int = 0
    rejected: int = 0


def canonical_pair(a: str, b: str) -> tuple[str, str]:
    """Order a pair of distinct entity ids lexicographically."""
    if a == b:
        raise ValueError(f"self-pair not allowed: {a!r}")
    return (a, b) if a < b else (b, a)


class CooccurrenceTable:
    """Canonical entity pair -> sentence-level co-occurrence count."""

    def __init__(self):
        self.counts: dict[tuple[str, str], int] = {}
        self.max_count: int = 0
        self.sentences: int = 0
        self.skipped: int = 0

    def increment(self, a: str, b: str, by: int = 1) -> None:
        key = canonical_pair(a, b)
        new = self.counts.get(key, 0) + by
        self.counts[key] = new
        if new > self.max_count:
            self.max_count = new

    def count(self, a: str, b: str) -> int:
        return self.counts.get(canonical_pair(a, b), 0)

    def __len__(self) -> int:
        return len(self.counts)

    def merge(self, other: "CooccurrenceTable") -> None:
        """Sum another table into this one (sharded-count reduction)."""
        for (a, b), c in other.counts.items():
            self.increment(a, b, c)
        self.sentences += other.sentences
        self.skipped += other.skipped


@dataclass(frozen=True)
class Vocabulary:
    """Dense token -> id mapping with PAD=0 and UNK=1 reserved."""

    index: dict[str, int]
    min_count: int

    @property
    def size(self) -> int:
        return len(self.index)

    def id(self, token: str) -> int:
        return self.index.get(token, UNK_ID)

    def ids(self, tokens: Iterable[str]) -> list[int]:
        return [self.index.get(t, UNK_ID) for t in tokens]

    def tokens_in_order(self) -> list[str]:
        return sorted(self.index, key=self.index.__getitem__)


def _require(obj, key, kind, lineno):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(lineno, f"missing field {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise ParseError(lineno, f"field {key!r} has wrong type")
    return value


def _parse_mention(obj, key, lineno) -> tuple[str, int]:
    mention = _require(obj, key, dict, lineno)
    eid = _require(mention, "id", str, lineno)
    pos = _require(mention, "pos", int, lineno)
    return eid, pos


def parse_instances(lines: Iterable[str]) -> ParsedCorpus:
    """Parse a labeled corpus stream into sentence instances.

    Sentences longer than 120 tokens are truncated; instances whose head or
    tail falls beyond the truncation boundary are dropped and counted.
    Records with out-of-range positions or a self-pair are rejected and
    counted.  Malformed lines raise :class:`ParseError`.
    """
    result = ParsedCorpus()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, f"invalid JSON ({exc.msg})") from exc
        tokens = _require(obj, "tokens", list, lineno)
        if not all(isinstance(t, str) for t in tokens):
            raise ParseError(lineno, "tokens must all be strings")
        head_id, head_pos = _parse_mention(obj, "head", lineno)
        tail_id, tail_pos = _parse_mention(obj, "tail", lineno)
        relation = _require(obj, "relation", str, lineno)

        n = len(tokens)
        if not (0 <= head_pos < n and 0 <= tail_pos < n) or head_id == tail_id:
            result.rejected += 1
            continue
        if n > MAX_SENTENCE_LENGTH:
            if head_pos >= MAX_SENTENCE_LENGTH or tail_pos >= MAX_SENTENCE_LENGTH:
                result.dropped += 1
                log.warning(
                    "line %d: entity beyond the %d-token boundary, instance dropped",
                    lineno,
                    MAX_SENTENCE_LENGTH,
                )
                continue
            tokens = tokens[:MAX_SENTENCE_LENGTH]
            result.truncated += 1
        result.instances.append(
            SentenceInstance(
                tokens=tuple(tokens),
                head_entity=head_id,
                tail_entity=tail_id,
                head_pos=head_pos,
                tail_pos=tail_pos,
                relation=relation,
            )
        )
    return result


def _sentence_entity_sets(lines: Iterable[str]) -> Iterator[set[str] | None]:
    """Yield the distinct-entity set per unlabeled sentence, None if unparseable."""
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            entities = obj["entities"]
            ids = {m["id"] for m in entities}
            if not isinstance(obj["tokens"], list):
                raise TypeError
        except (json.JSONDecodeError, KeyError, TypeError):
            yield None
            continue
        yield ids


def count_cooccurrences(lines: Iterable[str]) -> CooccurrenceTable:
    """Stream an unlabeled annotated corpus into a co-occurrence table.

    Each unordered pair of distinct entities in a sentence counts exactly
    once, regardless of how often either entity is mentioned in it.
    """
    table = CooccurrenceTable()
    for ids in _sentence_entity_sets(lines):
        if ids is None:
            table.skipped += 1
            continue
        table.sentences += 1
        ordered = sorted(ids)
        for i in range(len(ordered)):
            for j in range(i + 1, len(ordered)):
                table.increment(ordered[i], ordered[j])
    return table


def count_cooccurrences_sharded(lines: Iterable[str], workers: int) -> CooccurrenceTable:
    """Shard the stream round-robin across workers, then merge by summation.

    The merged result equals the single-pass output exactly.
    """
    if workers <= 1:
        return count_cooccurrences(lines)
    shards: list[list[str]] = [[] for _ in range(workers)]
    for i, line in enumerate(lines):
        shards[i % workers].append(line)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        tables = list(pool.map(count_cooccurrences, shards))
    merged = CooccurrenceTable()
    for t in tables:
        merged.merge(t)
    return merged


def assemble_bags(instances: Iterable[SentenceInstance], mode: str = "train") -> list[Bag]:
    """Group instances into bags.

    ``train`` mode emits one bag per (head, tail, label) triple so every
    training bag carries exactly one label; ``test`` mode emits one bag per
    (head, tail) with the full gold label set attached.
    """
    if mode not in ("train", "test"):
        raise ValueError(f"mode must be 'train' or 'test', got {mode!r}")
    sentences: dict[tuple[str, str], list[SentenceInstance]] = {}
    labels: dict[tuple[str, str], set[str]] = {}
    for inst in instances:
        if inst.relation is None:
            raise ValueError("bag assembly requires labeled instances")
        pair = (inst.head_entity, inst.tail_entity)
        sentences.setdefault(pair, []).append(inst)
        labels.setdefault(pair, set()).add(inst.relation)
    bags = []
    for (head, tail), insts in sentences.items():
        group = tuple(insts)
        if mode == "train":
            # One bag per (pair, label) triple; bags of a multi-label pair
            # share the pair's full sentence set.
            for rel in sorted(labels[(head, tail)]):
                bags.append(
                    Bag(
                        head_entity=head,
                        tail_entity=tail,
                        instances=group,
                        labels=frozenset({rel}),
                    )
                )
        else:
            bags.append(
                Bag(
                    head_entity=head,
                    tail_entity=tail,
                    instances=group,
                    labels=frozenset(labels[(head, tail)]),
                )
            )
    return bags


def build_vocab(instances: Iterable[SentenceInstance], min_count: int = 1) -> Vocabulary:
    """Tokens with frequency >= min_count get dense ids after PAD and UNK;
    ids are ordered by descending frequency, ties broken lexicographically."""
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    freq: Counter[str] = Counter()
    for inst in instances:
        freq.update(inst.tokens)
    index = {PAD_TOKEN: PAD_ID, UNK_TOKEN: UNK_ID}
    kept = sorted(
        (t for t, c in freq.items() if c >= min_count),
        key=lambda t: (-freq[t], t),
    )
    for token in kept:
        index[token] = len(index)
    return Vocabulary(index=index, min_count=min_count)


COOC_HEADER = "#cooc v1"


def save_cooccurrence_table(table: CooccurrenceTable, path) -> None:
    """Write the table as sorted TSV lines ``idA<TAB>idB<TAB>count``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(COOC_HEADER + "\n")
        for (a, b) in sorted(table.counts):
            fh.write(f"{a}\t{b}\t{table.counts[(a, b)]}\n")


def load_cooccurrence_table(path) -> CooccurrenceTable:
    table = CooccurrenceTable()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != COOC_HEADER:
            raise ValueError(f"bad co-occurrence header: {header!r}")
        for line in fh:
            a, b, count = line.rstrip("\n").split("\t")
            table.increment(a, b, int(count))
    return table
