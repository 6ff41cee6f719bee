"""Entity embeddings over the proximity graph.

Two objectives are trained separately by edge sampling with negative
sampling: a first-order one that pushes linked entities together directly,
and a second-order one that matches entities sharing neighborhoods through
a separate context table.  The exported vector of an entity concatenates
the L2-normalized halves from the two models; the mutual-relation vector of
a pair is the difference of the two exported vectors.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import log_sigmoid, sigmoid
from .proximity import AliasSampler, ProximityGraph, noise_distribution

Monitor = Callable[[str, int, float], None]


@dataclass(frozen=True)
class EmbeddingConfig:
    """Training knobs for both proximity objectives."""

    d1: int = 64
    d2: int = 64
    negatives: int = 5
    total_samples: int = 1_000_000
    initial_lr: float = 0.025
    noise_power: float = 0.75
    seed: int = 0
    workers: int = 1

    @property
    def export_dim(self) -> int:
        return self.d1 + self.d2

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1 or self.negatives < 1:
            raise ValueError("d1, d2 and negatives must be positive")
        if self.total_samples < 0 or self.initial_lr <= 0:
            raise ValueError("total_samples must be >= 0 and initial_lr > 0")


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return matrix / safe


class EntityVectors:
    """Exported per-entity vectors; the table mutual_relation reads from."""

    def __init__(self, entities: list[str], matrix: np.ndarray):
        if matrix.shape[0] != len(entities):
            raise ValueError("one vector per entity required")
        self.entities = list(entities)
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.index = {e: k for k, e in enumerate(self.entities)}

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def vector(self, entity: str) -> np.ndarray | None:
        k = self.index.get(entity)
        return None if k is None else self.matrix[k]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{ENTEMB_HEADER} {len(self.entities)} {self.dim}\n")
            for k in sorted(range(len(self.entities)), key=self.entities.__getitem__):
                coords = " ".join(f"{x:.9g}" for x in self.matrix[k])
                fh.write(f"{self.entities[k]}\t{coords}\n")

    @classmethod
    def load(cls, path) -> "EntityVectors":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            parts = header.split(" ")
            if len(parts) != 4 or " ".join(parts[:2]) != ENTEMB_HEADER:
                raise ValueError(f"bad embedding header: {header!r}")
            count, dim = int(parts[2]), int(parts[3])
            entities, rows = [], []
            for line in fh:
                entity, coords = line.rstrip("\n").split("\t")
                entities.append(entity)
                rows.append(np.array(coords.split(" "), dtype=np.float64))
        if len(entities) != count:
            raise ValueError(f"expected {count} vectors, found {len(entities)}")
        matrix = np.vstack(rows) if rows else np.zeros((0, dim))
        if matrix.shape[1] != dim:
            raise ValueError("vector width does not match the header")
        return cls(entities, matrix)


ENTEMB_HEADER = "#entemb v1"


@dataclass
class EmbeddingTable:
    """Raw training state: first-order, second-order vertex and context tables."""

    entities: list[str]
    first: np.ndarray
    second_vertex: np.ndarray
    second_context: np.ndarray
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {e: k for k, e in enumerate(self.entities)}

    def export(self) -> EntityVectors:
        matrix = np.hstack(
            [_normalize_rows(self.first), _normalize_rows(self.second_vertex)]
        )
        return EntityVectors(self.entities, matrix)


def first_order_prob(u_i: np.ndarray, u_j: np.ndarray) -> float:
    """Joint probability of a linked pair: sigmoid of the dot product."""
    u_i = np.asarray(u_i, dtype=np.float64)
    u_j = np.asarray(u_j, dtype=np.float64)
    if u_i.shape != u_j.shape:
        raise ValueError(f"dimension mismatch: {u_i.shape} vs {u_j.shape}")
    return float(sigmoid(float(u_i @ u_j)))


def first_order_objective(
    u_i: np.ndarray, u_j: np.ndarray, u_negs: np.ndarray, weight: float
) -> float:
    """Per-sample first-order objective (the quantity each step ascends)."""
    pos = log_sigmoid(float(u_i @ u_j))
    neg = float(np.sum(log_sigmoid(-(u_negs @ u_i)))) if len(u_negs) else 0.0
    return weight * (pos + neg)


def first_order_gradients(u_i, u_j, u_negs, weight):
    """Analytic ascent gradients of first_order_objective wrt (u_i, u_j, u_negs)."""
    s_pos = sigmoid(-float(u_i @ u_j))
    g_i = weight * s_pos * u_j
    g_j = weight * s_pos * u_i
    if len(u_negs):
        s_neg = sigmoid(u_negs @ u_i)
        g_i = g_i - weight * (s_neg[:, None] * u_negs).sum(axis=0)
        g_negs = -weight * s_neg[:, None] * np.broadcast_to(u_i, u_negs.shape)
    else:
        g_negs = np.zeros_like(u_negs)
    return g_i, g_j, g_negs


def first_order_step(
    first: np.ndarray, i: int, j: int, weight: float, negatives: np.ndarray, lr: float
) -> None:
    """One in-place ascent step of the first-order objective on edge (i, j)."""
    g_i, g_j, g_negs = first_order_gradients(
        first[i], first[j], first[negatives], weight
    )
    first[i] += lr * g_i
    first[j] += lr * g_j
    np.add.at(first, negatives, lr * g_negs)


def second_order_term(
    u_i: np.ndarray, ctx_j: np.ndarray, ctx_negs: np.ndarray
) -> float:
    """Negative-sampled second-order objective for one directed edge."""
    pos = log_sigmoid(float(ctx_j @ u_i))
    neg = float(np.sum(log_sigmoid(-(ctx_negs @ u_i)))) if len(ctx_negs) else 0.0
    return pos + neg


def second_order_gradients(u_i, ctx_j, ctx_negs):
    """Analytic ascent gradients of second_order_term wrt (u_i, ctx_j, ctx_negs)."""
    s_pos = sigmoid(-float(ctx_j @ u_i))
    g_i = s_pos * ctx_j
    g_j = s_pos * u_i
    if len(ctx_negs):
        s_neg = sigmoid(ctx_negs @ u_i)
        g_i = g_i - (s_neg[:, None] * ctx_negs).sum(axis=0)
        g_negs = -s_neg[:, None] * np.broadcast_to(u_i, ctx_negs.shape)
    else:
        g_negs = np.zeros_like(ctx_negs)
    return g_i, g_j, g_negs


def second_order_step(
    vertex: np.ndarray,
    context: np.ndarray,
    i: int,
    j: int,
    negatives: np.ndarray,
    lr: float,
) -> None:
    """One in-place ascent step on second_order_term for directed edge i -> j."""
    g_i, g_j, g_negs = second_order_gradients(vertex[i], context[j], context[negatives])
    vertex[i] += lr * g_i
    context[j] += lr * g_j
    np.add.at(context, negatives, lr * g_negs)


def init_tables(graph: ProximityGraph, config: EmbeddingConfig, rng: np.random.Generator):
    """Vertex tables uniform in [-0.5/d, 0.5/d]; context starts at zero."""
    n = graph.n_vertices
    first = rng.uniform(-0.5 / config.d1, 0.5 / config.d1, size=(n, config.d1))
    second = rng.uniform(-0.5 / config.d2, 0.5 / config.d2, size=(n, config.d2))
    context = np.zeros((n, config.d2))
    return first, second, context


class _EdgeStream:
    """Deterministic stream of (source, target, weight, negatives) draws.

    Undirected edges are enumerated in both directions so each directed
    edge is sampled proportionally to its weight.  Negatives colliding with
    either endpoint are redrawn.
    """

    CHUNK = 4096

    def __init__(self, graph: ProximityGraph, config: EmbeddingConfig, seed: int):
        src, dst, w = [], [], []
        for e in graph.edges:
            src.extend((e.i, e.j))
            dst.extend((e.j, e.i))
            w.extend((e.weight, e.weight))
        self.src = np.array(src)
        self.dst = np.array(dst)
        self.weights = np.array(w)
        self.edge_sampler = AliasSampler(self.weights)
        self.noise_sampler = AliasSampler(noise_distribution(graph, config.noise_power))
        self.negatives = config.negatives
        self.rng = np.random.default_rng(seed)
        self._buffer: list = []

    def _refill(self):
        rng = self.rng
        edges = self.edge_sampler.draw_many(rng, self.CHUNK)
        negs = self.noise_sampler.draw_many(
            rng, self.CHUNK * self.negatives
        ).reshape(self.CHUNK, self.negatives)
        for k in range(self.CHUNK - 1, -1, -1):
            e = int(edges[k])
            i, j = int(self.src[e]), int(self.dst[e])
            row = negs[k]
            bad = (row == i) | (row == j)
            while np.any(bad):
                row[bad] = [self.noise_sampler.draw(rng) for _ in range(int(bad.sum()))]
                bad = (row == i) | (row == j)
            self._buffer.append((i, j, float(self.weights[e]), row))

    def next(self):
        if not self._buffer:
            self._refill()
        return self._buffer.pop()


def _lr_at(step: int, total: int, initial_lr: float) -> float:
    if total <= 0:
        return initial_lr
    return initial_lr * max(1e-4, 1.0 - step / total)


def train_embeddings(
    graph: ProximityGraph,
    config: EmbeddingConfig,
    monitor: Monitor | None = None,
) -> EmbeddingTable:
    """Run total_samples edge draws for each objective and return the table.

    Single-worker runs are bit-deterministic for a fixed seed.  With
    workers > 1 the sample budget is split across threads performing
    unsynchronized row updates (last write wins); determinism is not
    guaranteed in that mode.
    """
    if graph.n_vertices == 0:
        raise ValueError("cannot embed an empty graph")
    rng = np.random.default_rng(config.seed)
    first, second, context = init_tables(graph, config, rng)

    def run_phase(phase: str, worker_id: int, samples: int, total: int):
        offset = 0 if phase == "first" else 1
        stream = _EdgeStream(graph, config, seed=config.seed + 7919 * worker_id + offset)
        for t in range(samples):
            i, j, w, negs = stream.next()
            lr = _lr_at(t, samples, config.initial_lr)
            if phase == "first":
                if monitor is not None:
                    monitor(phase, t, first_order_objective(first[i], first[j], first[negs], w))
                first_order_step(first, i, j, w, negs, lr)
            else:
                if monitor is not None:
                    monitor(phase, t, second_order_term(second[i], context[j], context[negs]))
                second_order_step(second, context, i, j, negs, lr)

    workers = max(1, config.workers)
    for phase in ("first", "second"):
        if workers == 1:
            run_phase(phase, 0, config.total_samples, config.total_samples)
        else:
            share = config.total_samples // workers
            counts = [share] * workers
            counts[0] += config.total_samples - share * workers
            threads = [
                threading.Thread(target=run_phase, args=(phase, k, counts[k], counts[k]))
                for k in range(workers)
            ]
            for th in threads:
                th.start()
            for th in threads:
                th.join()

    return EmbeddingTable(
        entities=list(graph.vertices),
        first=first,
        second_vertex=second,
        second_context=context,
    )


def mutual_relation(
    vectors: EntityVectors, e_i: str, e_j: str
) -> tuple[np.ndarray, bool]:
    """U_j - U_i over exported vectors.

    An entity absent from the table contributes a zero vector; the second
    return value flags that out-of-graph case.
    """
    u_i = vectors.vector(e_i)
    u_j = vectors.vector(e_j)
    out_of_graph = u_i is None or u_j is None
    if u_i is None:
        u_i = np.zeros(vectors.dim)
    if u_j is None:
        u_j = np.zeros(vectors.dim)
    return u_j - u_i, out_of_graph
