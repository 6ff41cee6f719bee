"""Weighted entity proximity graph and O(1) discrete samplers.

Edge weights are log-scaled co-occurrence counts normalized so the
strongest retained edge has weight exactly 1.0.  The alias samplers back
the edge-sampling embedding trainer: one over edges by weight, one over
vertices by smoothed weighted degree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import CooccurrenceTable


class EmptyGraphError(ValueError):
    """No edge survives the co-occurrence threshold."""


def edge_weight(co: int, max_co: int) -> float:
    """log(co) / log(max_co), defined for counts of at least 2."""
    if co < 2 or max_co < 2:
        raise ValueError(f"edge_weight needs counts >= 2, got co={co}, max_co={max_co}")
    if co > max_co:
        raise ValueError(f"co={co} exceeds max_co={max_co}")
    return math.log(co) / math.log(max_co)


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    raw_count: int
    weight: float


class ProximityGraph:
    """Undirected weighted graph over entities with dense vertex indices."""

    def __init__(self, vertices: list[str], edges: list[Edge]):
        self.vertices = list(vertices)
        self.index = {v: k for k, v in enumerate(self.vertices)}
        self.edges = list(edges)
        degree = np.zeros(len(self.vertices))
        for e in self.edges:
            degree[e.i] += e.weight
            degree[e.j] += e.weight
        self.weighted_degree = degree

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.edges])


def build_graph(table: CooccurrenceTable, threshold: int = 3) -> ProximityGraph:
    """Keep pairs with count >= threshold; weight by edge_weight with
    max_co taken over the retained edges; exclude isolated vertices."""
    if threshold < 2:
        raise ValueError(f"threshold must be >= 2, got {threshold}")
    retained = [
        (pair, count) for pair, count in sorted(table.counts.items()) if count >= threshold
    ]
    if not retained:
        raise EmptyGraphError(f"no entity pair reaches co-occurrence {threshold}")
    max_co = max(count for _, count in retained)
    vertices = sorted({v for pair, _ in retained for v in pair})
    index = {v: k for k, v in enumerate(vertices)}
    edges = [
        Edge(index[a], index[b], count, edge_weight(count, max_co))
        for (a, b), count in retained
    ]
    return ProximityGraph(vertices, edges)


def noise_distribution(graph: ProximityGraph, power: float = 0.75) -> np.ndarray:
    """Vertex probabilities proportional to weighted_degree ** power."""
    if graph.n_vertices == 0:
        raise ValueError("empty graph")
    raw = graph.weighted_degree**power
    return raw / raw.sum()


class AliasSampler:
    """Walker alias method: O(n) construction, O(1) draws from a discrete
    distribution proportional to the given nonnegative weights."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-D sequence")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        total = w.sum()
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        n = w.size
        self.n = n
        scaled = w * (n / total)
        self.prob = np.ones(n)
        self.alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large.pop()
            self.prob[s] = scaled[s]
            self.alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            if scaled[g] < 1.0:
                small.append(g)
            else:
                large.append(g)
        # Leftovers are 1 up to rounding; they keep prob 1 and self-alias.

    def draw(self, rng: np.random.Generator) -> int:
        slot = int(rng.integers(self.n))
        if rng.random() < self.prob[slot]:
            return slot
        return int(self.alias[slot])

    def draw_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        slots = rng.integers(self.n, size=size)
        accept = rng.random(size) < self.prob[slots]
        return np.where(accept, slots, self.alias[slots])


GRAPH_HEADER_PREFIX = "#proxgraph v1 threshold="


def save_graph(graph: ProximityGraph, threshold: int, path) -> None:
    """TSV export ``idA<TAB>idB<TAB>count<TAB>weight`` sorted by (idA, idB)."""
    rows = []
    for e in graph.edges:
        a, b = graph.vertices[e.i], graph.vertices[e.j]
        if a > b:
            a, b = b, a
        rows.append((a, b, e.raw_count, e.weight))
    rows.sort()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{GRAPH_HEADER_PREFIX}{threshold}\n")
        for a, b, count, weight in rows:
            fh.write(f"{a}\t{b}\t{count}\t{weight!r}\n")


def load_graph(path) -> tuple[ProximityGraph, int]:
    """Load a graph TSV; returns the graph and the threshold it was built with."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(GRAPH_HEADER_PREFIX):
            raise ValueError(f"bad graph header: {header!r}")
        threshold = int(header[len(GRAPH_HEADER_PREFIX):])
        raw = []
        for line in fh:
            a, b, count, weight = line.rstrip("\n").split("\t")
            raw.append((a, b, int(count), float(weight)))
    vertices = sorted({v for row in raw for v in row[:2]})
    index = {v: k for k, v in enumerate(vertices)}
    edges = [Edge(index[a], index[b], count, weight) for a, b, count, weight in raw]
    return ProximityGraph(vertices, edges), threshold
