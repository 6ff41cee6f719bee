"""Bag-level relation classifier.

Sentences are embedded with word plus relative-position features, encoded
by a window-3 convolution with piecewise max pooling over the three token
segments delimited by the entity positions, and combined per bag with
selective attention against a relation query.  Three confidence heads
(sentence evidence, mutual-relation vector, entity types) are linearly
fused and renormalized into the final per-relation distribution.

All gradients are computed manually and accumulate into the ParamStore.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Bag, SentenceInstance, Vocabulary
from .numerics import ParamStore, affine, softmax, softmax_backward

WINDOW = 3  # convolution width; zero padding of 1 keeps one column per token
N_TYPES = 38  # coarse entity type inventory size
LOSS_FLOOR = 1e-12


@dataclass(frozen=True)
class ModelConfig:
    """Classifier dimensions; defaults follow the tuned reference setting."""

    n_relations: int
    vocab_size: int
    word_dim: int = 50
    pos_dim: int = 5
    n_filters: int = 230
    type_dim: int = 20
    entity_dim: int = 128
    max_len: int = 120
    n_types: int = N_TYPES

    def __post_init__(self):
        if self.n_relations < 2:
            raise ValueError("need at least two relations (including NA)")
        for name in ("vocab_size", "word_dim", "pos_dim", "n_filters",
                     "type_dim", "entity_dim", "max_len", "n_types"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @property
    def sent_dim(self) -> int:
        return self.word_dim + 2 * self.pos_dim

    @property
    def enc_dim(self) -> int:
        return 3 * self.n_filters

    @property
    def n_pos_buckets(self) -> int:
        return 2 * self.max_len + 1

    def to_dict(self) -> dict:
        return {
            "n_relations": self.n_relations,
            "vocab_size": self.vocab_size,
            "word_dim": self.word_dim,
            "pos_dim": self.pos_dim,
            "n_filters": self.n_filters,
            "type_dim": self.type_dim,
            "entity_dim": self.entity_dim,
            "max_len": self.max_len,
            "n_types": self.n_types,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


PARAM_NAMES = (
    "word_emb",
    "pos_emb_head",
    "pos_emb_tail",
    "conv_filters",
    "conv_bias",
    "type_emb",
    "attn_diag",
    "rel_queries",
    "w_re",
    "b_re",
    "w_mr",
    "b_mr",
    "w_t",
    "b_t",
    "fusion_alpha",
    "fusion_beta",
    "fusion_gamma",
    "fusion_w",
    "fusion_b",
)


class ModelParams:
    """Every trainable tensor of the classifier, backed by a ParamStore."""

    def __init__(self, config: ModelConfig, store: ParamStore):
        self.config = config
        self.store = store
        for name in PARAM_NAMES:
            if name not in store:
                raise ValueError(f"missing parameter {name!r}")

    def __getattr__(self, name: str) -> np.ndarray:
        if name in PARAM_NAMES:
            return self.store.value(name)
        raise AttributeError(name)

    @classmethod
    def init(cls, config: ModelConfig, rng: np.random.Generator) -> "ModelParams":
        def uniform(bound, shape):
            return rng.uniform(-bound, bound, size=shape)

        def glorot(fan_in, fan_out, shape):
            return uniform(math.sqrt(6.0 / (fan_in + fan_out)), shape)

        c = config
        store = ParamStore()
        store.add("word_emb", uniform(0.25, (c.vocab_size, c.word_dim)))
        store.add("pos_emb_head", uniform(0.25, (c.n_pos_buckets, c.pos_dim)))
        store.add("pos_emb_tail", uniform(0.25, (c.n_pos_buckets, c.pos_dim)))
        store.add(
            "conv_filters",
            glorot(WINDOW * c.sent_dim, c.n_filters, (c.n_filters, WINDOW, c.sent_dim)),
        )
        store.add("conv_bias", np.zeros(c.n_filters))
        store.add("type_emb", uniform(0.25, (c.n_types, c.type_dim)))
        store.add("attn_diag", np.ones(c.enc_dim))
        store.add("rel_queries", glorot(c.enc_dim, c.n_relations, (c.n_relations, c.enc_dim)))
        store.add("w_re", glorot(c.enc_dim, c.n_relations, (c.n_relations, c.enc_dim)))
        store.add("b_re", np.zeros(c.n_relations))
        store.add("w_mr", glorot(c.entity_dim, c.n_relations, (c.n_relations, c.entity_dim)))
        store.add("b_mr", np.zeros(c.n_relations))
        store.add("w_t", glorot(2 * c.type_dim, c.n_relations, (c.n_relations, 2 * c.type_dim)))
        store.add("b_t", np.zeros(c.n_relations))
        store.add("fusion_alpha", np.full(1, 1.0 / 3.0))
        store.add("fusion_beta", np.full(1, 1.0 / 3.0))
        store.add("fusion_gamma", np.full(1, 1.0 / 3.0))
        store.add("fusion_w", np.ones(c.n_relations))
        store.add("fusion_b", np.zeros(c.n_relations))
        return cls(config, store)


def load_word_vectors(params: ModelParams, vocab: Vocabulary, path) -> int:
    """Overwrite word-embedding rows from ``token<TAB>v1 v2 ...`` lines.

    Returns the number of vocabulary tokens that received a vector.
    """
    hits = 0
    word_emb = params.word_emb
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            token, coords = line.rstrip("\n").split("\t")
            idx = vocab.index.get(token)
            if idx is None:
                continue
            vec = np.array(coords.split(" "), dtype=np.float64)
            if vec.size != word_emb.shape[1]:
                raise ValueError("pretrained vector width mismatch")
            word_emb[idx] = vec
            hits += 1
    return hits


class TypeCatalog:
    """Entity -> set of coarse type ids drawn from a fixed inventory."""

    def __init__(self, inventory: Sequence[str], entity_types: dict[str, frozenset[int]]):
        self.inventory = list(inventory)
        for types in entity_types.values():
            if any(not 0 <= t < len(self.inventory) for t in types):
                raise ValueError("type id outside the inventory")
        self.entity_types = dict(entity_types)

    def types_for(self, entity: str) -> frozenset[int]:
        return self.entity_types.get(entity, frozenset())

    @classmethod
    def load(cls, inventory_path, catalog_path) -> "TypeCatalog":
        with open(inventory_path, encoding="utf-8") as fh:
            names = [line.rstrip("\n") for line in fh if line.strip()]
        if len(names) != N_TYPES:
            raise ValueError(
                f"type inventory must list exactly {N_TYPES} types, found {len(names)}"
            )
        if len(set(names)) != len(names):
            raise ValueError("duplicate type names in the inventory")
        name_to_id = {name: k for k, name in enumerate(names)}
        entity_types: dict[str, frozenset[int]] = {}
        with open(catalog_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                entity, namelist = line.split("\t")
                ids = set()
                for name in namelist.split(","):
                    if name not in name_to_id:
                        raise ValueError(f"line {lineno}: unknown type name {name!r}")
                    ids.add(name_to_id[name])
                entity_types[entity] = frozenset(ids)
        return cls(names, entity_types)


def relative_position_bucket(i: int, entity_pos: int, max_len: int = 120) -> int:
    """Offset i - entity_pos clamped to [-max_len, max_len], shifted to [0, 2*max_len]."""
    offset = i - entity_pos
    if offset < -max_len:
        offset = -max_len
    elif offset > max_len:
        offset = max_len
    return offset + max_len


def _position_buckets(length: int, entity_pos: int, max_len: int) -> np.ndarray:
    offsets = np.arange(length) - entity_pos
    return np.clip(offsets, -max_len, max_len) + max_len


def embed_sentence(
    instance: SentenceInstance, params: ModelParams, vocab: Vocabulary
) -> np.ndarray:
    """Per-token rows: word embedding plus the two relative-position embeddings."""
    c = params.config
    ids = np.asarray(vocab.ids(instance.tokens))
    bh = _position_buckets(len(ids), instance.head_pos, c.max_len)
    bt = _position_buckets(len(ids), instance.tail_pos, c.max_len)
    return np.hstack(
        [params.word_emb[ids], params.pos_emb_head[bh], params.pos_emb_tail[bt]]
    )


def _im2col(matrix: np.ndarray) -> np.ndarray:
    """(L, D) -> (L, WINDOW*D) windows over the zero-padded sentence."""
    length, dim = matrix.shape
    padded = np.zeros((length + 2, dim))
    padded[1 : length + 1] = matrix
    return np.hstack([padded[0:length], padded[1 : length + 1], padded[2 : length + 2]])


def _segment_bounds(head_pos: int, tail_pos: int, length: int):
    p1, p2 = min(head_pos, tail_pos), max(head_pos, tail_pos)
    return ((0, p1), (p1 + 1, p2), (p2 + 1, length - 1))


def _pcnn_forward(matrix, head_pos, tail_pos, params):
    c = params.config
    windows = _im2col(matrix)
    w_flat = params.conv_filters.reshape(c.n_filters, WINDOW * c.sent_dim)
    fmap = windows @ w_flat.T + params.conv_bias  # (L, k)
    pooled = np.zeros((3, c.n_filters))
    argmax = np.full((3, c.n_filters), -1, dtype=np.int64)
    for seg, (lo, hi) in enumerate(_segment_bounds(head_pos, tail_pos, matrix.shape[0])):
        if lo <= hi:
            block = fmap[lo : hi + 1]
            idx = block.argmax(axis=0)
            pooled[seg] = block[idx, np.arange(c.n_filters)]
            argmax[seg] = lo + idx
    encoding = np.tanh(pooled.reshape(-1))
    return encoding, {"windows": windows, "argmax": argmax}


def pcnn_encode(
    matrix: np.ndarray, head_pos: int, tail_pos: int, params: ModelParams
) -> np.ndarray:
    """Encode one sentence matrix into the 3k piecewise-pooled tanh vector.

    Segment boundaries: entity columns close the first and second segments;
    an empty segment pools to 0 before the tanh.
    """
    encoding, _ = _pcnn_forward(matrix, head_pos, tail_pos, params)
    return encoding


def attention_alpha(
    encodings: np.ndarray, query: np.ndarray, diag: np.ndarray
) -> np.ndarray:
    """Softmax of the diagonal bilinear scores between encodings and the query."""
    encodings = np.atleast_2d(np.asarray(encodings, dtype=np.float64))
    if encodings.shape[0] == 0:
        raise ValueError("attention over an empty bag")
    scores = encodings @ (np.asarray(diag) * np.asarray(query))
    return softmax(scores)


def bag_repr(encodings: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Attention-weighted sum of the sentence encodings."""
    return np.asarray(alpha) @ np.atleast_2d(np.asarray(encodings))


def type_feature(
    head_types: frozenset[int] | set[int],
    tail_types: frozenset[int] | set[int],
    type_emb: np.ndarray,
) -> np.ndarray:
    """Concatenate the mean type embedding of each entity (zero if typeless)."""
    k_t = type_emb.shape[1]
    out = np.zeros(2 * k_t)
    if head_types:
        out[:k_t] = type_emb[sorted(head_types)].mean(axis=0)
    if tail_types:
        out[k_t:] = type_emb[sorted(tail_types)].mean(axis=0)
    return out


def heads(
    x_bag: np.ndarray, mr: np.ndarray, t: np.ndarray, params: ModelParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three softmax confidence heads: (RE, C_MR, C_T)."""
    re = softmax(affine(params.w_re, x_bag, params.b_re))
    c_mr = softmax(affine(params.w_mr, mr, params.b_mr))
    c_t = softmax(affine(params.w_t, t, params.b_t))
    return re, c_mr, c_t


def fuse(
    c_mr: np.ndarray, c_t: np.ndarray, re: np.ndarray, params: ModelParams
) -> np.ndarray:
    """Linear blend of the three heads, rescaled per relation and renormalized."""
    s = (
        params.fusion_alpha[0] * c_mr
        + params.fusion_beta[0] * c_t
        + params.fusion_gamma[0] * re
    )
    return softmax(params.fusion_w * s + params.fusion_b)


@dataclass
class BagForwardTrace:
    """Everything the backward pass needs from one training-mode forward."""

    encodings: np.ndarray  # (n_sentences, 3k)
    alpha: np.ndarray
    x_bag: np.ndarray
    re: np.ndarray
    c_mr: np.ndarray
    c_t: np.ndarray
    p: np.ndarray
    s: np.ndarray  # fused pre-softmax blend
    mr: np.ndarray
    t_vec: np.ndarray
    head_types: frozenset[int]
    tail_types: frozenset[int]
    query_index: int
    x_drop: np.ndarray = None
    drop_mask: np.ndarray | None = None
    keep_prob: float = 1.0
    sentence_caches: list = field(default_factory=list)
    token_ids: list = field(default_factory=list)
    head_buckets: list = field(default_factory=list)
    tail_buckets: list = field(default_factory=list)


def _encode_bag(bag: Bag, params: ModelParams, vocab: Vocabulary, keep_caches: bool):
    c = params.config
    encodings = np.zeros((len(bag.instances), c.enc_dim))
    caches, ids_list, bh_list, bt_list = [], [], [], []
    for k, inst in enumerate(bag.instances):
        ids = np.asarray(vocab.ids(inst.tokens))
        bh = _position_buckets(len(ids), inst.head_pos, c.max_len)
        bt = _position_buckets(len(ids), inst.tail_pos, c.max_len)
        matrix = np.hstack(
            [params.word_emb[ids], params.pos_emb_head[bh], params.pos_emb_tail[bt]]
        )
        encodings[k], cache = _pcnn_forward(matrix, inst.head_pos, inst.tail_pos, params)
        if keep_caches:
            caches.append(cache)
            ids_list.append(ids)
            bh_list.append(bh)
            bt_list.append(bt)
    return encodings, caches, ids_list, bh_list, bt_list


def forward_bag(
    bag: Bag,
    mr: np.ndarray,
    types: tuple[frozenset[int], frozenset[int]],
    params: ModelParams,
    vocab: Vocabulary,
    mode: str = "train",
    gold_index: int | None = None,
    dropout_p: float = 0.0,
    rng: np.random.Generator | None = None,
    uniform_attention: bool = False,
    return_alphas: bool = False,
):
    """Run the full stack over one bag.

    Training mode attends with the gold label's query, applies dropout to
    the bag vector, and returns a BagForwardTrace.  Inference mode scores
    every relation under its own attention query and returns the vector of
    per-relation confidences P_r(r); dropout is off and the pass is
    deterministic.
    """
    if not bag.instances:
        raise ValueError("bag is empty")
    c = params.config
    head_types, tail_types = types
    mr = np.asarray(mr, dtype=np.float64)
    if mr.shape != (c.entity_dim,):
        raise ValueError(f"MR vector must have dim {c.entity_dim}")
    t_vec = type_feature(head_types, tail_types, params.type_emb)

    if mode == "train":
        if gold_index is None or not 0 <= gold_index < c.n_relations:
            raise ValueError("training mode needs a valid gold relation index")
        encodings, caches, ids_list, bh_list, bt_list = _encode_bag(
            bag, params, vocab, keep_caches=True
        )
        alpha = attention_alpha(
            encodings, params.rel_queries[gold_index], params.attn_diag
        )
        x_bag = bag_repr(encodings, alpha)
        drop_mask = None
        keep_prob = 1.0
        x_drop = x_bag
        if dropout_p > 0.0:
            if not dropout_p < 1.0:
                raise ValueError("dropout_p must be < 1")
            if rng is None:
                raise ValueError("dropout needs an rng")
            keep_prob = 1.0 - dropout_p
            drop_mask = (rng.random(c.enc_dim) < keep_prob).astype(np.float64)
            x_drop = x_bag * drop_mask / keep_prob
        re, c_mr, c_t = heads(x_drop, mr, t_vec, params)
        s = (
            params.fusion_alpha[0] * c_mr
            + params.fusion_beta[0] * c_t
            + params.fusion_gamma[0] * re
        )
        p = softmax(params.fusion_w * s + params.fusion_b)
        return BagForwardTrace(
            encodings=encodings,
            alpha=alpha,
            x_bag=x_bag,
            re=re,
            c_mr=c_mr,
            c_t=c_t,
            p=p,
            s=s,
            mr=mr,
            t_vec=t_vec,
            head_types=frozenset(head_types),
            tail_types=frozenset(tail_types),
            query_index=gold_index,
            x_drop=x_drop,
            drop_mask=drop_mask,
            keep_prob=keep_prob,
            sentence_caches=caches,
            token_ids=ids_list,
            head_buckets=bh_list,
            tail_buckets=bt_list,
        )

    if mode != "infer":
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    encodings, _, _, _, _ = _encode_bag(bag, params, vocab, keep_caches=False)
    n = encodings.shape[0]
    m = c.n_relations
    confidences = np.zeros(m)
    alphas = []
    _, c_mr, c_t = heads(np.zeros(c.enc_dim), mr, t_vec, params)
    for r in range(m):
        if uniform_attention:
            alpha = np.full(n, 1.0 / n)
        else:
            alpha = attention_alpha(encodings, params.rel_queries[r], params.attn_diag)
        x_bag = bag_repr(encodings, alpha)
        re = softmax(affine(params.w_re, x_bag, params.b_re))
        p = fuse(c_mr, c_t, re, params)
        confidences[r] = p[r]
        if return_alphas:
            alphas.append(alpha)
    if return_alphas:
        return confidences, alphas
    return confidences


def bag_loss(trace: BagForwardTrace, gold_index: int) -> float:
    """Cross-entropy of the fused distribution, floored at 1e-12."""
    if not 0 <= gold_index < trace.p.shape[0]:
        raise ValueError(f"unknown relation index {gold_index}")
    return -math.log(max(float(trace.p[gold_index]), LOSS_FLOOR))


def accumulate_bag_gradients(
    trace: BagForwardTrace,
    gold_index: int,
    params: ModelParams,
    scale: float = 1.0,
) -> None:
    """Backpropagate bag_loss through the trace, adding into the grads."""
    c = params.config
    store = params.store
    if trace.p[gold_index] <= LOSS_FLOOR:
        return  # loss clamped at the floor: locally flat
    g_z = trace.p.copy()
    g_z[gold_index] -= 1.0
    g_z *= scale

    store.grad("fusion_w")[...] += g_z * trace.s
    store.grad("fusion_b")[...] += g_z
    g_s = g_z * params.fusion_w
    store.grad("fusion_alpha")[0] += float(g_s @ trace.c_mr)
    store.grad("fusion_beta")[0] += float(g_s @ trace.c_t)
    store.grad("fusion_gamma")[0] += float(g_s @ trace.re)

    # Mutual-relation head
    g_ymr = softmax_backward(trace.c_mr, params.fusion_alpha[0] * g_s)
    store.grad("w_mr")[...] += np.outer(g_ymr, trace.mr)
    store.grad("b_mr")[...] += g_ymr

    # Type head, routing into the shared type embeddings
    g_yt = softmax_backward(trace.c_t, params.fusion_beta[0] * g_s)
    store.grad("w_t")[...] += np.outer(g_yt, trace.t_vec)
    store.grad("b_t")[...] += g_yt
    g_tvec = params.w_t.T @ g_yt
    k_t = c.type_dim
    type_grad = store.grad("type_emb")
    if trace.head_types:
        share = g_tvec[:k_t] / len(trace.head_types)
        for tid in trace.head_types:
            type_grad[tid] += share
    if trace.tail_types:
        share = g_tvec[k_t:] / len(trace.tail_types)
        for tid in trace.tail_types:
            type_grad[tid] += share

    # Sentence head and the attention stack
    g_yre = softmax_backward(trace.re, params.fusion_gamma[0] * g_s)
    store.grad("w_re")[...] += np.outer(g_yre, trace.x_drop)
    store.grad("b_re")[...] += g_yre
    g_xdrop = params.w_re.T @ g_yre
    if trace.drop_mask is not None:
        g_xbag = g_xdrop * trace.drop_mask / trace.keep_prob
    else:
        g_xbag = g_xdrop

    g_alpha = trace.encodings @ g_xbag
    g_x = np.outer(trace.alpha, g_xbag)
    g_q = softmax_backward(trace.alpha, g_alpha)
    r_vec = params.rel_queries[trace.query_index]
    proj = g_q @ trace.encodings
    store.grad("attn_diag")[...] += proj * r_vec
    store.grad("rel_queries")[trace.query_index] += proj * params.attn_diag
    g_x += np.outer(g_q, params.attn_diag * r_vec)

    w_flat = params.conv_filters.reshape(c.n_filters, WINDOW * c.sent_dim)
    conv_w_grad = store.grad("conv_filters").reshape(c.n_filters, WINDOW * c.sent_dim)
    conv_b_grad = store.grad("conv_bias")
    word_grad = store.grad("word_emb")
    pos_head_grad = store.grad("pos_emb_head")
    pos_tail_grad = store.grad("pos_emb_tail")
    filter_range = np.arange(c.n_filters)
    for k in range(trace.encodings.shape[0]):
        enc = trace.encodings[k]
        cache = trace.sentence_caches[k]
        windows = cache["windows"]
        argmax = cache["argmax"]
        length = windows.shape[0]
        g_pool = (g_x[k] * (1.0 - enc * enc)).reshape(3, c.n_filters)
        g_fmap = np.zeros((length, c.n_filters))
        for seg in range(3):
            valid = argmax[seg] >= 0
            if np.any(valid):
                g_fmap[argmax[seg][valid], filter_range[valid]] += g_pool[seg][valid]
        conv_w_grad += g_fmap.T @ windows
        conv_b_grad += g_fmap.sum(axis=0)
        g_windows = g_fmap @ w_flat
        dim = c.sent_dim
        g_padded = np.zeros((length + 2, dim))
        for w in range(WINDOW):
            g_padded[w : w + length] += g_windows[:, w * dim : (w + 1) * dim]
        g_matrix = g_padded[1 : length + 1]
        np.add.at(word_grad, trace.token_ids[k], g_matrix[:, : c.word_dim])
        np.add.at(
            pos_head_grad,
            trace.head_buckets[k],
            g_matrix[:, c.word_dim : c.word_dim + c.pos_dim],
        )
        np.add.at(pos_tail_grad, trace.tail_buckets[k], g_matrix[:, c.word_dim + c.pos_dim :])


CHECKPOINT_HEADER = b"#remodel v1"


def save_checkpoint(
    path,
    config: ModelConfig,
    vocab: Vocabulary,
    relations: Sequence[str],
    params: ModelParams,
) -> None:
    """Single-file checkpoint: header line, JSON metadata line, raw tensors.

    Tensor bytes are little-endian float64 in the fixed PARAM_NAMES order,
    so a round trip restores every value bit-exactly.
    """
    meta = {
        "config": config.to_dict(),
        "vocab": {"tokens": vocab.tokens_in_order(), "min_count": vocab.min_count},
        "relations": list(relations),
        "tensors": [
            {"name": name, "shape": list(params.store.value(name).shape)}
            for name in PARAM_NAMES
        ],
    }
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_HEADER + b"\n")
        fh.write(json.dumps(meta, sort_keys=True).encode("utf-8") + b"\n")
        for name in PARAM_NAMES:
            fh.write(params.store.value(name).astype("<f8").tobytes(order="C"))


def load_checkpoint(path) -> tuple[ModelConfig, Vocabulary, list[str], ModelParams]:
    with open(path, "rb") as fh:
        header = fh.readline().rstrip(b"\n")
        if header != CHECKPOINT_HEADER:
            raise ValueError(f"bad checkpoint header: {header!r}")
        meta = json.loads(fh.readline().decode("utf-8"))
        config = ModelConfig.from_dict(meta["config"])
        tokens = meta["vocab"]["tokens"]
        vocab = Vocabulary(
            index={t: k for k, t in enumerate(tokens)},
            min_count=meta["vocab"]["min_count"],
        )
        store = ParamStore()
        for spec in meta["tensors"]:
            shape = tuple(spec["shape"])
            n_bytes = int(np.prod(shape)) * 8
            raw = fh.read(n_bytes)
            if len(raw) != n_bytes:
                raise ValueError("checkpoint truncated")
            store.add(spec["name"], np.frombuffer(raw, dtype="<f8").reshape(shape).copy())
    return config, vocab, list(meta["relations"]), ModelParams(config, store)
