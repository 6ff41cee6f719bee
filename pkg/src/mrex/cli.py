"""Batch pipeline driver: cooc -> graph -> embed -> train -> eval, plus
ad-hoc prediction.

Every stage reads a key=value config file with dotted sections, writes its
versioned artifact plus a JSON manifest (config echo, seed, input digests),
and is byte-identical across reruns with unchanged inputs and seed.

Exit codes: 0 ok, 2 missing input, 3 artifact-version error, 4 shape or
config mismatch, 1 anything else.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .corpus import (
    NA_RELATION,
    Bag,
    build_vocab,
    count_cooccurrences_sharded,
    load_cooccurrence_table,
    parse_instances,
    save_cooccurrence_table,
    assemble_bags,
)
from .embedding import EmbeddingConfig, EntityVectors, train_embeddings
from .model import (
    ModelConfig,
    ModelParams,
    TypeCatalog,
    forward_bag,
    fuse,
    heads,
    load_checkpoint,
    save_checkpoint,
    type_feature,
)
from .proximity import build_graph, load_graph, save_graph
from .traineval import (
    FeatureResolver,
    RelationCatalog,
    TrainConfig,
    evaluate_predictions,
    gold_facts_from_bags,
    pr_curve,
    predict,
    train,
)

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_MISSING_INPUT = 2
EXIT_VERSION = 3
EXIT_SHAPE = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


DEFAULTS = {
    "vocab.min_count": "1",
    "graph.threshold": "3",
    "embedding.d1": "64",
    "embedding.d2": "64",
    "embedding.negatives": "5",
    "embedding.total_samples": "100000",
    "embedding.lr": "0.025",
    "embedding.noise_power": "0.75",
    "embedding.seed": "0",
    "embedding.workers": "1",
    "model.word_dim": "50",
    "model.pos_dim": "5",
    "model.filters": "230",
    "model.type_dim": "20",
    "model.max_len": "120",
    "train.epochs": "5",
    "train.batch_size": "160",
    "train.lr": "0.3",
    "train.dropout": "0.5",
    "train.seeds": "1",
    "eval.p_at": "100,200",
    "eval.uniform_attention": "false",
}


class PipelineConfig:
    """Flat dotted-key configuration with defaults and flag overrides."""

    def __init__(self, values: dict[str, str]):
        self.values = dict(DEFAULTS)
        self.values.update(values)

    @classmethod
    def read(cls, path) -> "PipelineConfig":
        if not os.path.exists(path):
            raise CliError(EXIT_MISSING_INPUT, f"config file not found: {path}")
        values = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise CliError(EXIT_OTHER, f"config line {lineno}: expected key = value")
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
        return cls(values)

    def get(self, key: str) -> str:
        if key not in self.values:
            raise CliError(EXIT_OTHER, f"missing config key: {key}")
        return self.values[key]

    def get_int(self, key: str) -> int:
        return int(self.get(key))

    def get_float(self, key: str) -> float:
        return float(self.get(key))

    def get_bool(self, key: str) -> bool:
        return self.get(key).lower() in ("1", "true", "yes")

    def get_int_list(self, key: str) -> list[int]:
        return [int(x) for x in self.get(key).split(",") if x.strip()]

    def path(self, key: str) -> str:
        p = self.get(key)
        if not os.path.exists(p):
            raise CliError(EXIT_MISSING_INPUT, f"{key}: file not found: {p}")
        return p

    def echo(self) -> dict[str, str]:
        return dict(sorted(self.values.items()))


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(outdir, stage, config, inputs, outputs, extra=None):
    manifest = {
        "stage": stage,
        "config": config.echo(),
        "inputs": {os.path.basename(p): _sha256(p) for p in inputs},
        "outputs": sorted(os.path.basename(p) for p in outputs),
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(outdir, f"manifest_{stage}.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def _check_header(path, expected_prefix: str) -> None:
    with open(path, "rb") as fh:
        first = fh.readline().decode("utf-8", errors="replace").rstrip("\n")
    if not first.startswith(expected_prefix):
        raise CliError(
            EXIT_VERSION,
            f"{path}: expected header starting with {expected_prefix!r}, found {first!r}",
        )


def _outdir(config: PipelineConfig, args) -> str:
    out = args.out or config.values.get("paths.out")
    if not out:
        raise CliError(EXIT_OTHER, "no output directory (set paths.out or --out)")
    os.makedirs(out, exist_ok=True)
    config.values["paths.out"] = out
    return out


def _read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.readlines()


def cmd_cooc(config: PipelineConfig, args) -> int:
    outdir = _outdir(config, args)
    unlabeled = config.path("paths.unlabeled")
    workers = args.workers or 1
    table = count_cooccurrences_sharded(_read_lines(unlabeled), workers)
    out_path = os.path.join(outdir, "cooc.tsv")
    save_cooccurrence_table(table, out_path)
    if len(table) == 0:
        print("warning: no entity pair co-occurred", file=sys.stderr)
    _write_manifest(outdir, "cooc", config, [unlabeled], [out_path],
                    extra={"workers": workers})
    print(f"sentences={table.sentences} pairs={len(table)} max_count={table.max_count} "
          f"skipped={table.skipped}")
    return EXIT_OK


def cmd_graph(config: PipelineConfig, args) -> int:
    outdir = _outdir(config, args)
    cooc_path = os.path.join(outdir, "cooc.tsv")
    if not os.path.exists(cooc_path):
        raise CliError(EXIT_MISSING_INPUT, f"co-occurrence table not found: {cooc_path}")
    _check_header(cooc_path, "#cooc v1")
    threshold = config.get_int("graph.threshold")
    table = load_cooccurrence_table(cooc_path)
    graph = build_graph(table, threshold=threshold)
    out_path = os.path.join(outdir, "graph.tsv")
    save_graph(graph, threshold, out_path)
    _write_manifest(outdir, "graph", config, [cooc_path], [out_path])
    print(f"vertices={graph.n_vertices} edges={graph.n_edges} threshold={threshold}")
    return EXIT_OK


def cmd_embed(config: PipelineConfig, args) -> int:
    outdir = _outdir(config, args)
    graph_path = os.path.join(outdir, "graph.tsv")
    if not os.path.exists(graph_path):
        raise CliError(EXIT_MISSING_INPUT, f"graph not found: {graph_path}")
    _check_header(graph_path, "#proxgraph v1")
    graph, _ = load_graph(graph_path)
    emb_config = EmbeddingConfig(
        d1=config.get_int("embedding.d1"),
        d2=config.get_int("embedding.d2"),
        negatives=config.get_int("embedding.negatives"),
        total_samples=config.get_int("embedding.total_samples"),
        initial_lr=config.get_float("embedding.lr"),
        noise_power=config.get_float("embedding.noise_power"),
        seed=args.seed if args.seed is not None else config.get_int("embedding.seed"),
        workers=args.workers or config.get_int("embedding.workers"),
    )
    vectors = train_embeddings(graph, emb_config).export()
    out_path = os.path.join(outdir, "entemb.txt")
    vectors.save(out_path)
    _write_manifest(outdir, "embed", config, [graph_path], [out_path],
                    extra={"seed": emb_config.seed, "workers": emb_config.workers})
    print(f"entities={len(vectors.entities)} dim={vectors.dim} seed={emb_config.seed}")
    return EXIT_OK


def _load_features(config: PipelineConfig, outdir, entity_dim):
    emb_path = os.path.join(outdir, "entemb.txt")
    if not os.path.exists(emb_path):
        raise CliError(EXIT_MISSING_INPUT, f"entity embeddings not found: {emb_path}")
    _check_header(emb_path, "#entemb v1")
    vectors = EntityVectors.load(emb_path)
    if vectors.dim != entity_dim:
        raise CliError(
            EXIT_SHAPE,
            f"embedding dim {vectors.dim} does not match configured {entity_dim}",
        )
    types = TypeCatalog.load(config.path("paths.type_inventory"), config.path("paths.types"))
    return vectors, types, emb_path


def _model_config(config: PipelineConfig, n_relations, vocab_size) -> ModelConfig:
    return ModelConfig(
        n_relations=n_relations,
        vocab_size=vocab_size,
        word_dim=config.get_int("model.word_dim"),
        pos_dim=config.get_int("model.pos_dim"),
        n_filters=config.get_int("model.filters"),
        type_dim=config.get_int("model.type_dim"),
        entity_dim=config.get_int("embedding.d1") + config.get_int("embedding.d2"),
        max_len=config.get_int("model.max_len"),
    )


def _seeds(config: PipelineConfig, args) -> list[int]:
    if args.seed is not None:
        return [args.seed]
    return config.get_int_list("train.seeds")


def cmd_train(config: PipelineConfig, args) -> int:
    outdir = _outdir(config, args)
    train_path = config.path("paths.train")
    parsed = parse_instances(_read_lines(train_path))
    if parsed.dropped or parsed.rejected:
        print(f"warning: dropped={parsed.dropped} rejected={parsed.rejected}", file=sys.stderr)
    bags = assemble_bags(parsed.instances, mode="train")
    vocab = build_vocab(parsed.instances, min_count=config.get_int("vocab.min_count"))
    relations = RelationCatalog.from_bags(bags)
    entity_dim = config.get_int("embedding.d1") + config.get_int("embedding.d2")
    vectors, types, emb_path = _load_features(config, outdir, entity_dim)
    model_config = _model_config(config, relations.size, vocab.size)

    outputs, histories = [], {}
    for seed in _seeds(config, args):
        params = ModelParams.init(model_config, np.random.default_rng(seed))
        resolver = FeatureResolver(vectors=vectors, types=types, entity_dim=entity_dim)
        tc = TrainConfig(
            epochs=config.get_int("train.epochs"),
            batch_size=config.get_int("train.batch_size"),
            lr=config.get_float("train.lr"),
            dropout=config.get_float("train.dropout"),
            seed=seed,
        )
        _, history = train(bags, resolver, params, relations, vocab, tc)
        ckpt = os.path.join(outdir, f"model_seed{seed}.ckpt")
        save_checkpoint(ckpt, model_config, vocab, relations.labels, params)
        outputs.append(ckpt)
        histories[str(seed)] = history
        print(f"seed={seed} bags={len(bags)} final_loss={history[-1] if history else None}")
    _write_manifest(
        outdir, "train", config,
        [train_path, emb_path, config.path("paths.type_inventory"), config.path("paths.types")],
        outputs,
        extra={"seeds": _seeds(config, args), "loss_history": histories},
    )
    return EXIT_OK


def _load_checkpoint_checked(config: PipelineConfig, path) -> tuple:
    if not os.path.exists(path):
        raise CliError(EXIT_MISSING_INPUT, f"checkpoint not found: {path}")
    _check_header(path, "#remodel v1")
    model_config, vocab, labels, params = load_checkpoint(path)
    expected = {
        "word_dim": config.get_int("model.word_dim"),
        "pos_dim": config.get_int("model.pos_dim"),
        "n_filters": config.get_int("model.filters"),
        "type_dim": config.get_int("model.type_dim"),
        "max_len": config.get_int("model.max_len"),
        "entity_dim": config.get_int("embedding.d1") + config.get_int("embedding.d2"),
    }
    for field_name, value in expected.items():
        found = getattr(model_config, field_name)
        if found != value:
            raise CliError(
                EXIT_SHAPE,
                f"checkpoint {field_name}={found} does not match config {value}",
            )
    return model_config, vocab, labels, params


def cmd_eval(config: PipelineConfig, args) -> int:
    outdir = _outdir(config, args)
    test_path = config.path("paths.test")
    parsed = parse_instances(_read_lines(test_path))
    test_bags = assemble_bags(parsed.instances, mode="test")
    gold = gold_facts_from_bags(test_bags)
    p_at = tuple(config.get_int_list("eval.p_at"))
    uniform = config.get_bool("eval.uniform_attention")

    seeds = _seeds(config, args)
    inputs = [test_path]
    outputs = []
    per_seed = {}
    for seed in seeds:
        ckpt_path = os.path.join(outdir, f"model_seed{seed}.ckpt")
        model_config, vocab, labels, params = _load_checkpoint_checked(config, ckpt_path)
        relations = RelationCatalog(labels=tuple(labels))
        vectors, types, emb_path = _load_features(config, outdir, model_config.entity_dim)
        resolver = FeatureResolver(vectors=vectors, types=types, entity_dim=model_config.entity_dim)
        predictions = predict(test_bags, params, relations, vocab, resolver,
                              uniform_attention=uniform)
        per_seed[str(seed)] = evaluate_predictions(predictions, gold, p_at=p_at)
        inputs.append(ckpt_path)
        curve_path = os.path.join(outdir, f"pr_curve_seed{seed}.csv")
        with open(curve_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("rank,precision,recall\n")
            for rank, pt in enumerate(pr_curve(predictions, gold), start=1):
                fh.write(f"{rank},{pt.precision!r},{pt.recall!r}\n")
        outputs.append(curve_path)

    def mean_of(key):
        return float(np.mean([per_seed[str(s)][key] for s in seeds]))

    metrics = {
        "auc": mean_of("auc"),
        "precision": mean_of("precision"),
        "recall": mean_of("recall"),
        "f1": mean_of("f1"),
        "p_at": {
            str(n): float(np.mean([per_seed[str(s)]["p_at"][str(n)] for s in seeds]))
            for n in p_at
        },
        "seeds": seeds,
        "per_seed": per_seed,
    }
    metrics_path = os.path.join(outdir, "metrics.json")
    with open(metrics_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(metrics, sort_keys=True, indent=2) + "\n")
    outputs.append(metrics_path)
    _write_manifest(outdir, "eval", config, inputs, outputs, extra={"seeds": seeds})
    print(json.dumps({k: metrics[k] for k in ("auc", "precision", "recall", "f1")}, sort_keys=True))
    return EXIT_OK


def cmd_predict(config: PipelineConfig, args) -> int:
    outdir = _outdir(config, args)
    if not args.pairs:
        raise CliError(EXIT_OTHER, "predict needs --pairs FILE")
    if not os.path.exists(args.pairs):
        raise CliError(EXIT_MISSING_INPUT, f"pairs file not found: {args.pairs}")
    seeds = _seeds(config, args)
    ckpt_path = os.path.join(outdir, f"model_seed{seeds[0]}.ckpt")
    model_config, vocab, labels, params = _load_checkpoint_checked(config, ckpt_path)
    relations = RelationCatalog(labels=tuple(labels))
    vectors, types, emb_path = _load_features(config, outdir, model_config.entity_dim)
    resolver = FeatureResolver(vectors=vectors, types=types, entity_dim=model_config.entity_dim)

    sentences_by_pair: dict[tuple[str, str], list] = {}
    sentences_path = args.sentences or config.values.get("predict.sentences")
    if sentences_path:
        if not os.path.exists(sentences_path):
            raise CliError(EXIT_MISSING_INPUT, f"sentences file not found: {sentences_path}")
        parsed = parse_instances(_read_lines(sentences_path))
        for inst in parsed.instances:
            sentences_by_pair.setdefault((inst.head_entity, inst.tail_entity), []).append(inst)

    pairs = []
    with open(args.pairs, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            head, tail = line.split("\t")
            pairs.append((head, tail))

    out_path = os.path.join(outdir, "predictions.tsv")
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("#predictions v1\n")
        for head, tail in pairs:
            mr = resolver.mr(head, tail)
            tsets = resolver.type_sets(head, tail)
            instances = sentences_by_pair.get((head, tail), [])
            if instances:
                bag = Bag(head, tail, tuple(instances), frozenset({NA_RELATION}))
                conf = forward_bag(bag, mr, tsets, params, vocab, mode="infer")
                flag = "ok"
            elif np.any(mr != 0.0) or tsets[0] or tsets[1]:
                # No sentences: score from the MR and type heads alone with a
                # zero bag vector.
                t_vec = type_feature(tsets[0], tsets[1], params.type_emb)
                re, c_mr, c_t = heads(np.zeros(model_config.enc_dim), mr, t_vec, params)
                conf = fuse(c_mr, c_t, re, params)
                flag = "no-sentences"
            else:
                conf = np.full(relations.size, 1.0 / relations.size)
                flag = "no-evidence"
            ranked = sorted(
                ((relations.labels[r], float(conf[r])) for r in range(1, relations.size)),
                key=lambda item: (-item[1], item[0]),
            )
            for rel, c in ranked:
                fh.write(f"{head}\t{tail}\t{rel}\t{c!r}\t{flag}\n")
    _write_manifest(outdir, "predict", config, [args.pairs, ckpt_path], [out_path])
    print(f"pairs={len(pairs)} relations_per_pair={relations.size - 1}")
    return EXIT_OK


COMMANDS = {
    "cooc": cmd_cooc,
    "graph": cmd_graph,
    "embed": cmd_embed,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mrex",
        description="relation-extraction pipeline over co-occurrence graphs",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="key=value config file")
    parser.add_argument("--seed", type=int, default=None, help="override stage seeds")
    parser.add_argument("--workers", type=int, default=None, help="override worker count")
    parser.add_argument("--out", default=None, help="override output directory")
    parser.add_argument("--pairs", default=None, help="predict: TSV of head<TAB>tail")
    parser.add_argument("--sentences", default=None, help="predict: sentence JSONL")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = PipelineConfig.read(args.config)
        return COMMANDS[args.command](config, args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
