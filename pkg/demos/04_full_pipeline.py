#!/usr/bin/env python3
"""Drive all six pipeline stages end to end on a generated fixture.

Writes the fixture and a config file into a scratch directory, then runs
cooc -> graph -> embed -> train -> eval -> predict exactly as the CLI
would, and prints the artifacts each stage left behind.
"""

import json
import os
import tempfile

from mrex.cli import main
from mrex.synthetic import SyntheticConfig, generate, write_dataset

CONFIG = """\
paths.unlabeled = {data}/unlabeled.jsonl
paths.train = {data}/train.jsonl
paths.test = {data}/test.jsonl
paths.type_inventory = {data}/type_inventory.txt
paths.types = {data}/types.tsv
paths.out = {out}

graph.threshold = 2
embedding.d1 = 8
embedding.d2 = 8
embedding.total_samples = 20000
embedding.lr = 0.05
embedding.seed = 9
model.word_dim = 8
model.pos_dim = 2
model.filters = 12
model.type_dim = 4
model.max_len = 16
train.epochs = 30
train.batch_size = 16
train.seeds = 9
"""

workdir = tempfile.mkdtemp(prefix="mrex_demo_")
data_dir = os.path.join(workdir, "data")
out_dir = os.path.join(workdir, "out")

dataset = generate(
    SyntheticConfig(
        n_entities=32, n_clusters=2, seed=9,
        unlabeled_sentences=500,
        uncapped_pairs_per_relation=10, capped_pairs_per_relation=3,
        na_pairs_per_cluster=5,
    )
)
write_dataset(dataset, data_dir)
config_path = os.path.join(workdir, "pipeline.cfg")
with open(config_path, "w") as fh:
    fh.write(CONFIG.format(data=data_dir, out=out_dir))

known = next(p for p in dataset.train_pairs if p[2] != "NA")
pairs_path = os.path.join(workdir, "pairs.tsv")
with open(pairs_path, "w") as fh:
    fh.write(f"{known[0]}\t{known[1]}\nUNSEEN_A\tUNSEEN_B\n")

print(f"working directory: {workdir}\n")
for stage in ("cooc", "graph", "embed", "train", "eval"):
    print(f"$ mrex {stage} --config pipeline.cfg")
    code = main([stage, "--config", config_path])
    assert code == 0, f"{stage} exited {code}"
    print()

print("$ mrex predict --config pipeline.cfg --pairs pairs.tsv --sentences train.jsonl")
code = main(["predict", "--config", config_path, "--pairs", pairs_path,
             "--sentences", os.path.join(data_dir, "train.jsonl")])
assert code == 0

print("\nartifacts:")
for name in sorted(os.listdir(out_dir)):
    size = os.path.getsize(os.path.join(out_dir, name))
    print(f"  {name:24s} {size:8d} bytes")

metrics = json.load(open(os.path.join(out_dir, "metrics.json")))
print(f"\nheld-out AUC = {metrics['auc']:.4f}, max-F1 = {metrics['f1']:.4f}")

print(f"\npredictions for the known training pair {known[0]} -> {known[1]} "
      f"(true relation {known[2]}):")
with open(os.path.join(out_dir, "predictions.tsv")) as fh:
    next(fh)
    for line in fh:
        head, tail, rel, conf, flag = line.rstrip("\n").split("\t")
        if head == known[0]:
            print(f"  {rel:8s} {float(conf):.4f}  [{flag}]")
