#!/usr/bin/env python3
"""Convert Planetoid files (ind.<name>.x, .y, .tx, .ty, .allx, .ally, .graph,
.test.index) into a gern bundle directory.

The Planetoid split is written as split.planetoid.tsv: the labeled training
nodes, the next 500 nodes as validation and the test index as test.

    python3 planetoid_to_bundle.py --raw data/ --name cora --out cora-bundle
"""

import argparse
import pathlib
import pickle
import sys

import numpy as np
import scipy.sparse as sp


def load(raw, name, part):
    with open(raw / f"ind.{name}.{part}", "rb") as f:
        return pickle.load(f, encoding="latin1")


def convert(raw, name, out, row_normalize):
    x, y, tx, ty, allx, ally, graph = (load(raw, name, p) for p in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_index = [int(line) for line in (raw / f"ind.{name}.test.index").read_text().split()]
    test_sorted = np.sort(test_index)

    if name == "citeseer":
        # Some test nodes are isolated and missing from tx; pad with zeros.
        full = range(min(test_index), max(test_index) + 1)
        tx_ext = sp.lil_matrix((len(full), x.shape[1]))
        tx_ext[test_sorted - min(test_sorted), :] = tx
        tx = tx_ext
        ty_ext = np.zeros((len(full), y.shape[1]))
        ty_ext[test_sorted - min(test_sorted), :] = ty
        ty = ty_ext

    features = sp.vstack((allx, tx)).tolil()
    features[test_index, :] = features[test_sorted, :]
    labels = np.vstack((ally, ty))
    labels[test_index, :] = labels[test_sorted, :]
    features = features.toarray().astype(np.float32)
    if row_normalize:
        sums = np.abs(features).sum(axis=1, keepdims=True)
        sums[sums == 0] = 1.0
        features = features / sums
    n = features.shape[0]
    classes = labels.shape[1]
    label_ids = np.where(labels.sum(axis=1) > 0, labels.argmax(axis=1), 0)

    edges = set()
    for u, nbrs in graph.items():
        for v in nbrs:
            if u != v and u < n and v < n:
                edges.add((min(u, v), max(u, v)))

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "edges.tsv", "w") as f:
        f.write(f"# {name}, {len(edges)} undirected edges\n")
        for u, v in sorted(edges):
            f.write(f"{u}\t{v}\n")
    np.savetxt(out / "features.tsv", features, fmt="%.9g", delimiter="\t")
    np.savetxt(out / "labels.tsv", label_ids, fmt="%d")
    with open(out / "meta.txt", "w") as f:
        f.write(f"name={name}\nn={n}\nc={classes}\nd0={features.shape[1]}\n")
        f.write("source=planetoid\n")
        f.write(f"row_normalized={'true' if row_normalize else 'false'}\n")
    train = range(len(y))
    tests = set(test_index)
    validation = [v for v in range(len(y), min(len(y) + 500, n)) if v not in tests]
    with open(out / "split.planetoid.tsv", "w") as f:
        for v in train:
            f.write(f"{v}\ttrain\n")
        for v in validation:
            f.write(f"{v}\tvalidation\n")
        for v in sorted(test_index):
            f.write(f"{v}\ttest\n")
    print(f"{name}: n={n}, m={len(edges)}, c={classes}, d0={features.shape[1]} -> {out}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--raw", type=pathlib.Path, required=True, help="directory holding ind.<name>.* files")
    parser.add_argument("--name", default="cora")
    parser.add_argument("--out", type=pathlib.Path, required=True)
    parser.add_argument("--row-normalize", action="store_true", help="scale feature rows to unit L1 norm")
    args = parser.parse_args()
    try:
        convert(args.raw, args.name, args.out, args.row_normalize)
    except FileNotFoundError as e:
        sys.exit(f"missing Planetoid file: {e.filename}")


if __name__ == "__main__":
    main()
