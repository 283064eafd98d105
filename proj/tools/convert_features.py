#!/usr/bin/env python3
"""Convert published feature files into the toolkit's on-disk formats.

Writes the six files the `reproduce` command expects into --out:

    train_images.bin  train_texts.bin  train_labels.txt
    test_images.bin   test_texts.bin   test_labels.txt

Supported containers: MATLAB .mat (needs scipy), NumPy .npz/.npy.

The public Wikipedia release stores the four feature matrices as I_tr, T_tr,
I_te, T_te inside raw_features.mat and the category of each pair in the third
column of trainset_txt_img_cat.list / testset_txt_img_cat.list:

    convert_features.py wikipedia --features raw_features.mat \
        --train-list trainset_txt_img_cat.list \
        --test-list testset_txt_img_cat.list --out data/wikipedia

Anything else can be mapped explicitly:

    convert_features.py generic --input features.npz \
        --train-images I_tr --train-texts T_tr --train-labels y_tr \
        --test-images I_te --test-texts T_te --test-labels y_te --out data/xyz
"""

import argparse
import os
import struct
import sys

import numpy as np

MAGIC = b"MDCRMAT1"


def write_matrix(path, array):
    array = np.asarray(array, dtype=np.float64)
    if array.ndim != 2 or array.size == 0:
        raise SystemExit(f"{path}: expected a nonempty 2-D matrix, got shape {array.shape}")
    if not np.isfinite(array).all():
        raise SystemExit(f"{path}: refusing to write non-finite values")
    with open(path, "wb") as out:
        out.write(MAGIC)
        out.write(struct.pack("<QQ", array.shape[0], array.shape[1]))
        out.write(array.astype("<f8").tobytes(order="C"))
    print(f"wrote {path} ({array.shape[0]}x{array.shape[1]})")


def write_labels(path, labels):
    labels = np.asarray(labels).reshape(-1)
    with open(path, "w", encoding="utf-8") as out:
        for value in labels:
            out.write(f"{int(value)}\n")
    print(f"wrote {path} ({len(labels)} labels)")


def load_container(path):
    if path.endswith(".mat"):
        try:
            from scipy.io import loadmat
        except ImportError:
            raise SystemExit("reading .mat files requires scipy (pip install scipy)")
        data = loadmat(path)
        return {k: v for k, v in data.items() if not k.startswith("__")}
    if path.endswith(".npz"):
        return dict(np.load(path, allow_pickle=False))
    raise SystemExit(f"{path}: unsupported container (use .mat or .npz)")


def pick(container, name, path):
    if name not in container:
        available = ", ".join(sorted(container))
        raise SystemExit(f"{path}: no variable '{name}' (available: {available})")
    return container[name]


def labels_from_list(path):
    """Category ids from the last column of a Wikipedia .list file."""
    labels = []
    with open(path, "r", encoding="utf-8", errors="replace") as handle:
        for line_no, line in enumerate(handle, 1):
            parts = line.split()
            if not parts:
                continue
            try:
                labels.append(int(parts[-1]))
            except ValueError:
                raise SystemExit(f"{path}:{line_no}: last column is not an integer category")
    if not labels:
        raise SystemExit(f"{path}: no labels found")
    return labels


def convert_wikipedia(args):
    container = load_container(args.features)
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "train_images.bin"), pick(container, args.train_images, args.features))
    write_matrix(os.path.join(args.out, "train_texts.bin"), pick(container, args.train_texts, args.features))
    write_matrix(os.path.join(args.out, "test_images.bin"), pick(container, args.test_images, args.features))
    write_matrix(os.path.join(args.out, "test_texts.bin"), pick(container, args.test_texts, args.features))
    write_labels(os.path.join(args.out, "train_labels.txt"), labels_from_list(args.train_list))
    write_labels(os.path.join(args.out, "test_labels.txt"), labels_from_list(args.test_list))


def convert_generic(args):
    container = load_container(args.input)
    os.makedirs(args.out, exist_ok=True)
    write_matrix(os.path.join(args.out, "train_images.bin"), pick(container, args.train_images, args.input))
    write_matrix(os.path.join(args.out, "train_texts.bin"), pick(container, args.train_texts, args.input))
    write_matrix(os.path.join(args.out, "test_images.bin"), pick(container, args.test_images, args.input))
    write_matrix(os.path.join(args.out, "test_texts.bin"), pick(container, args.test_texts, args.input))
    write_labels(os.path.join(args.out, "train_labels.txt"), pick(container, args.train_labels, args.input))
    write_labels(os.path.join(args.out, "test_labels.txt"), pick(container, args.test_labels, args.input))


def main(argv):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="mode", required=True)

    wiki = sub.add_parser("wikipedia", help="convert the public Wikipedia release")
    wiki.add_argument("--features", required=True, help="raw_features.mat")
    wiki.add_argument("--train-list", required=True, help="trainset_txt_img_cat.list")
    wiki.add_argument("--test-list", required=True, help="testset_txt_img_cat.list")
    wiki.add_argument("--train-images", default="I_tr")
    wiki.add_argument("--train-texts", default="T_tr")
    wiki.add_argument("--test-images", default="I_te")
    wiki.add_argument("--test-texts", default="T_te")
    wiki.add_argument("--out", required=True)
    wiki.set_defaults(run=convert_wikipedia)

    generic = sub.add_parser("generic", help="convert any .mat/.npz container")
    generic.add_argument("--input", required=True)
    for name in ("train-images", "train-texts", "train-labels", "test-images", "test-texts", "test-labels"):
        generic.add_argument(f"--{name}", required=True, help=f"variable holding {name.replace('-', ' ')}")
    generic.add_argument("--out", required=True)
    generic.set_defaults(run=convert_generic)

    args = parser.parse_args(argv)
    args.run(args)


if __name__ == "__main__":
    main(sys.argv[1:])
