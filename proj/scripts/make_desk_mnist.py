#!/usr/bin/env python3
"""Build a desk-scale MNIST subset in IDX format.

Reads the 10000 MNIST digits shipped in the `mnist` npm package
(src/digits/<d>.json, pixels stored as round(byte / 255, 3)), recovers the
original bytes, shuffles with a fixed seed and writes an 8000/2000
train/test split as standard IDX files.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/make_desk_mnist.py package data/mnist-desk
"""
import argparse
import json
import pathlib
import random
import struct

TRAIN_COUNT = 8000
SEED = 20180101


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("package_dir")
    ap.add_argument("out_dir")
    args = ap.parse_args()

    samples = []
    for digit in range(10):
        path = pathlib.Path(args.package_dir) / "src" / "digits" / f"{digit}.json"
        values = json.loads(path.read_text())["data"]
        assert len(values) % 784 == 0
        for i in range(0, len(values), 784):
            pixels = [int(round(v * 255)) for v in values[i:i + 784]]
            assert all(0 <= p <= 255 for p in pixels)
            samples.append((pixels, digit))

    random.Random(SEED).shuffle(samples)
    train, test = samples[:TRAIN_COUNT], samples[TRAIN_COUNT:]

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", [s[0] for s in train])
    write_labels(out / "train-labels-idx1-ubyte", [s[1] for s in train])
    write_images(out / "t10k-images-idx3-ubyte", [s[0] for s in test])
    write_labels(out / "t10k-labels-idx1-ubyte", [s[1] for s in test])
    print(f"wrote {len(train)} train / {len(test)} test images to {out}")


if __name__ == "__main__":
    main()
