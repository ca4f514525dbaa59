#!/usr/bin/env python3
"""Build IDX files from the digit bundle shipped in the `mnist` npm package.

Usage: npm pack mnist && tar xzf mnist-*.tgz
       python3 scripts/mnist_from_npm.py package/src/digits data/mnist

The bundle stores 10k MNIST digits as floats in [0, 1] rounded to three
decimals, grouped by class. Pixels are mapped back to uint8 and the samples
are interleaved with a fixed shuffle so every prefix is class-balanced-ish.
"""
import json
import random
import struct
import sys
from pathlib import Path

src, dst = Path(sys.argv[1]), Path(sys.argv[2])
dst.mkdir(parents=True, exist_ok=True)
samples = []
for label in range(10):
    data = json.loads((src / f"{label}.json").read_text())["data"]
    for i in range(len(data) // 784):
        px = bytes(min(255, max(0, round(v * 255))) for v in data[i * 784:(i + 1) * 784])
        samples.append((px, label))
random.Random(20190101).shuffle(samples)
with open(dst / "images-idx3-ubyte", "wb") as f:
    f.write(struct.pack(">IIII", 2051, len(samples), 28, 28))
    for px, _ in samples:
        f.write(px)
with open(dst / "labels-idx1-ubyte", "wb") as f:
    f.write(struct.pack(">II", 2049, len(samples)))
    f.write(bytes(l for _, l in samples))
print(f"wrote {len(samples)} samples to {dst}")
