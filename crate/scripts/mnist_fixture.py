#!/usr/bin/env python3
"""Build the small MNIST IDX fixture used by the parameterized-teacher tests.

The npm package `mnist` (MIT) ships the 10k MNIST test digits as JSON arrays of
784 floats in [0, 1] with three decimals. This script keeps the requested
digits, interleaves them round-robin, and writes standard IDX files
(images: magic 0x00000803, labels: magic 0x00000801).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_fixture.py package/src/digits crates/core/data 3 5
"""
import json
import struct
import sys
from pathlib import Path


def main() -> None:
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    digits = [int(d) for d in sys.argv[3:]] or [3, 5]
    per_digit = {}
    for d in digits:
        flat = json.loads((src / f"{d}.json").read_text())["data"]
        per_digit[d] = [flat[i:i + 784] for i in range(0, len(flat), 784)]
    images, labels = [], []
    longest = max(len(v) for v in per_digit.values())
    for i in range(longest):
        for d in digits:
            if i < len(per_digit[d]):
                images.append(per_digit[d][i])
                labels.append(d)
    tag = "-".join(str(d) for d in digits)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"mnist-{tag}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(bytes(min(255, max(0, round(p * 255))) for img in images for p in img))
    with open(out / f"mnist-{tag}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))
    print(f"wrote {len(images)} images for digits {digits}")


if __name__ == "__main__":
    main()
