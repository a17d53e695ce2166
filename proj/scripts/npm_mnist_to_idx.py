#!/usr/bin/env python3
# Converts the digit sample bundled with the npm "mnist" package (MIT,
# https://www.npmjs.com/package/mnist) into gzipped IDX files.
#
#   npm pack mnist@1.1.0 && tar xzf mnist-1.1.0.tgz
#   python3 scripts/npm_mnist_to_idx.py package/src/digits data/
#
# Each digits/<k>.json holds {"data": [...]} with 784 values in [0, 1] per
# image (byte / 255 rounded to three decimals). Pixels are restored to bytes,
# the 10000 images are shuffled with a fixed seed and split 8000/2000.
import gzip
import json
import random
import struct
import sys
from pathlib import Path

PIXELS = 28 * 28
TRAIN_COUNT = 8000
SEED = 20240901


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    # mtime=0 keeps the archives byte-reproducible.
    with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as gz:
        gz.write(header + payload)


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    items = []
    for label in range(10):
        values = json.loads((src / f"{label}.json").read_text())["data"]
        assert len(values) % PIXELS == 0
        for i in range(0, len(values), PIXELS):
            img = bytes(min(255, max(0, round(v * 255))) for v in values[i:i + PIXELS])
            items.append((img, label))
    random.Random(SEED).shuffle(items)
    splits = {"train": items[:TRAIN_COUNT], "test": items[TRAIN_COUNT:]}
    for name, rows in splits.items():
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 0x803, [len(rows), 28, 28],
                  b"".join(img for img, _ in rows))
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 0x801, [len(rows)],
                  bytes(lbl for _, lbl in rows))
        print(f"{name}: {len(rows)} examples")


if __name__ == "__main__":
    main()
