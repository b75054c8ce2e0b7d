"""Writes the golden FOAL feature files with nothing but the struct module.

These stand in for files produced by an external extractor; the C++ reader
must decode them, and the C++ writer must reproduce them byte for byte.
"""

import struct
from pathlib import Path

HERE = Path(__file__).resolve().parent


def sample_values(i, n, e):
    return [0.25 * (i * n * e + k) - 1.5 for k in range(n * e)]


def write(path, labels, n, e, labeled):
    count = len(labels)
    with open(path, "wb") as f:
        f.write(b"FOAL")
        f.write(struct.pack("<IQIIII", 1, count, n, e, 1 if labeled else 0, 0))
        for i, label in enumerate(labels):
            if labeled:
                f.write(struct.pack("<I", label))
            f.write(struct.pack("<%df" % (n * e), *sample_values(i, n, e)))


if __name__ == "__main__":
    write(HERE / "golden_labeled_v1.foal", [7, 0, 4294967295], 2, 3, True)
    write(HERE / "golden_unlabeled_v1.foal", [0, 0], 3, 2, False)
