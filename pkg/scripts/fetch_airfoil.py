"""Download the Airfoil self-noise data and write it as a CSV for ``srcond``.

The source file is whitespace separated with five inputs and the target in
the last column. ``--rows N`` keeps a seeded random subsample of N rows.

    python scripts/fetch_airfoil.py airfoil.csv --rows 100
    srcond run --instance airfoil.csv ...
"""
import argparse
import csv
import sys
import urllib.request

import numpy as np

URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/00291/airfoil_self_noise.dat"
HEADER = ("frequency", "angle", "chord", "velocity", "thickness", "sound_pressure")


def convert(text: str, rows: int | None = None, seed: int = 0) -> np.ndarray:
    data = np.array([[float(v) for v in line.split()] for line in text.splitlines() if line.strip()])
    if data.ndim != 2 or data.shape[1] != len(HEADER):
        raise ValueError(f"expected {len(HEADER)} columns, got shape {data.shape}")
    if rows is not None:
        idx = np.sort(np.random.default_rng(seed).choice(len(data), size=rows, replace=False))
        data = data[idx]
    return data


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("dest")
    parser.add_argument("--url", default=URL)
    parser.add_argument("--rows", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    with urllib.request.urlopen(args.url) as resp:
        text = resp.read().decode()
    data = convert(text, args.rows, args.seed)
    with open(args.dest, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        writer.writerows([repr(float(v)) for v in row] for row in data)
    print(f"wrote {len(data)} rows to {args.dest}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
