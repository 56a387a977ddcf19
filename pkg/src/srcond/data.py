"""Benchmark datasets: synthetic generators and a CSV loader for real data."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]
    name: str = "data"
    provenance: str = "generated"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DatasetError(f"inconsistent shapes X{X.shape}, y{y.shape}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise DatasetError("dataset needs at least one row and one column")
        if len(self.names) != X.shape[1] or len(set(self.names)) != len(self.names):
            raise DatasetError("column names must be unique and match X")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DatasetError("dataset contains non-finite values")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def kotanchek(x1, x2):
    return np.exp(-((x1 - 1.0) ** 2)) / (1.2 + (x2 - 2.5) ** 2)


def pagie(x1, x2):
    return 1.0 / (1.0 + x1**-4.0) + 1.0 / (1.0 + x2**-4.0)


def poly10(X):
    x = [X[:, i] for i in range(10)]
    return x[0] * x[1] + x[2] * x[3] + x[4] * x[5] + x[0] * x[6] * x[8] + x[2] * x[5] * x[9]


def salustowicz2d(x, y):
    return (
        np.exp(-x) * x**3 * np.cos(x) * np.sin(x)
        * (np.cos(x) * np.sin(x) ** 2 - 1.0) * (y - 5.0)
    )


@dataclass(frozen=True)
class DatasetSpec:
    """Parameters of a synthetic benchmark. ``n=None`` uses the default size."""

    name: str
    n: int | None = None
    seed: int = 0
    ranges: dict = field(default_factory=dict)


DEFAULT_N = {"kotanchek": 100, "pagie": 676, "poly10": 250, "salustowicz2d": 600}
DEFAULT_RANGES = {
    "kotanchek": {"x1": (0.3, 4.0), "x2": (0.3, 4.0)},
    "poly10": {f"x{i}": (-1.0, 1.0) for i in range(1, 11)},
    "salustowicz2d": {"x": (0.05, 10.0), "y": (0.05, 10.05)},
}
ALIASES = {"poly-10": "poly10", "salustowicz": "salustowicz2d"}


def canonical_name(name: str) -> str:
    key = name.lower()
    key = ALIASES.get(key, key)
    if key not in DEFAULT_N:
        raise DatasetError(f"unknown dataset {name!r}; expected one of {sorted(DEFAULT_N)}")
    return key


def pagie_grid(step: float = 0.4, lo: float = -5.0, hi: float = 5.0) -> np.ndarray:
    m = int(round((hi - lo) / step)) + 1
    axis = lo + step * np.arange(m)
    a, b = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([a.ravel(), b.ravel()])


def generate(spec: DatasetSpec | str) -> Dataset:
    if isinstance(spec, str):
        spec = DatasetSpec(spec)
    key = canonical_name(spec.name)
    n = DEFAULT_N[key] if spec.n is None else spec.n
    rng = np.random.default_rng(spec.seed)
    ranges = {**DEFAULT_RANGES.get(key, {}), **spec.ranges}

    def sample(col):
        lo, hi = ranges[col]
        return rng.uniform(lo, hi, n)

    if key == "pagie":
        # the grid is fixed; 676 rows is the 26 x 26 grid over [-5, 5]
        X = pagie_grid()
        if spec.n is not None and spec.n != len(X):
            raise DatasetError(f"the Pagie grid has {len(X)} rows, not {spec.n}")
        return Dataset(X, pagie(X[:, 0], X[:, 1]), ("x1", "x2"), "Pagie")
    if key == "kotanchek":
        X = np.column_stack([sample("x1"), sample("x2")])
        return Dataset(X, kotanchek(X[:, 0], X[:, 1]), ("x1", "x2"), "Kotanchek")
    if key == "poly10":
        names = tuple(f"x{i}" for i in range(1, 11))
        X = np.column_stack([sample(c) for c in names])
        return Dataset(X, poly10(X), names, "Poly-10")
    X = np.column_stack([sample("x"), sample("y")])
    return Dataset(X, salustowicz2d(X[:, 0], X[:, 1]), ("x", "y"), "Salustowicz2D")


def load_csv(path, target_column: str | None = None, expected: tuple[int, int] | None = None) -> Dataset:
    """Read a numeric CSV with a header row.

    The target defaults to the last column. ``expected`` is an optional
    ``(d, n)`` pair checked after loading.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DatasetError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if target_column is None:
            target_column = header[-1]
        if target_column not in header:
            raise DatasetError(f"{path}: target column {target_column!r} not in header {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric cell in {row}") from None
            if not all(math.isfinite(v) for v in values):
                raise DatasetError(f"{path}:{lineno}: non-finite value")
            rows.append(values)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    data = np.array(rows)
    t = header.index(target_column)
    names = tuple(h for i, h in enumerate(header) if i != t)
    ds = Dataset(np.delete(data, t, axis=1), data[:, t], names, path.stem, f"loaded({path})")
    if expected is not None and (ds.d, ds.n) != tuple(expected):
        raise DatasetError(f"{path}: expected d={expected[0]}, n={expected[1]}; got d={ds.d}, n={ds.n}")
    return ds


def load(instance: str, target_column: str | None = None, seed: int = 0) -> Dataset:
    """A benchmark name or a path to a CSV file."""
    key = instance.lower()
    if ALIASES.get(key, key) in DEFAULT_N:
        return generate(DatasetSpec(key, seed=seed))
    path = Path(instance)
    if path.suffix.lower() == ".csv" or path.exists():
        return load_csv(path, target_column)
    raise DatasetError(f"unknown dataset {instance!r}")
