"""Conditioning telemetry: per-candidate worst cases, per-generation percentiles,
final-solution rows, CSV files and percentile-ribbon plots."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PERCENTILES = (5, 10, 25, 50, 75, 90, 95)
METRICS = ("k", "redundant", "log10_max_kappa", "log10_max_kappa_r")

CANDIDATE_COLUMNS = ("generation", "index", "k", "min_rank", "redundant", "max_kappa", "max_kappa_r", "fitness", "tree_size")
GENERATION_COLUMNS = ("generation", "metric") + tuple(f"p{p}" for p in PERCENTILES) + ("mean",)
FINAL_COLUMNS = ("dataset", "max_size", "function_set", "rep", "k", "redundant", "log10_kappa", "log10_kappa_r", "fitness", "expression")


@dataclass(frozen=True)
class CandidateRecord:
    generation: int
    index: int
    k: int
    min_rank: int
    redundant: int
    max_kappa: float
    max_kappa_r: float
    fitness: float
    tree_size: int


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    # metric -> (percentile values in PERCENTILES order, mean)
    metrics: dict

    def percentile(self, metric: str, p: int) -> float:
        return self.metrics[metric][0][PERCENTILES.index(p)]

    def mean(self, metric: str) -> float:
        return self.metrics[metric][1]


@dataclass(frozen=True)
class FinalSolutionRecord:
    dataset: str
    max_size: int
    function_set: str
    rep: int
    k: int
    redundant: int
    log10_kappa: float
    log10_kappa_r: float
    fitness: float
    expression: str


def aggregate_candidate(reports, generation: int = 0, index: int = 0, fitness: float = math.nan,
                        tree_size: int = 0, k: int | None = None) -> CandidateRecord:
    """Worst values over all Jacobians of one candidate: minimum rank, maximum
    condition numbers. Without reports the kappas are undefined (nan)."""
    reports = list(reports)
    if not reports:
        k = 0 if k is None else k
        return CandidateRecord(generation, index, k, 0, k, math.nan, math.nan, fitness, tree_size)
    k = reports[0].k if k is None else k
    min_rank = min(r.r for r in reports)
    return CandidateRecord(
        generation=generation,
        index=index,
        k=k,
        min_rank=min_rank,
        redundant=k - min_rank,
        max_kappa=max(r.kappa for r in reports),
        max_kappa_r=max(r.kappa_r for r in reports),
        fitness=fitness,
        tree_size=tree_size,
    )


def nearest_rank(sorted_values: np.ndarray, p: float) -> float:
    n = len(sorted_values)
    rank = max(1, math.ceil(p / 100.0 * n))
    return float(sorted_values[rank - 1])


def _log10(x: float) -> float:
    if math.isnan(x):
        return math.nan
    if x == math.inf:
        return math.inf
    return math.log10(x)


def metric_values(records: Sequence[CandidateRecord], metric: str) -> np.ndarray:
    if metric == "k":
        return np.array([r.k for r in records], dtype=float)
    if metric == "redundant":
        return np.array([r.redundant for r in records], dtype=float)
    if metric == "log10_max_kappa":
        return np.array([_log10(r.max_kappa) for r in records])
    if metric == "log10_max_kappa_r":
        return np.array([_log10(r.max_kappa_r) for r in records])
    raise KeyError(metric)


def generation_percentiles(records: Sequence[CandidateRecord], generation: int | None = None) -> GenerationStats:
    """Nearest-rank percentiles and means per metric.

    Undefined kappas (candidates without parameters) are left out of the kappa
    metrics; infinite values sort last.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to aggregate")
    if generation is None:
        generation = records[0].generation
    out = {}
    for metric in METRICS:
        values = metric_values(records, metric)
        values = np.sort(values[~np.isnan(values)])
        if len(values) == 0:
            out[metric] = (tuple(math.nan for _ in PERCENTILES), math.nan)
            continue
        out[metric] = (tuple(nearest_rank(values, p) for p in PERCENTILES), float(np.mean(values)))
    return GenerationStats(generation, out)


class RunLog:
    """Telemetry sink for one GP run."""

    def __init__(self):
        self.candidates: list[CandidateRecord] = []
        self.generations: list[GenerationStats] = []

    def log_generation(self, generation: int, records: Sequence[CandidateRecord]):
        records = sorted(records, key=lambda r: r.index)
        self.candidates.extend(records)
        self.generations.append(generation_percentiles(records, generation))


# ----------------------------------------------------------------------------
# CSV


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _write(path, header: Sequence[str], rows: Iterable[Sequence]):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_candidates(records: Iterable[CandidateRecord], path):
    _write(path, CANDIDATE_COLUMNS, ([getattr(r, c) for c in CANDIDATE_COLUMNS] for r in records))


def write_generations(stats: Iterable[GenerationStats], path):
    def rows():
        for s in stats:
            for metric in METRICS:
                pcts, mean = s.metrics[metric]
                yield (s.generation, metric, *pcts, mean)

    _write(path, GENERATION_COLUMNS, rows())


def write_finals(finals: Iterable[FinalSolutionRecord], path):
    _write(path, FINAL_COLUMNS, ([getattr(f, c) for c in FINAL_COLUMNS] for f in finals))


def write_csv(items, path):
    """Dispatch on the element type; an empty list writes a candidates header."""
    items = list(items)
    if items and isinstance(items[0], GenerationStats):
        write_generations(items, path)
    elif items and isinstance(items[0], FinalSolutionRecord):
        write_finals(items, path)
    else:
        write_candidates(items, path)


def read_candidates(path) -> list[CandidateRecord]:
    types = {f.name: f.type for f in fields(CandidateRecord)}
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(CandidateRecord(**{
                k: int(v) if types[k] in ("int", int) else float(v) for k, v in row.items()
            }))
    return out


def read_finals(path) -> list[FinalSolutionRecord]:
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(FinalSolutionRecord(
                dataset=row["dataset"], max_size=int(row["max_size"]), function_set=row["function_set"],
                rep=int(row["rep"]), k=int(row["k"]), redundant=int(row["redundant"]),
                log10_kappa=float(row["log10_kappa"]), log10_kappa_r=float(row["log10_kappa_r"]),
                fitness=float(row["fitness"]), expression=row["expression"],
            ))
    return out


def summarize_finals(finals: Sequence[FinalSolutionRecord]) -> list[dict]:
    """Medians per (dataset, max_size, function_set), in the layout of the
    final-solution tables: k, k - r, log10 kappa, log10 kappa_r."""
    groups: dict[tuple, list[FinalSolutionRecord]] = {}
    for f in finals:
        groups.setdefault((f.dataset, f.max_size, f.function_set), []).append(f)
    rows = []
    for (dataset, max_size, fset), items in sorted(groups.items()):
        def med(attr):
            v = np.array([getattr(i, attr) for i in items], dtype=float)
            v = v[~np.isnan(v)]
            return float(np.median(v)) if len(v) else math.nan

        rows.append({
            "dataset": dataset, "max_size": max_size, "function_set": fset, "reps": len(items),
            "k": med("k"), "redundant": med("redundant"),
            "log10_kappa": med("log10_kappa"), "log10_kappa_r": med("log10_kappa_r"),
        })
    return rows


def write_summary(rows: Sequence[dict], path):
    cols = ("dataset", "max_size", "function_set", "reps", "k", "redundant", "log10_kappa", "log10_kappa_r")
    _write(path, cols, ([r[c] for c in cols] for r in rows))


def format_summary(rows: Sequence[dict]) -> str:
    lines = [f"{'Dataset':<14}{'max. size':>10}{'k':>8}{'k - r':>8}{'kappa':>8}{'kappa_r':>9}"]
    for r in rows:
        lines.append(
            f"{r['dataset']:<14}{r['max_size']:>10}{r['k']:>8.4g}{r['redundant']:>8.4g}"
            f"{r['log10_kappa']:>8.3g}{r['log10_kappa_r']:>9.3g}"
        )
    return "\n".join(lines)


# ----------------------------------------------------------------------------
# plots


def render_percentile_plot(stats: Sequence[GenerationStats], metric: str, path, title: str | None = None):
    """Median line with 5-95, 10-90 and 25-75 bands over generations, as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    gens = np.array([s.generation for s in stats])
    p = {q: np.array([s.percentile(metric, q) for s in stats], dtype=float) for q in PERCENTILES}
    for v in p.values():
        v[np.isinf(v)] = np.nan  # rank-deficient spectra: kappa is unbounded
    with plt.rc_context({"svg.hashsalt": "srcond"}):
        fig, ax = plt.subplots(figsize=(6, 3))
        for lo, hi, alpha in ((5, 95, 0.15), (10, 90, 0.25), (25, 75, 0.4)):
            ax.fill_between(gens, p[lo], p[hi], color="C0", alpha=alpha, linewidth=0, label=f"p{lo}-p{hi}")
        ax.plot(gens, p[50], color="C0", label="median")
        ax.set_xlabel("generation")
        ax.set_ylabel(metric)
        if title:
            ax.set_title(title)
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path


def as_dict(record) -> dict:
    return asdict(record)
