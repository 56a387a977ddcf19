"""Command line: ``srcond run`` for GP experiments, ``srcond case-study`` for
the hand-built redundant expressions.

Output layout of ``run``::

    <out>/<Instance>-<MaxSize>-<Set>/
        finals.csv   one row per repetition
        summary.csv  medians of finals.csv
        rep<k>/candidates.csv, generations.csv, <metric>.svg
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path


from .conditioning import analyze
from .data import DatasetError, generate, load
from .diff import jacobian
from .expr import build_case_study_trees, get_function_set, to_infix
from .gp import GPConfig, evolve
from .nls import LMConfig, multistart_fit, restart_experiment
from .telemetry import (
    METRICS,
    FinalSolutionRecord,
    RunLog,
    format_summary,
    render_percentile_plot,
    summarize_finals,
    write_candidates,
    write_finals,
    write_generations,
    write_summary,
)

# perturbation scale of the restart experiment; at scale 1 every restart
# converges back in a handful of evaluations, around 20 roughly half do
CASE_STUDY_SCALE = 20.0
CASE_STUDY_STARTS = 100


@dataclass(frozen=True)
class RunSpec:
    instance: str
    max_size: int = 50
    function_set: str = "small"
    population: int = 1000
    generations: int = 100
    local_iters: int = 10
    reps: int = 30
    seed: int = 0
    out_dir: Path = Path("runs")
    target: str | None = None

    def nomenclature(self, dataset_name: str) -> str:
        return f"[{dataset_name}/{self.max_size}/{get_function_set(self.function_set).name}]"

    def dirname(self, dataset_name: str) -> str:
        return f"{dataset_name}-{self.max_size}-{get_function_set(self.function_set).name}"


def _log10(x) -> float:
    if x is None or math.isnan(x):
        return math.nan
    return math.inf if math.isinf(x) else math.log10(x)


def run(spec: RunSpec, err=None) -> list[FinalSolutionRecord]:
    err = err or sys.stderr
    dataset = load(spec.instance, spec.target)
    tag = spec.nomenclature(dataset.name)
    root = Path(spec.out_dir) / spec.dirname(dataset.name)
    fset_name = get_function_set(spec.function_set).name
    finals = []
    for rep in range(spec.reps):
        seed = spec.seed + rep
        config = GPConfig(population_size=spec.population, generations=spec.generations,
                          local_opt_iters=spec.local_iters, max_size=spec.max_size,
                          function_set=spec.function_set, seed=seed)
        log = RunLog()

        def progress(gen, best, rep=rep):
            print(f"{tag} rep {rep} seed {seed} gen {gen} best mse {best:.6g}", file=err, flush=True)

        result = evolve(config, dataset, log, progress)
        rep_dir = root / f"rep{rep}"
        write_candidates(log.candidates, rep_dir / "candidates.csv")
        write_generations(log.generations, rep_dir / "generations.csv")
        for metric in METRICS:
            render_percentile_plot(log.generations, metric, rep_dir / f"{metric}.svg", f"{tag} {metric}")
        report = result.report
        finals.append(FinalSolutionRecord(
            dataset=dataset.name, max_size=spec.max_size, function_set=fset_name, rep=rep,
            k=result.best.tree.k,
            redundant=report.redundant if report else 0,
            log10_kappa=_log10(report.kappa) if report else math.nan,
            log10_kappa_r=_log10(report.kappa_r) if report else math.nan,
            fitness=result.best.fitness,
            expression=to_infix(result.best.tree, dataset.names),
        ))
    write_finals(finals, root / "finals.csv")
    rows = summarize_finals(finals)
    write_summary(rows, root / "summary.csv")
    print(format_summary(rows), file=err)
    return finals


@dataclass
class CaseStudyRow:
    form: str
    k: int
    r: int
    log10_kappa: float
    log10_kappa_r: float
    ssr: float


def case_study(seed: int = 0, restarts: int = 1000, scale: float = CASE_STUDY_SCALE, out=None,
               starts: int = CASE_STUDY_STARTS) -> dict:
    """Fit the three hand-built forms on the Pagie grid and compare restarts
    of the original and fixed forms."""
    out = out or sys.stdout
    data = generate("pagie")
    trees = build_case_study_trees()
    rows = {}
    print(f"{'form':<12}{'k':>4}{'r':>4}{'log10 kappa':>14}{'log10 kappa_r':>16}{'ssr':>12}", file=out)
    for form, tree in trees.items():
        fit = multistart_fit(tree, data.X, data.y, starts, seed=seed)
        rep = analyze(jacobian(tree, fit.theta, data.X))
        row = CaseStudyRow(form, rep.k, rep.r, _log10(rep.kappa), _log10(rep.kappa_r), fit.ssr)
        rows[form] = row
        print(f"{form:<12}{row.k:>4}{row.r:>4}{row.log10_kappa:>14.3f}{row.log10_kappa_r:>16.3f}{row.ssr:>12.5g}",
              file=out)
        if row.r != 3:
            raise RuntimeError(f"{form}: expected numeric rank 3, got {row.r}")
    summaries = {}
    if restarts > 0:
        print(f"\nrestarts: {restarts} per form, perturbation scale {scale:g}", file=out)
        print(f"{'form':<12}{'mean nfev':>11}{'mean njev':>11}{'success':>9}", file=out)
        for form in ("original", "fixed"):
            s = restart_experiment(trees[form], data.X, data.y, restarts, scale, seed=seed,
                                   config=LMConfig(max_iterations=100))
            summaries[form] = s
            print(f"{form:<12}{s.mean_nfev:>11.2f}{s.mean_njev:>11.2f}{s.success_rate:>9.1%}", file=out)
    return {"fits": rows, "restarts": summaries}


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="srcond", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="GP repetitions with conditioning telemetry")
    r.add_argument("--instance", required=True, help="benchmark name or CSV path")
    r.add_argument("--target", default=None, help="target column of a CSV instance (default: last)")
    r.add_argument("--max-size", type=_positive, default=50)
    r.add_argument("--function-set", choices=("small", "large"), default="small")
    r.add_argument("--population", type=_positive, default=1000)
    r.add_argument("--generations", type=_positive, default=100)
    r.add_argument("--local-iters", type=_positive, default=10)
    r.add_argument("--reps", type=_positive, default=30)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", type=Path, default=Path("runs"))

    c = sub.add_parser("case-study", help="rank and conditioning of the hand-built redundant expressions")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--restarts", type=int, default=1000)
    c.add_argument("--scale", type=float, default=CASE_STUDY_SCALE, help="restart perturbation scale")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "run":
        spec = RunSpec(args.instance, args.max_size, args.function_set, args.population, args.generations,
                       args.local_iters, args.reps, args.seed, args.out, args.target)
        if spec.max_size < 3:
            parser.print_usage(sys.stderr)
            print("srcond: error: --max-size must be >= 3", file=sys.stderr)
            return 2
        try:
            load(spec.instance, spec.target)
        except DatasetError as exc:
            parser.print_usage(sys.stderr)
            print(f"srcond: error: {exc}", file=sys.stderr)
            return 2
        try:
            run(spec)
        except Exception as exc:  # noqa: BLE001 - reported as a run failure
            print(f"srcond: run failed: {exc}", file=sys.stderr)
            return 1
        return 0
    try:
        case_study(args.seed, args.restarts, args.scale)
    except Exception as exc:  # noqa: BLE001
        print(f"srcond: case study failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
