"""Command-line interface.

Subcommands: run (full generation loop), baseline (quasi-random latent
search against a checkpoint), compare (pooled non-dominated sorting of
front CSVs), metrics (recompute quality ratios of a snapshot), report
(re-render figures for a finished run). Exit codes: 0 success, 1 runtime
failure, 2 invalid configuration or input.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import analysis, engine, report
from .config import ConfigError, RunConfig, load_config
from .domain import ToyDomain, population_metrics
from .vae import SequenceVae

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "generations", None) is not None:
        cfg.generations = args.generations
    if getattr(args, "population", None) is not None:
        cfg.population = args.population
    if getattr(args, "beta", None) is not None:
        cfg.beta = args.beta
    if getattr(args, "alpha", None) is not None:
        cfg.alpha = args.alpha
    if getattr(args, "crossover", None):
        cfg.crossover = args.crossover
    if getattr(args, "no_finetune", False):
        cfg.finetune = False
    if getattr(args, "no_property_head", False):
        cfg.property_head = False
    if getattr(args, "no_figures", False):
        cfg.figures = False
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    try:
        cfg = _load_run_config(args)
        if not cfg.out:
            raise ConfigError("out: an output directory is required "
                              "(--out or the 'out' config key)")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = engine.run(cfg, cfg.out)
        if cfg.figures:
            report.render_run(result.out_dir)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    final = result.metrics[-1]
    print(f"run complete: {cfg.generations} generations -> {result.out_dir}")
    print(f"final front size {final['front1_size']}, "
          f"hypervolume {final['front1_hypervolume']:.9g}, "
          f"novelty {final['novelty']:.3f}, diversity {final['diversity']:.3f}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    try:
        cfg = _load_run_config(args)
        if not cfg.out:
            raise ConfigError("out: an output directory is required")
        model_path = Path(args.model)
        if not model_path.exists():
            raise ConfigError(f"model checkpoint not found: {model_path}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        model = SequenceVae.load(model_path)
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        result = analysis.sobol_baseline(model, cfg.baseline_initial,
                                         cfg.baseline_batches,
                                         cfg.baseline_batch_size,
                                         ToyDomain(), rng)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "hypervolume_trace.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["batch", "evaluations", "hypervolume"])
            for i, hv in enumerate(result.hv_trace):
                evals = cfg.baseline_initial + i * cfg.baseline_batch_size
                writer.writerow([i, evals, f"{hv:.9g}"])
        front = analysis._pareto_filter(result.objectives)
        with open(out / "front.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"obj{i + 1}" for i in range(front.shape[1])])
            for row in front:
                writer.writerow([f"{v:.9g}" for v in row])
        if cfg.figures:
            report.render_baseline(out, result.hv_trace)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"baseline complete: {result.n_evaluated} evaluations, "
          f"{len(result.sequences)} valid, final hypervolume "
          f"{result.hv_trace[-1]:.9g} -> {cfg.out}")
    return EXIT_OK


def _read_front_csv(path: Path) -> list[list[float]]:
    rows = []
    with open(path, newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record:
                continue
            try:
                rows.append([float(v) for v in record])
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise ConfigError(f"{path}:{lineno}: malformed objective row")
    if not rows:
        raise ConfigError(f"{path}: no objective vectors found")
    return rows


def cmd_compare(args) -> int:
    try:
        if len(args.fronts) < 2:
            raise ConfigError("compare needs at least 2 front files")
        sources = {}
        for path in args.fronts:
            p = Path(path)
            if not p.exists():
                raise ConfigError(f"front file not found: {p}")
            name = p.stem if p.stem != "front" else p.parent.name or p.stem
            base, k = name, 2
            while name in sources:
                name = f"{base}_{k}"
                k += 1
            sources[name] = _read_front_csv(p)
        comparison = analysis.compare_fronts(sources)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        header = ("source", "front_size", "survivors", "percentage")
        print(",".join(header))
        for name, size, survivors, pct in comparison.rows():
            print(f"{name},{size},{survivors},{pct:.9g}")
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "front_comparison.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                for name, size, survivors, pct in comparison.rows():
                    writer.writerow([name, size, survivors, f"{pct:.9g}"])
            if not args.no_figures:
                report.render_compare(out, comparison)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_metrics(args) -> int:
    try:
        pop_path = Path(args.population_file)
        if not pop_path.exists():
            raise ConfigError(f"population snapshot not found: {pop_path}")
        cfg = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.seed = args.seed
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        pop = engine.read_population(pop_path)
        streams = np.random.SeedSequence(cfg.seed).spawn(1)
        train_set, _ = ToyDomain().training_corpus(
            np.random.default_rng(streams[0]), cfg.holdout_fraction)
        quality = population_metrics(pop.phenotypes(), train_set)
        print("validity_smiles,validity_fragments,novelty,diversity")
        print(f"{quality.validity_smiles:.9g},{quality.validity_fragments:.9g},"
              f"{quality.novelty:.9g},{quality.diversity:.9g}")
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        run_dir = Path(args.run_dir)
        if not (run_dir / "gen_0").exists():
            raise ConfigError(f"not a run directory: {run_dir}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        written = report.render_run(run_dir)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentevo",
        description="Latent-space multi-objective evolution with model "
                    "fine-tuning on a deterministic toy sequence domain.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p, with_run_overrides=True):
        p.add_argument("--config", help="flat key=value configuration file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")
        if with_run_overrides:
            p.add_argument("--generations", type=int)
            p.add_argument("--population", type=int)
            p.add_argument("--beta", type=float)
            p.add_argument("--alpha", type=float)
            p.add_argument("--crossover", choices=("linear", "discrete"))
            p.add_argument("--no-finetune", action="store_true",
                           help="skip per-generation model fine-tuning")
            p.add_argument("--no-property-head", action="store_true",
                           help="train with zero property-loss weight")

    p_run = sub.add_parser("run", help="execute the full generation loop")
    add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_base = sub.add_parser("baseline",
                            help="quasi-random latent search baseline")
    add_run_flags(p_base, with_run_overrides=False)
    p_base.add_argument("--model", required=True,
                        help="model checkpoint (e.g. <run>/gen_0/model.bin)")
    p_base.set_defaults(func=cmd_baseline)

    p_cmp = sub.add_parser("compare",
                           help="pooled non-dominated sorting of front CSVs")
    p_cmp.add_argument("fronts", nargs="*",
                       help="two or more CSV files, one objective vector per row")
    p_cmp.add_argument("--out", help="directory for the comparison CSV")
    p_cmp.add_argument("--no-figures", action="store_true")
    p_cmp.set_defaults(func=cmd_compare)

    p_met = sub.add_parser("metrics",
                           help="recompute quality ratios of a snapshot")
    p_met.add_argument("population_file", help="a gen_<g>/population.jsonl")
    p_met.add_argument("--config")
    p_met.add_argument("--seed", type=int)
    p_met.set_defaults(func=cmd_metrics)

    p_rep = sub.add_parser("report", help="re-render figures for a run")
    p_rep.add_argument("run_dir")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
