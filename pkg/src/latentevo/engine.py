"""Generation loop: train, encode, evolve, decode, evaluate, merge, fine-tune.

Each run writes one directory per generation (population snapshot, metrics
row, rank-1 front, model checkpoint) plus a resolved-configuration echo at
the run root. Every random draw descends from the single run seed, so runs
with an identical configuration are byte-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analysis
from .config import RunConfig, write_config
from .domain import (MAX_LEN, N_OBJECTIVES, VOCAB_SIZE, PropertyTriple,
                     ToyDomain, population_metrics)
from .evo import (EvoConfig, crossover_discrete, crossover_linear, mutate,
                  tournament_select)
from .pareto import nondominated_sort
from .vae import BetaSchedule, OptimizerConfig, SequenceVae

METRIC_COLUMNS = (
    "generation", "validity_smiles", "validity_fragments", "novelty",
    "diversity", "front1_size", "front1_hypervolume", "hq_count",
    "novel_hq_count", "recon", "kl", "prop_mse", "total",
)


class EngineInvariantError(RuntimeError):
    """A structural guarantee of the generation loop was violated."""


@dataclass(frozen=True)
class Candidate:
    """One population member: decoded sequence plus its latent code."""

    phenotype: tuple[int, ...]
    genotype: np.ndarray
    objectives: np.ndarray
    raw_properties: PropertyTriple
    born_generation: int


@dataclass
class Population:
    members: list[Candidate]
    generation: int

    def objective_matrix(self) -> np.ndarray:
        return np.vstack([c.objectives for c in self.members])

    def phenotypes(self) -> list[tuple[int, ...]]:
        return [c.phenotype for c in self.members]


@dataclass(frozen=True)
class BreedStats:
    n_decoded: int
    n_valid: int

    @property
    def validity_fragments(self) -> float:
        return self.n_valid / self.n_decoded if self.n_decoded else 0.0


@dataclass
class RunResult:
    out_dir: Path
    populations: list[Population]
    metrics: list[dict]
    train_set: list[tuple[int, ...]]
    model: SequenceVae

    @property
    def final_population(self) -> Population:
        return self.populations[-1]


def make_candidate(domain: ToyDomain, phenotype, genotype, born: int) -> Candidate:
    phenotype = tuple(int(t) for t in phenotype)
    props = domain.properties(phenotype)
    return Candidate(phenotype=phenotype,
                     genotype=np.asarray(genotype, dtype=float),
                     objectives=props.to_objectives(),
                     raw_properties=props,
                     born_generation=born)


def initial_subset(candidates: list[Candidate], m: int, rng,
                   strategy: str = "rank") -> list[Candidate]:
    """The M members seeding generation 0.

    The rank strategy keeps the crowded-comparison best of the training
    candidates (rank, then descending crowding, ties by input order); the
    random strategy draws uniformly without replacement.
    """
    if not candidates:
        raise ValueError("training set must be non-empty")
    if len(candidates) <= m:
        return list(candidates)
    if strategy == "random":
        idx = sorted(int(i) for i in
                     rng.choice(len(candidates), size=m, replace=False))
        return [candidates[i] for i in idx]
    assignment = nondominated_sort([c.objectives for c in candidates])
    order = sorted(range(len(candidates)),
                   key=lambda i: (assignment.rank[i], -assignment.crowding[i], i))
    return [candidates[i] for i in order[:m]]


def merge(prev: list[Candidate], offspring: list[Candidate], m: int) -> list[Candidate]:
    """Elitist truncation of parents plus offspring to the best M.

    The pool is ordered by non-domination rank, then by descending crowding
    distance computed per front on the pool, with ties broken by pool index.
    """
    pool = list(prev) + list(offspring)
    if len(pool) <= m:
        return pool
    assignment = nondominated_sort([c.objectives for c in pool])
    order = sorted(range(len(pool)),
                   key=lambda i: (assignment.rank[i], -assignment.crowding[i], i))
    return [pool[i] for i in order[:m]]


def breed(pop: Population, model: SequenceVae, cfg: RunConfig, rng,
          born: int) -> tuple[list[Candidate], list[Candidate], BreedStats]:
    """One round of selection, recombination, mutation, and decoding.

    Population members are re-encoded to posterior means (their refreshed
    genotypes are returned alongside the offspring), ranked, and bred:
    M tournament winners are paired in selection order, each pair yields two
    children through the configured crossover, children are mutated
    independently, decoded by sampling, and the valid decodes are evaluated.
    """
    if not pop.members:
        raise ValueError("population must be non-empty")
    domain = ToyDomain()
    evo_cfg = EvoConfig(p_s=cfg.selection_pressure, p_m=cfg.mutation_rate,
                        crossover_kind=cfg.crossover, d=cfg.crossover_expansion)
    means, _ = model.encode_sequences(pop.phenotypes())
    refreshed = [replace(c, genotype=means[i]) for i, c in enumerate(pop.members)]
    assignment = nondominated_sort([c.objectives for c in refreshed])
    ranked = [(means[i], int(assignment.rank[i]), float(assignment.crowding[i]))
              for i in range(len(refreshed))]
    m = cfg.population
    parents = tournament_select(ranked, m, evo_cfg, rng)

    children: list[np.ndarray] = []
    pair_count = m // 2 + (m % 2)
    for pair in range(pair_count):
        p1 = parents[2 * pair]
        p2 = parents[2 * pair + 1] if 2 * pair + 1 < m else parents[0]
        if cfg.crossover == "linear":
            c1, c2 = crossover_linear(p1, p2, evo_cfg, rng)
        else:
            c1, c2 = crossover_discrete(p1, p2, rng)
        children.append(mutate(c1, evo_cfg, rng))
        if len(children) < m:
            children.append(mutate(c2, evo_cfg, rng))

    decoded = model.decode_batch(np.vstack(children), rng, greedy=False)
    offspring = []
    n_valid = 0
    for z, phenotype in zip(children, decoded):
        if domain.is_valid(phenotype):
            n_valid += 1
            offspring.append(make_candidate(domain, phenotype, z, born))
    stats = BreedStats(n_decoded=len(decoded), n_valid=n_valid)
    return offspring, refreshed, stats


def front1(members: list[Candidate]) -> list[Candidate]:
    assignment = nondominated_sort([c.objectives for c in members])
    return [members[int(i)] for i in assignment.fronts[0]]


def _front1_hypervolume(members: list[Candidate], ref: np.ndarray) -> tuple[int, float]:
    front = front1(members)
    hv = analysis.hypervolume([c.objectives for c in front], ref)
    return len(front), hv


def _check_elitism(prev: Population, new_members: list[Candidate]) -> None:
    prev_objs = prev.objective_matrix()
    for cand in front1(new_members):
        le = (prev_objs <= cand.objectives).all(axis=1)
        lt = (prev_objs < cand.objectives).any(axis=1)
        if (le & lt).any():
            raise EngineInvariantError(
                "merge produced a rank-1 member dominated by the previous "
                f"population: {cand.phenotype}")


def _write_population(path: Path, pop: Population) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in pop.members:
            record = {
                "phenotype": list(c.phenotype),
                "genotype": [float(v) for v in c.genotype],
                "raw_properties": {"q": c.raw_properties.q,
                                   "s": c.raw_properties.s,
                                   "lp": c.raw_properties.lp},
                "objectives": [float(v) for v in c.objectives],
                "born_generation": c.born_generation,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_population(path) -> Population:
    """Load a population snapshot written by a run."""
    domain = ToyDomain()
    members = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            members.append(make_candidate(domain, rec["phenotype"],
                                          rec["genotype"],
                                          rec["born_generation"]))
    return Population(members=members, generation=max(
        (c.born_generation for c in members), default=0))


def _write_metrics(path: Path, row: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        writer.writerow([_fmt_cell(row.get(col)) for col in METRIC_COLUMNS])


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _write_front(path: Path, members: list[Candidate]) -> None:
    front = front1(members)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"obj{i + 1}" for i in range(N_OBJECTIVES)])
        for c in front:
            writer.writerow([f"{v:.9g}" for v in c.objectives])


def _metrics_row(generation: int, pop: Population, train_set,
                 validity_fragments: float, losses, ref) -> dict:
    quality = population_metrics(pop.phenotypes(), train_set)
    front_size, hv = _front1_hypervolume(pop.members, ref)
    train = {tuple(s) for s in train_set}
    hq = sum(1 for c in pop.members if c.raw_properties.is_high_quality())
    novel_hq = sum(1 for c in pop.members
                   if c.raw_properties.is_high_quality() and c.phenotype not in train)
    row = {
        "generation": generation,
        "validity_smiles": quality.validity_smiles,
        "validity_fragments": validity_fragments,
        "novelty": quality.novelty,
        "diversity": quality.diversity,
        "front1_size": front_size,
        "front1_hypervolume": hv,
        "hq_count": hq,
        "novel_hq_count": novel_hq,
        "recon": losses.recon if losses else None,
        "kl": losses.kl if losses else None,
        "prop_mse": losses.prop_mse if losses else None,
        "total": losses.total if losses else None,
    }
    return row


def _phase_weights(cfg: RunConfig, generation: int) -> tuple[float, float]:
    """Effective (alpha, beta) for the training phase ending generation g.

    The annealed values take over from generation 2 onward; a disabled
    property head pins alpha to zero throughout.
    """
    beta = cfg.beta
    alpha = cfg.alpha
    if generation >= 2:
        if cfg.beta_annealed is not None:
            beta = cfg.beta_annealed
        if cfg.alpha_annealed is not None:
            alpha = cfg.alpha_annealed
    if not cfg.property_head:
        alpha = 0.0
    return alpha, beta


def run(cfg: RunConfig, out_dir) -> RunResult:
    """Execute the full loop and write all artifacts under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_config(cfg, out / "config.resolved")

    domain = ToyDomain()
    ref = domain.reference_point()
    streams = np.random.SeedSequence(cfg.seed).spawn(4 + 2 * cfg.generations)
    rng_corpus = np.random.default_rng(streams[0])
    rng_model = np.random.default_rng(streams[1])
    rng_train0 = np.random.default_rng(streams[2])
    rng_subset = np.random.default_rng(streams[3])

    train_set, _held = domain.training_corpus(rng_corpus, cfg.holdout_fraction,
                                              cfg.frontier_depth)
    train_objs = np.vstack([domain.objectives(s) for s in train_set])

    model = SequenceVae(VOCAB_SIZE, cfg.embed_size, cfg.latent_size, MAX_LEN,
                        N_OBJECTIVES, rng_model)
    alpha0, beta0 = _phase_weights(cfg, 0)
    init_losses = model.train(
        train_set, train_objs, cfg.initial_epochs, alpha0,
        BetaSchedule.ramp(beta0, cfg.initial_epochs, cfg.beta_speed,
                          cfg.beta_floor),
        OptimizerConfig(learning_rate=cfg.learning_rate, momentum=cfg.momentum,
                        clip_norm=cfg.clip_norm, lr_decay=cfg.lr_decay,
                        lr_step=cfg.lr_step_initial, batch_size=cfg.batch_size),
        rng_train0)

    train_candidates = [make_candidate(domain, s, np.zeros(cfg.latent_size), 0)
                        for s in train_set]
    members = initial_subset(train_candidates, cfg.population, rng_subset,
                             cfg.subset_strategy)
    means, _ = model.encode_sequences([c.phenotype for c in members])
    members = [replace(c, genotype=means[i]) for i, c in enumerate(members)]
    pop = Population(members=members, generation=0)

    populations = [pop]
    metrics = []
    row = _metrics_row(0, pop, train_set, 1.0, init_losses[-1] if init_losses
                       else None, ref)
    metrics.append(row)
    _write_generation(out, 0, pop, row, model)
    hv_prev = row["front1_hypervolume"]

    for g in range(1, cfg.generations + 1):
        rng_breed = np.random.default_rng(streams[2 + 2 * g])
        rng_tune = np.random.default_rng(streams[3 + 2 * g])
        offspring, refreshed, stats = breed(pop, model, cfg, rng_breed, born=g)
        new_members = merge(refreshed, offspring, cfg.population)

        expected = min(cfg.population, len(refreshed) + len(offspring))
        if len(new_members) != expected:
            raise EngineInvariantError(
                f"generation {g}: merged population has {len(new_members)} "
                f"members, expected {expected}")
        _check_elitism(pop, new_members)

        pop = Population(members=new_members, generation=g)
        losses = None
        if cfg.finetune:
            alpha_g, beta_g = _phase_weights(cfg, g)
            # Fine-tune on the distinct phenotypes: at desk scale a population
            # accumulates exact clones, and training on the raw multiset
            # collapses the model onto a handful of sequences.
            seen = {}
            for c in pop.members:
                seen.setdefault(c.phenotype, c)
            tune_members = list(seen.values())
            tune_losses = model.train(
                [c.phenotype for c in tune_members],
                np.vstack([c.objectives for c in tune_members]),
                cfg.finetune_epochs, alpha_g,
                BetaSchedule.ramp(beta_g, cfg.finetune_epochs, cfg.beta_speed,
                                  cfg.beta_floor),
                OptimizerConfig(learning_rate=cfg.finetune_learning_rate,
                                momentum=cfg.momentum, clip_norm=cfg.clip_norm,
                                lr_decay=cfg.lr_decay,
                                lr_step=cfg.lr_step_finetune,
                                batch_size=cfg.batch_size),
                rng_tune)
            losses = tune_losses[-1] if tune_losses else None

        row = _metrics_row(g, pop, train_set, stats.validity_fragments, losses,
                           ref)
        if row["front1_hypervolume"] < hv_prev - 1e-12:
            raise EngineInvariantError(
                f"generation {g}: rank-1 hypervolume decreased from "
                f"{hv_prev} to {row['front1_hypervolume']}")
        hv_prev = row["front1_hypervolume"]
        metrics.append(row)
        populations.append(pop)
        _write_generation(out, g, pop, row, model)

    return RunResult(out_dir=out, populations=populations, metrics=metrics,
                     train_set=train_set, model=model)


def _write_generation(out: Path, g: int, pop: Population, row: dict,
                      model: SequenceVae) -> None:
    gen_dir = out / f"gen_{g}"
    gen_dir.mkdir(parents=True, exist_ok=True)
    _write_population(gen_dir / "population.jsonl", pop)
    _write_metrics(gen_dir / "metrics.csv", row)
    _write_front(gen_dir / "front.csv", pop.members)
    model.save(gen_dir / "model.bin")
