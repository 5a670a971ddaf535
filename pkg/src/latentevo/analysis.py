"""Front quality analysis: exact hypervolume, quasi-random search baseline,
pooled-front survival comparison, and distribution summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sobol
from .domain import ToyDomain, token_complexity, token_polarity, token_weight
from .pareto import as_objective_matrix, nondominated_sort

LATENT_BOX = 3.0  # half-width of the latent search box for the baseline


def _pareto_filter(arr: np.ndarray) -> np.ndarray:
    """Rows of `arr` not dominated by any other row."""
    keep = np.ones(arr.shape[0], dtype=bool)
    for i in range(arr.shape[0]):
        if not keep[i]:
            continue
        le = (arr <= arr[i]).all(axis=1)
        lt = (arr < arr[i]).any(axis=1)
        dominators = le & lt
        if dominators.any():
            keep[i] = False
    return arr[keep]


def _hv2d(points: np.ndarray, ref: np.ndarray) -> float:
    """Exact 2-D hypervolume by a staircase sweep (points dominate ref)."""
    pts = _pareto_filter(points)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    vol = 0.0
    prev_y = ref[1]
    for x, y in pts:
        vol += (ref[0] - x) * (prev_y - y)
        prev_y = y
    return vol


def hypervolume(front, ref) -> float:
    """Lebesgue measure of the union of boxes [point, ref], K <= 3.

    Every front point must strictly dominate the reference point. Computed
    exactly: directly for K=1, by a staircase sweep for K=2, and by slicing
    along the third axis for K=3.
    """
    arr = as_objective_matrix(front)
    ref = np.asarray(ref, dtype=float)
    if ref.shape != (arr.shape[1],):
        raise ValueError("reference point length must match the objectives")
    if arr.shape[1] > 3:
        raise ValueError("hypervolume supports at most 3 objectives")
    if not (arr < ref).all():
        raise ValueError("every front point must strictly dominate the reference")
    if arr.shape[1] == 1:
        return float(ref[0] - arr[:, 0].min())
    if arr.shape[1] == 2:
        return float(_hv2d(arr, ref))
    order = np.argsort(arr[:, 2], kind="stable")
    pts = arr[order]
    levels = np.unique(pts[:, 2])
    vol = 0.0
    for i, z in enumerate(levels):
        upper = levels[i + 1] if i + 1 < len(levels) else ref[2]
        active = pts[pts[:, 2] <= z][:, :2]
        vol += _hv2d(active, ref[:2]) * (upper - z)
    return float(vol)


@dataclass(frozen=True)
class SourceSurvival:
    name: str
    front_size: int
    survivors: int

    @property
    def percentage(self) -> float:
        return 100.0 * self.survivors / self.front_size


@dataclass(frozen=True)
class FrontComparison:
    """Per-source membership in the rank-1 front of the pooled points."""

    sources: list[SourceSurvival]

    def by_name(self, name: str) -> SourceSurvival:
        for s in self.sources:
            if s.name == name:
                return s
        raise KeyError(name)

    def rows(self) -> list[tuple[str, int, int, float]]:
        return [(s.name, s.front_size, s.survivors, s.percentage)
                for s in self.sources]


def compare_fronts(sources: dict) -> FrontComparison:
    """Pool named fronts, re-sort, and report each source's rank-1 survival.

    Duplicated points never dominate each other, so identical points from
    two sources can both survive.
    """
    if len(sources) < 2:
        raise ValueError("front comparison needs at least 2 sources")
    mats = {}
    for name, front in sources.items():
        mats[name] = as_objective_matrix(front)
    widths = {m.shape[1] for m in mats.values()}
    if len(widths) != 1:
        raise ValueError("all sources must share one objective count")
    pooled = np.vstack(list(mats.values()))
    assignment = nondominated_sort(pooled)
    survived = assignment.rank == 1
    out = []
    offset = 0
    for name, mat in mats.items():
        n = mat.shape[0]
        out.append(SourceSurvival(name=name, front_size=n,
                                  survivors=int(survived[offset : offset + n].sum())))
        offset += n
    return FrontComparison(sources=out)


@dataclass
class BaselineResult:
    """Quasi-random latent search outcome."""

    sequences: list[tuple[int, ...]]
    objectives: np.ndarray  # (n_valid, K)
    hv_trace: list[float]   # after the initial design, then after each batch
    reference: np.ndarray
    n_evaluated: int


def sobol_baseline(model, n_init: int, n_batches: int, batch: int,
                   domain: ToyDomain, rng) -> BaselineResult:
    """Search the latent box with a scrambled low-discrepancy design.

    Draws n_init points plus n_batches further batches from an Owen-scrambled
    sequence over [-LATENT_BOX, LATENT_BOX]^L, decodes them by sampling,
    evaluates the valid decodes, and records the cumulative rank-1-front
    hypervolume after the initial design and after every batch.
    """
    if n_init < 1 or n_batches < 0 or batch < 1:
        raise ValueError("need n_init >= 1, n_batches >= 0, batch >= 1")
    seq = sobol.SobolSequence(model.latent_size,
                              scramble_seed=int(rng.integers(2**63)))
    ref = domain.reference_point()
    sequences: list[tuple[int, ...]] = []
    objectives: list[np.ndarray] = []
    trace: list[float] = []

    def evaluate(n_points: int):
        pts = sobol.map_to_box(seq.generate(n_points), -LATENT_BOX, LATENT_BOX)
        for phenotype in model.decode_batch(pts, rng, greedy=False):
            if domain.is_valid(phenotype):
                sequences.append(phenotype)
                objectives.append(domain.objectives(phenotype))

    def front_hv() -> float:
        if not objectives:
            return 0.0
        front = _pareto_filter(np.vstack(objectives))
        return hypervolume(front, ref)

    evaluate(n_init)
    trace.append(front_hv())
    for _ in range(n_batches):
        evaluate(batch)
        trace.append(front_hv())
    objs = np.vstack(objectives) if objectives else np.empty((0, domain.n_objectives))
    return BaselineResult(sequences=sequences, objectives=objs, hv_trace=trace,
                          reference=ref, n_evaluated=n_init + n_batches * batch)


# Fixed histogram ranges covering every reachable value in the toy domain.
DISTRIBUTION_RANGES = {
    "q": (0.0, 1.0),
    "s": (1.0, 8.2),
    "lp": (-5.0, 5.0),
    "length": (2.0, 10.0),
    "sum_weight": (2.0, 50.0),
    "sum_complexity": (2.0, 70.0),
    "sum_polarity": (-50.0, 50.0),
}


def distribution_summary(pop, bins: int = 20) -> dict[str, list[tuple[float, int]]]:
    """Fixed-width histograms of properties and structural features.

    `pop` is a sequence of candidates exposing .raw_properties and
    .phenotype, or of raw token sequences. Returns, per feature, a list of
    (bin lower edge, count) pairs whose counts sum to the population size.
    """
    if len(pop) == 0:
        raise ValueError("population must be non-empty")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    domain = ToyDomain()
    values: dict[str, list[float]] = {k: [] for k in DISTRIBUTION_RANGES}
    for member in pop:
        if hasattr(member, "phenotype"):
            seq, props = member.phenotype, member.raw_properties
        else:
            seq = tuple(member)
            props = domain.properties(seq)
        values["q"].append(props.q)
        values["s"].append(props.s)
        values["lp"].append(props.lp)
        values["length"].append(float(len(seq)))
        values["sum_weight"].append(float(sum(token_weight(t) for t in seq)))
        values["sum_complexity"].append(float(sum(token_complexity(t) for t in seq)))
        values["sum_polarity"].append(float(sum(token_polarity(t) for t in seq)))
    out = {}
    for name, vals in values.items():
        counts, edges = np.histogram(vals, bins=bins, range=DISTRIBUTION_RANGES[name])
        out[name] = [(float(edges[i]), int(counts[i])) for i in range(bins)]
    return out
