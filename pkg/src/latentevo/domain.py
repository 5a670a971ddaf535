"""Deterministic fragment-sequence domain used as the design simulator.

Sequences are tuples of token ids from a 16-symbol fragment alphabet. Each
token carries three analytic attributes (weight, complexity, polarity) from
which three competing objectives are computed: a drug-likeness-style score q
to maximize, a synthesis-cost-style score s to minimize, and a
lipophilicity-style score lp to minimize. Canonical objective vectors are
(-q, s, lp) so that everything is minimized.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

N_FRAGMENTS = 16
EOS = 16
PAD = 17
VOCAB_SIZE = 18

MIN_LEN = 2
MAX_LEN = 10
MAX_ADJACENT_GAP = 8

N_OBJECTIVES = 3

# Thresholds defining a "high-quality" sequence; a calibration choice of the
# toy domain, not a derived quantity.
HQ_Q_MIN = 0.88
HQ_S_MAX = 3.0
HQ_LP_MAX = 0.0


def token_weight(i: int) -> int:
    return i % 5 + 1


def token_complexity(i: int) -> int:
    return i % 7 + 1


def token_polarity(i: int) -> int:
    return i % 11 - 5


@dataclass(frozen=True)
class PropertyTriple:
    """q in (0, 1] (maximize), s > 0 (minimize), lp (minimize)."""

    q: float
    s: float
    lp: float

    def to_objectives(self) -> np.ndarray:
        """Canonical all-minimize orientation: (-q, s, lp)."""
        return np.array([-self.q, self.s, self.lp])

    def is_high_quality(self) -> bool:
        return self.q >= HQ_Q_MIN and self.s <= HQ_S_MAX and self.lp <= HQ_LP_MAX


@dataclass(frozen=True)
class PopulationQuality:
    validity_smiles: float
    validity_fragments: float
    novelty: float
    diversity: float


class ToyDomain:
    """Validity rules and analytic property formulas for fragment sequences."""

    n_objectives = N_OBJECTIVES
    max_len = MAX_LEN
    vocab_size = VOCAB_SIZE

    def is_valid(self, seq) -> bool:
        """Length in [2, 10], tokens in [0, 16), adjacent ids within 8 of each other."""
        n = len(seq)
        if not MIN_LEN <= n <= MAX_LEN:
            return False
        for tok in seq:
            if not 0 <= tok < N_FRAGMENTS:
                return False
        for a, b in zip(seq, seq[1:]):
            if abs(a - b) > MAX_ADJACENT_GAP:
                return False
        return True

    def properties(self, seq) -> PropertyTriple:
        """Analytic property triple of a valid sequence.

        q = exp(-(mean weight - 3)^2 / 2), s = mean complexity + 0.1 n,
        lp = mean polarity.
        """
        if not self.is_valid(seq):
            raise ValueError(f"invalid sequence: {list(seq)}")
        n = len(seq)
        mean_w = sum(token_weight(t) for t in seq) / n
        mean_c = sum(token_complexity(t) for t in seq) / n
        mean_p = sum(token_polarity(t) for t in seq) / n
        return PropertyTriple(
            q=math.exp(-((mean_w - 3.0) ** 2) / 2.0),
            s=mean_c + 0.1 * n,
            lp=mean_p,
        )

    def objectives(self, seq) -> np.ndarray:
        return self.properties(seq).to_objectives()

    def reference_point(self) -> np.ndarray:
        """A point strictly dominated by every valid sequence's objectives.

        Bounds: -q in [-1, 0), s in [1.2, 8.0], lp in [-5, 5]; a 0.1 margin
        is added per axis. Fixing this point makes hypervolume traces
        comparable across a run.
        """
        return np.array([0.1, 8.1, 5.1])

    def enumerate_valid(self, lengths=(2, 3)) -> list[tuple[int, ...]]:
        """All valid sequences of the given lengths, lexicographically ordered."""
        out = []
        for n in lengths:
            for seq in itertools.product(range(N_FRAGMENTS), repeat=n):
                if self.is_valid(seq):
                    out.append(seq)
        return out

    def training_corpus(self, rng, holdout_fraction: float = 0.1,
                        frontier_depth: int = 4):
        """Valid length-2 and length-3 sequences, split into (train, held_out).

        Two slices are withheld: every sequence in the first `frontier_depth`
        non-domination ranks of the enumeration (the undiscovered design
        frontier the search is supposed to reach, mirroring how real design
        corpora contain almost no frontier-quality entries), and a random
        `holdout_fraction` of the remainder chosen by a seeded permutation so
        the split is reproducible from the run seed.
        """
        from .pareto import nondominated_sort

        if not 0.0 <= holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must be in [0, 1)")
        if frontier_depth < 0:
            raise ValueError("frontier_depth must be >= 0")
        all_seqs = self.enumerate_valid()
        if frontier_depth:
            ranks = nondominated_sort([self.objectives(s) for s in all_seqs]).rank
            frontier = [s for s, r in zip(all_seqs, ranks) if r <= frontier_depth]
            body = [s for s, r in zip(all_seqs, ranks) if r > frontier_depth]
        else:
            frontier, body = [], list(all_seqs)
        perm = rng.permutation(len(body))
        n_held = int(round(holdout_fraction * len(body)))
        held_idx = set(int(i) for i in perm[:n_held])
        train = [body[i] for i in range(len(body)) if i not in held_idx]
        held = frontier + [body[int(i)] for i in perm[:n_held]]
        return train, held


def population_metrics(pop, train_set) -> PopulationQuality:
    """Population-level quality ratios.

    validity_fragments is the fraction of the given sequences that are valid
    (1.0 for a real population, informative when called on raw decodes);
    validity_smiles is 1.0 by construction because invalid sequences never
    enter a population. Novelty is the fraction of sequences absent from the
    training data; diversity the fraction of unique sequences. Both are
    computed over all given sequences against the population size.
    """
    if len(pop) == 0:
        raise ValueError("population must be non-empty")
    domain = ToyDomain()
    seqs = [tuple(s) for s in pop]
    train = {tuple(s) for s in train_set}
    n = len(seqs)
    n_valid = sum(1 for s in seqs if domain.is_valid(s))
    novel = sum(1 for s in seqs if s not in train)
    unique = len(set(seqs))
    return PopulationQuality(
        validity_smiles=1.0,
        validity_fragments=n_valid / n,
        novelty=novel / n,
        diversity=unique / n,
    )


def gen_metrics_sampled(model, n: int, train_set, rng) -> PopulationQuality:
    """Quality ratios of n sequences decoded from standard-normal latents.

    Ratios follow the generation-based convention: validity_fragments over
    all decodes, novelty and diversity over the valid decodes only (0.0 when
    nothing decodes valid).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    domain = ToyDomain()
    z = rng.standard_normal((n, model.latent_size))
    seqs = [tuple(s) for s in model.decode_batch(z, rng, greedy=False)]
    train = {tuple(s) for s in train_set}
    valid = [s for s in seqs if domain.is_valid(s)]
    if not valid:
        return PopulationQuality(1.0, 0.0, 0.0, 0.0)
    novel = sum(1 for s in valid if s not in train)
    return PopulationQuality(
        validity_smiles=1.0,
        validity_fragments=len(valid) / n,
        novelty=novel / len(valid),
        diversity=len(set(valid)) / len(valid),
    )
