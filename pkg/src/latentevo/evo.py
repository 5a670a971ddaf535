"""Latent-space evolutionary operators: selection, recombination, mutation.

All operators draw from an explicit random generator so that a run is a pure
function of its seed. Draw order is part of the contract and documented per
operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pareto import crowded_less

CROSSOVER_KINDS = ("linear", "discrete")


@dataclass(frozen=True)
class EvoConfig:
    """Operator parameters.

    p_s: probability that a tournament keeps its crowded-comparison winner.
    p_m: probability that a child receives a single-coordinate mutation.
    crossover_kind: "linear" or "discrete".
    d: expansion constant of the linear crossover (children may lie up to
       d beyond either parent along the parent line).
    """

    p_s: float = 0.95
    p_m: float = 0.01
    crossover_kind: str = "linear"
    d: float = 0.25

    def __post_init__(self):
        if not 0.5 < self.p_s <= 1.0:
            raise ValueError(f"p_s must be in (0.5, 1], got {self.p_s}")
        if not 0.0 <= self.p_m < 1.0:
            raise ValueError(f"p_m must be in [0, 1), got {self.p_m}")
        if self.crossover_kind not in CROSSOVER_KINDS:
            raise ValueError(f"crossover_kind must be one of {CROSSOVER_KINDS}")


def _check_latent(z, name: str = "latent") -> np.ndarray:
    arr = np.asarray(z, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    return arr


def tournament_select(pop, count: int, cfg: EvoConfig, rng) -> list[np.ndarray]:
    """Pick `count` parents by binary tournament.

    Each tournament draws two distinct member indices uniformly, then one
    uniform variate u: the crowded-comparison better member wins when
    u < p_s, the worse one otherwise. An incomparable pair is decided by
    the same u as a fair coin. Exactly three draws per tournament (two
    index draws, one uniform). A one-member population short-circuits to
    that member without consuming draws. Distinct tournaments may return
    the same member, so a breeding pair can be a self-pair.

    `pop` is a sequence of (latent, rank, crowding) triples.
    """
    if len(pop) == 0:
        raise ValueError("population must be non-empty")
    if count < 1:
        raise ValueError("count must be >= 1")
    n = len(pop)
    if n == 1:
        return [np.asarray(pop[0][0], dtype=float) for _ in range(count)]
    parents = []
    for _ in range(count):
        i = int(rng.integers(0, n))
        j = (i + 1 + int(rng.integers(0, n - 1))) % n
        u = float(rng.random())
        key_i = (pop[i][1], pop[i][2])
        key_j = (pop[j][1], pop[j][2])
        if crowded_less(key_i, key_j):
            winner = i if u < cfg.p_s else j
        elif crowded_less(key_j, key_i):
            winner = j if u < cfg.p_s else i
        else:
            winner = i if u < 0.5 else j
        parents.append(np.asarray(pop[winner][0], dtype=float))
    return parents


def crossover_linear(zp1, zp2, cfg: EvoConfig, rng) -> tuple[np.ndarray, np.ndarray]:
    """Blend two parents along their connecting line.

    Draws alpha1 then alpha2 from Uniform(0,1); child m is
    zp1 + r_m (zp2 - zp1) with r_m = -d + (1 + 2d) alpha_m, so r_m spans
    [-d, 1+d].
    """
    p1 = _check_latent(zp1, "zp1")
    p2 = _check_latent(zp2, "zp2")
    if p1.shape != p2.shape:
        raise ValueError("parents must have equal latent length")
    r1 = -cfg.d + (1.0 + 2.0 * cfg.d) * float(rng.random())
    r2 = -cfg.d + (1.0 + 2.0 * cfg.d) * float(rng.random())
    diff = p2 - p1
    return p1 + r1 * diff, p1 + r2 * diff


def crossover_discrete(zp1, zp2, rng) -> tuple[np.ndarray, np.ndarray]:
    """Swap prefix/suffix at a random cut point l drawn from {1, ..., L-1}.

    Child 1 takes the first l coordinates of zp1 and the rest of zp2;
    child 2 is the mirror image.
    """
    p1 = _check_latent(zp1, "zp1")
    p2 = _check_latent(zp2, "zp2")
    if p1.shape != p2.shape:
        raise ValueError("parents must have equal latent length")
    if p1.size < 2:
        raise ValueError("discrete crossover needs latent length >= 2")
    cut = int(rng.integers(1, p1.size))
    c1 = np.concatenate([p1[:cut], p2[cut:]])
    c2 = np.concatenate([p2[:cut], p1[cut:]])
    return c1, c2


def mutate(z, cfg: EvoConfig, rng) -> np.ndarray:
    """With probability p_m, replace one uniformly chosen coordinate by N(0,1).

    Always consumes one uniform gate draw; on mutation consumes one index
    draw and one standard-normal draw. Returns a copy either way.
    """
    arr = _check_latent(z).copy()
    gate = float(rng.random())
    if gate < cfg.p_m:
        site = int(rng.integers(0, arr.size))
        arr[site] = float(rng.standard_normal())
    return arr
