"""Low-discrepancy point generator with optional Owen-style scrambling.

Points are produced in direct index order (no Gray-code reordering), so
dimension 0 of the unscrambled sequence is exactly the base-2 radical
inverse of the point index. Scrambling flips each output digit according to
a hash of the digit's prefix path, which preserves the dyadic
equidistribution structure while randomizing the points.
"""

from __future__ import annotations

import numpy as np

from ._sobol_data import MAX_DIM, POLY_MVALUES

N_BITS = 30
_SCALE = 1.0 / (1 << N_BITS)

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)


def _splitmix64(x: np.ndarray) -> np.ndarray:
    """Stateless 64-bit mixer (splitmix64 finalizer)."""
    with np.errstate(over="ignore"):
        z = (x + _GOLDEN).astype(_U64)
        z ^= z >> _U64(30)
        z *= _U64(0xBF58476D1CE4E5B9)
        z ^= z >> _U64(27)
        z *= _U64(0x94D049BB133111EB)
        z ^= z >> _U64(31)
    return z


def _direction_integers(dim: int) -> np.ndarray:
    """Direction numbers of one dimension as left-aligned N_BITS integers."""
    poly, m_init = POLY_MVALUES[dim]
    degree = poly.bit_length() - 1
    if degree == 0:
        m = [1] * N_BITS
    else:
        m = list(m_init)
        while len(m) < N_BITS:
            i = len(m)
            new = m[i - degree] ^ (m[i - degree] << degree)
            for j in range(1, degree):
                if (poly >> (degree - j)) & 1:
                    new ^= m[i - j] << j
            m.append(new)
    return np.array([m[j] << (N_BITS - j - 1) for j in range(N_BITS)], dtype=_U64)


class SobolSequence:
    """Generates points of a base-2 digital sequence in [0, 1)^dim.

    With a scramble seed, each dimension receives an independent Owen-style
    nested digit scramble derived from that seed; without one the raw
    sequence (whose first point is the origin) is returned.
    """

    def __init__(self, dim: int, scramble_seed: int | None = None):
        if not 1 <= dim <= MAX_DIM:
            raise ValueError(f"dim must be in [1, {MAX_DIM}]")
        self.dim = dim
        self.scramble_seed = scramble_seed
        self._v = [_direction_integers(d) for d in range(dim)]
        self._next_index = 0
        if scramble_seed is not None:
            base = _splitmix64(np.array([scramble_seed], dtype=_U64))[0]
            self._dim_keys = _splitmix64(base + np.arange(dim, dtype=_U64))
        else:
            self._dim_keys = None

    def _raw_integers(self, start: int, count: int, dim: int) -> np.ndarray:
        idx = np.arange(start, start + count, dtype=_U64)
        acc = np.zeros(count, dtype=_U64)
        v = self._v[dim]
        for bit in range(max(int(start + count - 1).bit_length(), 1)):
            on = (idx >> _U64(bit)) & _U64(1)
            acc ^= on * v[bit]
        return acc

    def _owen_scramble(self, x: np.ndarray, dim: int) -> np.ndarray:
        key = self._dim_keys[dim]
        out = x.copy()
        with np.errstate(over="ignore"):
            for bit in range(N_BITS):
                # Permutation of digit `bit` conditioned on the more
                # significant digits of the unscrambled point.
                prefix = x >> _U64(N_BITS - bit)
                h = _splitmix64(key ^ _splitmix64(prefix + _U64(bit + 1) * _GOLDEN))
                out ^= (h & _U64(1)) << _U64(N_BITS - 1 - bit)
        return out

    def generate(self, count: int) -> np.ndarray:
        """The next `count` points, shape (count, dim), values in [0, 1)."""
        if count < 0:
            raise ValueError("count must be >= 0")
        start = self._next_index
        self._next_index += count
        out = np.empty((count, self.dim))
        for d in range(self.dim):
            ints = self._raw_integers(start, count, d)
            if self._dim_keys is not None:
                ints = self._owen_scramble(ints, d)
            out[:, d] = ints.astype(np.float64) * _SCALE
        return out


def map_to_box(points: np.ndarray, low: float, high: float) -> np.ndarray:
    """Affinely map unit-cube points into [low, high]^dim."""
    if not high > low:
        raise ValueError("box must satisfy high > low")
    return low + (high - low) * points
