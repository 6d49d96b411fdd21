"""Uniform sample matrices: Mersenne Twister, Sobol' and Owen-scrambled Sobol'.

All matrices are stored as ``(dims, count)`` arrays with entries strictly
inside (0, 1).  Callers that build paths usually want ``values.T``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

BITS = 32
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SampleMatrix:
    values: np.ndarray
    source: str  # "pseudo", "sobol" or "scrambled"
    replicate: int | None = None

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("sample matrix must be 2-D (dims, count)")

    @property
    def dims(self) -> int:
        return self.values.shape[0]

    @property
    def count(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ScrambleSeed:
    seed: int
    replicate: int


def _check_shape(dims: int, count: int) -> None:
    if dims < 1 or count < 1:
        raise ValueError(f"dims and count must be >= 1, got dims={dims}, count={count}")


def pseudo_uniforms(dims: int, count: int, seed: int) -> SampleMatrix:
    """i.i.d. uniforms from MT19937, mapped onto the open grid (k + 1/2) 2^-52."""
    _check_shape(dims, count)
    rng = np.random.Generator(np.random.MT19937(seed))
    k = rng.integers(0, 1 << 52, size=(dims, count), dtype=np.uint64)
    return SampleMatrix((k.astype(np.float64) + 0.5) * 2.0**-52, "pseudo")


def read_direction_numbers(path: str | Path) -> list[tuple[int, int, list[int]]]:
    """Parse a ``d s a m_1 ... m_s`` table; a header line is skipped if present."""
    rows = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or not parts[0].isdigit():
                continue
            d, s, a, *m = (int(p) for p in parts)
            if len(m) != s:
                raise ValueError(f"dimension {d}: expected {s} initial numbers, got {len(m)}")
            rows.append((s, a, m))
    return rows


@lru_cache(maxsize=None)
def _default_table() -> tuple:
    ref = resources.files("rqmc_greeks") / "data" / "new-joe-kuo-6.1024.txt"
    with resources.as_file(ref) as p:
        return tuple(read_direction_numbers(p))


def _direction_integers(s: int, a: int, m: list[int]) -> np.ndarray:
    v = np.zeros(BITS, dtype=np.uint64)
    mm = list(m)
    for k in range(s, BITS):
        new = mm[k - s] ^ (mm[k - s] << s)
        for i in range(1, s):
            if (a >> (s - 1 - i)) & 1:
                new ^= mm[k - i] << i
        mm.append(new)
    for k in range(BITS):
        v[k] = mm[k] << (BITS - 1 - k)
    return v


@dataclass(frozen=True)
class SobolGenerator:
    """Sobol' direction integers, 32 bits per dimension.

    Dimension 1 is the van der Corput sequence; the rest come from the table.
    The object is immutable, so concurrent use is safe.
    """

    table_path: str | None = None
    directions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rows = read_direction_numbers(self.table_path) if self.table_path else _default_table()
        v = np.empty((len(rows) + 1, BITS), dtype=np.uint64)
        v[0] = [1 << (BITS - 1 - k) for k in range(BITS)]
        for j, (s, a, m) in enumerate(rows, start=1):
            v[j] = _direction_integers(s, a, m)
        v.setflags(write=False)
        object.__setattr__(self, "directions", v)

    @property
    def max_dims(self) -> int:
        return self.directions.shape[0]

    def integers(self, dims: int, start: int, count: int) -> np.ndarray:
        """Raw 32-bit digits of points ``start .. start+count-1`` (natural order)."""
        _check_shape(dims, count)
        if dims > self.max_dims:
            raise ValueError(f"dims={dims} exceeds direction-number table ({self.max_dims})")
        idx = np.arange(start, start + count, dtype=np.uint64)
        out = np.zeros((dims, count), dtype=np.uint64)
        for k in range(int(idx[-1]).bit_length()):
            bit = ((idx >> np.uint64(k)) & np.uint64(1)).astype(bool)
            out[:, bit] ^= self.directions[:dims, k : k + 1]
        return out


_GENERATOR: SobolGenerator | None = None


def default_generator() -> SobolGenerator:
    global _GENERATOR
    if _GENERATOR is None:
        _GENERATOR = SobolGenerator()
    return _GENERATOR


def sobol_uniforms(dims: int, count: int, generator: SobolGenerator | None = None) -> SampleMatrix:
    """First ``count`` Sobol' points after the origin (indices 1..count)."""
    gen = generator or default_generator()
    x = gen.integers(dims, 1, count)
    return SampleMatrix(x.astype(np.float64) * 2.0**-BITS, "sobol")


def _mix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def owen_scramble(
    dims: int,
    count: int,
    scramble: ScrambleSeed,
    generator: SobolGenerator | None = None,
) -> SampleMatrix:
    """Nested uniform (Owen) scrambling of Sobol' points ``0 .. count-1``.

    The flip applied to digit ``b`` of a coordinate is a hash of
    ``(seed, replicate, dimension, b, leading b digits)``, which is a random
    permutation tree generated lazily.  Digits below bit 32 are filled with
    hashed random bits, so the origin maps to an interior point.
    """
    gen = generator or default_generator()
    x = gen.integers(dims, 0, count)
    y = np.empty_like(x)
    tail = np.empty_like(x)
    base = _mix64(_mix64(scramble.seed & _MASK64) ^ (scramble.replicate & _MASK64))
    for j in range(dims):
        xj = x[j]
        yj = xj.copy()
        key_j = _mix64(base ^ j)
        for b in range(BITS):
            prefix = xj >> np.uint64(BITS - b) if b else np.zeros_like(xj)
            h = _mix64_array(prefix ^ np.uint64(_mix64(key_j ^ (b << 40))))
            yj ^= (h >> np.uint64(63)) << np.uint64(BITS - 1 - b)
        y[j] = yj
        tail[j] = _mix64_array(xj ^ np.uint64(_mix64(key_j ^ (BITS << 40)))) >> np.uint64(44)
    u = (y.astype(np.float64) * 2.0**20 + tail.astype(np.float64) + 0.5) * 2.0**-52
    return SampleMatrix(u, "scrambled", scramble.replicate)
