"""Feature-level fusion of minutiae coordinates and iris texture samples.

The four feature vectors are shuffled with a seeded generator, interleaved by
insert-concatenation, and merged with a bitwise NOR at a fixed 16-bit width to
form the template vector.  Every step is integer-exact and reproducible.
"""

from dataclasses import dataclass

import numpy as np

LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
U64_MASK = (1 << 64) - 1
SHUFFLE_PRIME = 104729   # fixed "large integer" multiplier for index mixing
WORD_MAX = 65535         # 16-bit component width


@dataclass(frozen=True)
class FeatureVectors:
    """Vectorized features: minutiae x/y coordinates and quantized iris parts.

    f1/f2 share length n >= 1, i1/i2 share length m >= 1; every element must
    fit the 16-bit component range.
    """

    f1: tuple[int, ...]
    f2: tuple[int, ...]
    i1: tuple[int, ...]
    i2: tuple[int, ...]

    def __post_init__(self):
        if len(self.f1) != len(self.f2) or len(self.f1) < 1:
            raise ValueError("f1 and f2 must share a length of at least 1")
        if len(self.i1) != len(self.i2) or len(self.i1) < 1:
            raise ValueError("i1 and i2 must share a length of at least 1")
        for name in ("f1", "f2", "i1", "i2"):
            values = getattr(self, name)
            if any(not (0 <= v <= WORD_MAX) for v in values):
                raise ValueError(f"{name} has elements outside [0, {WORD_MAX}]")

    @property
    def n(self) -> int:
        return len(self.f1)

    @property
    def m(self) -> int:
        return len(self.i1)


def quantize_iris(real_parts, imag_parts) -> tuple[list[int], list[int]]:
    """Map real-valued features from [-1, 1] onto [0, 65535], round half-up.

    Values outside [-1, 1] clamp to the range ends; non-finite values are
    rejected.
    """
    out = []
    for values in (real_parts, imag_parts):
        a = np.asarray(values, dtype=np.float64)
        if not np.all(np.isfinite(a)):
            raise ValueError("iris feature values must be finite")
        q = np.floor((a + 1.0) / 2.0 * WORD_MAX + 0.5)
        out.append([int(v) for v in np.clip(q, 0, WORD_MAX)])
    return out[0], out[1]


def prng_next(state: int) -> tuple[int, int]:
    """One step of the 64-bit linear congruential generator: (value, new state)."""
    new = (LCG_MULTIPLIER * state + LCG_INCREMENT) & U64_MASK
    return new, new


def shuffle(v, randoms) -> list[int]:
    """Swap-shuffle v using the random sequence (wrapping when shorter).

    Step i swaps positions i and j where
    j = ((randoms[i mod |randoms|] * SHUFFLE_PRIME) mod 2^64) mod |v|.
    The output is always a permutation of the input.
    """
    out = list(v)
    if not out:
        raise ValueError("cannot shuffle an empty vector")
    if len(randoms) == 0:
        raise ValueError("random vector must not be empty")
    size = len(out)
    for i in range(size):
        j = ((randoms[i % len(randoms)] * SHUFFLE_PRIME) & U64_MASK) % size
        out[i], out[j] = out[j], out[i]
    return out


def shuffle_chain(features: FeatureVectors, seed: int
                  ) -> tuple[list[int], list[int], list[int], list[int]]:
    """Shuffle f1 with seeded randomness, then chain each result as the next source."""
    state = seed & U64_MASK
    randoms = []
    for _ in range(features.n):
        value, state = prng_next(state)
        randoms.append(value)
    s1 = shuffle(features.f1, randoms)
    s2 = shuffle(features.f2, s1)
    s3 = shuffle(features.i1, s2)
    s4 = shuffle(features.i2, s3)
    return s1, s2, s3, s4


def concatenate(sa, sb) -> list[int]:
    """Interleave by insertion: element i of sa is inserted at index min(i, filled).

    Output length is len(sa) + len(sb) and its multiset is the union of both
    inputs.
    """
    if len(sa) < 1 or len(sb) < 1:
        raise ValueError("both vectors must be non-empty")
    out = list(sb)
    for i, value in enumerate(sa):
        out.insert(min(i, len(out)), value)
    return out


def merge_nor(m1, m2) -> list[int]:
    """Elementwise 16-bit NOR: NOT(a OR b) over the fixed component width."""
    if len(m1) != len(m2):
        raise ValueError("merge inputs must have equal length")
    out = []
    for a, b in zip(m1, m2):
        if not (0 <= a <= WORD_MAX and 0 <= b <= WORD_MAX):
            raise ValueError(f"components outside [0, {WORD_MAX}]")
        out.append(~(a | b) & WORD_MAX)
    return out


def fuse(features: FeatureVectors, seed: int) -> list[int]:
    """Build the fused template: shuffle chain, two concatenations, NOR merge.

    The result has length n + m with every component in [0, 65535].
    """
    s1, s2, s3, s4 = shuffle_chain(features, seed)
    m1 = concatenate(s1, s3)
    m2 = concatenate(s2, s4)
    return merge_nor(m1, m2)


def format_template(template) -> str:
    """One decimal component per line, LF endings."""
    return "".join(f"{v}\n" for v in template)


def parse_template(text: str) -> list[int]:
    return [int(line) for line in text.split()]
