"""Key derivation from the fused template.

Distinct components are taken in first-occurrence order, resized to k entries
(truncation, or padding with the rounded mean), and reduced to parity bits.
"""

from dataclasses import dataclass

KEY_BITS = 256


@dataclass(frozen=True)
class KeyBits:
    """A k-bit key as an ordered bit sequence; bit 0 is the most significant."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) < 1:
            raise ValueError("key must contain at least one bit")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("key bits must be 0 or 1")

    @property
    def k(self) -> int:
        return len(self.bits)

    def bit_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    def hex_string(self) -> str:
        value = int(self.bit_string(), 2)
        return format(value, f"0{(self.k + 3) // 4}x")


def distinct_components(template) -> list[int]:
    """Drop duplicates, keeping the first occurrence of each value in order."""
    if len(template) < 1:
        raise ValueError("template must be non-empty")
    return list(dict.fromkeys(template))


def resize(distinct, k: int) -> list[int]:
    """Resize to exactly k components.

    With d >= k the first k components are kept; otherwise the d components
    are followed by k - d copies of the mean, rounded half-up.
    """
    d = len(distinct)
    if d < 1:
        raise ValueError("distinct vector must be non-empty")
    if k < 1:
        raise ValueError("k must be at least 1")
    values = list(distinct)
    if d >= k:
        return values[:k]
    fill = (2 * sum(values) + d) // (2 * d)  # exact round-half-up of the mean
    return values + [fill] * (k - d)


def derive_key(components) -> KeyBits:
    """Bit i of the key is components[i] mod 2."""
    return KeyBits(bits=tuple(int(v) % 2 for v in components))


def generate_key(template, k: int = KEY_BITS) -> KeyBits:
    """Full derivation: distinct components, resize to k, parity bits."""
    return derive_key(resize(distinct_components(template), k))
