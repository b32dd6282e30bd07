"""Key derivation from the fused template: dedupe, resize to k, parity bits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import InvalidInputError, InvalidParameterError

DEFAULT_KEY_BITS = 256


@dataclass(frozen=True)
class Template:
    """Fused template vector of 16-bit unsigned values."""

    values: tuple[int, ...]

    def __post_init__(self):
        if not self.values:
            raise InvalidInputError("template must be non-empty")
        if any(not 0 <= v < (1 << 16) for v in self.values):
            raise InvalidInputError("template values must be unsigned 16-bit integers")


@dataclass(frozen=True)
class DistinctVector:
    """Template values with duplicates removed, first occurrence kept."""

    values: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.values)) != len(self.values):
            raise InvalidInputError("distinct vector contains duplicates")


@dataclass(frozen=True)
class CryptoKey:
    """Ordered key bits; bit 1 is the most significant bit of byte 0."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if not self.bits or any(b not in (0, 1) for b in self.bits):
            raise InvalidInputError("key bits must be a non-empty 0/1 sequence")

    @property
    def k(self) -> int:
        return len(self.bits)

    def bitstring(self) -> str:
        return "".join(str(b) for b in self.bits)

    def to_bytes(self) -> bytes:
        """Big-endian packing, MSB-first; trailing pad bits are zero."""
        nbytes = (self.k + 7) // 8
        value = 0
        for b in self.bits:
            value = (value << 1) | b
        value <<= nbytes * 8 - self.k
        return value.to_bytes(nbytes, "big")

    def hex(self) -> str:
        return self.to_bytes().hex()


def distinct(bt: Template) -> DistinctVector:
    """Remove duplicates keeping first occurrences in order."""
    return DistinctVector(tuple(dict.fromkeys(bt.values)))


def resize(u: DistinctVector, k: int) -> list[int]:
    """Truncate to k, or pad with the rounded mean until length k."""
    if k < 1:
        raise InvalidParameterError("key length must be >= 1")
    vals = list(u.values)
    d = len(vals)
    if d >= k:
        return vals[:k]
    total = sum(vals)
    mean = (2 * total + d) // (2 * d)  # round half up, exact integer arithmetic
    return vals + [mean] * (k - d)


def derive_key(b: Sequence[int]) -> CryptoKey:
    """Parity bits: bit i = b[i] mod 2."""
    return CryptoKey(tuple(v % 2 for v in b))


def generate_key(bt: Template, k: int = DEFAULT_KEY_BITS) -> CryptoKey:
    """distinct -> resize -> parity, the full template-to-key procedure."""
    return derive_key(resize(distinct(bt), k))
