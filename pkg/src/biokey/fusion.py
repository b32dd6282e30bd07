"""Feature-level fusion of minutiae coordinates and iris texture coefficients.

Fingerprint minutiae become integer vectors F1 (x) and F2 (y); iris
coefficients are fixed-point quantized into I1 (real) and I2 (imaginary).
Each vector is shuffled by a seeded generator, fingerprint and iris vectors
are interleaved by value-driven insertion, and the two combined vectors are
merged elementwise with a w-bit NOR into the template B_T.

The pseudo-random stream is part of the wire contract: SplitMix64, with each
64-bit output mapped to [0, 1) as (u >> 11) / 2**53. Reference outputs
(first five values):

    seed 0       -> 0xE220A8397B1DCDAF 0x6E789E6AA1B965F4 0x06C45D188009454F
                    0xF88BB8A8724C81EC 0x1B39896A51A8749B
    seed 1234567 -> 0x599ED017FB08FC85 0x2C73F08458540FA5 0x883EBCE5A3F27C77
                    0x3FBEF740E9177B3F 0xE3B8346708CB5ECD

Chained shuffles reseed the generator with the FNV-1a 64-bit hash of the
prior shuffled vector (each element hashed as 8 little-endian bytes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import InsufficientFeaturesError, InvalidInputError
from .fingerprint import MinutiaeSet
from .iris import IrisTexture

MASK64 = (1 << 64) - 1
DEFAULT_BIG_M = 1_000_007  # "large integer" used by the shuffle index rule
DEFAULT_SCALE = 10_000     # fixed-point scale for iris coefficients
DEFAULT_WIDTH = 16         # bit width of template elements

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


class SplitMix64:
    """Deterministic 64-bit generator (odd-constant add, xor-shift-multiply mix)."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_unit(self) -> float:
        """Uniform in [0, 1): top 53 bits divided by 2**53."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def unit_vector(self, n: int) -> list[float]:
        return [self.next_unit() for _ in range(n)]


def fnv1a64(values: Sequence[int]) -> int:
    """FNV-1a over each value's 8 little-endian bytes."""
    h = _FNV_OFFSET
    for v in values:
        for b in int(v).to_bytes(8, "little"):
            h = ((h ^ b) * _FNV_PRIME) & MASK64
    return h


@dataclass(frozen=True)
class ShuffleRandomness:
    """Seed wrapper; identical seeds yield identical streams."""

    seed: int

    def stream(self) -> SplitMix64:
        return SplitMix64(self.seed)


@dataclass(frozen=True)
class FeatureVectors:
    f1: tuple[int, ...]  # minutiae x coordinates
    f2: tuple[int, ...]  # minutiae y coordinates
    i1: tuple[int, ...]  # quantized real parts
    i2: tuple[int, ...]  # quantized imaginary parts

    def __post_init__(self):
        if len(self.f1) != len(self.f2) or not self.f1:
            raise InvalidInputError("F1 and F2 must be equal-length and non-empty")
        if len(self.i1) != len(self.i2) or not self.i1:
            raise InvalidInputError("I1 and I2 must be equal-length and non-empty")
        for vec in (self.f1, self.f2, self.i1, self.i2):
            if any(not 0 <= v < (1 << DEFAULT_WIDTH) for v in vec):
                raise InvalidInputError("feature elements must be unsigned 16-bit integers")


@dataclass(frozen=True)
class FusionState:
    s1: tuple[int, ...]
    s2: tuple[int, ...]
    s3: tuple[int, ...]
    s4: tuple[int, ...]
    m1: tuple[int, ...] | None = None
    m2: tuple[int, ...] | None = None
    bt: tuple[int, ...] | None = None


def quantize(value: float, scale: int = DEFAULT_SCALE, width: int = DEFAULT_WIDTH) -> int:
    """q(v) = round(v * scale) mod 2^width, ties toward +inf; negatives wrap."""
    return int(math.floor(value * scale + 0.5)) % (1 << width)


def build_feature_vectors(mset: MinutiaeSet, tex: IrisTexture,
                          scale: int = DEFAULT_SCALE,
                          width: int = DEFAULT_WIDTH) -> FeatureVectors:
    """F1/F2 from minutiae in scan order, I1/I2 from quantized coefficients."""
    if len(mset) == 0 or len(tex) == 0:
        raise InsufficientFeaturesError("need at least one minutia and one coefficient")
    f1 = tuple(m.x for m in mset.minutiae)
    f2 = tuple(m.y for m in mset.minutiae)
    i1 = tuple(quantize(float(c.real), scale, width) for c in tex.coeffs)
    i2 = tuple(quantize(float(c.imag), scale, width) for c in tex.coeffs)
    return FeatureVectors(f1=f1, f2=f2, i1=i1, i2=i2)


def shuffle(v: Sequence[int], rand: Sequence[float], big_m: int = DEFAULT_BIG_M) -> list[int]:
    """Swap-based shuffle: element i trades places with floor(rand[i]*big_m) mod n."""
    if len(rand) != len(v):
        raise InvalidInputError("random vector length must match the vector length")
    out = list(v)
    n = len(out)
    for i in range(n):
        j = int(math.floor(rand[i] * big_m)) % n
        out[i], out[j] = out[j], out[i]
    return out


def derive_unit_vector(prior: Sequence[int], length: int) -> list[float]:
    """Fresh [0,1) vector seeded by the FNV-1a hash of a prior shuffled vector."""
    return SplitMix64(fnv1a64(prior)).unit_vector(length)


def shuffle_all(fv: FeatureVectors, rnd: ShuffleRandomness,
                big_m: int = DEFAULT_BIG_M) -> FusionState:
    """Chained shuffles: F1 by the seeded stream, then each next vector by the
    stream derived from the previously shuffled one."""
    s1 = shuffle(fv.f1, rnd.stream().unit_vector(len(fv.f1)), big_m)
    s2 = shuffle(fv.f2, derive_unit_vector(s1, len(fv.f2)), big_m)
    s3 = shuffle(fv.i1, derive_unit_vector(s2, len(fv.i1)), big_m)
    s4 = shuffle(fv.i2, derive_unit_vector(s3, len(fv.i2)), big_m)
    return FusionState(s1=tuple(s1), s2=tuple(s2), s3=tuple(s3), s4=tuple(s4))


def concatenate(s_fp: Sequence[int], s_ir: Sequence[int]) -> list[int]:
    """Insert each fingerprint element into the iris vector at index value mod
    occupied-length, shifting the tail right."""
    if not s_fp or not s_ir:
        raise InvalidInputError("concatenation inputs must be non-empty")
    merged = list(s_ir)
    for value in s_fp:
        merged.insert(value % len(merged), value)
    return merged


def merge(m1: Sequence[int], m2: Sequence[int], width: int = DEFAULT_WIDTH) -> list[int]:
    """Elementwise w-bit NOR: bt[i] = ~(m1[i] | m2[i]) over the low w bits."""
    if len(m1) != len(m2):
        raise InvalidInputError("merge inputs must have equal length")
    mask = (1 << width) - 1
    return [mask ^ ((a | b) & mask) for a, b in zip(m1, m2)]


def fuse(fv: FeatureVectors, rnd: ShuffleRandomness, big_m: int = DEFAULT_BIG_M,
         width: int = DEFAULT_WIDTH) -> FusionState:
    """Full fusion: shuffles, both concatenations, and the NOR merge."""
    state = shuffle_all(fv, rnd, big_m)
    m1 = concatenate(state.s1, state.s3)
    m2 = concatenate(state.s2, state.s4)
    bt = merge(m1, m2, width)
    return FusionState(s1=state.s1, s2=state.s2, s3=state.s3, s4=state.s4,
                       m1=tuple(m1), m2=tuple(m2), bt=tuple(bt))
