import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biokey.errors import InsufficientFeaturesError, InvalidInputError
from biokey.fingerprint import RIDGE_ENDING, Minutia, MinutiaeSet
from biokey.fusion import (FeatureVectors, ShuffleRandomness, SplitMix64,
                           build_feature_vectors, concatenate, derive_unit_vector,
                           fnv1a64, fuse, merge, quantize, shuffle, shuffle_all)
from biokey.iris import IrisTexture

from oracles import nor_oracle, shuffle_oracle, splitmix64_oracle

# Reference outputs of the wire-contract generator.
SPLITMIX_VECTORS = {
    0: [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F,
        0xF88BB8A8724C81EC, 0x1B39896A51A8749B],
    1234567: [0x599ED017FB08FC85, 0x2C73F08458540FA5, 0x883EBCE5A3F27C77,
              0x3FBEF740E9177B3F, 0xE3B8346708CB5ECD],
}


def mset(points):
    return MinutiaeSet(tuple(Minutia(x=x, y=y, kind=RIDGE_ENDING) for x, y in points))


def texture(values):
    return IrisTexture(np.asarray(values, dtype=np.complex128))


class TestSplitMix64:
    @pytest.mark.parametrize("seed", sorted(SPLITMIX_VECTORS))
    def test_published_vectors(self, seed):
        gen = SplitMix64(seed)
        assert [gen.next_u64() for _ in range(5)] == SPLITMIX_VECTORS[seed]

    def test_matches_independent_transcription(self):
        for seed in (0, 1, 42, 2**64 - 1, 0xDEADBEEF):
            gen = SplitMix64(seed)
            assert [gen.next_u64() for _ in range(20)] == splitmix64_oracle(seed, 20)

    def test_unit_mapping_is_top_53_bits(self):
        gen = SplitMix64(7)
        raw = SplitMix64(7).next_u64()
        assert gen.next_unit() == (raw >> 11) / 2.0 ** 53

    def test_units_in_range_and_reproducible(self):
        a = SplitMix64(99).unit_vector(1000)
        b = SplitMix64(99).unit_vector(1000)
        assert a == b
        assert all(0.0 <= u < 1.0 for u in a)

    def test_seed_wraps_to_64_bits(self):
        assert SplitMix64(2 ** 64 + 5).next_u64() == SplitMix64(5).next_u64()


class TestQuantize:
    def test_positive_example(self):
        assert quantize(1.25) == 12500

    def test_negative_wraps_two_complement_style(self):
        # oracle: round(-0.5 * 10^4) mod 2^16 = -5000 mod 65536
        assert (-5000) % 65536 == 60536
        assert quantize(-0.5) == 60536

    def test_rounding_ties_toward_positive_infinity(self):
        assert quantize(0.00005) == 1       # 0.5 rounds up
        assert quantize(-0.00005) == 0      # -0.5 rounds toward +inf

    def test_build_feature_vectors_example(self):
        fv = build_feature_vectors(mset([(3, 7), (10, 2)]), texture([1.25 - 0.5j]))
        assert fv.f1 == (3, 10)
        assert fv.f2 == (7, 2)
        assert fv.i1 == (12500,)
        assert fv.i2 == (60536,)

    def test_empty_minutiae_rejected(self):
        with pytest.raises(InsufficientFeaturesError):
            build_feature_vectors(MinutiaeSet(()), texture([1.0]))

    def test_empty_texture_rejected(self):
        with pytest.raises(InsufficientFeaturesError):
            build_feature_vectors(mset([(1, 2)]), IrisTexture(np.array([], dtype=complex)))


class TestShuffle:
    def test_zero_randomness_hand_simulation(self):
        # j = 0 at every step: [a,b,c] -> [c,a,b]
        assert shuffle(["a", "b", "c"], [0.0, 0.0, 0.0], 1000003) == ["c", "a", "b"]

    def test_single_element_identity(self):
        assert shuffle([9], [0.73], 1000003) == [9]

    def test_size_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            shuffle([1, 2], [0.5], 1000003)

    def test_matches_hand_oracle(self):
        rng = np.random.default_rng(53)
        for _ in range(200):
            n = int(rng.integers(1, 40))
            v = rng.integers(0, 65536, size=n).tolist()
            rand = rng.random(n).tolist()
            big_m = int(rng.integers(1, 10**7))
            assert shuffle(v, rand, big_m) == shuffle_oracle(v, rand, big_m)

    @given(st.lists(st.integers(0, 2**16 - 1), min_size=1, max_size=50),
           st.randoms(use_true_random=False))
    @settings(max_examples=200, deadline=None)
    def test_multiset_preserved(self, v, rnd):
        rand = [rnd.random() for _ in v]
        assert sorted(shuffle(v, rand, 1000007)) == sorted(v)


class TestShuffleAll:
    def fv(self):
        rng = np.random.default_rng(61)
        return FeatureVectors(
            f1=tuple(rng.integers(0, 512, size=20).tolist()),
            f2=tuple(rng.integers(0, 512, size=20).tolist()),
            i1=tuple(rng.integers(0, 65536, size=35).tolist()),
            i2=tuple(rng.integers(0, 65536, size=35).tolist()))

    def test_deterministic_per_seed(self):
        a = shuffle_all(self.fv(), ShuffleRandomness(42))
        b = shuffle_all(self.fv(), ShuffleRandomness(42))
        assert (a.s1, a.s2, a.s3, a.s4) == (b.s1, b.s2, b.s3, b.s4)

    def test_different_seeds_differ(self):
        # distinct-valued F1 so any permutation change is visible
        fv = FeatureVectors(f1=tuple(range(100, 120)), f2=tuple(range(20)),
                            i1=(7,) * 30, i2=(9,) * 30)
        s_a = shuffle_all(fv, ShuffleRandomness(1)).s1
        s_b = shuffle_all(fv, ShuffleRandomness(2)).s1
        # oracle reproduction of each stream
        ra = [(u >> 11) / 2.0 ** 53 for u in splitmix64_oracle(1, 20)]
        rb = [(u >> 11) / 2.0 ** 53 for u in splitmix64_oracle(2, 20)]
        assert list(s_a) == shuffle_oracle(list(fv.f1), ra, 1000007)
        assert list(s_b) == shuffle_oracle(list(fv.f1), rb, 1000007)
        assert s_a != s_b

    def test_every_stage_is_a_permutation(self):
        fv = self.fv()
        state = shuffle_all(fv, ShuffleRandomness(7))
        assert sorted(state.s1) == sorted(fv.f1)
        assert sorted(state.s2) == sorted(fv.f2)
        assert sorted(state.s3) == sorted(fv.i1)
        assert sorted(state.s4) == sorted(fv.i2)

    def test_chained_streams_derive_from_prior_stage(self):
        fv = self.fv()
        state = shuffle_all(fv, ShuffleRandomness(11))
        expect_s2 = shuffle(list(fv.f2), derive_unit_vector(list(state.s1), 20), 1000007)
        assert list(state.s2) == expect_s2

    def test_fnv_hash_is_order_sensitive(self):
        assert fnv1a64([1, 2]) != fnv1a64([2, 1])
        assert fnv1a64([1, 2]) == fnv1a64((1, 2))


class TestConcatenate:
    def test_minimal_example(self):
        assert concatenate([5], [9]) == [5, 9]

    def test_length_is_sum(self):
        rng = np.random.default_rng(67)
        for _ in range(50):
            a = rng.integers(0, 65536, size=rng.integers(1, 30)).tolist()
            b = rng.integers(0, 65536, size=rng.integers(1, 30)).tolist()
            assert len(concatenate(a, b)) == len(a) + len(b)

    def test_multiset_union(self):
        a, b = [3, 3, 8], [1, 2, 2, 9]
        assert sorted(concatenate(a, b)) == sorted(a + b)

    def test_insertion_positions_follow_value_mod_rule(self):
        # start [9, 4]; insert 7 at 7 mod 2 = 1 -> [9, 7, 4];
        # insert 3 at 3 mod 3 = 0 -> [3, 9, 7, 4]
        assert concatenate([7, 3], [9, 4]) == [3, 9, 7, 4]

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            concatenate([], [1])


class TestMerge:
    def test_nor_of_zeros_is_all_ones(self):
        assert merge([0], [0]) == [65535]

    def test_or_saturation_gives_zero(self):
        assert merge([65535], [12345]) == [0]

    def test_bitwise_example(self):
        assert merge([10], [6]) == [65521]
        assert nor_oracle(10, 6) == 65521

    def test_matches_binary_string_oracle(self):
        rng = np.random.default_rng(71)
        a = rng.integers(0, 65536, size=500).tolist()
        b = rng.integers(0, 65536, size=500).tolist()
        assert merge(a, b) == [nor_oracle(x, y) for x, y in zip(a, b)]

    def test_commutative(self):
        rng = np.random.default_rng(73)
        a = rng.integers(0, 65536, size=100).tolist()
        b = rng.integers(0, 65536, size=100).tolist()
        assert merge(a, b) == merge(b, a)

    def test_length_mismatch_rejected(self):
        with pytest.raises(InvalidInputError):
            merge([1, 2], [3])

    def test_custom_width(self):
        assert merge([0b1010], [0b0110], width=4) == [0b0001]


class TestFuse:
    def test_template_shape_and_range(self):
        fv = build_feature_vectors(mset([(3, 7), (10, 2), (100, 200)]),
                                   texture([1.25 - 0.5j, 0.3 + 0.9j]))
        state = fuse(fv, ShuffleRandomness(42))
        n, m = 3, 2
        assert len(state.m1) == len(state.m2) == len(state.bt) == n + m
        assert all(0 <= v < 2 ** 16 for v in state.bt)
        assert sorted(state.m1) == sorted(state.s1 + state.s3)
        assert sorted(state.m2) == sorted(state.s2 + state.s4)

    def test_end_to_end_deterministic(self):
        fv = build_feature_vectors(mset([(5, 6), (7, 8)]), texture([0.1 + 0.2j]))
        a = fuse(fv, ShuffleRandomness(1234567))
        b = fuse(fv, ShuffleRandomness(1234567))
        assert a == b
