"""Tests for src.sampling module."""

import pytest

from src.dsl import parse_model
from src.sampling import SamplingError, SplitMix64, sample_points


class TestSplitMix64:
    """Test cases for the point generator."""

    def test_reference_sequence(self):
        """The first outputs for seed 0 match the published splitmix64 sequence."""
        rng = SplitMix64(0)

        assert rng.next_u64() == 0xE220A8397B1DCDAF
        assert rng.next_u64() == 0x6E789E6AA1B965F4
        assert rng.next_u64() == 0x06C45D188009454F

    def test_floats_are_in_unit_interval(self):
        rng = SplitMix64(42)

        values = [rng.next_float() for _ in range(1000)]

        assert all(0.0 <= v < 1.0 for v in values)

    def test_seed_is_reduced_to_64_bits(self):
        assert SplitMix64(2**64 + 5).next_u64() == SplitMix64(5).next_u64()


class TestSamplePoints:
    """Test cases for sample_points."""

    def test_reproducible(self, example25_spec):
        assert sample_points(example25_spec, 10, 42) == sample_points(example25_spec, 10, 42)

    def test_seed_changes_points(self, example25_spec):
        assert sample_points(example25_spec, 5, 1) != sample_points(example25_spec, 5, 2)

    def test_points_lie_in_the_box(self, example25_text):
        spec = parse_model(example25_text + "box z in [2, 3]\n")

        points = sample_points(spec, 50, 7)

        assert len(points) == 50
        assert all(-1.0 <= x < 1.0 and -1.0 <= y < 1.0 and 2.0 <= z < 3.0 for x, y, z in points)

    def test_badly_conditioned_region_is_skipped(self, example25_text):
        """E3 vanishes at x = -1, so points near that face are rejected."""
        spec = parse_model(example25_text.replace("frame E3 = (0, 0, 1)", "frame E3 = (0, 0, x + 1)"))

        points = sample_points(spec, 20, 3, max_condition=100.0)

        # cond >= e^{-1}/(x + 1) on this box
        assert all(p[0] + 1.0 > 0.003 for p in points)

    def test_gives_up_when_nothing_qualifies(self, example25_spec):
        with pytest.raises(SamplingError):
            sample_points(example25_spec, 1, 0, max_condition=0.5)
