"""Unit tests for seed derivation."""

import numpy as np
import pytest
from vemse_common.utils.seeding import GAMMA_DRAWS, MH_CHAIN, as_generator, frame_rngs, make_rng


class TestMakeRng:
    """Named substreams."""

    def test_reproducible(self):
        """Same seed and keys, same stream."""
        np.testing.assert_array_equal(make_rng(3, GAMMA_DRAWS, 1).random(5), make_rng(3, GAMMA_DRAWS, 1).random(5))

    def test_keys_separate_streams(self):
        """Different purposes or iterations give different streams."""
        base = make_rng(3, GAMMA_DRAWS, 1).random(5)
        assert not np.array_equal(base, make_rng(3, GAMMA_DRAWS, 2).random(5))
        assert not np.array_equal(base, make_rng(3, MH_CHAIN, 1).random(5))
        assert not np.array_equal(base, make_rng(4, GAMMA_DRAWS, 1).random(5))

    def test_negative_rejected(self):
        """Seeds and keys are nonnegative."""
        with pytest.raises(ValueError):
            make_rng(-1)


class TestFrameRngs:
    """Per-frame streams."""

    def test_prefix_stable(self):
        """Frame t's stream does not depend on the number of frames."""
        few = [g.random() for g in frame_rngs(1, 3, MH_CHAIN)]
        many = [g.random() for g in frame_rngs(1, 10, MH_CHAIN)]
        assert few == many[:3]


class TestAsGenerator:
    """Seed-or-generator arguments."""

    def test_passes_generators_through(self):
        """An existing generator is used as is."""
        g = np.random.default_rng(0)
        assert as_generator(g) is g

    def test_builds_from_int(self):
        """An integer seed builds the root stream."""
        np.testing.assert_array_equal(as_generator(7).random(3), make_rng(7).random(3))
