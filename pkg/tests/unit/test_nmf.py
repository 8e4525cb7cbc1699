"""Unit tests for the Itakura-Saito NMF noise model."""

import numpy as np
import pytest
from vemse_core.errors import DimensionMismatchError, DomainError
from vemse_core.nmf import EPS_FLOOR, NmfParams, init_nmf, is_cost, is_divergence, m_step, update_h
from vemse_test_utils import is_cost_oracle


class TestDivergence:
    """Elementwise d_IS."""

    @pytest.mark.parametrize(
        "x,y,expected",
        [(1.0, 1.0, 0.0), (2.0, 1.0, 0.306853), (1.0, 2.0, 0.193147)],
    )
    def test_values(self, x, y, expected):
        """Known values of x/y - log(x/y) - 1."""
        assert is_divergence(x, y) == pytest.approx(expected, abs=1e-6)

    def test_nonnegative(self, rng):
        """d_IS is never negative."""
        x = rng.uniform(0.01, 10.0, size=1000)
        y = rng.uniform(0.01, 10.0, size=1000)
        assert np.all(is_divergence(x, y) >= 0), "d_IS must be nonnegative"

    @pytest.mark.parametrize("x,y", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
    def test_domain(self, x, y):
        """Nonpositive arguments are rejected."""
        with pytest.raises(DomainError):
            is_divergence(x, y)


class TestParams:
    """Factor validation and initialisation."""

    def test_init_shapes_and_range(self):
        """init_nmf draws strictly positive factors of the requested shapes."""
        p = init_nmf(5, 3, 7, seed=0)
        assert p.W.shape == (5, 3) and p.H.shape == (3, 7)
        assert np.all(p.W >= 0.1) and np.all(p.W < 1.1), "W outside [0.1, 1.1)"
        assert p.shape == (5, 7) and p.rank == 3

    def test_init_is_seeded(self):
        """The same seed gives the same factors."""
        np.testing.assert_array_equal(init_nmf(4, 2, 3, 9).W, init_nmf(4, 2, 3, 9).W)

    def test_rejects_nonpositive(self):
        """Zero entries are rejected."""
        with pytest.raises(DomainError):
            NmfParams(W=np.zeros((2, 1)), H=np.ones((1, 2)))

    def test_rejects_nonconformable(self):
        """W columns must match H rows."""
        with pytest.raises(DimensionMismatchError):
            NmfParams(W=np.ones((2, 2)), H=np.ones((3, 2)))

    def test_rejects_zero_rank(self):
        """K = 0 is a domain error."""
        with pytest.raises(DomainError):
            init_nmf(4, 0, 3, 0)


class TestUpdates:
    """Multiplicative IS updates."""

    def test_fixed_point(self, rng):
        """V = WH is left unchanged by a sweep."""
        W = rng.uniform(0.5, 2.0, size=(6, 2))
        H = rng.uniform(0.5, 2.0, size=(2, 8))
        p = NmfParams(W, H)
        after = m_step(p, W @ H)
        np.testing.assert_allclose(after.W, W, rtol=1e-12)
        np.testing.assert_allclose(after.H, H, rtol=1e-12)

    def test_scalar_closed_form(self):
        """With F = K = N = 1 one sweep makes WH equal to V."""
        p = NmfParams(W=np.array([[2.0]]), H=np.array([[0.5]]))
        after = m_step(p, np.array([[4.0]]))
        assert after.H[0, 0] == pytest.approx(2.0), "H <- V / W"
        assert after.variance()[0, 0] == pytest.approx(4.0), "WH should match V"

    def test_cost_non_increasing(self, rng):
        """The IS cost never increases and agrees with a loop oracle."""
        V = rng.uniform(0.1, 3.0, size=(8, 12))
        p = init_nmf(8, 3, 12, seed=1)
        previous = is_cost(V, p)
        assert previous == pytest.approx(is_cost_oracle(V, p.W, p.H), rel=1e-12)
        for i in range(50):
            p = m_step(p, V)
            current = is_cost(V, p)
            assert current <= previous * (1 + 1e-12), f"cost increased at sweep {i}: {previous} -> {current}"
            previous = current

    def test_scale_invariance(self, rng):
        """Scaling V and W together leaves the cost unchanged."""
        V = rng.uniform(0.1, 3.0, size=(4, 5))
        p = init_nmf(4, 2, 5, seed=2)
        scaled = NmfParams(W=p.W * 7.0, H=p.H)
        assert is_cost(7.0 * V, scaled) == pytest.approx(is_cost(V, p), rel=1e-12)

    def test_floor(self):
        """Updates never drive an entry below the floor."""
        p = NmfParams(W=np.array([[1.0], [1.0]]), H=np.array([[1.0, 1.0]]))
        after = update_h(p, np.array([[1e-30, 1.0], [1e-30, 1.0]]))
        assert np.all(after.H >= EPS_FLOOR), "H must stay above the floor"

    def test_shape_mismatch(self):
        """Data shape must match WH."""
        with pytest.raises(DimensionMismatchError):
            m_step(init_nmf(3, 1, 4, 0), np.ones((3, 5)))
