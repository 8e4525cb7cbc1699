"""
Itakura-Saito NMF noise variance model.

The noise variance of bin (f, t) is ``(W @ H)[f, t]``. Updates are the
multiplicative Itakura-Saito rules; every entry is floored at ``EPS_FLOOR`` after
each update so zeros never become absorbing.
"""

from dataclasses import dataclass, replace

import numpy as np
from vemse_common.utils.seeding import NMF_INIT, make_rng

from vemse_core.errors import DimensionMismatchError, DomainError

EPS_FLOOR = 1e-10


@dataclass(frozen=True)
class NmfParams:
    W: np.ndarray
    H: np.ndarray

    def __post_init__(self) -> None:
        W = np.asarray(self.W, dtype=np.float64)
        H = np.asarray(self.H, dtype=np.float64)
        if W.ndim != 2 or H.ndim != 2 or W.shape[1] != H.shape[0]:
            raise DimensionMismatchError(f"W {W.shape} and H {H.shape} are not conformable")
        if np.any(W <= 0) or np.any(H <= 0):
            raise DomainError("NMF factors must be strictly positive")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "H", H)

    @property
    def rank(self) -> int:
        return int(self.W.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.W.shape[0]), int(self.H.shape[1])

    def variance(self) -> np.ndarray:
        """The noise variance model W @ H."""
        return self.W @ self.H


def is_divergence(x: np.ndarray | float, y: np.ndarray | float) -> np.ndarray | float:
    """Elementwise d_IS(x, y) = x/y - log(x/y) - 1 for positive x, y."""
    x_arr = np.asarray(x, dtype=np.float64)
    y_arr = np.asarray(y, dtype=np.float64)
    if np.any(x_arr <= 0) or np.any(y_arr <= 0):
        raise DomainError("Itakura-Saito divergence needs strictly positive arguments")
    ratio = x_arr / y_arr
    d = ratio - np.log(ratio) - 1.0
    return float(d) if d.ndim == 0 else d


def is_cost(V: np.ndarray, p: NmfParams) -> float:
    """Sum over all bins of d_IS(V, WH)."""
    _check_data(p, V)
    return float(np.sum(is_divergence(V, p.variance())))


def _check_data(p: NmfParams, V: np.ndarray) -> None:
    if V.shape != p.shape:
        raise DimensionMismatchError(f"data {V.shape} does not match model {p.shape}")


def update_h_from_stats(p: NmfParams, numerator: np.ndarray, denominator: np.ndarray) -> NmfParams:
    """H <- H * (W^T numerator) / (W^T denominator), floored.

    ``numerator`` and ``denominator`` are F x N statistics; the plain IS rule uses
    ``V * (WH)^-2`` and ``(WH)^-1``.
    """
    H = p.H * (p.W.T @ numerator) / (p.W.T @ denominator)
    return replace(p, H=np.maximum(H, EPS_FLOOR))


def update_w_from_stats(p: NmfParams, numerator: np.ndarray, denominator: np.ndarray) -> NmfParams:
    """W <- W * (numerator H^T) / (denominator H^T), floored."""
    W = p.W * (numerator @ p.H.T) / (denominator @ p.H.T)
    return replace(p, W=np.maximum(W, EPS_FLOOR))


def update_h(p: NmfParams, V: np.ndarray) -> NmfParams:
    _check_data(p, V)
    WH = p.variance()
    return update_h_from_stats(p, V / WH**2, 1.0 / WH)


def update_w(p: NmfParams, V: np.ndarray) -> NmfParams:
    _check_data(p, V)
    WH = p.variance()
    return update_w_from_stats(p, V / WH**2, 1.0 / WH)


def m_step(p: NmfParams, V: np.ndarray) -> NmfParams:
    """One H sweep followed by one W sweep."""
    return update_w(update_h(p, V), V)


def init_nmf(F: int, K: int, N: int, seed: int) -> NmfParams:
    """Factors drawn uniformly in [0.1, 1.1)."""
    if min(F, K, N) < 1:
        raise DomainError(f"NMF dimensions must be positive, got F={F} K={K} N={N}")
    rng = make_rng(seed, NMF_INIT)
    return NmfParams(W=rng.uniform(0.1, 1.1, size=(F, K)), H=rng.uniform(0.1, 1.1, size=(K, N)))
