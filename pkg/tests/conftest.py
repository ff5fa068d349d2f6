"""Shared fixtures: seeded synthetic series and small oracle helpers."""

import numpy as np
import pytest

from lsar import ARGeneratorSpec, TimeSeries, generate_ar


def phi_from_partial_autocorrs(ks):
    """AR coefficients whose partial autocorrelations are ``ks``.

    One reflection step per lag; all |k| < 1 guarantees a causal process,
    which makes this the safe way to build high-order test fixtures.
    """
    phi = np.array([ks[0]], dtype=float)
    for k in ks[1:]:
        phi = np.concatenate([phi - k * phi[::-1], [k]])
    return phi


# Partial autocorrelations of the AR(20) fixture; the large value at lag 20
# keeps the last PACF estimate well clear of the zero-confidence band.
AR20_PARTIALS = [0.5, -0.4, 0.3, -0.25, 0.2, -0.15, 0.12, -0.1, 0.1, -0.08,
                 0.08, -0.06, 0.06, -0.05, 0.05, -0.05, 0.05, -0.05, 0.05, 0.35]

AR20_COEFFS = phi_from_partial_autocorrs(AR20_PARTIALS)

AR5_COEFFS = np.array([0.5, -0.3, 0.2, -0.1, 0.1])


def hat_diagonal(x: np.ndarray) -> np.ndarray:
    """Leverage-score oracle: diag(X (X^T X)^{-1} X^T) by explicit inverse."""
    gram_inv = np.linalg.inv(x.T @ x)
    return np.einsum("ij,jk,ik->i", x, gram_inv, x)


@pytest.fixture
def ar1_series():
    return generate_ar(ARGeneratorSpec(np.array([0.5]), 1.0, 400, seed=7))


@pytest.fixture
def ar2_series():
    return generate_ar(ARGeneratorSpec(np.array([0.6, -0.4]), 1.0, 5000, seed=3))


@pytest.fixture
def noiseless_half():
    """Exact recurrence y_t = 0.5 y_{t-1} from y_0 = 1 (no noise)."""
    y = 0.5 ** np.arange(40)
    return TimeSeries(y)
