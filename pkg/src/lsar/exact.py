"""Ground-truth computations on the full lagged design.

The conditional MLE of an AR(p) model is the OLS solution of regressing
``y[p:]`` on its p lagged values.  Everything here goes through one thin
Householder QR factorization per design: the triangular solve gives the
coefficients, and the squared row norms of the orthonormal factor give the
exact leverage scores.  Normal equations are deliberately avoided; the
kappa^2 conditioning loss would contaminate the score oracles.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DataError, RankDeficiencyError
from .series import ARDesign, TimeSeries, make_design

RANK_RTOL = 1e-10
ZERO_CONFIDENCE_Z = 1.96


class FitSource(enum.Enum):
    FULL = "full"
    SAMPLED = "sampled"


class Provenance(enum.Enum):
    EXACT = "exact"
    QUASI = "quasi"
    FULLY_APPROXIMATE = "fully_approximate"


@dataclass(frozen=True)
class ARFit:
    """One fitted AR(p) regression: coefficients, residuals and noise MSE.

    ``residuals`` are always evaluated on the full design, even when the
    coefficients came from a sampled (reduced) solve.
    """

    order: int
    coefficients: np.ndarray
    residuals: np.ndarray
    residual_norm: float
    noise_variance: float
    source: FitSource

    def __post_init__(self):
        self.coefficients.setflags(write=False)
        self.residuals.setflags(write=False)


@dataclass(frozen=True)
class LeverageScores:
    """Per-row leverage scores and the induced sampling distribution."""

    order: int
    scores: np.ndarray
    provenance: Provenance
    distribution: np.ndarray
    clamp_count: int = 0

    def __post_init__(self):
        self.scores.setflags(write=False)
        self.distribution.setflags(write=False)

    @classmethod
    def from_scores(cls, order, scores, provenance, clamp_count=0):
        total = scores.sum()
        if total <= 0:
            raise DataError("all leverage scores are zero; no sampling distribution")
        return cls(order, scores, provenance, scores / total, clamp_count)

    def __len__(self) -> int:
        return self.scores.size


@dataclass(frozen=True)
class PacfTrace:
    """Partial autocorrelation estimates for lags 1..len(estimates).

    Undefined lags (rank-deficient fits) are stored as NaN and never
    participate in order selection.  ``bandwidth`` is the zero-confidence
    half-width 1.96/sqrt(effective_sample); with per-lag sample sizes the
    optional ``per_lag_bandwidth`` takes precedence for selection.
    """

    estimates: np.ndarray
    bandwidth: float
    effective_sample: int
    selected_order: int
    per_lag_bandwidth: np.ndarray | None = None

    @property
    def lags(self) -> np.ndarray:
        return np.arange(1, self.estimates.size + 1)


def select_order(estimates: np.ndarray, bandwidth) -> int:
    """Largest lag whose |PACF| reaches the band; 0 when none does.

    ``bandwidth`` may be a scalar or a per-lag array.  NaN lags are skipped.
    """
    band = np.broadcast_to(np.asarray(bandwidth, dtype=np.float64), estimates.shape)
    with np.errstate(invalid="ignore"):
        hits = np.flatnonzero(np.abs(estimates) >= band)
    return int(hits[-1] + 1) if hits.size else 0


def _qr(matrix: np.ndarray, required_rank: int):
    """Thin QR with a relative rank check on the diagonal of R."""
    q, r = np.linalg.qr(matrix)
    diag = np.abs(np.diag(r))
    scale = diag.max() if diag.size else 0.0
    rank = int(np.count_nonzero(diag > RANK_RTOL * scale)) if scale > 0 else 0
    if rank < required_rank:
        raise RankDeficiencyError(rank, required_rank)
    return q, r


def solve_ols(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Least-squares solution via Householder QR with a rank guard."""
    q, r = _qr(matrix, matrix.shape[1])
    return solve_triangular(r, q.T @ rhs)


def fit_ols(design: ARDesign) -> ARFit:
    """Conditional MLE of the AR coefficients at the design's order.

    Residuals and the noise-variance estimate ``|r|^2 / (n - p)`` are
    computed on the full design.
    """
    x = design.materialize()
    phi = solve_ols(x, design.responses)
    residuals = design.responses - x @ phi
    rnorm = float(np.linalg.norm(residuals))
    return ARFit(
        order=design.p,
        coefficients=phi,
        residuals=residuals,
        residual_norm=rnorm,
        noise_variance=rnorm**2 / design.row_count,
        source=FitSource.FULL,
    )


def exact_leverage(design: ARDesign) -> LeverageScores:
    """Exact leverage scores: squared row norms of the orthonormal factor."""
    x = design.materialize()
    q, _ = _qr(x, design.p)
    scores = np.einsum("ij,ij->i", q, q)
    return LeverageScores.from_scores(design.p, scores, Provenance.EXACT)


def exact_pacf(series: TimeSeries, max_lag: int) -> PacfTrace:
    """PACF trace from full-data OLS fits at each lag 1..max_lag.

    The estimate at lag h is the last coefficient of the order-h CMLE.
    Rank-deficient lags are recorded as NaN.
    """
    n = series.n
    if max_lag < 1:
        raise DataError(f"max_lag must be >= 1, got {max_lag}")
    if max_lag > n // 2:
        raise DataError(
            f"max_lag {max_lag} exceeds n/2 = {n // 2}; the tail fits would "
            "be too short to be meaningful"
        )
    estimates = np.full(max_lag, np.nan)
    for h in range(1, max_lag + 1):
        try:
            estimates[h - 1] = fit_ols(make_design(series, h)).coefficients[-1]
        except RankDeficiencyError:
            pass
    effective = n - max_lag
    bandwidth = ZERO_CONFIDENCE_Z / math.sqrt(effective)
    return PacfTrace(
        estimates=estimates,
        bandwidth=bandwidth,
        effective_sample=effective,
        selected_order=select_order(estimates, bandwidth),
    )
