"""Order selection and fitting by leverage-score sampling (the LSAR loop).

One pass over orders p = 1..max_order with a window growing by one
observation per order: maintain fully-approximate leverage scores, solve a
reduced OLS problem per order, record its last coefficient as the sampled
PACF estimate, and pick the selected order as the largest lag whose |PACF|
reaches the zero-confidence band ``1.96/sqrt(s)`` of that lag's sample size.

The PACF estimate at lag p is taken from the reduced fit of the same
iteration; computing it before the fit would need a second fitting pass and
has no support in the error analysis.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ZeroResidualError
from .exact import ARFit, PacfTrace, ZERO_CONFIDENCE_Z, fit_ols, select_order
from .recursion import approximate_sweep
from .sampling import SampleSizeRule
from .series import TimeSeries, make_design


class DeltaMode(enum.Enum):
    """How the per-iteration failure probability derives from delta0."""

    PER_ORDER = "per_order"    # delta = delta0 / p at iteration p
    GEOMETRIC = "geometric"    # constant delta = 1 - (1 - delta0)**(1/max_order)


@dataclass(frozen=True)
class LsarConfig:
    max_order: int
    size_rule: SampleSizeRule
    delta0: float = 0.1
    bandwidth_multiplier: float = 1.0
    seed: int = 0
    delta_mode: DeltaMode = DeltaMode.PER_ORDER
    refit_full: bool = False

    def __post_init__(self):
        if self.max_order < 1:
            raise DataError(f"max_order must be >= 1, got {self.max_order}")
        if not 0 < self.delta0 < 1:
            raise DataError(f"delta0 must be in (0,1), got {self.delta0}")
        if self.bandwidth_multiplier <= 0:
            raise DataError("bandwidth_multiplier must be positive")


@dataclass(frozen=True)
class OrderRecord:
    p: int
    window: int
    sample_size: int
    clamp_count: int
    residual_norm: float
    pacf_estimate: float
    bandwidth: float
    wall_time: float


@dataclass(frozen=True)
class LsarResult:
    selected_order: int
    final_fit: ARFit | None
    pacf: PacfTrace
    per_order_log: tuple[OrderRecord, ...]
    aborted_at: int | None = None
    abort_reason: str | None = None

    @property
    def weak_selection(self) -> bool:
        """True when no lag cleared the band (selected_order == 0)."""
        return self.selected_order == 0


def _delta_schedule(cfg: LsarConfig):
    if cfg.delta_mode is DeltaMode.GEOMETRIC:
        per_iter = 1.0 - (1.0 - cfg.delta0) ** (1.0 / cfg.max_order)
        return lambda q: per_iter
    return lambda q: cfg.delta0 / q


def run_lsar(series: TimeSeries, cfg: LsarConfig) -> LsarResult:
    """Select the AR order and fit its coefficients from sampled rows.

    Deterministic given ``cfg.seed``.  A zero-residual (perfect) fit stops
    the loop early and is reported on the result rather than raised; order
    selection then runs over the lags already reached.
    """
    if series.n <= 2 * cfg.max_order:
        raise DataError(
            f"need n > 2 * max_order, got n={series.n}, max_order={cfg.max_order}"
        )
    records: list[OrderRecord] = []
    fits: list[ARFit] = []
    aborted_at = None
    abort_reason = None
    sweep = approximate_sweep(
        series,
        cfg.max_order,
        cfg.size_rule,
        cfg.seed,
        delta_for_order=_delta_schedule(cfg),
        window_offset=cfg.max_order,
    )
    t0 = time.perf_counter()
    while True:
        try:
            state = next(sweep)
        except StopIteration:
            break
        except ZeroResidualError as err:
            aborted_at = err.order
            abort_reason = str(err)
            break
        t1 = time.perf_counter()
        band = cfg.bandwidth_multiplier * ZERO_CONFIDENCE_Z / math.sqrt(state.sample_size)
        records.append(
            OrderRecord(
                p=state.p,
                window=state.window,
                sample_size=state.sample_size,
                clamp_count=state.scores.clamp_count,
                residual_norm=state.fit.residual_norm,
                pacf_estimate=float(state.fit.coefficients[-1]),
                bandwidth=band,
                wall_time=t1 - t0,
            )
        )
        fits.append(state.fit)
        t0 = t1

    estimates = np.array([r.pacf_estimate for r in records])
    bands = np.array([r.bandwidth for r in records])
    selected = select_order(estimates, bands) if records else 0
    pacf = PacfTrace(
        estimates=estimates,
        bandwidth=float(bands[-1]) if records else float("nan"),
        effective_sample=records[-1].sample_size if records else 1,
        selected_order=selected,
        per_lag_bandwidth=bands if records else None,
    )
    final_fit = fits[selected - 1] if selected >= 1 else None
    if final_fit is not None and cfg.refit_full:
        final_fit = fit_ols(make_design(series, selected))
    return LsarResult(
        selected_order=selected,
        final_fit=final_fit,
        pacf=pacf,
        per_order_log=tuple(records),
        aborted_at=aborted_at,
        abort_reason=abort_reason,
    )
